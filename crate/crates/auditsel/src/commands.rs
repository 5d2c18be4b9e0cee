//! Subcommand implementations. Each returns the process exit code.

use std::collections::hash_map::RandomState;
use std::fmt::Write as _;
use std::fs;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use auditsel_core::estimators::estimate;
use auditsel_core::simulation::{
    run_condition, run_variance_study, summarize, Condition, ConditionSpec, ReplicateResult,
    VarianceCondition, CATEGORIES,
};
use auditsel_core::stats::chi_square_cutoff;
use auditsel_core::{
    optimize, realize, AuditPlan, AuditedData, ContingencyTable3, Objective, PopulationMargins,
    SolverConfig,
};

use crate::cli::{
    Command, EstimateArgs, ObjectiveKind, PlanArgs, RealizeArgs, Scale, SimulateArgs, SolverArgs,
    Source, Study, SweepArgs,
};
use crate::io::{self, Categories};
use crate::manifest::Manifest;

pub const EXIT_ACCEPTED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ABOVE_CUTOFF: i32 = 2;

pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Plan(a) => cmd_plan(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Realize(a) => cmd_realize(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// The given seed, or a fresh one announced on stderr.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = RandomState::new().build_hasher().finish();
        eprintln!("auditsel: no --seed given, using {s}");
        s
    })
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn load_source(source: &Source) -> Result<(ContingencyTable3, Categories, PathBuf)> {
    match (&source.input, &source.table) {
        (Some(path), None) => {
            let data = io::read_units(path, None)?;
            Ok((data.table()?, data.categories, path.clone()))
        }
        (None, Some(path)) => {
            let (t, c) = io::read_table(path)?;
            Ok((t, c, path.clone()))
        }
        _ => bail!("exactly one of --input and --table is required"),
    }
}

fn objective_for(args: &SolverArgs, cutoff: f64) -> Result<Objective> {
    let objective = match args.objective {
        ObjectiveKind::D => {
            if args.lambda.is_some() {
                bail!("--lambda only applies to --objective f1");
            }
            if args.kappa.is_some() {
                bail!("--kappa only applies to --objective f2");
            }
            Objective::Deviance
        }
        ObjectiveKind::F1 => {
            if args.kappa.is_some() {
                bail!("--kappa only applies to --objective f2");
            }
            Objective::LinearPenalty {
                lambda: args.lambda.unwrap_or(auditsel_core::solver::DEFAULT_LAMBDA),
            }
        }
        ObjectiveKind::F2 => {
            if args.lambda.is_some() {
                bail!("--lambda only applies to --objective f1");
            }
            match args.kappa {
                Some(kappa) => Objective::ExponentialPenalty { kappa },
                None => Objective::exponential_for_cutoff(cutoff),
            }
        }
    };
    match objective.validate() {
        Ok(()) => Ok(objective),
        Err(_) if matches!(objective, Objective::LinearPenalty { .. }) => {
            bail!("--lambda must be positive")
        }
        Err(_) => bail!("--kappa must be positive"),
    }
}

fn check_bounds(table: &ContingencyTable3, m_plus: u64, m_minus: u64) -> Result<()> {
    if table.x_categories() < 2 {
        bail!("x has a single category; there is nothing to balance");
    }
    let outside = table.total() - table.audit_size();
    if m_plus > outside {
        bail!("--m-plus {m_plus} exceeds the {outside} units outside the audit sample");
    }
    if m_minus > table.audit_size() {
        bail!(
            "--m-minus {m_minus} exceeds the audit sample size {}",
            table.audit_size()
        );
    }
    Ok(())
}

fn solver_config(
    args: &SolverArgs,
    table: &ContingencyTable3,
    m_plus: u64,
    m_minus: u64,
    seed: u64,
) -> Result<SolverConfig> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie strictly between 0 and 1");
    }
    check_bounds(table, m_plus, m_minus)?;
    let cutoff = chi_square_cutoff(table.degrees_of_freedom(), args.alpha)?;
    Ok(SolverConfig {
        m_plus,
        m_minus,
        attempts: args.attempts,
        objective: objective_for(args, cutoff)?,
        alpha: args.alpha,
        master_seed: seed,
        ..SolverConfig::default()
    })
}

fn objective_label(o: &Objective) -> String {
    match o {
        Objective::Deviance => "d".to_owned(),
        Objective::LinearPenalty { lambda } => format!("f1 (lambda = {lambda})"),
        Objective::ExponentialPenalty { kappa } => format!("f2 (kappa = {kappa})"),
    }
}

fn plan_summary(plan: &AuditPlan, config: &SolverConfig, seed: u64) -> String {
    let mut s = String::new();
    let t = &plan.base;
    let _ = writeln!(s, "d_before = {:.6}", plan.deviance_before);
    let _ = writeln!(s, "d_after = {:.6}", plan.achieved_deviance);
    let _ = writeln!(s, "d_continuous = {:.6}", plan.continuous_deviance);
    let _ = writeln!(s, "cutoff = {:.6}", plan.cutoff);
    let _ = writeln!(s, "df = {}", t.degrees_of_freedom());
    let _ = writeln!(s, "alpha = {}", config.alpha);
    let _ = writeln!(s, "accepted = {}", plan.accepted);
    let _ = writeln!(s, "objective = {}", objective_label(&config.objective));
    let _ = writeln!(s, "m_plus = {}", config.m_plus);
    let _ = writeln!(s, "m_minus = {}", config.m_minus);
    let _ = writeln!(s, "added = {}", plan.total_added());
    let _ = writeln!(s, "removed = {}", plan.total_removed());
    let _ = writeln!(s, "units = {}", t.total());
    let _ = writeln!(s, "audit_size_before = {}", t.audit_size());
    let _ = writeln!(s, "audit_size_after = {}", plan.final_audit_size());
    let _ = writeln!(s, "attempts = {}", plan.attempts_run);
    let best = plan
        .best_attempt_index
        .map_or_else(|| "none".to_owned(), |a| a.to_string());
    let _ = writeln!(s, "best_attempt = {best}");
    let _ = writeln!(
        s,
        "rounding = nearest integer, repaired and improved by single-unit moves"
    );
    let _ = writeln!(s, "seed = {seed}");
    s
}

fn write_plan_outputs(
    out: &Path,
    plan: &AuditPlan,
    cats: &Categories,
    config: &SolverConfig,
    seed: u64,
) -> Result<String> {
    io::write_plan(
        &out.join("plan.csv"),
        &plan.base,
        &plan.delta_plus,
        &plan.delta_minus,
        cats,
    )?;
    io::write_categories(&out.join("categories.csv"), cats)?;
    let summary = plan_summary(plan, config, seed);
    fs::write(out.join("summary.txt"), &summary)?;
    Ok(summary)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<i32> {
    let (table, cats, input) = load_source(&args.source)?;
    let seed = resolve_seed(args.solver.seed);
    let config = solver_config(&args.solver, &table, args.m_plus, args.m_minus, seed)?;
    let plan = optimize(&table, &config)?;
    create_dir(&args.out)?;
    let summary = write_plan_outputs(&args.out, &plan, &cats, &config, seed)?;
    Manifest::new("plan", args, Some(seed))?
        .input(&input)?
        .outputs(&["plan.csv", "categories.csv", "summary.txt"])
        .write(&args.out)?;
    print!("{summary}");
    Ok(if plan.accepted {
        EXIT_ACCEPTED
    } else {
        EXIT_ABOVE_CUTOFF
    })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let (table, cats, input) = load_source(&args.source)?;
    let seed = resolve_seed(args.solver.seed);
    let mut m_plus = args.sweep_m_plus.clone();
    let mut factors = args.sweep_m_minus_factor.clone();
    m_plus.sort_unstable();
    m_plus.dedup();
    factors.sort_unstable();
    factors.dedup();

    let mut rows = csv::Writer::from_writer(Vec::new());
    rows.write_record([
        "m_plus",
        "m_minus_factor",
        "m_minus",
        "m_minus_capped",
        "d_before",
        "d_after",
        "cutoff",
        "accepted",
        "added",
        "removed",
        "audit_size_after",
    ])?;
    let mut chosen: Option<(AuditPlan, SolverConfig)> = None;
    let mut fallback: Option<(AuditPlan, SolverConfig)> = None;
    for &mp in &m_plus {
        for &f in &factors {
            let wanted = mp.saturating_mul(f);
            let mm = wanted.min(table.audit_size());
            let config = solver_config(&args.solver, &table, mp, mm, seed)?;
            let plan = optimize(&table, &config)?;
            println!(
                "m_plus = {mp}, m_minus = {mm}: d_after = {:.4}, cutoff = {:.4}, accepted = {}",
                plan.achieved_deviance, plan.cutoff, plan.accepted
            );
            rows.write_record([
                mp.to_string(),
                f.to_string(),
                mm.to_string(),
                (mm < wanted).to_string(),
                format!("{:.6}", plan.deviance_before),
                format!("{:.6}", plan.achieved_deviance),
                format!("{:.6}", plan.cutoff),
                plan.accepted.to_string(),
                plan.total_added().to_string(),
                plan.total_removed().to_string(),
                plan.final_audit_size().to_string(),
            ])?;
            if plan.accepted && chosen.is_none() {
                chosen = Some((plan.clone(), config.clone()));
            }
            if fallback
                .as_ref()
                .is_none_or(|(p, _)| plan.achieved_deviance < p.achieved_deviance)
            {
                fallback = Some((plan, config));
            }
        }
    }
    create_dir(&args.out)?;
    fs::write(args.out.join("sweep.csv"), rows.into_inner()?)?;
    let accepted = chosen.is_some();
    let (plan, config) = chosen.or(fallback).context("the sweep grid is empty")?;
    let summary = write_plan_outputs(&args.out, &plan, &cats, &config, seed)?;
    Manifest::new("sweep", args, Some(seed))?
        .input(&input)?
        .outputs(&["sweep.csv", "plan.csv", "categories.csv", "summary.txt"])
        .write(&args.out)?;
    println!("selected:");
    print!("{summary}");
    Ok(if accepted {
        EXIT_ACCEPTED
    } else {
        EXIT_ABOVE_CUTOFF
    })
}

pub fn cmd_realize(args: &RealizeArgs) -> Result<i32> {
    let cats = io::read_categories(&args.plan.join("categories.csv"))?;
    let data = io::read_units(&args.input, Some(&cats))?;
    let table = data.table()?;
    let rows = io::read_plan(&args.plan.join("plan.csv"), &cats)?;
    let yn = table.y_categories();
    let mut dp = vec![0u64; rows.len()];
    let mut dm = vec![0u64; rows.len()];
    for (s, &[n0, n1, p, m]) in rows.iter().enumerate() {
        let (x, y) = (s / yn, s % yn);
        let (lx, ly) = (cats.x.label(x), cats.y.label(y));
        if table.count(x, y, 0) != n0 || table.count(x, y, 1) != n1 {
            bail!(
                "stratum ({lx}, {ly}): plan has n_ij0 = {n0}, n_ij1 = {n1} but the input has {} and {}",
                table.count(x, y, 0),
                table.count(x, y, 1)
            );
        }
        if p > n0 || m > n1 {
            bail!("stratum ({lx}, {ly}): plan moves more units than the stratum holds");
        }
        dp[s] = p;
        dm[s] = m;
    }
    let seed = resolve_seed(args.seed);
    let deviance = table.deviance();
    let mut plan = AuditPlan {
        base: table,
        delta_plus: dp,
        delta_minus: dm,
        deviance_before: deviance,
        continuous_deviance: f64::NAN,
        continuous_objective: f64::NAN,
        achieved_deviance: f64::NAN,
        cutoff: f64::NAN,
        accepted: false,
        attempts_run: 0,
        best_attempt_index: None,
    };
    plan.achieved_deviance = plan.adjusted_table().deviance();
    let selection = realize(&plan, &data.units, seed)?;

    create_dir(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("selection.csv"))?;
    w.write_record(["unit_id", "action"])?;
    for u in &data.units {
        w.write_record([u.unit_id.as_str(), selection.action(u).as_str()])?;
    }
    w.flush()?;
    let final_table = ContingencyTable3::tabulate(
        cats.x.len(),
        yn,
        data.units
            .iter()
            .map(|u| (u.x, u.y, selection.action(u).final_z())),
    )?;
    if final_table != plan.adjusted_table() {
        bail!("realized sample does not reproduce the plan");
    }
    io::write_table(&args.out.join("final_table.csv"), &final_table, &cats)?;

    let mut s = String::new();
    let _ = writeln!(s, "added = {}", selection.added.len());
    let _ = writeln!(s, "removed = {}", selection.removed.len());
    let _ = writeln!(s, "audit_size_after = {}", selection.final_sample.len());
    let _ = writeln!(s, "d_before = {:.6}", plan.deviance_before);
    let _ = writeln!(s, "d_after = {:.6}", plan.achieved_deviance);
    let _ = writeln!(s, "seed = {seed}");
    fs::write(args.out.join("realize_summary.txt"), &s)?;
    Manifest::new("realize", args, Some(seed))?
        .input(&args.input)?
        .input(&args.plan.join("plan.csv"))?
        .input(&args.plan.join("categories.csv"))?
        .outputs(&["selection.csv", "final_table.csv", "realize_summary.txt"])
        .write(&args.out)?;
    print!("{s}");
    Ok(EXIT_ACCEPTED)
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<i32> {
    let cats = args
        .categories
        .as_deref()
        .map(io::read_categories)
        .transpose()?;
    let audited = io::read_audited(&args.audited, cats.as_ref())?;
    let mut y_labels = audited.categories.y.clone();
    let audited_strata = y_labels.len();
    let props = io::read_margins(&args.margins, &mut y_labels)?;
    let data = AuditedData::new(
        &audited.records,
        audited.w.len(),
        audited.categories.x.len(),
        y_labels.len(),
    )?;
    let missing: Vec<&str> = (0..audited_strata)
        .filter(|&y| props[y] == 0.0 && data.stratum_sizes()[y] > 0)
        .map(|y| y_labels.label(y))
        .collect();
    if !missing.is_empty() {
        bail!("audited units in strata without population share: {missing:?}");
    }
    let margins = PopulationMargins::new(props)?;
    let report = match estimate(&data, &margins) {
        Err(auditsel_core::Error::EmptyStrata(strata)) => {
            let names: Vec<&str> = strata.iter().map(|&y| y_labels.label(y)).collect();
            bail!("no audited units in populated strata {names:?}");
        }
        other => other?,
    };

    create_dir(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("estimates.csv"))?;
    w.write_record(["parameter", "w", "x", "estimate", "std_error"])?;
    let mut text = String::new();
    let _ = writeln!(text, "audited units: {}", data.sample_size());
    let _ = writeln!(text, "\nstratum sizes:");
    for (y, n) in report.stratum_sizes.iter().enumerate() {
        let _ = writeln!(
            text,
            "  {}: n = {n}, share = {:.6}",
            y_labels.label(y),
            margins.proportions()[y]
        );
    }
    let _ = writeln!(text, "\nP(W = w):");
    for (k, e) in report.pw.iter().enumerate() {
        let wl = audited.w.label(k);
        w.write_record([
            "pw",
            wl,
            "",
            &format!("{:.10}", e.value),
            &format!("{:.10}", e.std_error()),
        ])?;
        let _ = writeln!(text, "  {wl}: {:.6} (se {:.6})", e.value, e.std_error());
    }
    let _ = writeln!(text, "\nP(X = x | W = w):");
    for (k, row) in report.px_given_w.iter().enumerate() {
        let wl = audited.w.label(k);
        for (x, e) in row.iter().enumerate() {
            let xl = audited.categories.x.label(x);
            match e {
                Some(e) => {
                    w.write_record([
                        "px_given_w",
                        wl,
                        xl,
                        &format!("{:.10}", e.value),
                        &format!("{:.10}", e.std_error()),
                    ])?;
                    let _ = writeln!(
                        text,
                        "  x = {xl} | w = {wl}: {:.6} (se {:.6})",
                        e.value,
                        e.std_error()
                    );
                }
                None => {
                    w.write_record(["px_given_w", wl, xl, "", ""])?;
                    let _ = writeln!(text, "  x = {xl} | w = {wl}: undefined, w not observed");
                }
            }
        }
    }
    w.flush()?;
    if !report.thin_strata.is_empty() {
        let names: Vec<&str> = report
            .thin_strata
            .iter()
            .map(|&y| y_labels.label(y))
            .collect();
        let _ = writeln!(
            text,
            "\nwarning: strata with a single audited unit have zero variance: {names:?}"
        );
    }
    if report.clamped_variances > 0 {
        let _ = writeln!(
            text,
            "\nnote: {} negative ratio variances were set to zero",
            report.clamped_variances
        );
    }
    let _ = writeln!(
        text,
        "\nStandard errors assume stratified simple random sampling within Y and tend to be \
         conservative when the audit sample was adjusted by `plan`."
    );
    fs::write(args.out.join("report.txt"), &text)?;
    let mut m = Manifest::new("estimate", args, None)?
        .input(&args.audited)?
        .input(&args.margins)?;
    if let Some(c) = &args.categories {
        m = m.input(c)?;
    }
    m.outputs(&["estimates.csv", "report.txt"])
        .write(&args.out)?;
    print!("{text}");
    Ok(EXIT_ACCEPTED)
}

fn all_conditions() -> Vec<Condition> {
    let mut out = Vec::new();
    for wx in 1..=4 {
        for wy in 1..=4 {
            for xz in 1..=4 {
                out.push(Condition { wx, wy, xz });
            }
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.8}"))
}

fn replicate_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "condition",
        "replicate",
        "seed",
        "d_before",
        "d_after",
        "relative_deviance",
        "audit_size_before",
        "audit_size_after",
        "accepted",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for stage in ["before", "after"] {
        for w in 1..=CATEGORIES {
            h.push(format!("bias_pw{w}_{stage}"));
        }
        for w in 1..=CATEGORIES {
            for x in 1..=CATEGORIES {
                h.push(format!("bias_px{x}_w{w}_{stage}"));
            }
        }
    }
    h
}

fn replicate_row(label: &str, r: &ReplicateResult) -> Vec<String> {
    let mut row = vec![
        label.to_owned(),
        r.replicate.to_string(),
        r.seed.to_string(),
        format!("{:.8}", r.deviance_before),
        format!("{:.8}", r.deviance_after),
        fmt_opt(r.relative_deviance()),
        r.audit_size_before.to_string(),
        r.audit_size_after.to_string(),
        r.accepted.to_string(),
    ];
    for after in [false, true] {
        for w in 0..CATEGORIES {
            row.push(format!(
                "{:.8}",
                if after {
                    r.bias_pw_after(w)
                } else {
                    r.bias_pw_before(w)
                }
            ));
        }
        for w in 0..CATEGORIES {
            for x in 0..CATEGORIES {
                let b = if after {
                    r.bias_px_given_w_after(x, w)
                } else {
                    r.bias_px_given_w_before(x, w)
                };
                row.push(fmt_opt(b));
            }
        }
    }
    row
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let seed = resolve_seed(args.seed);
    let conditions = if args.conditions.is_empty() {
        all_conditions()
    } else {
        args.conditions
            .iter()
            .map(|c| {
                Condition::parse(c)
                    .with_context(|| format!("--condition {c:?} is not like WX1,WY1,XZ4"))
            })
            .collect::<Result<_>>()?
    };
    if args.population == 0 {
        bail!("--population must be positive");
    }
    create_dir(&args.out)?;
    let mut outputs = Vec::new();

    if matches!(args.study, Study::Conditions | Study::All) {
        let mut reps = csv::Writer::from_path(args.out.join("replicates.csv"))?;
        reps.write_record(replicate_header())?;
        let mut sums = csv::Writer::from_path(args.out.join("summary.csv"))?;
        let mut header: Vec<String> = [
            "condition",
            "replicates",
            "median_relative_deviance",
            "improved_fraction",
            "accepted_fraction",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for w in 1..=CATEGORIES {
            for col in [
                "mean_bias_before",
                "mc_se_before",
                "mean_bias_after",
                "mc_se_after",
                "mean_abs_bias_before",
                "mean_abs_bias_after",
            ] {
                header.push(format!("pw{w}_{col}"));
            }
        }
        sums.write_record(&header)?;
        for (k, condition) in conditions.iter().enumerate() {
            let mut spec = match args.scale {
                Scale::Desk => ConditionSpec::desk(*condition),
                Scale::Paper => ConditionSpec::paper(*condition),
            };
            spec.population_size = args.population;
            spec.solver.m_plus = args.m_plus;
            spec.solver.m_minus = args.m_minus;
            if let Some(r) = args.replicates {
                spec.replicates = r;
            }
            if let Some(a) = args.attempts {
                spec.solver.attempts = a;
            }
            let label = condition.label();
            let cond_seed = auditsel_core::rng::derive_seed(seed, &[k as u64]);
            let results =
                run_condition(&spec, cond_seed).with_context(|| format!("condition {label}"))?;
            for r in &results {
                reps.write_record(replicate_row(&label, r))?;
            }
            let s = summarize(&label, &results);
            let mut row = vec![
                label.clone(),
                s.replicates.to_string(),
                format!("{:.8}", s.median_relative_deviance),
                format!("{:.4}", s.improved_fraction),
                format!("{:.4}", s.accepted_fraction),
            ];
            for w in 0..CATEGORIES {
                for v in [
                    s.mean_bias_pw_before[w],
                    s.mc_se_pw_before[w],
                    s.mean_bias_pw_after[w],
                    s.mc_se_pw_after[w],
                    s.mean_abs_bias_pw_before[w],
                    s.mean_abs_bias_pw_after[w],
                ] {
                    row.push(format!("{v:.8}"));
                }
            }
            sums.write_record(&row)?;
            println!(
                "{label}: median relative deviance {:.4}, |bias| P(W=1) {:.4} -> {:.4}",
                s.median_relative_deviance,
                s.mean_abs_bias_pw_before[0],
                s.mean_abs_bias_pw_after[0]
            );
        }
        reps.flush()?;
        sums.flush()?;
        outputs.extend(["replicates.csv", "summary.csv"]);
    }

    if matches!(args.study, Study::Variance | Study::All) {
        let samples = args.replicates.unwrap_or(match args.scale {
            Scale::Desk => 200,
            Scale::Paper => 1_000,
        });
        let solver = SolverConfig {
            m_plus: args.m_plus,
            m_minus: args.m_minus,
            attempts: args.attempts.unwrap_or(match args.scale {
                Scale::Desk => 50,
                Scale::Paper => 200,
            }),
            ..SolverConfig::default()
        };
        let set = VarianceCondition::standard_set();
        let rows = run_variance_study(&set, args.population, samples, &solver, seed)?;
        let mut w = csv::Writer::from_path(args.out.join("variance.csv"))?;
        w.write_record([
            "condition",
            "optimized",
            "parameter",
            "w",
            "x",
            "sd",
            "se_sd_ratio",
        ])?;
        for row in &rows {
            for k in 0..CATEGORIES {
                w.write_record([
                    row.label.clone(),
                    row.optimized.to_string(),
                    "pw".to_owned(),
                    (k + 1).to_string(),
                    String::new(),
                    format!("{:.8}", row.sd_pw[k]),
                    format!("{:.6}", row.se_sd_pw[k]),
                ])?;
            }
            for k in 0..CATEGORIES {
                for x in 0..CATEGORIES {
                    w.write_record([
                        row.label.clone(),
                        row.optimized.to_string(),
                        "px_given_w".to_owned(),
                        (k + 1).to_string(),
                        (x + 1).to_string(),
                        format!("{:.8}", row.sd_px_given_w[k][x]),
                        format!("{:.6}", row.se_sd_px_given_w[k][x]),
                    ])?;
                }
            }
            println!(
                "{}: se/sd P(W) {:.2} {:.2} {:.2}",
                row.label, row.se_sd_pw[0], row.se_sd_pw[1], row.se_sd_pw[2]
            );
        }
        w.flush()?;
        outputs.push("variance.csv");
    }

    Manifest::new("simulate", args, Some(seed))?
        .outputs(&outputs)
        .write(&args.out)?;
    Ok(EXIT_ACCEPTED)
}
