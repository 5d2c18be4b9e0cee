//! Exact integer search for small budgets.
//!
//! Within one `Y` layer the deviance is a sum of per-stratum terms plus a
//! term in the layer's net change, and layers only interact through the two
//! budgets. A dynamic program over (units added, units removed) therefore
//! finds the minimum deviance for every budget use in
//! `O(I J (M+ + 1)^2 (M- + 1)^2)` time.

use alloc::vec;
use alloc::vec::Vec;

use super::objective::Objective;
use crate::math::xlogx;
use crate::table::ContingencyTable3;

/// Largest `(M+ + 1)(M- + 1)` for which the exact search runs.
pub const EXACT_BUDGET_LIMIT: u64 = 1024;

/// Minimum-objective integer plan in normalized form, or `None` when the
/// budgets exceed [`EXACT_BUDGET_LIMIT`]. The deviance is minimized exactly
/// for every combination of units added and removed; the objective is then
/// compared across those combinations.
pub(crate) fn exact_small_budget(
    table: &ContingencyTable3,
    m_plus: u64,
    m_minus: u64,
    kind: Objective,
) -> Option<(Vec<u64>, Vec<u64>)> {
    if (m_plus + 1).saturating_mul(m_minus + 1) > EXACT_BUDGET_LIMIT {
        return None;
    }
    let (xn, yn) = (table.x_categories(), table.y_categories());
    let (pn, mn) = (m_plus as usize + 1, m_minus as usize + 1);
    let cells = pn * mn;
    let at = |p: usize, m: usize| p * mn + m;

    // Per layer: best deviance for each exact budget use, with choices.
    let mut layer_best = Vec::with_capacity(yn);
    let mut layer_choice: Vec<Vec<Vec<i64>>> = Vec::with_capacity(yn);
    for y in 0..yn {
        let mut cur = vec![f64::INFINITY; cells];
        cur[0] = 0.0;
        let mut choices = Vec::with_capacity(xn);
        for x in 0..xn {
            let n0 = table.count(x, y, 0) as i64;
            let n1 = table.count(x, y, 1) as i64;
            let mut next = vec![f64::INFINITY; cells];
            let mut choice = vec![0i64; cells];
            for p in 0..pn {
                for m in 0..mn {
                    let base = cur[at(p, m)];
                    if !base.is_finite() {
                        continue;
                    }
                    let lo = -n1.min((mn - 1 - m) as i64);
                    let hi = n0.min((pn - 1 - p) as i64);
                    for net in lo..=hi {
                        let (np, nm) = (p + net.max(0) as usize, m + (-net).max(0) as usize);
                        let v = base + 2.0 * (xlogx((n0 - net) as f64) + xlogx((n1 + net) as f64));
                        if v < next[at(np, nm)] {
                            next[at(np, nm)] = v;
                            choice[at(np, nm)] = net;
                        }
                    }
                }
            }
            cur = next;
            choices.push(choice);
        }
        let (l0, l1) = (
            table.layer_total(y, 0) as f64,
            table.layer_total(y, 1) as f64,
        );
        let rows: f64 = (0..xn)
            .map(|x| xlogx(table.stratum_total(x, y) as f64))
            .sum();
        let constant = 2.0 * xlogx(l0 + l1) - 2.0 * rows;
        for p in 0..pn {
            for m in 0..mn {
                let v = &mut cur[at(p, m)];
                if v.is_finite() {
                    let net = p as f64 - m as f64;
                    *v += constant - 2.0 * (xlogx(l0 - net) + xlogx(l1 + net));
                }
            }
        }
        layer_best.push(cur);
        layer_choice.push(choices);
    }

    // Combine layers; `split[y][cell]` is the budget use given to layer `y`.
    let mut total = layer_best[0].clone();
    let mut splits: Vec<Vec<(usize, usize)>> = vec![(0..cells).map(|c| (c / mn, c % mn)).collect()];
    for best in &layer_best[1..] {
        let mut next = vec![f64::INFINITY; cells];
        let mut split = vec![(0, 0); cells];
        for p in 0..pn {
            for m in 0..mn {
                if !total[at(p, m)].is_finite() {
                    continue;
                }
                for q in 0..pn - p {
                    for r in 0..mn - m {
                        let v = total[at(p, m)] + best[at(q, r)];
                        if v < next[at(p + q, m + r)] {
                            next[at(p + q, m + r)] = v;
                            split[at(p + q, m + r)] = (q, r);
                        }
                    }
                }
            }
        }
        total = next;
        splits.push(split);
    }

    let mut chosen: Option<(usize, usize, f64)> = None;
    for p in 0..pn {
        for m in 0..mn {
            let d = total[at(p, m)];
            if !d.is_finite() {
                continue;
            }
            let v = kind.value(d.max(0.0), (p + m) as f64);
            if chosen.is_none_or(|(_, _, b)| v < b) {
                chosen = Some((p, m, v));
            }
        }
    }
    let (mut p, mut m, _) = chosen?;
    let mut dp = vec![0u64; xn * yn];
    let mut dm = vec![0u64; xn * yn];
    for y in (0..yn).rev() {
        let (mut q, mut r) = splits[y][at(p, m)];
        p -= q;
        m -= r;
        for x in (0..xn).rev() {
            let net = layer_choice[y][x][at(q, r)];
            let s = x * yn + y;
            if net > 0 {
                dp[s] = net as u64;
                q -= net as usize;
            } else {
                dm[s] = (-net) as u64;
                r -= (-net) as usize;
            }
        }
    }
    Some((dp, dm))
}
