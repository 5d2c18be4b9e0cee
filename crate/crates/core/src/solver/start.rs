//! Random strictly feasible starting points.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::barrier::Problem;
use super::StartBounds;

/// Distance kept from every bound so that the start is strictly interior.
pub const INTERIOR_OFFSET: f64 = 1e-6;

/// Spreads `target` over cells with capacities `caps`, proportionally to
/// independent uniform weights. Each value stays within
/// `[INTERIOR_OFFSET, cap - INTERIOR_OFFSET]`; mass clipped at a cap is
/// redistributed over the unsaturated cells until nothing is clipped.
pub(crate) fn allocate<R: Rng + ?Sized>(rng: &mut R, caps: &[f64], target: f64) -> Vec<f64> {
    let k = caps.len();
    if k == 0 {
        return Vec::new();
    }
    let eps = INTERIOR_OFFSET;
    if target <= 2.0 * eps * k as f64 {
        return caps
            .iter()
            .map(|&c| (target / k as f64).min(0.5 * c))
            .collect();
    }
    let weights: Vec<f64> = (0..k)
        .map(|_| rng.gen::<f64>() + f64::MIN_POSITIVE)
        .collect();
    let room: Vec<f64> = caps.iter().map(|&c| c - 2.0 * eps).collect();
    let mut out = vec![0.0; k];
    let mut saturated = vec![false; k];
    let mut remaining = target - eps * k as f64;
    loop {
        let weight: f64 = (0..k).filter(|&c| !saturated[c]).map(|c| weights[c]).sum();
        if weight <= 0.0 || remaining <= 0.0 {
            break;
        }
        let mut clipped = false;
        let share = remaining;
        for c in 0..k {
            if saturated[c] {
                continue;
            }
            let add = share * weights[c] / weight;
            if out[c] + add >= room[c] {
                remaining -= room[c] - out[c];
                out[c] = room[c];
                saturated[c] = true;
                clipped = true;
            } else {
                out[c] += add;
                remaining -= add;
            }
        }
        if !clipped {
            break;
        }
    }
    out.iter_mut().for_each(|v| *v += eps);
    out
}

/// Starting point for one attempt: totals drawn uniformly from
/// `[l M, u M]`, then spread over the free cells.
pub(crate) fn starting_point<R: Rng + ?Sized>(
    problem: &Problem,
    bounds: &StartBounds,
    rng: &mut R,
) -> Vec<f64> {
    let np = problem.plus.len();
    let (caps_plus, caps_minus) = problem.upper().split_at(np);
    let plus_target = draw_total(rng, problem.plus_cap, bounds.plus, caps_plus);
    let minus_target = draw_total(rng, problem.minus_cap, bounds.minus, caps_minus);
    let mut start = allocate(rng, caps_plus, plus_target);
    start.extend(allocate(rng, caps_minus, minus_target));
    start
}

fn draw_total<R: Rng + ?Sized>(rng: &mut R, cap: f64, (lo, hi): (f64, f64), caps: &[f64]) -> f64 {
    if caps.is_empty() {
        return 0.0;
    }
    let u: f64 = rng.gen();
    let total = cap * (lo + (hi - lo) * u);
    // The start must stay strictly below the summed cell capacities.
    let capacity: f64 = caps.iter().sum();
    total.min(hi * capacity)
}
