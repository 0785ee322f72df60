//! Maximization of information objectives over test channels subject to a
//! rate constraint.
//!
//! The search is alternating coordinate ascent on channel rows over the
//! probability simplex: each step line-searches from the current row toward
//! a simplex vertex, with infeasible steps pulled back by bisection along
//! the convex-combination path toward a row-constant (always feasible)
//! channel. Restarts mix a deterministic seeding path (copy channel blended
//! toward uniform, step 0.05) with random channels; a final pass polishes
//! the best channel with shrinking pairwise mass moves. Restarts run in
//! parallel but are merged deterministically, so results depend only on the
//! seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Constraint slack: channels within this of the rate cap count as feasible.
pub const RATE_SLACK: f64 = 1e-9;

/// Knobs for the channel search. `Default` matches the values used by every
/// region computation in this crate.
#[derive(Debug, Clone)]
pub struct ChannelSearchOptions {
    /// Number of random restarts on top of the deterministic seeding path.
    pub restarts: usize,
    /// Step of the deterministic copy-to-uniform seeding path.
    pub grid_seed_step: f64,
    /// Stop a sweep phase when the relative improvement falls below this.
    pub rel_tol: f64,
    /// Interior samples per line search (endpoints always evaluated).
    pub line_samples: usize,
    /// Shrinking step sizes for the pairwise refinement pass.
    pub refine_steps: Vec<f64>,
    /// Master seed for the random restarts.
    pub seed: u64,
    /// Hard cap on ascent sweeps per restart.
    pub max_sweeps: usize,
}

impl Default for ChannelSearchOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            grid_seed_step: 0.05,
            rel_tol: 1e-6,
            line_samples: 8,
            refine_steps: vec![0.02, 0.005, 0.001, 0.0002],
            seed: 0x5eed,
            max_sweeps: 200,
        }
    }
}

/// Outcome of one maximization: best channel rows, achieved objective, and
/// search diagnostics.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub rows: Vec<Vec<f64>>,
    pub value: f64,
    pub restarts: usize,
    /// Deficit of the runner-up restart relative to the winner; small values
    /// mean many basins agree on the optimum.
    pub gap: f64,
}

type Rows = Vec<Vec<f64>>;

fn row_average(rows: &Rows) -> Vec<f64> {
    let nu = rows[0].len();
    let mut avg = vec![0.0f64; nu];
    for row in rows {
        for (a, &v) in avg.iter_mut().zip(row.iter()) {
            *a += v;
        }
    }
    let nx = rows.len() as f64;
    avg.iter_mut().for_each(|a| *a /= nx);
    avg
}

fn blend(a: &Rows, b: &Rows, t: f64) -> Rows {
    a.iter()
        .zip(b.iter())
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb.iter())
                .map(|(&x, &y)| (1.0 - t) * x + t * y)
                .collect()
        })
        .collect()
}

/// Pulls `rows` toward the row-constant channel built from its own average
/// row until the rate constraint holds. The constant channel is independent
/// of the input, so its rate is exactly zero and a feasible blend always
/// exists; bisection finds the least blending that restores feasibility.
fn project_feasible(rows: Rows, rate: &dyn Fn(&Rows) -> f64, cap: f64) -> Rows {
    if rate(&rows) <= cap + RATE_SLACK {
        return rows;
    }
    let avg = row_average(&rows);
    let anchor: Rows = vec![avg; rows.len()];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate(&blend(&rows, &anchor, mid)) <= cap + RATE_SLACK {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    blend(&rows, &anchor, hi)
}

/// Largest `t` in [0, 1] keeping `(1-t) row + t vertex` feasible, or `None`
/// if even tiny steps are infeasible.
fn max_feasible_step(
    rows: &Rows,
    r: usize,
    vertex: usize,
    rate: &dyn Fn(&Rows) -> f64,
    cap: f64,
) -> Option<f64> {
    let mut probe = rows.clone();
    let set_row = |probe: &mut Rows, t: f64| {
        for (u, v) in probe[r].iter_mut().enumerate() {
            let target = if u == vertex { 1.0 } else { 0.0 };
            *v = (1.0 - t) * rows[r][u] + t * target;
        }
    };
    set_row(&mut probe, 1.0);
    if rate(&probe) <= cap + RATE_SLACK {
        return Some(1.0);
    }
    // The feasible set along the segment is an interval containing t = 0.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        set_row(&mut probe, mid);
        if rate(&probe) <= cap + RATE_SLACK {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo > 1e-12 {
        Some(lo)
    } else {
        None
    }
}

fn ascend(
    mut rows: Rows,
    objective: &dyn Fn(&Rows) -> f64,
    rate: &dyn Fn(&Rows) -> f64,
    cap: f64,
    opts: &ChannelSearchOptions,
) -> (Rows, f64) {
    rows = project_feasible(rows, rate, cap);
    let nu = rows[0].len();
    let mut best = objective(&rows);
    for _ in 0..opts.max_sweeps {
        let before = best;
        for r in 0..rows.len() {
            let mut best_row: Option<(f64, Vec<f64>)> = None;
            for vertex in 0..nu {
                let Some(t_max) = max_feasible_step(&rows, r, vertex, rate, cap) else {
                    continue;
                };
                // The objective need not be monotone along the segment
                // (min-type objectives kink where their branches cross), so
                // scan a short grid, then hill-climb around the best sample
                // with shrinking steps.
                let mut probe = rows.clone();
                let mut eval_at = |probe: &mut Rows, t: f64| -> f64 {
                    for (u, v) in probe[r].iter_mut().enumerate() {
                        let target = if u == vertex { 1.0 } else { 0.0 };
                        *v = (1.0 - t) * rows[r][u] + t * target;
                    }
                    objective(probe)
                };
                let mut seg_best = (f64::NEG_INFINITY, 0.0f64);
                for k in 1..=opts.line_samples {
                    let t = t_max * k as f64 / opts.line_samples as f64;
                    let val = eval_at(&mut probe, t);
                    if val > seg_best.0 {
                        seg_best = (val, t);
                    }
                }
                let mut step = t_max / opts.line_samples as f64;
                while step > 3e-5 * t_max.max(1e-9) {
                    let mut moved = false;
                    for t in [seg_best.1 - step, seg_best.1 + step] {
                        if !(0.0..=t_max).contains(&t) {
                            continue;
                        }
                        let val = eval_at(&mut probe, t);
                        if val > seg_best.0 {
                            seg_best = (val, t);
                            moved = true;
                        }
                    }
                    if !moved {
                        step *= 0.5;
                    }
                }
                let (val, t) = seg_best;
                if val > best && best_row.as_ref().map_or(true, |(b, _)| val > *b) {
                    eval_at(&mut probe, t);
                    best_row = Some((val, probe[r].clone()));
                }
            }
            if let Some((val, row)) = best_row {
                rows[r] = row;
                best = val;
            }
        }
        if best - before <= opts.rel_tol * (before.abs() + 1e-12) {
            break;
        }
    }
    (rows, best)
}

/// Pairwise mass moves with shrinking steps; each candidate is re-projected
/// onto the feasible set before evaluation so the search can track a curved
/// constraint boundary.
fn refine(
    mut rows: Rows,
    objective: &dyn Fn(&Rows) -> f64,
    rate: &dyn Fn(&Rows) -> f64,
    cap: f64,
    opts: &ChannelSearchOptions,
) -> (Rows, f64) {
    let nu = rows[0].len();
    let mut best = objective(&rows);
    for &delta in opts.refine_steps.iter() {
        for _pass in 0..200 {
            let mut improved = false;
            for r in 0..rows.len() {
                for from in 0..nu {
                    for to in 0..nu {
                        // Re-check the donor mass each time: an accepted
                        // move inside this loop may have drained it.
                        if to == from || rows[r][from] < delta {
                            continue;
                        }
                        let mut cand = rows.clone();
                        cand[r][from] -= delta;
                        cand[r][to] += delta;
                        let cand = project_feasible(cand, rate, cap);
                        let val = objective(&cand);
                        if val > best + 1e-12 {
                            rows = cand;
                            best = val;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    (rows, best)
}

/// Clamps floating-point dust and renormalizes each row so the winner is
/// always a valid channel.
fn sanitize(mut rows: Rows) -> Rows {
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if *v < 0.0 {
                debug_assert!(*v > -1e-9, "search produced mass {v}");
                *v = 0.0;
            }
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    rows
}

fn copy_channel(nx: usize, nu: usize) -> Rows {
    (0..nx)
        .map(|x| {
            let mut row = vec![0.0; nu];
            row[x.min(nu - 1)] = 1.0;
            row
        })
        .collect()
}

fn uniform_channel(nx: usize, nu: usize) -> Rows {
    vec![vec![1.0 / nu as f64; nu]; nx]
}

fn random_channel(rng: &mut ChaCha8Rng, nx: usize, nu: usize) -> Rows {
    (0..nx)
        .map(|_| {
            let mut row: Vec<f64> = (0..nu)
                .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
                .collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect()
}

/// Maximizes `objective(rows)` over `nx x nu` channels with
/// `rate(rows) <= cap`. Both callables must be pure; the result is
/// deterministic in `opts.seed` regardless of thread count.
pub fn maximize_channel(
    nx: usize,
    nu: usize,
    objective: &(dyn Fn(&Rows) -> f64 + Sync),
    rate: &(dyn Fn(&Rows) -> f64 + Sync),
    cap: f64,
    opts: &ChannelSearchOptions,
) -> SearchOutcome {
    let mut seeds: Vec<Rows> = Vec::new();
    let copy = copy_channel(nx, nu);
    let uniform = uniform_channel(nx, nu);
    let steps = (1.0 / opts.grid_seed_step).round() as usize;
    for k in 0..=steps {
        seeds.push(blend(&copy, &uniform, k as f64 / steps as f64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        seeds.push(random_channel(&mut rng, nx, nu));
    }

    let results: Vec<(Rows, f64)> = seeds
        .into_par_iter()
        .map(|seed_rows| {
            let (rows, _) = ascend(seed_rows, objective, rate, cap, opts);
            let (rows, _) = refine(rows, objective, rate, cap, opts);
            let rows = sanitize(rows);
            let val = objective(&rows);
            (rows, val)
        })
        .collect();

    let restarts = results.len();
    let best_idx = results
        .iter()
        .enumerate()
        .max_by(|(ia, (_, a)), (ib, (_, b))| {
            a.partial_cmp(b)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .unwrap();
    let best_val = results[best_idx].1;
    let runner_up = results
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best_idx)
        .map(|(_, (_, v))| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = if runner_up.is_finite() {
        best_val - runner_up
    } else {
        0.0
    };
    SearchOutcome {
        rows: results[best_idx].0.clone(),
        value: best_val,
        restarts,
        gap,
    }
}
