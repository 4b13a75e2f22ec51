//! Independent numerical checks of the optimality argument.
//!
//! Nothing in this module calls the water-filling optimizer or the
//! trigonometric objective in [`crate::esp`]. The single-item success
//! probability is evaluated through its polynomial form instead:
//! with `s = 1 - r`,
//!
//! ```text
//! sin^2((2t+1) asin sqrt(r)) = r * V_t(s)^2,
//! V_0 = 1, V_{-1} = -1, V_{k+1} = (4s - 2) V_k - V_{k-1}
//! ```
//!
//! where `V_k(s) = U_{2k}(sqrt(s))` are even Chebyshev polynomials of the
//! second kind. The polynomial has no singular points on `[0, 1]`, which keeps
//! the gradient of the uncapped objective well defined everywhere.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::Prior;
use crate::rng;

/// Size limits for the upper-bound ascent.
pub const BOUND_MAX_ITEMS: usize = 8;
pub const BOUND_MAX_QUERIES: u32 = 3;

/// Size limits for the per-step allocation search.
pub const ALLOCATION_MAX_ITEMS: usize = 3;
pub const ALLOCATION_MAX_STEPS: usize = 3;
pub const ALLOCATION_MIN_GRID_STEP: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    ProjectedAscent,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    /// Assignment attaining `bound_value`. For the allocation search this is
    /// the `m x n` matrix flattened row by row (one row per step).
    pub achiever: Vec<f64>,
    pub method: BoundMethod,
    /// `bound_value - reference`, once a reference has been attached.
    pub residual: Option<f64>,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Records the gap to an independently computed success probability.
    pub fn with_reference(mut self, reference: f64) -> Self {
        self.residual = Some(self.bound_value - reference);
        self.extras.insert("reference".into(), reference);
        self
    }
}

/// `sin x` up to `pi/2`, then `1`.
pub fn f_clamped(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("f_clamped needs x >= 0, got {x}")));
    }
    Ok(clamped_sin(x))
}

#[inline]
fn clamped_sin(x: f64) -> f64 {
    if x >= FRAC_PI_2 {
        1.0
    } else {
        x.sin()
    }
}

/// `(g(r), g'(r))` for `g(r) = sin^2((2t+1) asin sqrt(r))`, via the
/// Chebyshev recurrence.
pub fn success_poly(r: f64, t: u32) -> (f64, f64) {
    let s = 1.0 - r;
    // (V_{k-1}, V_k) and their derivatives with respect to s
    let (mut prev, mut cur) = (-1.0, 1.0);
    let (mut dprev, mut dcur) = (0.0, 0.0);
    for _ in 0..t {
        let next = (4.0 * s - 2.0) * cur - prev;
        let dnext = 4.0 * cur + (4.0 * s - 2.0) * dcur - dprev;
        prev = cur;
        cur = next;
        dprev = dcur;
        dcur = dnext;
    }
    let value = r * cur * cur;
    // d/dr = V^2 + r * 2 V V' * ds/dr, ds/dr = -1
    let slope = cur * cur - 2.0 * r * cur * dcur;
    (value, slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentConfig {
    /// Random starting points, on top of the grid seeds.
    pub restarts: usize,
    /// Grid seeds are every composition of `1` into multiples of
    /// `1 / grid_resolution`.
    pub grid_resolution: usize,
    /// Stop when the projected gradient step is shorter than this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            restarts: 32,
            grid_resolution: 4,
            grad_tol: 1e-10,
            max_iter: 20_000,
            seed: 0x5eed,
        }
    }
}

/// Euclidean projection onto `{r >= 0, sum r <= 1}`.
pub fn project_capped_simplex(v: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= 1.0 {
        return clamped;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

fn weighted_objective(weights: &[f64], r: &[f64], t: u32) -> f64 {
    weights
        .iter()
        .zip(r)
        .map(|(w, &ri)| w * success_poly(ri, t).0)
        .sum()
}

fn weighted_gradient(weights: &[f64], r: &[f64], t: u32) -> Vec<f64> {
    weights
        .iter()
        .zip(r)
        .map(|(w, &ri)| w * success_poly(ri, t).1)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projected gradient ascent with step halving (Armijo along the projection
/// arc) from one starting point.
fn ascend(weights: &[f64], t: u32, start: &[f64], cfg: &AscentConfig) -> (f64, Vec<f64>) {
    let mut r = project_capped_simplex(start);
    let mut value = weighted_objective(weights, &r, t);
    let mut step = 1.0;
    for _ in 0..cfg.max_iter {
        let grad = weighted_gradient(weights, &r, t);
        let unit: Vec<f64> = r.iter().zip(&grad).map(|(x, g)| x + g).collect();
        let mapping: Vec<f64> = project_capped_simplex(&unit)
            .iter()
            .zip(&r)
            .map(|(a, b)| a - b)
            .collect();
        if norm(&mapping) < cfg.grad_tol {
            break;
        }
        let mut moved = false;
        while step > 1e-16 {
            let trial: Vec<f64> = r.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            let candidate = project_capped_simplex(&trial);
            let gain: f64 = grad
                .iter()
                .zip(candidate.iter().zip(&r))
                .map(|(g, (c, x))| g * (c - x))
                .sum();
            let candidate_value = weighted_objective(weights, &candidate, t);
            if candidate_value >= value + 1e-4 * gain && candidate_value >= value {
                moved = candidate_value > value || candidate != r;
                r = candidate;
                value = candidate_value;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
        step = (step * 2.0).min(1e3);
    }
    (value, r)
}

/// All vectors of `n` non-negative integers summing to `total`, in
/// lexicographic order.
fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(n - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::with_capacity(n), &mut out);
    out
}

fn lexicographically_less(a: &[f64], b: &[f64]) -> bool {
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

fn better(candidate: &(f64, Vec<f64>), best: &(f64, Vec<f64>)) -> bool {
    candidate.0 > best.0 || (candidate.0 == best.0 && lexicographically_less(&candidate.1, &best.1))
}

/// Upper bound on the expected success probability of any `t`-query
/// algorithm: the maximum of `sum_i p_i sin^2((2t+1) asin sqrt(r_i))` over
/// `r >= 0, sum r <= 1`, without a per-item cap.
///
/// Found by projected gradient ascent from every grid seed plus
/// `cfg.restarts` random seeds. The report's extras also carry
/// `r_weighted`: `sum_i r_i g(r_i)` at the achiever.
pub fn query_upper_bound(p: &Prior, t: u32, cfg: &AscentConfig) -> Result<BoundReport> {
    if p.len() > BOUND_MAX_ITEMS || t > BOUND_MAX_QUERIES {
        return Err(Error::limit(format!(
            "bound search is limited to n <= {BOUND_MAX_ITEMS} and t <= {BOUND_MAX_QUERIES} (got n = {}, t = {t})",
            p.len()
        )));
    }
    if cfg.grid_resolution == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let n = p.len();
    let res = cfg.grid_resolution;
    let mut seeds: Vec<Vec<f64>> = compositions(n, res)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / res as f64).collect())
        .collect();
    let mut stream = rng::stream(cfg.seed);
    for _ in 0..cfg.restarts {
        let raw: Vec<f64> = (0..n).map(|_| stream.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let scale: f64 = stream.gen_range(0.5..=1.0);
        seeds.push(raw.iter().map(|x| scale * x / total).collect());
    }

    let weights = p.weights();
    let results: Vec<(f64, Vec<f64>)> = seeds
        .par_iter()
        .map(|s| ascend(weights, t, s, cfg))
        .collect();
    let mut best = results[0].clone();
    for candidate in &results[1..] {
        if better(candidate, &best) {
            best = candidate.clone();
        }
    }

    let (bound_value, achiever) = best;
    let r_weighted: f64 = achiever.iter().map(|&r| r * success_poly(r, t).0).sum();
    let mut extras = BTreeMap::new();
    extras.insert("r_weighted".into(), r_weighted);
    extras.insert("starts".into(), seeds.len() as f64);
    Ok(BoundReport {
        bound_value,
        achiever,
        method: BoundMethod::ProjectedAscent,
        residual: None,
        extras,
    })
}

/// `sum_x p_x f(sum_t asin sqrt(u_{t,x}))^2` for per-step allocations `u`
/// given as `m` rows of length `n`.
pub fn allocation_objective(weights: &[f64], rows: &[Vec<f64>]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(x, w)| {
            let angle: f64 = rows
                .iter()
                .map(|row| row[x].max(0.0).sqrt().min(1.0).asin())
                .sum();
            let f = clamped_sin(angle);
            w * f * f
        })
        .sum()
}

/// Pairwise mass transfers within each step (or within every step at once
/// when `tied`), with halving transfer sizes, until nothing improves.
fn refine(weights: &[f64], rows: &mut [Vec<f64>], start: f64, tied: bool) -> f64 {
    let n = weights.len();
    let mut value = allocation_objective(weights, rows);
    let mut delta = start;
    let groups: Vec<Vec<usize>> = if tied {
        vec![(0..rows.len()).collect()]
    } else {
        (0..rows.len()).map(|s| vec![s]).collect()
    };
    while delta > 1e-10 {
        let mut improved = false;
        for group in &groups {
            for from in 0..n {
                for to in 0..n {
                    if from == to || group.iter().any(|&s| rows[s][from] < delta) {
                        continue;
                    }
                    for &s in group {
                        rows[s][from] -= delta;
                        rows[s][to] += delta;
                    }
                    let trial = allocation_objective(weights, rows);
                    if trial > value + 1e-15 {
                        value = trial;
                        improved = true;
                    } else {
                        for &s in group {
                            rows[s][from] += delta;
                            rows[s][to] -= delta;
                        }
                    }
                }
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    value
}

/// Exhaustive search over per-step allocations on a grid, compared with the
/// restriction to identical allocations at every step.
///
/// The grid resolution is `1 / floor(1 / grid_step)`. Because the objective
/// is symmetric in the steps, only non-decreasing tuples of grid points are
/// enumerated. The best point of each search is then refined by local
/// transfers. Extras: `best_equal`, `gap` (unrestricted minus equal),
/// `grid_step` and `grid_slack = 2 * grid_step`. The slack is a Lipschitz
/// style tolerance, not a proven constant.
pub fn equal_allocation_search(p: &Prior, m: usize, grid_step: f64) -> Result<BoundReport> {
    if p.len() > ALLOCATION_MAX_ITEMS
        || m > ALLOCATION_MAX_STEPS
        || grid_step < ALLOCATION_MIN_GRID_STEP
    {
        return Err(Error::limit(format!(
            "allocation search is limited to n <= {ALLOCATION_MAX_ITEMS}, m <= {ALLOCATION_MAX_STEPS}, \
             grid_step >= {ALLOCATION_MIN_GRID_STEP} (got n = {}, m = {m}, grid_step = {grid_step})",
            p.len()
        )));
    }
    if m == 0 || !(grid_step <= 1.0) {
        return Err(Error::invalid("need m >= 1 and grid_step in [0.02, 1]"));
    }
    let n = p.len();
    let weights = p.weights();
    let divisions = (1.0 / grid_step + 1e-9).floor() as usize;
    let points: Vec<Vec<f64>> = compositions(n, divisions)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / divisions as f64).collect())
        .collect();
    let angles: Vec<Vec<f64>> = points
        .iter()
        .map(|u| u.iter().map(|v| v.sqrt().min(1.0).asin()).collect())
        .collect();
    let score = |tuple: &[usize]| -> f64 {
        (0..n)
            .map(|x| {
                let angle: f64 = tuple.iter().map(|&i| angles[i][x]).sum();
                let f = clamped_sin(angle);
                weights[x] * f * f
            })
            .sum()
    };

    // non-decreasing index tuples, split by first index
    let count = points.len();
    let best_tuple = (0..count)
        .into_par_iter()
        .map(|first| {
            let mut tuple = vec![first; m];
            let mut best = (score(&tuple), tuple.clone());
            loop {
                // advance the tail (positions 1..m) as a non-decreasing odometer
                let mut pos = m;
                loop {
                    if pos <= 1 {
                        return best;
                    }
                    pos -= 1;
                    if tuple[pos] + 1 < count {
                        tuple[pos] += 1;
                        let v = tuple[pos];
                        for slot in tuple.iter_mut().skip(pos + 1) {
                            *slot = v;
                        }
                        break;
                    }
                }
                let value = score(&tuple);
                if value > best.0 {
                    best = (value, tuple.clone());
                }
            }
        })
        .reduce_with(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .expect("grid is non-empty");

    let mut rows: Vec<Vec<f64>> = best_tuple.1.iter().map(|&i| points[i].clone()).collect();
    let grid_best = best_tuple.0;
    let best_unrestricted = refine(weights, &mut rows, grid_step / 2.0, false).max(grid_best);

    let mut equal_best = (f64::NEG_INFINITY, 0usize);
    for i in 0..count {
        let value = score(&vec![i; m]);
        if value > equal_best.0 {
            equal_best = (value, i);
        }
    }
    let mut equal_rows = vec![points[equal_best.1].clone(); m];
    let best_equal = refine(weights, &mut equal_rows, grid_step / 2.0, true).max(equal_best.0);

    let mut extras = BTreeMap::new();
    extras.insert("best_equal".into(), best_equal);
    extras.insert("gap".into(), best_unrestricted - best_equal);
    extras.insert("grid_step".into(), grid_step);
    extras.insert("grid_slack".into(), 2.0 * grid_step);
    extras.insert("grid_best".into(), grid_best);
    Ok(BoundReport {
        bound_value: best_unrestricted,
        achiever: rows.into_iter().flatten().collect(),
        method: BoundMethod::Grid,
        residual: None,
        extras,
    })
}
