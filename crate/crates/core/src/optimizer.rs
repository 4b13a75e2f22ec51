//! Optimal amplitude plans.
//!
//! The objective `sum_i p_i g(q_i)` with `g(q) = sin^2((2t+1) asin sqrt(q))`
//! is separable, and each `g` is increasing and concave on `[0, cap(t)]`.
//! Restricting every `q_i` to that box loses nothing, so the optimum is a
//! water-filling allocation: every interior coordinate has the same marginal
//! gain `p_i g'(q_i) = lambda`, coordinates whose initial marginal
//! `p_i (2t+1)^2` is below `lambda` stay at zero, and `lambda` is fixed by
//! `sum(q) = 1`. `sum(q(lambda))` is non-increasing in `lambda`, so `lambda`
//! is found by bisection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esp::{esp, AmplitudePlan};
use crate::prior::Prior;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence tolerance on `sum(q) - 1` and on the relative width of the
    /// multiplier bracket.
    pub tol: f64,
    /// Iteration cap for the multiplier bisection.
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("optimizer tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("optimizer needs at least one iteration"));
        }
        Ok(())
    }
}

/// Result of an optimization: the plan, the multiplier that certifies it and
/// the KKT residual of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub plan: AmplitudePlan,
    pub multiplier: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// On-disk form of a plan: `{"t", "q", "esp", "kkt_residual"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: u32,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
}

impl PlanRecord {
    pub fn from_optimum(p: &Prior, opt: &Optimum) -> Result<Self> {
        Ok(PlanRecord {
            t: opt.plan.t,
            q: opt.plan.q.clone(),
            esp: Some(esp(p, &opt.plan)?),
            kkt_residual: Some(opt.kkt_residual),
        })
    }

    pub fn plan(&self) -> Result<AmplitudePlan> {
        AmplitudePlan::new(self.q.clone(), self.t)
    }
}

/// Largest useful squared amplitude for `t` iterations:
/// `sin^2(pi / (2(2t+1)))`, where a single item is found with certainty.
pub fn cap(t: u32) -> f64 {
    // exact values where the trig route rounds
    match t {
        0 => return 1.0,
        1 => return 0.25,
        _ => {}
    }
    let s = (PI / (2.0 * f64::from(2 * t + 1))).sin();
    s * s
}

/// `g'(q)` for `g(q) = sin^2((2t+1) asin sqrt(q))`, with the limits at the
/// ends of `[0, 1]`.
pub fn marginal_gain(q: f64, t: u32) -> f64 {
    let k = f64::from(2 * t + 1);
    if q <= 0.0 || q >= 1.0 {
        return k * k;
    }
    let theta = q.sqrt().asin();
    k * (2.0 * k * theta).sin() / (2.0 * (q * (1.0 - q)).sqrt())
}

/// Solves `weight * g'(q) = lambda` for `q` in `[0, cap(t)]`.
///
/// Works in `theta = asin sqrt(q)` where `g'(q) = k sin(2k theta) / sin(2 theta)`
/// is strictly decreasing on `(0, pi/(2k))`. Newton steps are kept inside a
/// shrinking bracket and replaced by bisection whenever they leave it.
fn allocation(weight: f64, lambda: f64, t: u32, level: f64) -> f64 {
    let k = f64::from(2 * t + 1);
    if lambda <= 0.0 {
        return level;
    }
    if lambda >= weight * k * k {
        return 0.0;
    }
    let target = lambda / weight;
    let h = |theta: f64| k * (2.0 * k * theta).sin() / (2.0 * theta).sin() - target;
    let dh = |theta: f64| {
        let s2 = (2.0 * theta).sin();
        k * (2.0 * k * (2.0 * k * theta).cos() * s2
            - 2.0 * (2.0 * k * theta).sin() * (2.0 * theta).cos())
            / (s2 * s2)
    };

    let mut lo = 0.0;
    let mut hi = PI / (2.0 * k);
    let mut theta = 0.5 * hi;
    for _ in 0..200 {
        let value = h(theta);
        if value == 0.0 {
            break;
        }
        if value > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let slope = dh(theta);
        let newton = theta - value / slope;
        let next = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - theta).abs() <= f64::EPSILON * theta {
            theta = next;
            break;
        }
        theta = next;
    }
    let s = theta.sin();
    (s * s).min(level)
}

/// Multiplier implied by a plan: the median marginal over interior items,
/// otherwise the smallest value consistent with the boundary items.
pub fn fit_multiplier(p: &Prior, plan: &AmplitudePlan) -> f64 {
    let t = plan.t;
    let level = cap(t);
    let mut interior: Vec<f64> = Vec::new();
    let mut any_capped = false;
    let mut zero_floor: f64 = 0.0;
    for (&w, &q) in p.weights().iter().zip(&plan.q) {
        if w <= 0.0 {
            continue;
        }
        if q <= 0.0 {
            zero_floor = zero_floor.max(w * marginal_gain(0.0, t));
        } else if q >= level - 1e-12 {
            any_capped = true;
        } else {
            interior.push(w * marginal_gain(q, t));
        }
    }
    if !interior.is_empty() {
        interior.sort_by(|a, b| a.partial_cmp(b).expect("finite marginals"));
        return interior[interior.len() / 2];
    }
    if any_capped && t > 0 {
        0.0
    } else {
        zero_floor
    }
}

/// Largest violation of the KKT conditions for `plan` with multiplier
/// `lambda`: stationarity on interior items, sign conditions on the bounds,
/// `lambda >= 0`, and complementary slackness on `sum(q) <= 1`.
pub fn kkt_residual(p: &Prior, plan: &AmplitudePlan, lambda: f64) -> f64 {
    let t = plan.t;
    let level = cap(t);
    let mut worst: f64 = (-lambda).max(0.0);
    for (&w, &q) in p.weights().iter().zip(&plan.q) {
        let violation = if w <= 0.0 {
            q
        } else if q <= 0.0 {
            (w * marginal_gain(0.0, t) - lambda).max(0.0)
        } else if q >= level - 1e-12 {
            (lambda - w * marginal_gain(q.min(level), t)).max(0.0)
        } else {
            (w * marginal_gain(q, t) - lambda).abs()
        };
        worst = worst.max(violation);
    }
    let slack = 1.0 - plan.total();
    if slack > 1e-9 {
        worst = worst.max(lambda * slack);
    }
    worst
}

fn certified(p: &Prior, plan: AmplitudePlan, multiplier: f64, iterations: usize) -> Optimum {
    let kkt_residual = kkt_residual(p, &plan, multiplier);
    Optimum {
        plan,
        multiplier,
        kkt_residual,
        iterations,
    }
}

/// All of the budget on the most likely item (lowest index on ties).
fn argmax_plan(p: &Prior) -> Result<Optimum> {
    let mut q = vec![0.0; p.len()];
    let best = p.argmax();
    q[best] = 1.0;
    let plan = AmplitudePlan::new(q, 0)?;
    Ok(certified(p, plan, p.weights()[best], 0))
}

/// Every supported item at the cap, when that fits in the budget.
fn saturated_plan(p: &Prior, t: u32) -> Option<Result<Optimum>> {
    let level = cap(t);
    let support = p.support_size();
    if support as f64 * level > 1.0 {
        return None;
    }
    let q = p
        .weights()
        .iter()
        .map(|&w| if w > 0.0 { level } else { 0.0 })
        .collect();
    Some(AmplitudePlan::new(q, t).map(|plan| certified(p, plan, 0.0, 0)))
}

/// Maximizes the expected success probability of `t`-query search under `p`.
pub fn optimize(p: &Prior, t: u32, cfg: &OptimizerConfig) -> Result<Optimum> {
    cfg.validate()?;
    if t == 0 {
        return argmax_plan(p);
    }
    if let Some(done) = saturated_plan(p, t) {
        return done;
    }

    let level = cap(t);
    let k = f64::from(2 * t + 1);
    let weights = p.weights();
    let fill = |lambda: f64| -> Vec<f64> {
        weights
            .iter()
            .map(|&w| {
                if w > 0.0 {
                    allocation(w, lambda, t, level)
                } else {
                    0.0
                }
            })
            .collect()
    };

    let p_max = weights[p.argmax()];
    let mut lo = 0.0;
    let mut hi = p_max * k * k;
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let q = fill(mid);
        let total: f64 = q.iter().sum();
        residual = (total - 1.0).abs();
        if residual <= cfg.tol {
            let plan = AmplitudePlan::new(q, t)?;
            return Ok(certified(p, plan, mid, iter));
        }
        if total > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= cfg.tol * hi {
            // `hi` always leaves the budget feasible.
            let plan = AmplitudePlan::new(fill(hi), t)?;
            return Ok(certified(p, plan, hi, iter));
        }
    }
    Err(Error::NumericalFailure {
        message: format!(
            "multiplier bisection did not converge in {} iterations",
            cfg.max_iter
        ),
        residual,
    })
}

/// Single-query optimum from the stationarity condition
/// `p_i (48 q_i^2 - 48 q_i + 9) + lambda = 0`, i.e.
/// `q_i = 1/2 - sqrt(1/16 - lambda / (48 p_i))`, with `lambda <= 0` found by
/// bisection on `sum(q) = 1`. Supports of at most four items saturate.
///
/// The returned multiplier is reported with the water-filling sign
/// convention (non-negative).
pub fn optimize_t1_closed_form(p: &Prior, cfg: &OptimizerConfig) -> Result<Optimum> {
    cfg.validate()?;
    if let Some(done) = saturated_plan(p, 1) {
        return done;
    }
    let weights = p.weights();
    let fill = |lambda: f64| -> Vec<f64> {
        weights
            .iter()
            .map(|&w| {
                if w <= 0.0 {
                    return 0.0;
                }
                let radicand = 1.0 / 16.0 - lambda / (48.0 * w);
                (0.5 - radicand.sqrt()).clamp(0.0, 0.25)
            })
            .collect()
    };

    // sum(q(lambda)) is non-decreasing on [-9 p_max, 0].
    let p_max = weights[p.argmax()];
    let mut lo = -9.0 * p_max;
    let mut hi = 0.0;
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let q = fill(mid);
        let total: f64 = q.iter().sum();
        residual = (total - 1.0).abs();
        if residual <= cfg.tol {
            let plan = AmplitudePlan::new(q, 1)?;
            return Ok(certified(p, plan, -mid, iter));
        }
        if total > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= cfg.tol * lo.abs() {
            let plan = AmplitudePlan::new(fill(lo), 1)?;
            return Ok(certified(p, plan, -lo, iter));
        }
    }
    Err(Error::NumericalFailure {
        message: format!(
            "closed-form bisection did not converge in {} iterations",
            cfg.max_iter
        ),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esp::success_prob_single;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    fn half_half(sigma: f64) -> Prior {
        let hi = 0.125 + sigma;
        let lo = 0.125 - sigma;
        Prior::new(&[hi, hi, hi, hi, lo, lo, lo, lo]).unwrap()
    }

    /// Symmetry reduces the half-half problem to one unknown `q_hi` with
    /// `q_lo = 1/4 - q_hi`; the single-query KKT balance
    /// `p_hi d(q_hi) = p_lo d(q_lo)`, `d(q) = 48q^2 - 48q + 9`, is then solved
    /// by plain bisection on `[1/8, 1/4]`.
    fn half_half_oracle(sigma: f64) -> f64 {
        let (ph, pl) = (0.125 + sigma, 0.125 - sigma);
        let d = |q: f64| 48.0 * q * q - 48.0 * q + 9.0;
        let balance = |qh: f64| ph * d(qh) - pl * d(0.25 - qh);
        let (mut lo, mut hi) = (0.125, 0.25);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if balance(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cap_values() {
        assert!((cap(1) - 0.25).abs() < 1e-16);
        assert_eq!(cap(0), 1.0);
        let golden = (3.0 - 5f64.sqrt()) / 8.0;
        assert!((cap(2) - golden).abs() < 1e-16);
        assert!((cap(2) - 0.0954915028125263).abs() < 1e-15);
        for t in 0..10 {
            assert!((success_prob_single(cap(t), t).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn marginal_matches_finite_difference() {
        for t in 1..5u32 {
            let level = cap(t);
            for i in 1..20 {
                let q = level * i as f64 / 20.0;
                let h = 1e-7;
                let g = |x: f64| success_prob_single(x, t).unwrap();
                let fd = (g(q + h) - g(q - h)) / (2.0 * h);
                let exact = marginal_gain(q, t);
                assert!(
                    (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
                    "t={t} q={q}"
                );
            }
            assert_eq!(marginal_gain(0.0, t), f64::from((2 * t + 1).pow(2)));
            assert!(marginal_gain(level, t).abs() < 1e-12);
        }
    }

    #[test]
    fn allocation_inverts_marginal() {
        for t in 1..6u32 {
            let level = cap(t);
            for w in [0.01, 0.3, 1.0] {
                for frac in [0.01, 0.2, 0.5, 0.9, 0.999] {
                    let lambda = frac * w * f64::from((2 * t + 1).pow(2));
                    let q = allocation(w, lambda, t, level);
                    assert!(q > 0.0 && q <= level);
                    assert!((w * marginal_gain(q, t) - lambda).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn naive_prior_saturates() {
        let p = Prior::new(&[0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let opt = optimize(&p, 1, &cfg()).unwrap();
        assert_eq!(opt.plan.q, vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]);
        assert!((esp(&p, &opt.plan).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(opt.multiplier, 0.0);
        assert!(opt.kkt_residual < 1e-12);

        let closed = optimize_t1_closed_form(&p, &cfg()).unwrap();
        assert_eq!(closed.plan, opt.plan);
    }

    #[test]
    fn uniform_prior_is_uniform_plan() {
        let p = Prior::uniform(8).unwrap();
        let opt = optimize(&p, 1, &cfg()).unwrap();
        for q in &opt.plan.q {
            assert!((q - 0.125).abs() < 1e-12);
        }
        assert!((esp(&p, &opt.plan).unwrap() - 0.78125).abs() < 1e-12);
        assert!(opt.kkt_residual < 1e-9);

        // lambda = p * (48/64 - 48/8 + 9) = 3.75 p in the stationarity form.
        let closed = optimize_t1_closed_form(&p, &cfg()).unwrap();
        assert!((closed.multiplier - 0.125 * 3.75).abs() < 1e-10);
        assert!((opt.multiplier - 0.125 * 3.75).abs() < 1e-10);
        for q in &closed.plan.q {
            assert!((q - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn half_half_matches_reduced_oracle() {
        for (sigma, table_theta) in [(1.0 / 80.0, 1.48725065f64), (8.0 / 80.0, 0.73831265)] {
            let qh = half_half_oracle(sigma);
            let ql = 0.25 - qh;
            // amplitude mapping of the reference rotation angle
            let table_qh = (table_theta / 2.0).cos().powi(2) / 4.0;
            assert!((qh - table_qh).abs() < 1e-5);

            let p = half_half(sigma);
            for opt in [
                optimize(&p, 1, &cfg()).unwrap(),
                optimize_t1_closed_form(&p, &cfg()).unwrap(),
            ] {
                for i in 0..4 {
                    assert!((opt.plan.q[i] - qh).abs() < 1e-10);
                    assert!((opt.plan.q[i + 4] - ql).abs() < 1e-10);
                }
                assert!(opt.kkt_residual < 1e-9);
            }
        }
        assert!((half_half_oracle(1.0 / 80.0) - 0.13544).abs() < 1e-5);
        assert!((half_half_oracle(8.0 / 80.0) - 0.21745).abs() < 1e-5);
    }

    #[test]
    fn zero_query_budget_picks_argmax() {
        let p = Prior::new(&[0.1, 0.4, 0.4, 0.1]).unwrap();
        let opt = optimize(&p, 0, &cfg()).unwrap();
        assert_eq!(opt.plan.q, vec![0.0, 1.0, 0.0, 0.0]);
        assert!((esp(&p, &opt.plan).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(opt.kkt_residual, 0.0);
    }

    #[test]
    fn zero_weights_are_pinned() {
        let p = Prior::new(&[0.3, 0.0, 0.2, 0.1, 0.0, 0.15, 0.25]).unwrap();
        let opt = optimize(&p, 1, &cfg()).unwrap();
        assert_eq!(opt.plan.q[1], 0.0);
        assert_eq!(opt.plan.q[4], 0.0);
        assert!(opt.plan.total() <= 1.0 + 1e-12);
        assert!(opt.kkt_residual < 1e-9);
    }

    #[test]
    fn budget_slack_returns_caps() {
        let p = Prior::new(&[0.5, 0.3, 0.2]).unwrap();
        let opt = optimize(&p, 1, &cfg()).unwrap();
        assert_eq!(opt.plan.q, vec![0.25; 3]);
        assert!((esp(&p, &opt.plan).unwrap() - 1.0).abs() < 1e-14);

        // 5 items, t = 2: 5 * 0.0955 < 1
        let p = Prior::new(&[0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
        let opt = optimize(&p, 2, &cfg()).unwrap();
        assert!(opt.plan.q.iter().all(|&q| q == cap(2)));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let p = Prior::sample(32, 5).unwrap();
        let tight = OptimizerConfig {
            tol: 1e-12,
            max_iter: 2,
        };
        match optimize(&p, 1, &tight) {
            Err(Error::NumericalFailure { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(optimize_t1_closed_form(&p, &tight).is_err());
        let bad = OptimizerConfig {
            tol: 0.0,
            max_iter: 10,
        };
        assert!(matches!(optimize(&p, 1, &bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn plan_record_json() {
        let p = Prior::uniform(8).unwrap();
        let opt = optimize(&p, 1, &cfg()).unwrap();
        let rec = PlanRecord::from_optimum(&p, &opt).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["t"], 1);
        assert_eq!(v["q"].as_array().unwrap().len(), 8);
        assert!((v["esp"].as_f64().unwrap() - 0.78125).abs() < 1e-12);
        assert!(v["kkt_residual"].as_f64().unwrap() < 1e-9);
        let back: PlanRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back.plan().unwrap(), opt.plan);
    }
}
