//! Expected success probability and the non-optimal baselines.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::cap;
use crate::prior::Prior;

/// Slack allowed on `sum(q) <= 1`.
pub const BUDGET_TOL: f64 = 1e-12;

/// Squared initial amplitudes `q` over the items plus the query budget `t`.
/// Whatever mass `q` leaves over sits on the sink component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePlan {
    pub t: u32,
    pub q: Vec<f64>,
}

impl AmplitudePlan {
    pub fn new(q: Vec<f64>, t: u32) -> Result<Self> {
        let plan = AmplitudePlan { t, q };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &qi) in self.q.iter().enumerate() {
            if !(0.0..=1.0).contains(&qi) {
                return Err(Error::invalid(format!("q[{i}] = {qi} is outside [0, 1]")));
            }
        }
        let total = self.total();
        if total > 1.0 + BUDGET_TOL {
            return Err(Error::invalid(format!("sum(q) = {total} exceeds 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Uniform superposition over all `n` items.
    pub fn uniform(n: usize, t: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("plan needs at least one item"));
        }
        AmplitudePlan::new(vec![1.0 / n as f64; n], t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Classical,
    GroverUniform,
    Ranking,
    Optimal,
    Custom,
}

impl Method {
    pub const COMPARED: [Method; 4] = [
        Method::Classical,
        Method::GroverUniform,
        Method::Ranking,
        Method::Optimal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::GroverUniform => "grover-uniform",
            Method::Ranking => "ranking",
            Method::Optimal => "optimal",
            Method::Custom => "custom",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EspReport {
    pub method: Method,
    pub value: f64,
    pub t: u32,
    pub n: usize,
    #[serde(default)]
    pub extras: BTreeMap<String, serde_json::Value>,
}

impl EspReport {
    pub fn new(method: Method, value: f64, t: u32, n: usize) -> Self {
        EspReport {
            method,
            value,
            t,
            n,
            extras: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.extras.insert(key.to_string(), value.into());
        self
    }
}

/// Probability of measuring item `x` after `t` iterations when it started
/// with squared amplitude `q`: `sin^2((2t+1) asin sqrt(q))`.
pub fn success_prob_single(q: f64, t: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("q = {q} is outside [0, 1]")));
    }
    Ok(item_success(q, t))
}

#[inline]
pub(crate) fn item_success(q: f64, t: u32) -> f64 {
    let angle = f64::from(2 * t + 1) * q.sqrt().asin();
    let s = angle.sin();
    s * s
}

/// `sum_i p_i sin^2((2t+1) asin sqrt(q_i))`.
pub fn esp(p: &Prior, plan: &AmplitudePlan) -> Result<f64> {
    if p.len() != plan.len() {
        return Err(Error::invalid(format!(
            "prior has {} items but plan has {}",
            p.len(),
            plan.len()
        )));
    }
    plan.validate()?;
    Ok(p.weights()
        .iter()
        .zip(&plan.q)
        .map(|(pi, qi)| pi * item_success(*qi, plan.t))
        .sum())
}

/// Querying the `t` most likely items one by one.
pub fn classical_baseline(p: &Prior, t: u32) -> EspReport {
    let k = (t as usize).min(p.len());
    let value = p.top_k_mass(k).expect("k clamped to n");
    EspReport::new(Method::Classical, value, t, p.len())
}

/// Textbook Grover: uniform amplitudes over every item.
pub fn grover_uniform_baseline(p: &Prior, t: u32) -> EspReport {
    let plan = AmplitudePlan::uniform(p.len(), t).expect("prior is non-empty");
    let value = esp(p, &plan).expect("dimensions match");
    EspReport::new(Method::GroverUniform, value, t, p.len())
}

/// Uniform Grover restricted to the `M` most likely items, with `M` chosen
/// exhaustively. The Grover angle is not clamped, so overshooting `pi/2`
/// lowers the value. Extras carry the chosen `m` (smallest on ties).
pub fn ranking_baseline(p: &Prior, t: u32) -> EspReport {
    let mut best_value = f64::NEG_INFINITY;
    let mut best_m = 0usize;
    let mut mass = 0.0;
    for (rank, idx) in p.ranked_indices().into_iter().enumerate() {
        mass += p.weights()[idx];
        let m = rank + 1;
        let value = mass * item_success(1.0 / m as f64, t);
        if value > best_value {
            best_value = value;
            best_m = m;
        }
    }
    EspReport::new(Method::Ranking, best_value, t, p.len()).with_extra("m", best_m)
}

/// Smallest integer `t` with `t * t >= k`.
pub fn ceil_sqrt(k: usize) -> u32 {
    let mut t = (k as f64).sqrt() as usize;
    while t * t < k {
        t += 1;
    }
    while t > 0 && (t - 1) * (t - 1) >= k {
        t -= 1;
    }
    t as u32
}

/// Plan that matches `t_classical` classical queries using only
/// `ceil(sqrt(t_classical))` oracle calls: every one of the `t_classical`
/// most likely items gets the saturating amplitude `cap(t)`, so each is found
/// with certainty and the budget used is at most `pi^2 / 16`.
pub fn speedup_plan(p: &Prior, t_classical: usize) -> Result<AmplitudePlan> {
    if t_classical == 0 || t_classical > p.len() {
        return Err(Error::invalid(format!(
            "classical query count {t_classical} must lie in 1..={}",
            p.len()
        )));
    }
    let t = ceil_sqrt(t_classical);
    let level = cap(t);
    let mut q = vec![0.0; p.len()];
    for idx in p.ranked_indices().into_iter().take(t_classical) {
        q[idx] = level;
    }
    AmplitudePlan::new(q, t)
}
