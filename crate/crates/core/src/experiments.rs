//! Command implementations behind the `qsearch` binary.
//!
//! Every command returns a typed outcome or a [`CliError`] whose
//! [`CliError::exit_code`] follows the tool's contract: 2 for bad input,
//! 3 for solver failure, 4 for a violated property or tolerance.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, AscentConfig};
use crate::circuit::{self, HalfHalfSpec};
use crate::error::Error;
use crate::esp::{self, AmplitudePlan, EspReport, Method};
use crate::optimizer::{self, OptimizerConfig, PlanRecord};
use crate::prior::Prior;
use crate::rng::{self, SeededRng};
use crate::simulator::{self, IterationOptions, OracleMode};

/// Worker pool size override.
pub const THREADS_ENV: &str = "QSEARCH_THREADS";

pub const COMPARE_HEADER: &str = "t,method,mean_esp,std_esp,samples,seed";
pub const THETA_HEADER: &str = "sigma,theta,paper_theta,abs_diff";

/// Tolerance for reproducing the reference rotation angles.
pub const THETA_TOL: f64 = 1e-3;
/// Slack for the baseline ordering checks.
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property failure: {0}")]
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFailure { .. } => CliError::Solver(e.to_string()),
            Error::InvalidInput(_) | Error::ResourceLimit(_) => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Runs `f` on a pool sized by `QSEARCH_THREADS` when set, else on the
/// global pool.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> CliResult<R> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => {
            let threads: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
                CliError::Input(format!("{THREADS_ENV} must be a positive integer"))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Input(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Waterfill,
    ClosedT1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub record: PlanRecord,
}

pub fn cmd_optimize(
    prior_path: &Path,
    t: u32,
    solver: SolverChoice,
    out_path: &Path,
) -> CliResult<OptimizeOutcome> {
    let p = Prior::load(prior_path)?;
    let cfg = OptimizerConfig::default();
    let opt = match solver {
        SolverChoice::Waterfill => optimizer::optimize(&p, t, &cfg)?,
        SolverChoice::ClosedT1 => {
            if t != 1 {
                return Err(CliError::Input(
                    "the closed-form solver only handles t = 1".into(),
                ));
            }
            optimizer::optimize_t1_closed_form(&p, &cfg)?
        }
    };
    let record = PlanRecord::from_optimum(&p, &opt)?;
    let json = serde_json::to_string_pretty(&record).expect("plan serializes");
    write_file(out_path, &(json + "\n"))?;
    Ok(OptimizeOutcome { record })
}

/// ESP of a stored plan under a stored prior.
pub fn cmd_evaluate(prior_path: &Path, plan_path: &Path) -> CliResult<EspReport> {
    let p = Prior::load(prior_path)?;
    let text = fs::read_to_string(plan_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", plan_path.display())))?;
    let record: PlanRecord =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad plan JSON: {e}")))?;
    let plan = record.plan()?;
    let value = esp::esp(&p, &plan)?;
    Ok(EspReport::new(Method::Custom, value, plan.t, p.len()))
}

/// Outcome distribution of a circuit stored as JSON.
pub fn cmd_simulate(circuit_path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(circuit_path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", circuit_path.display())))?;
    let circuit = simulator::GateCircuit::from_json_str(&text)?;
    Ok(simulator::run_gate_circuit(&circuit)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub t: u32,
    pub method: Method,
    pub mean_esp: f64,
    pub std_esp: f64,
    pub samples: usize,
    pub seed: u64,
}

impl CompareRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t, self.method, self.mean_esp, self.std_esp, self.samples, self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub n: usize,
    pub samples: usize,
    pub t_min: u32,
    pub t_max: u32,
    pub seed: u64,
    /// Use this prior for every sample instead of sampling.
    pub prior: Option<Prior>,
}

/// The four method values for one prior and budget, in
/// [`Method::COMPARED`] order.
pub fn compare_point(p: &Prior, t: u32, cfg: &OptimizerConfig) -> crate::Result<[f64; 4]> {
    let opt = optimizer::optimize(p, t, cfg)?;
    Ok([
        esp::classical_baseline(p, t).value,
        esp::grover_uniform_baseline(p, t).value,
        esp::ranking_baseline(p, t).value,
        esp::esp(p, &opt.plan)?,
    ])
}

fn ordering_violation(values: &[f64; 4]) -> Option<&'static str> {
    let [classical, uniform, ranking, optimal] = *values;
    if optimal < ranking - ORDER_TOL {
        Some("optimal < ranking")
    } else if ranking < uniform - ORDER_TOL {
        Some("ranking < grover-uniform")
    } else if optimal < classical - ORDER_TOL {
        Some("optimal < classical")
    } else {
        None
    }
}

/// Per-sample values for every budget: `result[sample][t - t_min]`.
pub fn compare_values(opts: &CompareOptions) -> CliResult<Vec<Vec<[f64; 4]>>> {
    if opts.samples == 0 || opts.t_min > opts.t_max {
        return Err(CliError::Input(
            "need samples >= 1 and t_min <= t_max".into(),
        ));
    }
    if opts.prior.is_none() && opts.n == 0 {
        return Err(CliError::Input("need n >= 1".into()));
    }
    let cfg = OptimizerConfig::default();
    let per_sample = |index: usize| -> CliResult<Vec<[f64; 4]>> {
        let p = match &opts.prior {
            Some(p) => p.clone(),
            None => Prior::sample(opts.n, rng::sample_seed(opts.seed, index as u64))?,
        };
        (opts.t_min..=opts.t_max)
            .map(|t| {
                let values = compare_point(&p, t, &cfg)?;
                if let Some(what) = ordering_violation(&values) {
                    return Err(CliError::Property(format!(
                        "{what} for sample {index} at t = {t}: {values:?}"
                    )));
                }
                Ok(values)
            })
            .collect()
    };
    with_pool(|| {
        (0..opts.samples)
            .into_par_iter()
            .map(per_sample)
            .collect::<CliResult<Vec<_>>>()
    })?
}

/// Mean and population standard deviation per budget and method.
pub fn summarize(opts: &CompareOptions, values: &[Vec<[f64; 4]>]) -> Vec<CompareRow> {
    let count = values.len() as f64;
    let mut rows = Vec::new();
    for (offset, t) in (opts.t_min..=opts.t_max).enumerate() {
        for (m, method) in Method::COMPARED.into_iter().enumerate() {
            let mean = values.iter().map(|v| v[offset][m]).sum::<f64>() / count;
            let var = values
                .iter()
                .map(|v| (v[offset][m] - mean).powi(2))
                .sum::<f64>()
                / count;
            rows.push(CompareRow {
                t,
                method,
                mean_esp: mean,
                std_esp: var.sqrt(),
                samples: values.len(),
                seed: opts.seed,
            });
        }
    }
    rows
}

pub fn cmd_compare(opts: &CompareOptions, out_path: &Path) -> CliResult<Vec<CompareRow>> {
    let values = compare_values(opts)?;
    let rows = summarize(opts, &values);
    let mut csv = String::from(COMPARE_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    write_file(out_path, &csv)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRow {
    pub sigma: f64,
    pub theta: f64,
    pub reference: f64,
    pub abs_diff: f64,
}

pub fn theta_rows() -> CliResult<Vec<ThetaRow>> {
    circuit::reference_sigmas()
        .into_iter()
        .zip(circuit::REFERENCE_THETAS)
        .map(|(sigma, reference)| {
            let theta = circuit::theta_for_sigma(sigma)?;
            Ok(ThetaRow {
                sigma,
                theta,
                reference,
                abs_diff: (theta - reference).abs(),
            })
        })
        .collect()
}

/// Writes the table, then fails with exit code 4 if any row misses the
/// reference angle by more than [`THETA_TOL`].
pub fn cmd_theta_table(out_path: &Path) -> CliResult<Vec<ThetaRow>> {
    let rows = theta_rows()?;
    let mut csv = String::from(THETA_HEADER);
    csv.push('\n');
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.sigma, r.theta, r.reference, r.abs_diff
        )
        .unwrap();
    }
    write_file(out_path, &csv)?;
    if let Some(bad) = rows.iter().find(|r| r.abs_diff > THETA_TOL) {
        return Err(CliError::Property(format!(
            "theta for sigma = {} off by {:e}",
            bad.sigma, bad.abs_diff
        )));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitOutcome {
    pub spec: HalfHalfSpec,
    pub predicted_success: f64,
    pub qasm: String,
}

pub fn cmd_emit(sigma: f64, solution: &str, out_path: &Path) -> CliResult<EmitOutcome> {
    let spec = HalfHalfSpec::new(sigma, solution)?;
    let c = circuit::build_halfhalf_circuit(&spec)?;
    let qasm = circuit::emit_qasm(&c)?;
    let predicted_success = spec.predicted_success()?;
    write_file(out_path, &qasm)?;
    Ok(EmitOutcome {
        spec,
        predicted_success,
        qasm,
    })
}

/// Random prior over `n` items; about one in four draws zeroes out a
/// random subset of the weights.
pub fn random_prior(rng: &mut SeededRng, n: usize) -> Prior {
    let mut raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    if n > 1 && rng.gen_bool(0.25) {
        for w in raw.iter_mut() {
            if rng.gen_bool(0.4) {
                *w = 0.0;
            }
        }
    }
    if raw.iter().all(|w| *w == 0.0) {
        raw[0] = 1.0;
    }
    Prior::new(&raw).expect("non-negative and non-zero")
}

/// Random point of `{q >= 0, sum q <= 1}`; sometimes sparse, sometimes on
/// the budget boundary.
pub fn random_plan(rng: &mut SeededRng, n: usize, t: u32) -> AmplitudePlan {
    let mut raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    if n > 1 && rng.gen_bool(0.3) {
        for w in raw.iter_mut() {
            if rng.gen_bool(0.5) {
                *w = 0.0;
            }
        }
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return AmplitudePlan::new(vec![0.0; n], t).expect("zero plan");
    }
    let budget = if rng.gen_bool(0.3) {
        1.0
    } else {
        rng.gen::<f64>()
    };
    let q = raw.iter().map(|w| (w / total * budget).min(1.0)).collect();
    AmplitudePlan::new(q, t).expect("scaled into the budget")
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub t_max: u32,
    pub trials: usize,
    pub seed: u64,
    /// Replace the phase oracle with the identity. Used to check that the
    /// harness can fail.
    pub invert_oracle: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_max: 16,
            t_max: 4,
            trials: 50,
            seed: 1,
            invert_oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Inputs of the first failing case.
    pub counterexample: Option<String>,
}

struct Check {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    counterexample: Option<String>,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
            counterexample: None,
        }
    }

    /// `violation` is how far the case is past its bound (<= 0 passes).
    fn record(&mut self, violation: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if violation > self.worst || violation.is_nan() {
            self.worst = violation;
        }
        if (violation > self.tolerance || violation.is_nan()) && self.counterexample.is_none() {
            self.counterexample = Some(describe());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.counterexample.is_none(),
            counterexample: self.counterexample,
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Runs the property suite. Returns every check; the caller decides the
/// exit status from `passed`.
pub fn run_verify(opts: &VerifyOptions) -> CliResult<Vec<CheckResult>> {
    if opts.trials == 0 {
        return Err(CliError::Input("trials = 0 verifies nothing".into()));
    }
    if opts.n_max < 2 {
        return Err(CliError::Input("n_max must be at least 2".into()));
    }
    let cfg = OptimizerConfig::default();
    let mut stream = rng::stream(opts.seed);
    let mut results = Vec::new();

    let mut check = Check::new("oracle-equivalence", 1e-10);
    let sim_opts = IterationOptions {
        oracle: if opts.invert_oracle {
            OracleMode::Disabled
        } else {
            OracleMode::Phase
        },
        ..Default::default()
    };
    for _ in 0..opts.trials {
        let n = stream.gen_range(1..=opts.n_max);
        let t = stream.gen_range(0..=opts.t_max.min(6));
        let plan = random_plan(&mut stream, n, t);
        let x = stream.gen_range(1..=n);
        let simulated = simulator::run_iterations_with(&plan, x, sim_opts)?;
        let analytic = esp::success_prob_single(plan.q[x - 1], t)?;
        check.record((simulated - analytic).abs(), || {
            format!("q = {}, t = {t}, x = {x}", fmt_vec(&plan.q))
        });
    }
    results.push(check.finish());

    let mut kkt = Check::new("kkt-residual", 1e-9);
    let mut optimality = Check::new("random-plan-dominance", 1e-9);
    for _ in 0..opts.trials {
        let n = stream.gen_range(1..=opts.n_max);
        let t = stream.gen_range(1..=opts.t_max.max(1));
        let p = random_prior(&mut stream, n);
        let opt = optimizer::optimize(&p, t, &cfg)?;
        kkt.record(opt.kkt_residual, || {
            format!("p = {}, t = {t}", fmt_vec(p.weights()))
        });
        let best = esp::esp(&p, &opt.plan)?;
        for _ in 0..100 {
            let rival = random_plan(&mut stream, n, t);
            let value = esp::esp(&p, &rival)?;
            optimality.record(value - best, || {
                format!(
                    "p = {}, t = {t}, q = {}",
                    fmt_vec(p.weights()),
                    fmt_vec(&rival.q)
                )
            });
        }
    }
    results.push(kkt.finish());
    results.push(optimality.finish());

    let mut bound_check = Check::new("upper-bound-attained", 1e-6);
    let ascent = AscentConfig {
        seed: opts.seed,
        ..Default::default()
    };
    for _ in 0..opts.trials.min(10) {
        let n = stream.gen_range(2..=opts.n_max.min(bounds::BOUND_MAX_ITEMS));
        let t = stream.gen_range(1..=opts.t_max.clamp(1, bounds::BOUND_MAX_QUERIES));
        let p = random_prior(&mut stream, n);
        let reference = esp::esp(&p, &optimizer::optimize(&p, t, &cfg)?.plan)?;
        let report = bounds::query_upper_bound(&p, t, &ascent)?.with_reference(reference);
        let residual = report.residual.expect("reference attached");
        bound_check.record(residual.abs(), || {
            format!("p = {}, t = {t}", fmt_vec(p.weights()))
        });
    }
    results.push(bound_check.finish());

    let step = 0.05;
    let mut allocation_check = Check::new("equal-allocation", 2.0 * step);
    for i in 0..opts.trials.min(3) {
        let n = stream.gen_range(2..=bounds::ALLOCATION_MAX_ITEMS);
        let m = 2 + i % 2;
        let p = random_prior(&mut stream, n);
        let report = bounds::equal_allocation_search(&p, m, step)?;
        allocation_check.record(report.extras["gap"], || {
            format!("p = {}, m = {m}", fmt_vec(p.weights()))
        });
    }
    results.push(allocation_check.finish());

    let mut robust = Check::new("robustness", 1e-9);
    for _ in 0..opts.trials {
        let n = stream.gen_range(2..=opts.n_max);
        let t = stream.gen_range(1..=opts.t_max.max(1));
        let p = random_prior(&mut stream, n);
        let other = random_prior(&mut stream, n);
        let mix = stream.gen_range(0.0..=0.1);
        let mixed: Vec<f64> = p
            .weights()
            .iter()
            .zip(other.weights())
            .map(|(a, b)| (1.0 - mix) * a + mix * b)
            .collect();
        let estimate = Prior::new(&mixed)?;
        let eps = p.l1_distance(&estimate)?;
        let exact = esp::esp(&p, &optimizer::optimize(&p, t, &cfg)?.plan)?;
        let planned = esp::esp(&p, &optimizer::optimize(&estimate, t, &cfg)?.plan)?;
        robust.record(exact - 2.0 * eps - planned, || {
            format!(
                "p = {}, p_hat = {}, t = {t}",
                fmt_vec(p.weights()),
                fmt_vec(&mixed)
            )
        });
    }
    results.push(robust.finish());

    let mut speedup = Check::new("quadratic-speedup", 1e-12);
    for _ in 0..opts.trials {
        let n = stream.gen_range(16..=opts.n_max.max(16));
        let p = random_prior(&mut stream, n);
        for classical in [1usize, 4, 9, 16] {
            let plan = esp::speedup_plan(&p, classical)?;
            let gap = (esp::esp(&p, &plan)? - p.top_k_mass(classical)?).abs();
            let over_budget = plan.total() - std::f64::consts::PI.powi(2) / 16.0;
            speedup.record(gap.max(over_budget), || {
                format!(
                    "p = {}, classical queries = {classical}",
                    fmt_vec(p.weights())
                )
            });
        }
    }
    results.push(speedup.finish());

    Ok(results)
}

pub fn render_checks(results: &[CheckResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<24} {:>6} {:>12} {:>10}  status",
        "check", "cases", "worst", "tol"
    )
    .unwrap();
    for r in results {
        writeln!(
            out,
            "{:<24} {:>6} {:>12.3e} {:>10.1e}  {}",
            r.name,
            r.cases,
            r.worst,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        )
        .unwrap();
        if let Some(c) = &r.counterexample {
            writeln!(out, "    counterexample: {c}").unwrap();
        }
    }
    out
}

pub fn cmd_verify(opts: &VerifyOptions) -> CliResult<Vec<CheckResult>> {
    let results = with_pool(|| run_verify(opts))??;
    if results.iter().any(|r| !r.passed) {
        let failed: Vec<String> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{}: {}", r.name, r.counterexample.as_deref().unwrap_or("")))
            .collect();
        return Err(CliError::Property(format!(
            "{}\n{}",
            render_checks(&results),
            failed.join("\n")
        )));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::invalid("x")).exit_code(), 2);
        assert_eq!(CliError::from(Error::limit("x")).exit_code(), 2);
        let solver = Error::NumericalFailure {
            message: "x".into(),
            residual: 1.0,
        };
        assert_eq!(CliError::from(solver).exit_code(), 3);
        assert_eq!(CliError::Property("x".into()).exit_code(), 4);
    }

    #[test]
    fn random_plans_are_feasible() {
        let mut s = rng::stream(3);
        for _ in 0..500 {
            let n = s.gen_range(1..20);
            let plan = random_plan(&mut s, n, 2);
            assert!(plan.validate().is_ok());
            let p = random_prior(&mut s, n);
            assert_eq!(p.len(), n);
        }
    }

    #[test]
    fn compare_point_orders_methods() {
        let p = Prior::sample(64, 11).unwrap();
        for t in 0..6 {
            let v = compare_point(&p, t, &OptimizerConfig::default()).unwrap();
            assert!(ordering_violation(&v).is_none(), "t = {t}: {v:?}");
        }
    }

    #[test]
    fn verify_rejects_zero_trials() {
        let opts = VerifyOptions {
            trials: 0,
            ..Default::default()
        };
        assert_eq!(run_verify(&opts).unwrap_err().exit_code(), 2);
    }
}
