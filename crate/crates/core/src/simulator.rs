//! Exact dense statevector simulation.
//!
//! Two independent views of the same algorithm live here. [`run_iterations`]
//! works in the abstract `N + 1` dimensional space (index 0 is the sink that
//! carries `sqrt(1 - sum q)`, indices `1..=N` are the items) and applies the
//! oracle and the reflection about `|s>` directly. [`run_gate_circuit`]
//! executes explicit gate lists over qubits.
//!
//! Qubit ordering for gate circuits: basis index `sum_j bit_j * 2^j`, so
//! qubit 0 is the least significant bit.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esp::AmplitudePlan;

/// Tolerance on `sum |a|^2 == 1`.
pub const NORM_TOL: f64 = 1e-10;

/// Largest register [`run_gate_circuit`] accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `|s> = sqrt(1 - sum q)|0> + sum_i sqrt(q_i)|i>`.
pub fn prepare_state(plan: &AmplitudePlan) -> Result<StateVector> {
    plan.validate()?;
    let sink = (1.0 - plan.total()).max(0.0).sqrt();
    let amplitudes = std::iter::once(sink)
        .chain(plan.q.iter().map(|q| q.sqrt()))
        .map(|a| Complex64::new(a, 0.0))
        .collect();
    Ok(StateVector { amplitudes })
}

/// Sign convention of the reflection about the initial state. Both differ by
/// a global phase only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reflection {
    /// `I - 2|s><s|`
    #[default]
    AboutState,
    /// `2|s><s| - I`
    Negated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMode {
    /// Phase flip on the marked item.
    #[default]
    Phase,
    /// Identity: a deliberately broken oracle used to self-test verification
    /// harnesses.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IterationOptions {
    pub reflection: Reflection,
    pub oracle: OracleMode,
}

/// Final state after `plan.t` applications of `R_s O_x` to `|s>`.
/// `x` is a 1-based item index.
pub fn evolve(plan: &AmplitudePlan, x: usize, opts: IterationOptions) -> Result<StateVector> {
    if x == 0 || x > plan.len() {
        return Err(Error::invalid(format!(
            "item index {x} outside 1..={}",
            plan.len()
        )));
    }
    let s = prepare_state(plan)?;
    let mut psi = s.clone();
    for _ in 0..plan.t {
        if opts.oracle == OracleMode::Phase {
            psi.amplitudes[x] = -psi.amplitudes[x];
        }
        let overlap = s.inner(&psi);
        for (a, si) in psi.amplitudes.iter_mut().zip(&s.amplitudes) {
            let projected = 2.0 * overlap * si;
            *a = match opts.reflection {
                Reflection::AboutState => *a - projected,
                Reflection::Negated => projected - *a,
            };
        }
    }
    Ok(psi)
}

/// Probability of measuring item `x` after the iterations.
pub fn run_iterations(plan: &AmplitudePlan, x: usize) -> Result<f64> {
    run_iterations_with(plan, x, IterationOptions::default())
}

pub fn run_iterations_with(plan: &AmplitudePlan, x: usize, opts: IterationOptions) -> Result<f64> {
    Ok(evolve(plan, x, opts)?.probability(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    H { target: usize },
    X { target: usize },
    Z { target: usize },
    Ry { target: usize, theta: f64 },
    Ccz { controls: [usize; 2], target: usize },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H { target }
            | Gate::X { target }
            | Gate::Z { target }
            | Gate::Ry { target, .. } => {
                vec![target]
            }
            Gate::Ccz { controls, target } => vec![controls[0], controls[1], target],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCircuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
    /// Marked basis state, most significant qubit first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_label: Option<String>,
}

impl GateCircuit {
    pub fn new(qubit_count: usize) -> Self {
        GateCircuit {
            qubit_count,
            gates: Vec::new(),
            solution_label: None,
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit_count == 0 {
            return Err(Error::invalid("circuit needs at least one qubit"));
        }
        for (i, gate) in self.gates.iter().enumerate() {
            let qubits = gate.qubits();
            if let Some(q) = qubits.iter().find(|&&q| q >= self.qubit_count) {
                return Err(Error::invalid(format!(
                    "gate {i} acts on qubit {q} of a {}-qubit register",
                    self.qubit_count
                )));
            }
            if qubits.len() == 3
                && (qubits[0] == qubits[1] || qubits[0] == qubits[2] || qubits[1] == qubits[2])
            {
                return Err(Error::invalid(format!("gate {i} repeats a qubit")));
            }
            if let Gate::Ry { theta, .. } = gate {
                if !theta.is_finite() {
                    return Err(Error::invalid(format!("gate {i} has a non-finite angle")));
                }
            }
        }
        Ok(())
    }

    /// Parses the JSON mirror. Unknown gate kinds are rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let circuit: GateCircuit = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad circuit JSON: {e}")))?;
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn count(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(g)).count()
    }
}

fn apply_single(state: &mut [Complex64], target: usize, m: [[f64; 2]; 2]) {
    let bit = 1usize << target;
    for i in 0..state.len() {
        if i & bit != 0 {
            continue;
        }
        let j = i | bit;
        let (a0, a1) = (state[i], state[j]);
        state[i] = a0 * m[0][0] + a1 * m[0][1];
        state[j] = a0 * m[1][0] + a1 * m[1][1];
    }
}

/// Runs `circuit` on `|0...0>` and returns the final statevector.
pub fn simulate_circuit(circuit: &GateCircuit) -> Result<StateVector> {
    if circuit.qubit_count > MAX_QUBITS {
        return Err(Error::limit(format!(
            "{} qubits exceeds the {MAX_QUBITS}-qubit simulator cap",
            circuit.qubit_count
        )));
    }
    circuit.validate()?;
    let mut state = vec![Complex64::new(0.0, 0.0); 1 << circuit.qubit_count];
    state[0] = Complex64::new(1.0, 0.0);
    for gate in &circuit.gates {
        match *gate {
            Gate::H { target } => apply_single(
                &mut state,
                target,
                [
                    [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
                ],
            ),
            Gate::X { target } => apply_single(&mut state, target, [[0.0, 1.0], [1.0, 0.0]]),
            Gate::Z { target } => apply_single(&mut state, target, [[1.0, 0.0], [0.0, -1.0]]),
            Gate::Ry { target, theta } => {
                let (s, c) = (0.5 * theta).sin_cos();
                apply_single(&mut state, target, [[c, -s], [s, c]]);
            }
            Gate::Ccz { controls, target } => {
                let mask = (1 << controls[0]) | (1 << controls[1]) | (1 << target);
                for (i, a) in state.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
        }
    }
    let out = StateVector { amplitudes: state };
    let norm = out.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NumericalFailure {
            message: "circuit simulation lost normalization".into(),
            residual: (norm - 1.0).abs(),
        });
    }
    Ok(out)
}

/// Measurement distribution over the computational basis.
pub fn run_gate_circuit(circuit: &GateCircuit) -> Result<Vec<f64>> {
    Ok(simulate_circuit(circuit)?.probabilities())
}
