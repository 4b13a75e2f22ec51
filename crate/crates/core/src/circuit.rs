//! Three-qubit circuits for the "half-half" prior family.
//!
//! The prior puts `1/8 + sigma` on the four basis states with qubit 2 clear
//! and `1/8 - sigma` on the other four. State preparation is `H (x) H (x)
//! RY(theta)`, which gives squared amplitudes `cos^2(theta/2)/4` on the high
//! block and `sin^2(theta/2)/4` on the low block, so one rotation angle
//! encodes the whole single-query optimum.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::esp::success_prob_single;
use crate::optimizer::{optimize, OptimizerConfig};
use crate::prior::Prior;
use crate::simulator::{Gate, GateCircuit, MAX_QUBITS};

pub const QUBITS: usize = 3;

/// Reference rotation angles of the half-half family, for
/// `sigma = 1/80, 2/80, ..., 8/80`.
pub const REFERENCE_THETAS: [f64; 8] = [
    1.48725065, 1.40239865, 1.31480465, 1.22272065, 1.12383265, 1.01471265, 0.88979265, 0.73831265,
];

/// `sigma` values of the reference table.
pub fn reference_sigmas() -> [f64; 8] {
    std::array::from_fn(|i| (i + 1) as f64 / 80.0)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(0.0..0.125).contains(&sigma) {
        return Err(Error::invalid(format!("sigma = {sigma} outside [0, 1/8)")));
    }
    Ok(())
}

pub fn half_half_prior(sigma: f64) -> Result<Prior> {
    check_sigma(sigma)?;
    let (hi, lo) = (0.125 + sigma, 0.125 - sigma);
    Prior::new(&[hi, hi, hi, hi, lo, lo, lo, lo])
}

/// Optimal single-query squared amplitudes `(q_hi, q_lo)` for the half-half
/// prior with deviation `sigma`.
pub fn block_amplitudes(sigma: f64) -> Result<(f64, f64)> {
    let p = half_half_prior(sigma)?;
    let opt = optimize(&p, 1, &OptimizerConfig::default())?;
    let q = &opt.plan.q;
    let (q_hi, q_lo) = (q[0], q[4]);
    let spread = q[..4]
        .iter()
        .map(|v| (v - q_hi).abs())
        .chain(q[4..].iter().map(|v| (v - q_lo).abs()))
        .fold(0.0, f64::max);
    if spread > 1e-10 {
        return Err(Error::NumericalFailure {
            message: "optimal plan is not constant on the half-half blocks".into(),
            residual: spread,
        });
    }
    Ok((q_hi, q_lo))
}

/// `theta = 2 acos(2 sqrt(q_hi))` for the optimal single-query plan, in
/// `(0, pi]`.
pub fn theta_for_sigma(sigma: f64) -> Result<f64> {
    let (q_hi, q_lo) = block_amplitudes(sigma)?;
    let theta = 2.0 * (2.0 * q_hi.sqrt()).min(1.0).acos();
    let implied_lo = (0.5 * theta).sin().powi(2) / 4.0;
    if (implied_lo - q_lo).abs() > 1e-10 {
        return Err(Error::NumericalFailure {
            message: "rotation angle does not reproduce the low block".into(),
            residual: (implied_lo - q_lo).abs(),
        });
    }
    Ok(theta)
}

/// Basis index of a 3-bit label written most significant qubit first
/// (`"100"` is qubit 2 set).
pub fn parse_solution(label: &str) -> Result<usize> {
    if label.len() != QUBITS || !label.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::invalid(format!(
            "solution must be 3 bits, got {label:?}"
        )));
    }
    Ok(usize::from_str_radix(label, 2).expect("validated binary"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfHalfSpec {
    pub sigma: f64,
    pub solution: String,
    pub theta: f64,
}

impl HalfHalfSpec {
    pub fn new(sigma: f64, solution: &str) -> Result<Self> {
        parse_solution(solution)?;
        let theta = theta_for_sigma(sigma)?;
        Ok(HalfHalfSpec {
            sigma,
            solution: solution.to_string(),
            theta,
        })
    }

    /// The marked state lies in the high-probability block.
    pub fn in_high_block(&self) -> bool {
        self.solution.starts_with('0')
    }

    /// Analytic single-query success probability for the marked state.
    pub fn predicted_success(&self) -> Result<f64> {
        let (q_hi, q_lo) = block_amplitudes(self.sigma)?;
        success_prob_single(if self.in_high_block() { q_hi } else { q_lo }, 1)
    }
}

fn state_prep(c: &mut GateCircuit, theta: f64) {
    c.push(Gate::H { target: 0 })
        .push(Gate::H { target: 1 })
        .push(Gate::Ry { target: 2, theta });
}

const CCZ: Gate = Gate::Ccz {
    controls: [0, 1],
    target: 2,
};

/// Phase oracle marking basis state `index`: X on every qubit whose bit is
/// clear, CCZ, then the same X gates again.
pub fn oracle_gates(index: usize) -> Vec<Gate> {
    let flips: Vec<Gate> = (0..QUBITS)
        .filter(|j| index >> j & 1 == 0)
        .map(|target| Gate::X { target })
        .collect();
    let mut gates = flips.clone();
    gates.push(CCZ);
    gates.extend(flips);
    gates
}

/// Preparation, oracle, unpreparation, reflection about `|000>`,
/// preparation again.
pub fn build_halfhalf_circuit(spec: &HalfHalfSpec) -> Result<GateCircuit> {
    let index = parse_solution(&spec.solution)?;
    let mut c = GateCircuit::new(QUBITS);
    state_prep(&mut c, spec.theta);
    c.gates.extend(oracle_gates(index));
    c.push(Gate::H { target: 0 })
        .push(Gate::H { target: 1 })
        .push(Gate::Ry {
            target: 2,
            theta: -spec.theta,
        });
    c.gates.extend(oracle_gates(0));
    state_prep(&mut c, spec.theta);
    c.solution_label = Some(spec.solution.clone());
    Ok(c)
}

/// Positional decimal with 17 significant digits.
pub fn format_angle(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (16 - exponent).max(1) as usize;
    format!("{x:.decimals$}")
}

/// OpenQASM 2.0 text. CCZ is lowered to `h; ccx; h` on the target.
pub fn emit_qasm(circuit: &GateCircuit) -> Result<String> {
    if circuit.qubit_count > MAX_QUBITS {
        return Err(Error::limit(format!(
            "{} qubits exceeds the {MAX_QUBITS}-qubit cap",
            circuit.qubit_count
        )));
    }
    circuit.validate()?;
    let k = circuit.qubit_count;
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    if let Some(label) = &circuit.solution_label {
        writeln!(out, "// solution {label}").unwrap();
    }
    writeln!(out, "qreg q[{k}];").unwrap();
    writeln!(out, "creg c[{k}];").unwrap();
    for gate in &circuit.gates {
        match *gate {
            Gate::H { target } => writeln!(out, "h q[{target}];"),
            Gate::X { target } => writeln!(out, "x q[{target}];"),
            Gate::Z { target } => writeln!(out, "z q[{target}];"),
            Gate::Ry { target, theta } => writeln!(out, "ry({}) q[{target}];", format_angle(theta)),
            Gate::Ccz { controls, target } => writeln!(
                out,
                "h q[{target}];\nccx q[{}],q[{}],q[{target}];\nh q[{target}];",
                controls[0], controls[1]
            ),
        }
        .unwrap();
    }
    out.push_str("measure q -> c;\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Statement {
    Gate(Gate),
    Ccx([usize; 3]),
}

fn qubit_index(arg: &str) -> Result<usize> {
    let arg = arg.trim();
    let inner = arg
        .strip_prefix("q[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::invalid(format!("bad qubit reference {arg:?}")))?;
    inner
        .parse()
        .map_err(|_| Error::invalid(format!("bad qubit index {arg:?}")))
}

/// Reads back the subset of OpenQASM 2.0 that [`emit_qasm`] writes.
pub fn parse_qasm(text: &str) -> Result<GateCircuit> {
    let mut qubit_count = None;
    let mut label = None;
    let mut statements = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("// solution ") {
            label = Some(rest.trim().to_string());
            continue;
        }
        if line.is_empty()
            || line.starts_with("//")
            || line.starts_with("OPENQASM")
            || line.starts_with("include")
            || line.starts_with("creg")
            || line.starts_with("measure")
        {
            continue;
        }
        let stmt = line
            .strip_suffix(';')
            .ok_or_else(|| Error::invalid(format!("missing ';' in {line:?}")))?;
        if let Some(rest) = stmt.strip_prefix("qreg ") {
            qubit_count = Some(qubit_index(rest)?);
            continue;
        }
        let (op, args) = stmt
            .split_once(' ')
            .ok_or_else(|| Error::invalid(format!("cannot parse {line:?}")))?;
        let statement = match op {
            "h" => Statement::Gate(Gate::H {
                target: qubit_index(args)?,
            }),
            "x" => Statement::Gate(Gate::X {
                target: qubit_index(args)?,
            }),
            "z" => Statement::Gate(Gate::Z {
                target: qubit_index(args)?,
            }),
            "ccx" => {
                let qs: Vec<usize> = args.split(',').map(qubit_index).collect::<Result<_>>()?;
                if qs.len() != 3 {
                    return Err(Error::invalid(format!("ccx needs 3 qubits: {line:?}")));
                }
                Statement::Ccx([qs[0], qs[1], qs[2]])
            }
            _ if op.starts_with("ry(") && op.ends_with(')') => {
                let theta: f64 = op[3..op.len() - 1]
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad angle in {line:?}")))?;
                Statement::Gate(Gate::Ry {
                    target: qubit_index(args)?,
                    theta,
                })
            }
            _ => return Err(Error::invalid(format!("unsupported gate {op:?}"))),
        };
        statements.push(statement);
    }

    let qubit_count = qubit_count.ok_or_else(|| Error::invalid("missing qreg declaration"))?;
    let mut circuit = GateCircuit::new(qubit_count);
    circuit.solution_label = label;
    let mut i = 0;
    while i < statements.len() {
        if let (
            Statement::Gate(Gate::H { target }),
            Some(Statement::Ccx([a, b, t])),
            Some(Statement::Gate(Gate::H { target: after })),
        ) = (&statements[i], statements.get(i + 1), statements.get(i + 2))
        {
            if target == t && after == t {
                circuit.push(Gate::Ccz {
                    controls: [*a, *b],
                    target: *t,
                });
                i += 3;
                continue;
            }
        }
        match &statements[i] {
            Statement::Gate(g) => {
                circuit.push(g.clone());
            }
            Statement::Ccx(_) => {
                return Err(Error::invalid("bare ccx is not a supported gate"));
            }
        }
        i += 1;
    }
    circuit.validate()?;
    Ok(circuit)
}
