//! Circuit configurations for STNO networks and their evaluation.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nand::{NandDag, NandRef};
use crate::error::{Error, Result};
use crate::forcing::{dynamic_gate_forcing, gate_forcing, ForcingTerm, InputRef, SIGN_TOLERANCE};
use crate::logic::{CarrierSpec, Digit, GateKind};
use crate::network::{Coupling, Network, NetworkState, StepSettings, StnoParams, DEFAULT_U0};
use crate::readout::decode_gate_run;

/// Carrier periods simulated per stage in staged evaluation.
pub const STAGE_PERIODS: u32 = 3;

/// Minimum carrier periods per stage for coupled evaluation.
pub const COUPLED_PERIODS_PER_STAGE: f64 = 4.0;

/// Gate operand before inputs are bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Input(usize),
    NegatedInput(usize),
    Node(usize),
    NegatedNode(usize),
    Const(Digit),
}

impl Operand {
    fn from_nand(r: NandRef) -> Self {
        match r {
            NandRef::Input(i) => Operand::Input(i),
            NandRef::Gate(k) => Operand::Node(k),
            NandRef::Const(c) => Operand::Const(Digit::from_bool(c)),
        }
    }

    fn node(&self) -> Option<usize> {
        match *self {
            Operand::Node(j) | Operand::NegatedNode(j) => Some(j),
            _ => None,
        }
    }

    /// Digit value given bound inputs and already decoded nodes.
    fn digit(&self, inputs: &[Digit], nodes: &[Option<Digit>]) -> Digit {
        match *self {
            Operand::Input(i) => inputs[i],
            Operand::NegatedInput(i) => !inputs[i],
            Operand::Node(j) => nodes[j].expect("schedule respects topological order"),
            Operand::NegatedNode(j) => !nodes[j].expect("schedule respects topological order"),
            Operand::Const(d) => d,
        }
    }

    /// Forcing reference with inputs frozen to constants.
    fn input_ref(&self, inputs: &[Digit]) -> InputRef {
        match *self {
            Operand::Input(i) => InputRef::digit(inputs[i]),
            Operand::NegatedInput(i) => InputRef::negated_digit(inputs[i]),
            Operand::Node(j) => InputRef::Node(j),
            Operand::NegatedNode(j) => InputRef::NegatedNode(j),
            Operand::Const(d) => InputRef::digit(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitNode {
    pub gate: GateKind,
    pub left: Operand,
    pub right: Operand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub inputs: Vec<String>,
    pub nodes: Vec<CircuitNode>,
    /// Node sets in evaluation order.
    pub schedule: Vec<Vec<usize>>,
    pub output: Operand,
    pub params: StnoParams,
    pub carrier: CarrierSpec,
    pub gain: f64,
    /// Output filter time constant shared by all nodes.
    pub tau: f64,
}

fn schedule_levels(nodes: &[CircuitNode]) -> Vec<Vec<usize>> {
    let mut level: Vec<usize> = Vec::with_capacity(nodes.len());
    for n in nodes {
        let of = |op: &Operand| op.node().map_or(0, |j| level[j] + 1);
        let l = of(&n.left).max(of(&n.right));
        level.push(l);
    }
    let depth = level.iter().max().map_or(0, |&l| l + 1);
    let mut stages = vec![Vec::new(); depth];
    for (j, &l) in level.iter().enumerate() {
        stages[l].push(j);
    }
    stages
}

impl CircuitConfig {
    pub fn new(
        inputs: Vec<String>,
        nodes: Vec<CircuitNode>,
        output: Operand,
        params: StnoParams,
        carrier: CarrierSpec,
        gain: f64,
        tau: f64,
    ) -> Result<Self> {
        params.validate()?;
        carrier.validate()?;
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::invalid("gain", format!("{gain} must be positive")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("{tau} must be >= 0")));
        }
        let check = |op: &Operand, limit: usize| -> Result<()> {
            match *op {
                Operand::Input(i) | Operand::NegatedInput(i) if i >= inputs.len() => Err(Error::invalid(
                    "operand",
                    format!("input {i} of {}", inputs.len()),
                )),
                Operand::Node(j) | Operand::NegatedNode(j) if j >= limit => {
                    Err(Error::NodeOutOfRange { node: j, size: limit })
                }
                _ => Ok(()),
            }
        };
        for (j, n) in nodes.iter().enumerate() {
            check(&n.left, j)?;
            check(&n.right, j)?;
        }
        check(&output, nodes.len())?;
        let schedule = schedule_levels(&nodes);
        Ok(CircuitConfig {
            inputs,
            nodes,
            schedule,
            output,
            params,
            carrier,
            gain,
            tau,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn stage_count(&self) -> usize {
        self.schedule.len()
    }

    pub fn output_node(&self) -> Option<usize> {
        self.output.node()
    }

    pub fn bind(&self, inputs: &HashMap<String, Digit>) -> Result<Vec<Digit>> {
        self.inputs
            .iter()
            .map(|name| {
                inputs
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnboundVariable(name.clone()))
            })
            .collect()
    }

    /// Per-node forcing stencils with circuit inputs frozen to constants.
    pub fn forcings(&self, inputs: &[Digit]) -> Result<Vec<ForcingTerm>> {
        self.nodes
            .iter()
            .map(|n| {
                dynamic_gate_forcing(
                    n.gate,
                    n.left.input_ref(inputs),
                    n.right.input_ref(inputs),
                    self.carrier,
                    self.gain,
                )
            })
            .collect()
    }
}

/// One NAND node per gate, scheduled by topological level.
pub fn compile(dag: &NandDag, params: StnoParams, carrier: CarrierSpec, gain: f64, tau: f64) -> Result<CircuitConfig> {
    let nodes = dag
        .gates
        .iter()
        .map(|&(x, y)| CircuitNode {
            gate: GateKind::Nand,
            left: Operand::from_nand(x),
            right: Operand::from_nand(y),
        })
        .collect();
    CircuitConfig::new(
        dag.inputs.clone(),
        nodes,
        Operand::from_nand(dag.output),
        params,
        carrier,
        gain,
        tau,
    )
}

/// Three-node XOR: `AND(~a, b)`, `AND(a, ~b)` and the `OR` of the two.
pub fn compile_xor_paper(params: StnoParams, carrier: CarrierSpec, gain: f64, tau: f64) -> Result<CircuitConfig> {
    let nodes = vec![
        CircuitNode {
            gate: GateKind::And,
            left: Operand::NegatedInput(0),
            right: Operand::Input(1),
        },
        CircuitNode {
            gate: GateKind::And,
            left: Operand::Input(0),
            right: Operand::NegatedInput(1),
        },
        CircuitNode {
            gate: GateKind::Or,
            left: Operand::Node(0),
            right: Operand::Node(1),
        },
    ];
    CircuitConfig::new(
        vec!["a".into(), "b".into()],
        nodes,
        Operand::Node(2),
        params,
        carrier,
        gain,
        tau,
    )
}

/// Run each stage for [`STAGE_PERIODS`] periods with upstream digits frozen,
/// decoding every node before the next stage starts.
pub fn evaluate_staged(config: &CircuitConfig, inputs: &HashMap<String, Digit>) -> Result<Digit> {
    evaluate_staged_with(config, inputs, StepSettings::default())
}

pub fn evaluate_staged_with(
    config: &CircuitConfig,
    inputs: &HashMap<String, Digit>,
    settings: StepSettings,
) -> Result<Digit> {
    let bound = config.bind(inputs)?;
    let mut nodes: Vec<Option<Digit>> = vec![None; config.len()];
    // identical (gate, a, b) runs are deterministic, so decode each once
    let mut memo: HashMap<(GateKind, Digit, Digit), Result<Digit>> = HashMap::new();
    let r_ref = config.params.reference_radius(config.gain);
    let t_end = f64::from(STAGE_PERIODS) * config.carrier.period();
    for stage in &config.schedule {
        for &j in stage {
            let n = &config.nodes[j];
            let a = n.left.digit(&bound, &nodes);
            let b = n.right.digit(&bound, &nodes);
            let decoded = memo
                .entry((n.gate, a, b))
                .or_insert_with(|| {
                    let forcing = gate_forcing(n.gate, a, b, config.carrier, config.gain)?;
                    let state = NetworkState::uniform(1, Complex64::new(DEFAULT_U0, 0.0), config.tau);
                    let traj = Network::new(config.params, vec![forcing])?.integrate(&state, t_end, settings)?;
                    decode_gate_run(&traj, 0, &config.carrier, r_ref)
                })
                .clone();
            let digit = decoded.map_err(|e| Error::NodeReadout {
                node: j,
                source: Box::new(e),
            })?;
            nodes[j] = Some(digit);
        }
    }
    Ok(config.output.digit(&bound, &nodes))
}

/// Integrate all nodes together; downstream drives follow `sign(v)` of
/// upstream outputs once they leave the sign tolerance.
pub fn evaluate_coupled(config: &CircuitConfig, inputs: &HashMap<String, Digit>, t_end: f64) -> Result<Digit> {
    evaluate_coupled_with(config, inputs, t_end, StepSettings::default())
}

pub fn evaluate_coupled_with(
    config: &CircuitConfig,
    inputs: &HashMap<String, Digit>,
    t_end: f64,
    settings: StepSettings,
) -> Result<Digit> {
    let bound = config.bind(inputs)?;
    let Some(out) = config.output_node() else {
        return Ok(config.output.digit(&bound, &[]));
    };
    let forcings = config.forcings(&bound)?;
    let net = Network::new(config.params, forcings)?.with_coupling(Coupling::IdleUnsettled);
    let state = NetworkState::uniform(config.len(), Complex64::new(DEFAULT_U0, 0.0), config.tau);
    let traj = net.integrate(&state, t_end, settings)?;
    let mut v = traj.final_v()[out];
    if let Operand::NegatedNode(_) = config.output {
        v = -v;
    }
    let required = config.stage_count() as f64 * COUPLED_PERIODS_PER_STAGE * config.carrier.period();
    if v.abs() <= SIGN_TOLERANCE || t_end + 1e-9 < required {
        return Err(Error::UnsettledOutput {
            node: out,
            t_end,
            value: v.abs(),
        });
    }
    Ok(Digit::from_bool(v > 0.0))
}
