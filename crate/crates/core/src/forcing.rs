//! Drive terms `C_j(t, v)` built from gate outputs times reference carriers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{encode_digit, Amplitude, CarrierSpec, Digit, GateKind};

/// Default drive gain; must exceed the Hopf threshold `-λ = 0.1`.
pub const DEFAULT_GAIN: f64 = 0.2;

/// Smallest allowed ratio between two multiplexed carrier frequencies.
pub const MIN_FREQUENCY_RATIO: f64 = 1.2;

/// Filtered outputs with `|v| <= SIGN_TOLERANCE` do not resolve to a sign.
pub const SIGN_TOLERANCE: f64 = 1e-6;

/// A gate input: a fixed encoded digit or the sign of another node's output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputRef {
    Const(Amplitude),
    Node(usize),
    NegatedNode(usize),
}

impl InputRef {
    pub fn digit(d: Digit) -> Self {
        InputRef::Const(encode_digit(d))
    }

    pub fn negated_digit(d: Digit) -> Self {
        InputRef::Const(-encode_digit(d))
    }

    fn node(&self) -> Option<usize> {
        match *self {
            InputRef::Const(_) => None,
            InputRef::Node(j) | InputRef::NegatedNode(j) => Some(j),
        }
    }

    /// Resolve to `±1`, reading `sign(v_j)` for node references.
    pub fn resolve(&self, v: &[f64]) -> Result<Amplitude> {
        let (j, negate) = match *self {
            InputRef::Const(a) => return Ok(a),
            InputRef::Node(j) => (j, false),
            InputRef::NegatedNode(j) => (j, true),
        };
        let value = *v.get(j).ok_or(Error::NodeOutOfRange { node: j, size: v.len() })?;
        if value.abs() <= SIGN_TOLERANCE {
            return Err(Error::UnresolvedReference { node: j, value });
        }
        let a = Amplitude(value.signum());
        Ok(if negate { -a } else { a })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub carrier: CarrierSpec,
    pub gate: GateKind,
    pub left: InputRef,
    pub right: InputRef,
}

impl Channel {
    fn logic(&self, v: &[f64]) -> Result<f64> {
        let a = self.left.resolve(v)?;
        let b = self.right.resolve(v)?;
        Ok(self.gate.coefficients().sign(a, b)?.value())
    }
}

/// Sum over channels of `gain · p_k(t) · L_k(left, right)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub channels: Vec<Channel>,
    pub gain: f64,
}

fn check_gain(gain: f64) -> Result<()> {
    if gain > 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("gain", format!("{gain} must be > 0")))
    }
}

fn check_separation(carriers: &[CarrierSpec]) -> Result<()> {
    for (i, a) in carriers.iter().enumerate() {
        for b in &carriers[i + 1..] {
            let (low, high) = if a.frequency <= b.frequency {
                (a.frequency, b.frequency)
            } else {
                (b.frequency, a.frequency)
            };
            if high < MIN_FREQUENCY_RATIO * low {
                return Err(Error::FrequencyCollision {
                    low,
                    high,
                    min_ratio: MIN_FREQUENCY_RATIO,
                });
            }
        }
    }
    Ok(())
}

impl ForcingTerm {
    pub fn new(channels: Vec<Channel>, gain: f64) -> Result<Self> {
        let term = ForcingTerm { channels, gain };
        term.validate()?;
        Ok(term)
    }

    /// Check channel count, gain, carriers and frequency separation.
    pub fn validate(&self) -> Result<()> {
        check_gain(self.gain)?;
        if self.channels.is_empty() {
            return Err(Error::invalid("channels", "a forcing term needs at least one channel"));
        }
        for ch in &self.channels {
            ch.carrier.validate()?;
        }
        let carriers: Vec<_> = self.channels.iter().map(|c| c.carrier).collect();
        check_separation(&carriers)
    }

    /// Check that node references stay below `size`.
    pub fn validate_nodes(&self, size: usize) -> Result<()> {
        for ch in &self.channels {
            for node in [ch.left.node(), ch.right.node()].into_iter().flatten() {
                if node >= size {
                    return Err(Error::NodeOutOfRange { node, size });
                }
            }
        }
        Ok(())
    }

    pub fn has_node_refs(&self) -> bool {
        self.channels
            .iter()
            .any(|c| c.left.node().is_some() || c.right.node().is_some())
    }

    /// Upper bound `gain · Σ A_p` on `|C(t, v)|`.
    pub fn bound(&self) -> f64 {
        self.gain * self.channels.iter().map(|c| c.carrier.amplitude).sum::<f64>()
    }

    pub fn eval(&self, t: f64, v: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for ch in &self.channels {
            total += ch.carrier.value(t) * ch.logic(v)?;
        }
        Ok(self.gain * total)
    }

    /// Like [`eval`](Self::eval), but channels whose inputs have not settled
    /// contribute nothing instead of failing.
    pub fn eval_idle_unsettled(&self, t: f64, v: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for ch in &self.channels {
            match ch.logic(v) {
                Ok(l) => total += ch.carrier.value(t) * l,
                Err(Error::UnresolvedReference { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(self.gain * total)
    }
}

pub fn gate_forcing(
    g: GateKind,
    a: Digit,
    b: Digit,
    carrier: CarrierSpec,
    gain: f64,
) -> Result<ForcingTerm> {
    dynamic_gate_forcing(g, InputRef::digit(a), InputRef::digit(b), carrier, gain)
}

pub fn dynamic_gate_forcing(
    g: GateKind,
    left: InputRef,
    right: InputRef,
    carrier: CarrierSpec,
    gain: f64,
) -> Result<ForcingTerm> {
    ForcingTerm::new(
        vec![Channel {
            carrier,
            gate: g,
            left,
            right,
        }],
        gain,
    )
}

pub fn multiplex_forcing(
    channels: &[(CarrierSpec, GateKind, Digit, Digit)],
    gain: f64,
) -> Result<ForcingTerm> {
    if channels.len() < 2 {
        return Err(Error::invalid(
            "channels",
            format!("multiplexing needs at least 2 channels, got {}", channels.len()),
        ));
    }
    let channels = channels
        .iter()
        .map(|&(carrier, gate, a, b)| Channel {
            carrier,
            gate,
            left: InputRef::digit(a),
            right: InputRef::digit(b),
        })
        .collect();
    ForcingTerm::new(channels, gain)
}

pub fn eval_forcing(f: &ForcingTerm, t: f64, v: &[f64]) -> Result<f64> {
    f.eval(t, v)
}
