//! Digit/phase encoding, reference carriers and the sign-threshold gates.
//!
//! A binary digit `a` is carried by the amplitude `A = -cos(aπ)`, so `1 ↦ +1`
//! and `0 ↦ -1`. Multiplying a reference carrier `p(t)` by `A` therefore
//! yields either `p` itself (digit 1) or its anti-phase copy `n = -p`
//! (digit 0). Gates are signs of affine forms in the encoded inputs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes closer to zero than this do not decode to a digit.
pub const DECODE_TOLERANCE: f64 = 1e-9;

/// Default carrier frequency: one period every 400 time units.
pub const DEFAULT_CARRIER_FREQUENCY: f64 = 0.0025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Digit {
    Zero,
    One,
}

impl Digit {
    pub const ALL: [Digit; 2] = [Digit::Zero, Digit::One];

    pub fn as_u8(self) -> u8 {
        match self {
            Digit::Zero => 0,
            Digit::One => 1,
        }
    }

    pub fn as_bool(self) -> bool {
        self == Digit::One
    }

    pub fn from_bool(bit: bool) -> Self {
        if bit {
            Digit::One
        } else {
            Digit::Zero
        }
    }
}

impl From<bool> for Digit {
    fn from(bit: bool) -> Self {
        Digit::from_bool(bit)
    }
}

impl From<Digit> for u8 {
    fn from(d: Digit) -> u8 {
        d.as_u8()
    }
}

impl TryFrom<u8> for Digit {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            0 => Ok(Digit::Zero),
            1 => Ok(Digit::One),
            other => Err(Error::invalid("digit", format!("{other} is not 0 or 1"))),
        }
    }
}

impl std::ops::Not for Digit {
    type Output = Digit;

    fn not(self) -> Digit {
        Digit::from_bool(!self.as_bool())
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl FromStr for Digit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Digit::Zero),
            "1" => Ok(Digit::One),
            other => Err(Error::invalid("digit", format!("`{other}` is not 0 or 1"))),
        }
    }
}

/// Phase-encoded amplitude `A`; `±1` for digits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amplitude(pub f64);

impl Amplitude {
    pub const ONE: Amplitude = Amplitude(1.0);
    pub const ZERO: Amplitude = Amplitude(-1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::ops::Neg for Amplitude {
    type Output = Amplitude;

    fn neg(self) -> Amplitude {
        Amplitude(-self.0)
    }
}

pub fn encode_digit(a: Digit) -> Amplitude {
    Amplitude(-(f64::from(a.as_u8()) * PI).cos())
}

pub fn decode_amplitude(amp: Amplitude) -> Result<Digit> {
    let a = amp.0;
    if !(-1.0..=1.0).contains(&a) {
        return Err(Error::AmplitudeOutOfRange(a));
    }
    if a.abs() < DECODE_TOLERANCE {
        return Err(Error::IndeterminateAmplitude(a));
    }
    let bit = 1.0 - a.acos() / PI;
    Ok(Digit::from_bool(bit.round() >= 1.0))
}

/// Reference signal `A_p cos(2π ω_p t + φ_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierSpec {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Default for CarrierSpec {
    fn default() -> Self {
        CarrierSpec {
            amplitude: 1.0,
            frequency: DEFAULT_CARRIER_FREQUENCY,
            phase: 0.0,
        }
    }
}

impl CarrierSpec {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        let spec = CarrierSpec {
            amplitude,
            frequency,
            phase,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_frequency(frequency: f64) -> Result<Self> {
        CarrierSpec::new(1.0, frequency, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("amplitude", format!("{} must be > 0", self.amplitude)));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::invalid("frequency", format!("{} must be > 0", self.frequency)));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Total phase `2π ω_p t + φ_p` at time `t`.
    pub fn phase_at(&self, t: f64) -> f64 {
        2.0 * PI * self.frequency * t + self.phase
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * self.phase_at(t).cos()
    }

    /// The signal `n`, shifted by π from `p`.
    pub fn anti_phase(&self) -> CarrierSpec {
        CarrierSpec {
            phase: self.phase + PI,
            ..*self
        }
    }

    /// Same frequency and phase with unit amplitude.
    pub fn unit(&self) -> CarrierSpec {
        CarrierSpec {
            amplitude: 1.0,
            ..*self
        }
    }
}

pub fn carrier_value(spec: &CarrierSpec, t: f64) -> f64 {
    spec.value(t)
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Coefficients of the affine form `c0 + ca·A + cb·B` inside the sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateCoefficients {
    pub c0: f64,
    pub ca: f64,
    pub cb: f64,
}

impl GateCoefficients {
    pub fn affine(&self, a: Amplitude, b: Amplitude) -> f64 {
        self.c0 + self.ca * a.0 + self.cb * b.0
    }

    pub fn sign(&self, a: Amplitude, b: Amplitude) -> Result<Amplitude> {
        let arg = self.affine(a, b);
        if arg > 0.0 {
            Ok(Amplitude::ONE)
        } else if arg < 0.0 {
            Ok(Amplitude::ZERO)
        } else {
            Err(Error::ZeroGateArgument { a: a.0, b: b.0 })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Or,
    And,
    Nand,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::Or, GateKind::And, GateKind::Nand];

    pub fn coefficients(self) -> GateCoefficients {
        let (c0, ca, cb) = match self {
            GateKind::Or => (1.0, 1.0, 1.0),
            GateKind::And => (-1.0, 1.0, 1.0),
            GateKind::Nand => (1.0, -2.0, -2.0),
        };
        GateCoefficients { c0, ca, cb }
    }

    /// Plain boolean definition, independent of the sign form.
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::Or => a || b,
            GateKind::And => a && b,
            GateKind::Nand => !(a && b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Or => "OR",
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OR" => Ok(GateKind::Or),
            "AND" => Ok(GateKind::And),
            "NAND" => Ok(GateKind::Nand),
            other => Err(Error::invalid("gate", format!("unknown gate `{other}`"))),
        }
    }
}

pub fn gate_value(g: GateKind, a: Amplitude, b: Amplitude) -> Result<Amplitude> {
    g.coefficients().sign(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthRow {
    pub a: Digit,
    pub b: Digit,
    pub out: Digit,
}

/// Rows in the order (0,0), (1,0), (0,1), (1,1), evaluated through the
/// encoded sign form.
pub fn truth_table(g: GateKind) -> [TruthRow; 4] {
    let pairs = [
        (Digit::Zero, Digit::Zero),
        (Digit::One, Digit::Zero),
        (Digit::Zero, Digit::One),
        (Digit::One, Digit::One),
    ];
    pairs.map(|(a, b)| {
        let amp = gate_value(g, encode_digit(a), encode_digit(b))
            .expect("built-in gate coefficients have an odd affine sum");
        let out = decode_amplitude(amp).expect("gate output is ±1");
        TruthRow { a, b, out }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PM: [Amplitude; 2] = [Amplitude::ZERO, Amplitude::ONE];

    #[test]
    fn encode_matches_phase_formula() {
        assert_eq!(encode_digit(Digit::One), Amplitude(1.0));
        assert_eq!(encode_digit(Digit::Zero), Amplitude(-1.0));
        for d in Digit::ALL {
            assert_eq!(decode_amplitude(encode_digit(d)).unwrap(), d);
        }
    }

    #[test]
    fn decode_rejects_midpoint_and_out_of_range() {
        assert!(matches!(
            decode_amplitude(Amplitude(0.0)),
            Err(Error::IndeterminateAmplitude(_))
        ));
        assert!(matches!(
            decode_amplitude(Amplitude(1.5)),
            Err(Error::AmplitudeOutOfRange(_))
        ));
        assert_eq!(decode_amplitude(Amplitude(0.3)).unwrap(), Digit::One);
        assert_eq!(decode_amplitude(Amplitude(-0.3)).unwrap(), Digit::Zero);
    }

    #[test]
    fn carrier_examples() {
        let p = CarrierSpec::default();
        assert_eq!(p.value(0.0), 1.0);
        assert_relative_eq!(p.anti_phase().value(0.0), -1.0);
        assert!(p.value(100.0).abs() < 1e-15);
        assert!(CarrierSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(CarrierSpec::new(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn gate_examples_from_truth_table() {
        assert_eq!(gate_value(GateKind::Or, Amplitude::ZERO, Amplitude::ZERO).unwrap(), Amplitude::ZERO);
        assert_eq!(gate_value(GateKind::And, Amplitude::ONE, Amplitude::ONE).unwrap(), Amplitude::ONE);
        assert_eq!(gate_value(GateKind::Nand, Amplitude::ONE, Amplitude::ONE).unwrap(), Amplitude::ZERO);
        assert_eq!(gate_value(GateKind::Nand, Amplitude::ZERO, Amplitude::ZERO).unwrap(), Amplitude::ONE);
    }

    #[test]
    fn zero_argument_is_reported() {
        let even = GateCoefficients { c0: 0.0, ca: 1.0, cb: 1.0 };
        assert!(matches!(
            even.sign(Amplitude::ONE, Amplitude::ZERO),
            Err(Error::ZeroGateArgument { .. })
        ));
    }

    #[test]
    fn truth_tables() {
        let rows = |g| truth_table(g).map(|r| (r.a.as_u8(), r.b.as_u8(), r.out.as_u8()));
        assert_eq!(rows(GateKind::Or), [(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)]);
        assert_eq!(rows(GateKind::And), [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 1)]);
        assert_eq!(rows(GateKind::Nand), [(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 0)]);
        for g in GateKind::ALL {
            for r in truth_table(g) {
                assert_eq!(r.out.as_bool(), g.apply(r.a.as_bool(), r.b.as_bool()));
            }
        }
    }

    #[test]
    fn sign_level_identities() {
        for a in PM {
            for b in PM {
                let nand = gate_value(GateKind::Nand, a, b).unwrap();
                let and = gate_value(GateKind::And, a, b).unwrap();
                assert_eq!(nand, -and);
                for g in GateKind::ALL {
                    let arg = g.coefficients().affine(a, b);
                    assert_eq!(arg.rem_euclid(2.0), 1.0, "{g} affine form must be odd");
                }
            }
            assert_eq!(gate_value(GateKind::Nand, a, a).unwrap(), -a);
        }
    }

    #[test]
    fn wrap_phase_range() {
        assert_relative_eq!(wrap_phase(3.0 * PI), PI);
        assert_relative_eq!(wrap_phase(-PI), PI);
        assert_relative_eq!(wrap_phase(0.5), 0.5);
        assert_relative_eq!(wrap_phase(-0.5 + 4.0 * PI), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn parse_names() {
        assert_eq!("nand".parse::<GateKind>().unwrap(), GateKind::Nand);
        assert!("xnor".parse::<GateKind>().is_err());
        assert_eq!("1".parse::<Digit>().unwrap(), Digit::One);
    }

    proptest::proptest! {
        #[test]
        fn anti_phase_cancels(t in -1e4f64..1e4, freq in 1e-4f64..0.1, phase in -10.0f64..10.0) {
            let p = CarrierSpec::new(1.3, freq, phase).unwrap();
            proptest::prop_assert!((p.value(t) + p.anti_phase().value(t)).abs() < 1e-12);
        }
    }
}
