//! Networks of isolated STNO nodes with optional filtered outputs.
//!
//! Each node obeys `du/dt = -iωu + (λ - b|u|² + C(t, v))u`, the explicit form
//! of the single-site reduction of the film equation. The filtered output
//! follows `τ dv/dt = -v + p̂(t)|u|/r_ref`, a running correlation of the
//! envelope against the node's unit reference carrier; for `τ = 0` the output
//! is that product itself.
//!
//! The origin is invariant and, averaged over a carrier period, attracting:
//! `∮(λ + C) dt = λT < 0`. Without a lower bound on `|u|` every burst train
//! dies out geometrically, so after each step `|u|` is lifted to
//! [`StnoParams::amplitude_floor`] (nodes sitting exactly at `u = 0` stay
//! there). The floor plays the role of the fluctuation level an oscillator
//! never drops below.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::{gate_forcing, ForcingTerm};
use crate::logic::{CarrierSpec, Digit, GateKind};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_U0: f64 = 0.01;
pub const DEFAULT_AMPLITUDE_FLOOR: f64 = 1e-3;
/// Filter time constant in carrier periods.
pub const DEFAULT_TAU_PERIODS: f64 = 2.0;
const REFERENCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StnoParams {
    pub omega: f64,
    pub lambda: f64,
    pub b: f64,
    pub amplitude_floor: f64,
}

impl Default for StnoParams {
    fn default() -> Self {
        StnoParams {
            omega: 0.15,
            lambda: -0.1,
            b: 0.1,
            amplitude_floor: DEFAULT_AMPLITUDE_FLOOR,
        }
    }
}

impl StnoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("b", format!("{} must be > 0", self.b)));
        }
        if !(self.omega.is_finite() && self.lambda.is_finite()) {
            return Err(Error::invalid("omega/lambda", "must be finite"));
        }
        if !(self.amplitude_floor >= 0.0 && self.amplitude_floor.is_finite()) {
            return Err(Error::invalid(
                "amplitude_floor",
                format!("{} must be >= 0", self.amplitude_floor),
            ));
        }
        Ok(())
    }

    /// Envelope scale `sqrt((λ + gain)/b)` used to normalize burst heights.
    pub fn reference_radius(&self, gain: f64) -> f64 {
        ((self.lambda + gain) / self.b).max(REFERENCE_EPS).sqrt()
    }
}

/// Steady `r²` under a constant drive: `max(0, (λ + C)/b)`.
pub fn radial_fixed_point(params: &StnoParams, c_const: f64) -> f64 {
    ((params.lambda + c_const) / params.b).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub t: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<f64>,
    pub tau: Vec<f64>,
}

impl NetworkState {
    pub fn new(t: f64, u: Vec<Complex64>, v: Vec<f64>, tau: Vec<f64>) -> Result<Self> {
        let state = NetworkState { t, u, v, tau };
        state.validate()?;
        Ok(state)
    }

    /// `n` nodes at `u0`, zero outputs, all with time constant `tau`.
    pub fn uniform(n: usize, u0: Complex64, tau: f64) -> Self {
        NetworkState {
            t: 0.0,
            u: vec![u0; n],
            v: vec![0.0; n],
            tau: vec![tau; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.u.len();
        if self.v.len() != n || self.tau.len() != n {
            return Err(Error::invalid(
                "state",
                format!("u, v, tau lengths differ ({}, {}, {})", n, self.v.len(), self.tau.len()),
            ));
        }
        if self.u.iter().any(|z| !z.is_finite()) || self.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("state", "non-finite entries"));
        }
        if self.tau.iter().any(|&tau| !(tau >= 0.0)) {
            return Err(Error::invalid("tau", "time constants must be >= 0"));
        }
        Ok(())
    }
}

/// How node references that have not yet crossed the sign tolerance are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Unsettled references are an error.
    #[default]
    Strict,
    /// Unsettled channels contribute no drive.
    IdleUnsettled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSettings {
    pub dt: f64,
    pub stride: usize,
}

impl Default for StepSettings {
    fn default() -> Self {
        StepSettings {
            dt: DEFAULT_DT,
            stride: DEFAULT_STRIDE,
        }
    }
}

/// Recorded samples of a network run; `u[j][k]` is node `j` at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u: Vec<Vec<Complex64>>,
    pub v: Vec<Vec<f64>>,
    pub stride: usize,
}

impl Trajectory {
    pub fn n_nodes(&self) -> usize {
        self.u.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn abs_u(&self, node: usize) -> Vec<f64> {
        self.u[node].iter().map(|z| z.norm()).collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn final_u(&self) -> Vec<Complex64> {
        self.u.iter().map(|s| *s.last().expect("non-empty trajectory")).collect()
    }

    pub fn final_v(&self) -> Vec<f64> {
        self.v.iter().map(|s| *s.last().expect("non-empty trajectory")).collect()
    }

    /// CSV with columns `t, re_u_j, im_u_j, abs_u_j, v_j` per node; when a
    /// carrier is supplied an extra `abs_u_j_p` column holds `|u_j|·p(t)`.
    pub fn write_csv<W: Write>(&self, mut w: W, carrier: Option<&CarrierSpec>) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        for j in 0..self.n_nodes() {
            header.extend([
                format!("re_u_{j}"),
                format!("im_u_{j}"),
                format!("abs_u_{j}"),
                format!("v_{j}"),
            ]);
            if carrier.is_some() {
                header.push(format!("abs_u_{j}_p"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (k, &t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for j in 0..self.n_nodes() {
                let z = self.u[j][k];
                write!(w, ",{},{},{},{}", z.re, z.im, z.norm(), self.v[j][k])?;
                if let Some(p) = carrier {
                    write!(w, ",{}", z.norm() * p.value(t))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// A set of nodes with their drives.
#[derive(Debug, Clone)]
pub struct Network {
    pub params: StnoParams,
    pub forcings: Vec<ForcingTerm>,
    pub coupling: Coupling,
    references: Vec<CarrierSpec>,
    r_ref: Vec<f64>,
}

impl Network {
    pub fn new(params: StnoParams, forcings: Vec<ForcingTerm>) -> Result<Self> {
        params.validate()?;
        let n = forcings.len();
        for f in &forcings {
            f.validate()?;
            f.validate_nodes(n)?;
        }
        let references = forcings.iter().map(|f| f.channels[0].carrier.unit()).collect();
        let r_ref = forcings
            .iter()
            .map(|f| params.reference_radius(f.gain))
            .collect();
        Ok(Network {
            params,
            forcings,
            coupling: Coupling::Strict,
            references,
            r_ref,
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn len(&self) -> usize {
        self.forcings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forcings.is_empty()
    }

    pub fn reference_radius(&self, node: usize) -> f64 {
        self.r_ref[node]
    }

    /// Instantaneous normalized correlation `p̂(t)|u|/r_ref` of node `j`.
    fn correlation_sample(&self, j: usize, t: f64, u: Complex64) -> f64 {
        self.references[j].value(t) * u.norm() / self.r_ref[j]
    }

    fn drive(&self, j: usize, t: f64, v: &[f64]) -> Result<f64> {
        match self.coupling {
            Coupling::Strict => self.forcings[j].eval(t, v),
            Coupling::IdleUnsettled => self.forcings[j].eval_idle_unsettled(t, v),
        }
    }

    /// Time derivative at `(t, u, v)`. Outputs with `τ = 0` are algebraic:
    /// they are replaced by the instantaneous correlation before the drives
    /// are evaluated, and their derivative is reported as zero.
    pub fn derivative(
        &self,
        t: f64,
        u: &[Complex64],
        v: &[f64],
        tau: &[f64],
        du: &mut [Complex64],
        dv: &mut [f64],
    ) -> Result<()> {
        let mut v_eff;
        let v_used = if tau.contains(&0.0) {
            v_eff = v.to_vec();
            for j in 0..u.len() {
                if tau[j] == 0.0 {
                    v_eff[j] = self.correlation_sample(j, t, u[j]);
                }
            }
            &v_eff[..]
        } else {
            v
        };
        let p = &self.params;
        for j in 0..u.len() {
            let c = self.drive(j, t, v_used)?;
            let growth = p.lambda - p.b * u[j].norm_sqr() + c;
            du[j] = Complex64::new(growth, -p.omega) * u[j];
            dv[j] = if tau[j] > 0.0 {
                (self.correlation_sample(j, t, u[j]) - v[j]) / tau[j]
            } else {
                0.0
            };
        }
        Ok(())
    }

    /// Largest `dt` allowed by the stability guard.
    pub fn max_dt(&self) -> f64 {
        let drive = self.forcings.iter().map(ForcingTerm::bound).fold(0.0, f64::max);
        0.05 / (self.params.lambda.abs() + drive).max(1.0)
    }

    fn blow_up_limit(&self) -> f64 {
        let drive = self.forcings.iter().map(ForcingTerm::bound).fold(0.0, f64::max);
        10.0 * self.params.reference_radius(drive).max(1.0)
    }

    /// Classical fixed-step RK4 from `state0` to `t_end`, recording step 0,
    /// every `stride`-th step, and the final step.
    pub fn integrate(&self, state0: &NetworkState, t_end: f64, settings: StepSettings) -> Result<Trajectory> {
        state0.validate()?;
        let n = self.len();
        if state0.len() != n {
            return Err(Error::invalid(
                "state",
                format!("state has {} nodes, network has {n}", state0.len()),
            ));
        }
        let StepSettings { dt, stride } = settings;
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("{dt} must be > 0")));
        }
        if stride == 0 {
            return Err(Error::invalid("stride", "must be >= 1"));
        }
        let limit = self.max_dt();
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
        let t0 = state0.t;
        if !(t_end > t0) {
            return Err(Error::invalid("t_end", format!("{t_end} must exceed t0 = {t0}")));
        }
        let steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let blow_up = self.blow_up_limit();
        let floor = self.params.amplitude_floor;
        let tau = &state0.tau;

        let mut u = state0.u.clone();
        let mut v = state0.v.clone();
        for j in 0..n {
            if tau[j] == 0.0 {
                v[j] = self.correlation_sample(j, t0, u[j]);
            }
        }

        let capacity = steps / stride + 2;
        let mut traj = Trajectory {
            times: Vec::with_capacity(capacity),
            u: vec![Vec::with_capacity(capacity); n],
            v: vec![Vec::with_capacity(capacity); n],
            stride,
        };
        let record = |traj: &mut Trajectory, t: f64, u: &[Complex64], v: &[f64]| {
            traj.times.push(t);
            for j in 0..n {
                traj.u[j].push(u[j]);
                traj.v[j].push(v[j]);
            }
        };
        record(&mut traj, t0, &u, &v);

        let zero_c = vec![Complex64::new(0.0, 0.0); n];
        let zero_r = vec![0.0; n];
        let (mut k1u, mut k2u, mut k3u, mut k4u) =
            (zero_c.clone(), zero_c.clone(), zero_c.clone(), zero_c.clone());
        let (mut k1v, mut k2v, mut k3v, mut k4v) =
            (zero_r.clone(), zero_r.clone(), zero_r.clone(), zero_r.clone());
        let mut tu = zero_c;
        let mut tv = zero_r;

        let mut t = t0;
        for step in 1..=steps {
            let t_next = if step == steps { t_end } else { t0 + step as f64 * dt };
            let h = t_next - t;

            self.derivative(t, &u, &v, tau, &mut k1u, &mut k1v)?;
            for j in 0..n {
                tu[j] = u[j] + k1u[j] * (h / 2.0);
                tv[j] = v[j] + k1v[j] * (h / 2.0);
            }
            self.derivative(t + h / 2.0, &tu, &tv, tau, &mut k2u, &mut k2v)?;
            for j in 0..n {
                tu[j] = u[j] + k2u[j] * (h / 2.0);
                tv[j] = v[j] + k2v[j] * (h / 2.0);
            }
            self.derivative(t + h / 2.0, &tu, &tv, tau, &mut k3u, &mut k3v)?;
            for j in 0..n {
                tu[j] = u[j] + k3u[j] * h;
                tv[j] = v[j] + k3v[j] * h;
            }
            self.derivative(t_next, &tu, &tv, tau, &mut k4u, &mut k4v)?;
            for j in 0..n {
                u[j] += (k1u[j] + k2u[j] * 2.0 + k3u[j] * 2.0 + k4u[j]) * (h / 6.0);
                v[j] += (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]) * (h / 6.0);
            }
            t = t_next;

            for j in 0..n {
                let r = u[j].norm();
                if !(r <= blow_up) {
                    return Err(Error::BlowUp { node: j, magnitude: r, t });
                }
                if r > 0.0 && r < floor {
                    u[j] *= floor / r;
                }
                if tau[j] == 0.0 {
                    v[j] = self.correlation_sample(j, t, u[j]);
                }
            }

            if step % stride == 0 || step == steps {
                record(&mut traj, t, &u, &v);
            }
        }
        Ok(traj)
    }
}

/// Free-function form of [`Network::derivative`] for a whole state.
pub fn rhs(
    state: &NetworkState,
    params: &StnoParams,
    forcings: &[ForcingTerm],
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let net = Network::new(*params, forcings.to_vec())?;
    let n = state.len();
    let mut du = vec![Complex64::new(0.0, 0.0); n];
    let mut dv = vec![0.0; n];
    net.derivative(state.t, &state.u, &state.v, &state.tau, &mut du, &mut dv)?;
    Ok((du, dv))
}

pub fn integrate(
    state0: &NetworkState,
    params: &StnoParams,
    forcings: &[ForcingTerm],
    t_end: f64,
    settings: StepSettings,
) -> Result<Trajectory> {
    Network::new(*params, forcings.to_vec())?.integrate(state0, t_end, settings)
}

/// Single node driven by `gain · p(t) · L(A, B)` for `n_periods` carrier
/// periods, starting from `u0 = 0.01`.
pub fn run_logic_gate(
    g: GateKind,
    a: Digit,
    b: Digit,
    params: &StnoParams,
    carrier: &CarrierSpec,
    gain: f64,
    n_periods: u32,
) -> Result<Trajectory> {
    run_logic_gate_with(g, a, b, params, carrier, gain, n_periods, StepSettings::default())
}

#[allow(clippy::too_many_arguments)]
pub fn run_logic_gate_with(
    g: GateKind,
    a: Digit,
    b: Digit,
    params: &StnoParams,
    carrier: &CarrierSpec,
    gain: f64,
    n_periods: u32,
    settings: StepSettings,
) -> Result<Trajectory> {
    if n_periods < 3 {
        return Err(Error::invalid("n_periods", format!("{n_periods} < 3")));
    }
    let forcing = gate_forcing(g, a, b, *carrier, gain)?;
    let tau = DEFAULT_TAU_PERIODS * carrier.period();
    let state = NetworkState::uniform(1, Complex64::new(DEFAULT_U0, 0.0), tau);
    let t_end = f64::from(n_periods) * carrier.period();
    integrate(&state, params, &[forcing], t_end, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::{dynamic_gate_forcing, InputRef};
    use crate::logic::Amplitude;
    use approx::assert_relative_eq;

    fn constant_drive(c: f64) -> ForcingTerm {
        // A carrier this slow is constant to within 1e-13 over the test spans.
        let carrier = CarrierSpec::new(1.0, 1e-9, 0.0).unwrap();
        dynamic_gate_forcing(
            GateKind::Or,
            InputRef::Const(Amplitude::ONE),
            InputRef::Const(Amplitude::ONE),
            carrier,
            c,
        )
        .unwrap()
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let state = NetworkState::uniform(1, Complex64::new(0.0, 0.0), 1.0);
        let f = gate_forcing(GateKind::Or, Digit::One, Digit::One, CarrierSpec::default(), 0.2).unwrap();
        let (du, _) = rhs(&state, &StnoParams::default(), std::slice::from_ref(&f)).unwrap();
        assert_eq!(du[0], Complex64::new(0.0, 0.0));
        let traj = integrate(&state, &StnoParams::default(), &[f], 800.0, StepSettings::default()).unwrap();
        assert!(traj.u[0].iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn radial_derivative_examples() {
        let params = StnoParams::default();
        let r = 0.7;
        let state = NetworkState::uniform(1, Complex64::new(r, 0.0), 1.0);
        let (du, _) = rhs(&state, &params, &[constant_drive(1e-300)]).unwrap();
        // d|u|/dt = Re(conj(u) du)/|u| for real u.
        assert_relative_eq!(du[0].re, (-0.1 - 0.1 * r * r) * r, epsilon = 1e-15);
        assert_relative_eq!(du[0].im, -0.15 * r, epsilon = 1e-15);

        let state = NetworkState::uniform(1, Complex64::new(1.0, 0.0), 1.0);
        let (du, _) = rhs(&state, &params, &[constant_drive(0.2)]).unwrap();
        assert!(du[0].re.abs() < 1e-15);
    }

    #[test]
    fn fixed_point_examples() {
        let p = StnoParams::default();
        assert_eq!(radial_fixed_point(&p, 0.05), 0.0);
        assert_relative_eq!(radial_fixed_point(&p, 0.2), 1.0, epsilon = 1e-15);
        assert_eq!(radial_fixed_point(&p, 0.1), 0.0);
    }

    #[test]
    fn step_guard_and_validation() {
        let f = constant_drive(0.2);
        let state = NetworkState::uniform(1, Complex64::new(0.1, 0.0), 1.0);
        let err = integrate(&state, &StnoParams::default(), std::slice::from_ref(&f), 10.0, StepSettings { dt: 0.1, stride: 1 });
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
        let err = integrate(&state, &StnoParams::default(), std::slice::from_ref(&f), -1.0, StepSettings::default());
        assert!(err.is_err());
        let bad = NetworkState::new(0.0, vec![Complex64::new(0.1, 0.0)], vec![], vec![1.0]);
        assert!(bad.is_err());
        assert!(StnoParams { b: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let state = NetworkState::uniform(1, Complex64::new(1e3, 0.0), 1.0);
        let err = integrate(&state, &StnoParams::default(), &[constant_drive(0.2)], 10.0, StepSettings::default());
        assert!(matches!(err, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn sample_count_and_times() {
        let state = NetworkState::uniform(1, Complex64::new(0.1, 0.0), 1.0);
        let f = constant_drive(0.2);
        let traj = integrate(&state, &StnoParams::default(), std::slice::from_ref(&f), 10.0, StepSettings { dt: 0.01, stride: 10 }).unwrap();
        assert_eq!(traj.len(), 1000 / 10 + 1);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*traj.times.last().unwrap(), 10.0);
        let traj = integrate(&state, &StnoParams::default(), &[f], 10.05, StepSettings { dt: 0.01, stride: 10 }).unwrap();
        assert_eq!(traj.len(), 1005 / 10 + 2);
        assert_eq!(*traj.times.last().unwrap(), 10.05);
    }

    #[test]
    fn amplitude_floor_keeps_bursts_alive() {
        let params = StnoParams::default();
        let p = CarrierSpec::default();
        let traj = run_logic_gate(GateKind::Or, Digit::One, Digit::Zero, &params, &p, 0.2, 5).unwrap();
        let abs = traj.abs_u(0);
        let late = abs.iter().zip(&traj.times).filter(|(_, &t)| t > 1600.0).map(|(a, _)| *a);
        assert!(late.fold(0.0, f64::max) > 0.5);
        assert!(abs.iter().all(|&r| r >= params.amplitude_floor * (1.0 - 1e-12)));

        let no_floor = StnoParams { amplitude_floor: 0.0, ..params };
        let traj = run_logic_gate(GateKind::Or, Digit::One, Digit::Zero, &no_floor, &p, 0.2, 5).unwrap();
        let late_max = traj.abs_u(0).iter().zip(&traj.times).filter(|(_, &t)| t > 1600.0).map(|(a, _)| *a).fold(0.0, f64::max);
        assert!(late_max < 1e-10);
    }

    #[test]
    fn zero_tau_output_is_instantaneous() {
        let p = CarrierSpec::default();
        let f = gate_forcing(GateKind::Or, Digit::One, Digit::One, p, 0.2).unwrap();
        let state = NetworkState::uniform(1, Complex64::new(0.3, 0.0), 0.0);
        let net = Network::new(StnoParams::default(), vec![f]).unwrap();
        let traj = net.integrate(&state, 50.0, StepSettings::default()).unwrap();
        for k in 0..traj.len() {
            let expected = p.value(traj.times[k]) * traj.u[0][k].norm() / net.reference_radius(0);
            assert_relative_eq!(traj.v[0][k], expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let state = NetworkState::uniform(2, Complex64::new(0.1, 0.0), 1.0);
        let f = constant_drive(0.2);
        let traj = integrate(&state, &StnoParams::default(), &[f.clone(), f], 1.0, StepSettings { dt: 0.01, stride: 50 }).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, Some(&CarrierSpec::default())).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_u_0,im_u_0,abs_u_0,v_0,abs_u_0_p,re_u_1,im_u_1,abs_u_1,v_1,abs_u_1_p"
        );
        assert_eq!(lines.count(), 3);
    }
}
