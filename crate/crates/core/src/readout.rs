//! Digit readout by correlating oscillation envelopes with a carrier.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{wrap_phase, CarrierSpec, Digit};
use crate::network::Trajectory;

/// Fraction of the largest achievable correlation below which a readout is
/// indeterminate.
pub const INDETERMINACY_FRACTION: f64 = 0.05;

/// Leading fraction of a run discarded as start-up transient.
pub const TRANSIENT_FRACTION: f64 = 1.0 / 3.0;

pub const DEFAULT_BURST_FRACTION: f64 = 0.5;

/// Threshold for an envelope of scale `r_ref` against `carrier`: 5% of the
/// correlation `A_p · r_ref / 2` of a clean burst train.
pub fn indeterminacy_threshold(carrier: &CarrierSpec, r_ref: f64) -> f64 {
    INDETERMINACY_FRACTION * 0.5 * carrier.amplitude * r_ref
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    /// Window-averaged `|u|·p`.
    pub integral: f64,
    pub digit: Option<Digit>,
    /// `|integral| / threshold`.
    pub confidence: f64,
    pub threshold: f64,
}

impl CorrelationResult {
    fn classify(integral: f64, threshold: f64) -> Self {
        let digit = if integral > threshold {
            Some(Digit::One)
        } else if integral < -threshold {
            Some(Digit::Zero)
        } else {
            None
        };
        let confidence = if threshold > 0.0 {
            integral.abs() / threshold
        } else {
            f64::INFINITY
        };
        CorrelationResult {
            integral,
            digit,
            confidence,
            threshold,
        }
    }

    pub fn require_digit(&self) -> Result<Digit> {
        self.digit.ok_or(Error::IndeterminateReadout {
            integral: self.integral,
            threshold: self.threshold,
        })
    }
}

fn lerp(times: &[f64], values: &[f64], k: usize, t: f64) -> f64 {
    let (t0, t1) = (times[k], times[k + 1]);
    if t1 == t0 {
        return values[k];
    }
    let w = (t - t0) / (t1 - t0);
    values[k] + w * (values[k + 1] - values[k])
}

/// Trapezoidal integral of `values(t) · carrier(t)` over `[a, b]`, with the
/// envelope linearly interpolated at window edges that fall between samples.
fn trapezoid_product(times: &[f64], values: &[f64], carrier: &CarrierSpec, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..times.len() - 1 {
        let (s0, s1) = (times[k].max(a), times[k + 1].min(b));
        if s1 <= s0 {
            continue;
        }
        let f0 = lerp(times, values, k, s0) * carrier.value(s0);
        let f1 = lerp(times, values, k, s1) * carrier.value(s1);
        total += 0.5 * (f0 + f1) * (s1 - s0);
    }
    total
}

/// Average of `|u(t)| p(t)` over the largest whole number of carrier periods
/// inside `window` (clipped to the sampled range).
pub fn correlate(
    times: &[f64],
    abs_u: &[f64],
    carrier: &CarrierSpec,
    window: (f64, f64),
    threshold: f64,
) -> Result<CorrelationResult> {
    if times.len() != abs_u.len() {
        return Err(Error::invalid("series", "times and values differ in length"));
    }
    if times.len() < 2 {
        return Err(Error::WindowTooShort { span: 0.0, period: carrier.period() });
    }
    let start = window.0.max(times[0]);
    let end = window.1.min(times[times.len() - 1]);
    let period = carrier.period();
    let span = end - start;
    let periods = (span / period + 1e-9).floor();
    if periods < 2.0 {
        return Err(Error::WindowTooShort { span, period });
    }
    let length = periods * period;
    let integral = trapezoid_product(times, abs_u, carrier, start, start + length) / length;
    Ok(CorrelationResult::classify(integral, threshold))
}

/// Window covering the final two thirds of a run.
pub fn analysis_window(times: &[f64]) -> (f64, f64) {
    let (t0, t1) = (times[0], times[times.len() - 1]);
    (t0 + TRANSIENT_FRACTION * (t1 - t0), t1)
}

/// Correlate one node of a gate run after discarding the transient.
pub fn correlate_gate_run(
    traj: &Trajectory,
    node: usize,
    carrier: &CarrierSpec,
    r_ref: f64,
) -> Result<CorrelationResult> {
    if traj.duration() + 1e-9 < 3.0 * carrier.period() {
        return Err(Error::WindowTooShort {
            span: traj.duration(),
            period: carrier.period(),
        });
    }
    correlate(
        &traj.times,
        &traj.abs_u(node),
        carrier,
        analysis_window(&traj.times),
        indeterminacy_threshold(carrier, r_ref),
    )
}

pub fn decode_gate_run(traj: &Trajectory, node: usize, carrier: &CarrierSpec, r_ref: f64) -> Result<Digit> {
    correlate_gate_run(traj, node, carrier, r_ref)?.require_digit()
}

/// Per-carrier correlations of one node over a shared window.
pub fn correlate_multiplex(
    traj: &Trajectory,
    node: usize,
    carriers: &[CarrierSpec],
    r_ref: f64,
) -> Result<Vec<CorrelationResult>> {
    let slowest = carriers
        .iter()
        .map(CarrierSpec::period)
        .fold(0.0, f64::max);
    if traj.duration() + 1e-9 < 10.0 * slowest {
        return Err(Error::WindowTooShort {
            span: traj.duration(),
            period: slowest,
        });
    }
    let abs_u = traj.abs_u(node);
    let window = analysis_window(&traj.times);
    carriers
        .iter()
        .map(|c| correlate(&traj.times, &abs_u, c, window, indeterminacy_threshold(c, r_ref)))
        .collect()
}

pub fn decode_multiplex(
    traj: &Trajectory,
    node: usize,
    carriers: &[CarrierSpec],
    r_ref: f64,
) -> Result<Vec<Digit>> {
    correlate_multiplex(traj, node, carriers, r_ref)?
        .iter()
        .map(CorrelationResult::require_digit)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstEvent {
    pub time: f64,
    pub height: f64,
    /// Carrier phase at the peak, in `(-π, π]`.
    pub phase: f64,
}

/// Local maxima of the envelope above `threshold_fraction · max`, at least
/// half a carrier period apart (taller peaks win).
pub fn burst_events(
    times: &[f64],
    abs_u: &[f64],
    carrier: &CarrierSpec,
    threshold_fraction: f64,
) -> Result<Vec<BurstEvent>> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::invalid(
            "threshold_fraction",
            format!("{threshold_fraction} must lie in (0, 1)"),
        ));
    }
    if times.len() != abs_u.len() {
        return Err(Error::invalid("series", "times and values differ in length"));
    }
    let peak = abs_u.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok(Vec::new());
    }
    let level = threshold_fraction * peak;
    let n = abs_u.len();
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let x = abs_u[k];
            let left = k == 0 || x > abs_u[k - 1];
            let right = k + 1 == n || x >= abs_u[k + 1];
            x > level && left && right
        })
        .collect();
    candidates.sort_by(|&i, &j| abs_u[j].total_cmp(&abs_u[i]).then(i.cmp(&j)));

    let separation = 0.5 * carrier.period();
    let mut kept: Vec<usize> = Vec::new();
    for k in candidates {
        if kept.iter().all(|&q| (times[q] - times[k]).abs() >= separation - 1e-9) {
            kept.push(k);
        }
    }
    kept.sort_unstable();
    Ok(kept
        .into_iter()
        .map(|k| BurstEvent {
            time: times[k],
            height: abs_u[k],
            phase: wrap_phase(carrier.phase_at(times[k])),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLock {
    /// Circular mean of `φ_b − φ_a`, in `(-π, π]`.
    pub phase: f64,
    /// Mean of `t_b − t_a`.
    pub delay: f64,
}

/// Pair each event of `b` with the nearest event of `a` (ties go to the
/// earlier one) and average the phase and time offsets.
pub fn phase_lock_offset(events_a: &[BurstEvent], events_b: &[BurstEvent]) -> Result<PhaseLock> {
    let (na, nb) = (events_a.len(), events_b.len());
    if na == 0 || nb == 0 || na.abs_diff(nb) > 1 {
        return Err(Error::UnpairableEvents { left: na, right: nb });
    }
    let (mut sin, mut cos, mut delay) = (0.0, 0.0, 0.0);
    for eb in events_b {
        let mut best = &events_a[0];
        for ea in &events_a[1..] {
            let (d_new, d_best) = ((eb.time - ea.time).abs(), (eb.time - best.time).abs());
            let tie = (d_new - d_best).abs() <= 1e-9 * d_best.max(1.0);
            if d_new < d_best && !tie {
                best = ea;
            }
        }
        let dphi = eb.phase - best.phase;
        sin += dphi.sin();
        cos += dphi.cos();
        delay += eb.time - best.time;
    }
    let mut phase = sin.atan2(cos);
    if phase <= -PI + 1e-12 {
        phase = PI;
    }
    Ok(PhaseLock {
        phase,
        delay: delay / nb as f64,
    })
}

pub fn write_bursts_csv<W: Write>(mut w: W, events: &[BurstEvent]) -> io::Result<()> {
    writeln!(w, "time,height,phase")?;
    for e in events {
        writeln!(w, "{},{},{}", e.time, e.height, e.phase)?;
    }
    Ok(())
}

/// Rows of `label,integral,digit,confidence`; indeterminate digits are written as `?`.
pub fn write_correlations_csv<W: Write>(mut w: W, rows: &[(String, CorrelationResult)]) -> io::Result<()> {
    writeln!(w, "label,integral,digit,confidence")?;
    for (label, r) in rows {
        let digit = r.digit.map_or("?".to_string(), |d| d.to_string());
        writeln!(w, "{label},{},{digit},{}", r.integral, r.confidence)?;
    }
    Ok(())
}
