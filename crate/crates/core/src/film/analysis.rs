//! Digit readout and phase locking of film probes.

use std::io::{self, Write};

use super::layout::{Contact, Polarity};
use super::solver::{ProbeSeries, Snapshot};
use super::FilmGrid;
use crate::error::{Error, Result};
use crate::logic::{CarrierSpec, Digit};
use crate::readout::{
    analysis_window, burst_events, correlate, indeterminacy_threshold, phase_lock_offset, CorrelationResult,
    PhaseLock,
};

/// Bursts are local maxima above this fraction of the probe's peak.
pub const PROBE_BURST_FRACTION: f64 = 0.5;

/// Indeterminacy threshold scaled by the probe's own peak magnitude, since
/// detectors see much weaker bursts than the forced sources.
pub fn probe_threshold(carrier: &CarrierSpec, peak: f64) -> f64 {
    indeterminacy_threshold(carrier, peak)
}

fn steady(probe: &ProbeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    if probe.times.len() < 2 {
        return Err(Error::invalid("probe", format!("contact {} has fewer than two samples", probe.id)));
    }
    let (start, _) = analysis_window(&probe.times);
    let first = probe.times.partition_point(|&t| t < start).saturating_sub(1);
    let abs = probe.abs();
    Ok((probe.times[first..].to_vec(), abs[first..].to_vec()))
}

fn correlate_probe(probe: &ProbeSeries, carrier: &CarrierSpec) -> Result<CorrelationResult> {
    let (times, abs) = steady(probe)?;
    let peak = abs.iter().copied().fold(0.0, f64::max);
    let window = analysis_window(&probe.times);
    correlate(&times, &abs, carrier, window, probe_threshold(carrier, peak))
}

/// Correlation of every probe over the final two thirds of the run.
pub fn decode_contacts(probes: &[ProbeSeries], carrier: &CarrierSpec) -> Result<Vec<(usize, CorrelationResult)>> {
    probes.iter().map(|p| Ok((p.id, correlate_probe(p, carrier)?))).collect()
}

/// Digits read at the detector contacts.
pub fn decode_detectors(
    probes: &[ProbeSeries],
    contacts: &[Contact],
    carrier: &CarrierSpec,
) -> Result<Vec<(usize, Digit)>> {
    contacts
        .iter()
        .filter(|c| c.polarity == Polarity::Detector)
        .map(|c| {
            let probe = probes
                .iter()
                .find(|p| p.id == c.id)
                .ok_or_else(|| Error::invalid("probes", format!("no series for contact {}", c.id)))?;
            let digit = correlate_probe(probe, carrier)?
                .require_digit()
                .map_err(|e| Error::NodeReadout { node: c.id, source: Box::new(e) })?;
            Ok((c.id, digit))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactLock {
    pub detector: usize,
    /// Nearest forced contact.
    pub source: usize,
    pub distance: f64,
    /// Detector bursts relative to source bursts.
    pub lock: PhaseLock,
}

/// Phase and delay of each detector's bursts relative to its nearest source.
pub fn phase_locks(probes: &[ProbeSeries], contacts: &[Contact], carrier: &CarrierSpec) -> Result<Vec<ContactLock>> {
    let events = |id: usize| -> Result<_> {
        let probe = probes
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::invalid("probes", format!("no series for contact {id}")))?;
        let (times, abs) = steady(probe)?;
        burst_events(&times, &abs, carrier, PROBE_BURST_FRACTION)
    };
    let mut out = Vec::new();
    for d in contacts.iter().filter(|c| c.polarity == Polarity::Detector) {
        let Some(source) = contacts
            .iter()
            .filter(|c| c.polarity.is_forced())
            .min_by(|a, b| d.distance_to(a).total_cmp(&d.distance_to(b)))
        else {
            continue;
        };
        let lock = phase_lock_offset(&events(source.id)?, &events(d.id)?)?;
        out.push(ContactLock {
            detector: d.id,
            source: source.id,
            distance: d.distance_to(source),
            lock,
        });
    }
    Ok(out)
}

/// Columns `t` then `re_u_<id>,im_u_<id>,abs_u_<id>` per probe; all probes
/// must share sample times.
pub fn write_probes_csv<W: Write>(mut w: W, probes: &[ProbeSeries]) -> io::Result<()> {
    write!(w, "t")?;
    for p in probes {
        write!(w, ",re_u_{0},im_u_{0},abs_u_{0}", p.id)?;
    }
    writeln!(w)?;
    let Some(first) = probes.first() else {
        return Ok(());
    };
    for (k, t) in first.times.iter().enumerate() {
        write!(w, "{t}")?;
        for p in probes {
            let z = p.values[k];
            write!(w, ",{},{},{}", z.re, z.im, z.norm())?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Rows of `i,j,re_u,im_u` with `i` the x index.
pub fn write_snapshot_csv<W: Write>(mut w: W, grid: &FilmGrid, snapshot: &Snapshot) -> io::Result<()> {
    writeln!(w, "i,j,re_u,im_u")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = snapshot.u[j * grid.nx + i];
            writeln!(w, "{i},{j},{},{}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Plain-text PGM of `|u|` scaled to the snapshot maximum, top row = largest y.
pub fn write_snapshot_pgm<W: Write>(mut w: W, grid: &FilmGrid, snapshot: &Snapshot) -> io::Result<()> {
    let peak = snapshot.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    writeln!(w, "P2\n{} {}\n255", grid.nx, grid.ny)?;
    for j in (0..grid.ny).rev() {
        let row: Vec<String> = (0..grid.nx)
            .map(|i| {
                let level = if peak > 0.0 { snapshot.u[j * grid.nx + i].norm() / peak } else { 0.0 };
                ((level * 255.0).round() as u8).to_string()
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}
