use std::io::Write;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use stno::film::{decode_contacts, Polarity};
use stno::forcing::DEFAULT_GAIN;
use stno::logic::{Digit, GateKind};
use stno::network::run_logic_gate_with;
use stno::readout::correlate_gate_run;

use crate::config::{set, ExperimentConfig, ExperimentKind, SweepSpec, SweepTarget};
use crate::fail::usage;
use crate::film::{FilmSetup, DEFAULT_FILM_PERIODS};
use crate::gate::DEFAULT_GATE_PERIODS;
use crate::output::{prepare, write_file};
use crate::Common;

pub const THREADS_ENV: &str = "STNO_THREADS";

pub const CSV_HELP: &str = "\
Axes absent from the sweep keep their base value; an empty list is an error.
Outputs:
  sweep.csv  gain,frequency,detector_spacing,outputs,min_confidence,peak_abs_u,error
             one row per parameter tuple, sorted by (gain, frequency, detector_spacing).
             outputs is the digit (gate target) or `id:digit` pairs separated by
             spaces (film target); `?` marks an indeterminate readout.
Runs execute in parallel; STNO_THREADS caps the worker count.";

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Experiment run at every point.
    #[arg(long, value_enum)]
    pub target: Option<SweepTarget>,
    /// Gain values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub gains: Option<Vec<f64>>,
    /// Carrier frequencies.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub frequencies: Option<Vec<f64>>,
    /// Detector distances from the film centre (film target).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub spacings: Option<Vec<f64>>,
    /// Gate for the gate target [default: NAND].
    #[arg(long)]
    pub gate: Option<GateKind>,
    /// First gate input [default: 0].
    #[arg(long)]
    pub a: Option<Digit>,
    /// Second gate input [default: 0].
    #[arg(long)]
    pub b: Option<Digit>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub gain: f64,
    pub frequency: f64,
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: Point,
    pub outputs: String,
    pub min_confidence: Option<f64>,
    pub peak_abs_u: Option<f64>,
    pub error: Option<String>,
}

fn axis(values: &Option<Vec<f64>>, name: &str) -> Result<Option<Vec<f64>>> {
    match values {
        Some(v) if v.is_empty() => Err(usage(format!("sweep list `{name}` is empty"))),
        other => Ok(other.clone()),
    }
}

pub fn points(spec: &SweepSpec, target: SweepTarget, base_gain: f64, base_frequency: f64) -> Result<Vec<Point>> {
    if spec.gain.is_none() && spec.frequency.is_none() && spec.detector_spacing.is_none() {
        return Err(usage("nothing to sweep: give at least one of gain, frequency, detector_spacing"));
    }
    if target == SweepTarget::Gate && spec.detector_spacing.is_some() {
        return Err(usage("detector_spacing only applies to the film target"));
    }
    let gains = axis(&spec.gain, "gain")?.unwrap_or(vec![base_gain]);
    let frequencies = axis(&spec.frequency, "frequency")?.unwrap_or(vec![base_frequency]);
    let spacings: Vec<Option<f64>> = match axis(&spec.detector_spacing, "detector_spacing")? {
        Some(v) => v.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &gain in &gains {
        for &frequency in &frequencies {
            for &spacing in &spacings {
                out.push(Point { gain, frequency, spacing });
            }
        }
    }
    Ok(out)
}

fn run_gate(cfg: &ExperimentConfig, p: Point) -> Result<Row> {
    let params = cfg.params()?;
    let carrier = stno::logic::CarrierSpec { frequency: p.frequency, ..cfg.carrier()? };
    carrier.validate()?;
    let gate = cfg.gate.unwrap_or(GateKind::Nand);
    let (a, b) = (cfg.a.unwrap_or(Digit::Zero), cfg.b.unwrap_or(Digit::Zero));
    let periods = cfg.periods.unwrap_or(DEFAULT_GATE_PERIODS);
    let traj = run_logic_gate_with(gate, a, b, &params, &carrier, p.gain, periods, cfg.step_settings())?;
    let r = correlate_gate_run(&traj, 0, &carrier, params.reference_radius(p.gain))?;
    let peak = traj.abs_u(0).into_iter().fold(0.0, f64::max);
    Ok(Row {
        point: p,
        outputs: r.digit.map_or("?".into(), |d| d.to_string()),
        min_confidence: Some(r.confidence),
        peak_abs_u: Some(peak),
        error: None,
    })
}

fn run_film(cfg: &ExperimentConfig, p: Point) -> Result<Row> {
    let mut cfg = cfg.clone();
    cfg.gain = Some(p.gain);
    cfg.carrier = Some(stno::logic::CarrierSpec { frequency: p.frequency, ..cfg.carrier()? });
    let mut setup = FilmSetup::from_config(&cfg)?;
    if let Some(s) = p.spacing {
        let cx = 0.5 * setup.grid.lx;
        for c in setup.contacts.iter_mut().filter(|c| c.polarity == Polarity::Detector) {
            c.center.0 = cx + s * (c.center.0 - cx).signum();
        }
    }
    let run = setup.simulate()?;
    let results = decode_contacts(&run.probes, &setup.carrier)?;
    let detectors: Vec<_> = setup
        .contacts
        .iter()
        .filter(|c| c.polarity == Polarity::Detector)
        .filter_map(|c| results.iter().find(|(id, _)| *id == c.id).map(|(id, r)| (*id, *r, c.id)))
        .collect();
    let outputs: Vec<String> = detectors
        .iter()
        .map(|(id, r, _)| format!("{id}:{}", r.digit.map_or("?".into(), |d| d.to_string())))
        .collect();
    let min_confidence = detectors.iter().map(|(_, r, _)| r.confidence).fold(f64::INFINITY, f64::min);
    let peak = run
        .probes
        .iter()
        .filter(|pr| detectors.iter().any(|(id, _, _)| *id == pr.id))
        .flat_map(|pr| pr.abs())
        .fold(0.0, f64::max);
    Ok(Row {
        point: p,
        outputs: outputs.join(" "),
        min_confidence: min_confidence.is_finite().then_some(min_confidence),
        peak_abs_u: Some(peak),
        error: None,
    })
}

fn error_row(p: Point, e: anyhow::Error) -> Row {
    Row {
        point: p,
        outputs: "error".into(),
        min_confidence: None,
        peak_abs_u: None,
        error: Some(format!("{e:#}").replace([',', '\n'], ";")),
    }
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn write_rows<W: Write>(mut w: W, rows: &[Row]) -> std::io::Result<()> {
    writeln!(w, "gain,frequency,detector_spacing,outputs,min_confidence,peak_abs_u,error")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.point.gain,
            r.point.frequency,
            opt(r.point.spacing),
            r.outputs,
            opt(r.min_confidence),
            opt(r.peak_abs_u),
            r.error.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn run(args: SweepArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    cfg.expect_kind(&[ExperimentKind::Sweep])?;
    set(&mut cfg.gate, args.gate);
    set(&mut cfg.a, args.a);
    set(&mut cfg.b, args.b);
    let mut spec = cfg.sweep.clone().unwrap_or_default();
    set(&mut spec.target, args.target);
    set(&mut spec.gain, args.gains);
    set(&mut spec.frequency, args.frequencies);
    set(&mut spec.detector_spacing, args.spacings);
    let target = spec.target.unwrap_or_default();
    if target == SweepTarget::Film && cfg.periods.is_none() {
        cfg.periods = Some(DEFAULT_FILM_PERIODS);
    }
    let base_gain = cfg.gain.unwrap_or(match target {
        SweepTarget::Gate => DEFAULT_GAIN,
        SweepTarget::Film => stno::film::DEFAULT_FILM_GAIN,
    });
    let base_frequency = cfg.carrier()?.frequency;
    let points = points(&spec, target, base_gain, base_frequency)?;
    // surface config errors once instead of in every row
    cfg.params()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let mut rows: Vec<Row> = pool.install(|| {
        points
            .par_iter()
            .map(|&p| {
                let result = match target {
                    SweepTarget::Gate => run_gate(&cfg, p),
                    SweepTarget::Film => run_film(&cfg, p),
                };
                result.unwrap_or_else(|e| error_row(p, e))
            })
            .collect()
    });
    rows.sort_by(|x, y| {
        let key = |r: &Row| (r.point.gain, r.point.frequency, r.point.spacing.unwrap_or(f64::NAN));
        let (a, b) = (key(x), key(y));
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
    });

    let dir = cfg.out_dir();
    prepare(&dir)?;
    let path = write_file(&dir, "sweep.csv", |w| write_rows(w, &rows))?;
    for r in &rows {
        let spacing = r.point.spacing.map_or(String::new(), |s| format!(" spacing={s}"));
        println!("gain={} frequency={}{spacing} -> {}", r.point.gain, r.point.frequency, r.outputs);
    }
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_covers_every_tuple() {
        let spec = SweepSpec {
            target: None,
            gain: Some(vec![0.1, 0.2]),
            frequency: Some(vec![0.001, 0.002, 0.003]),
            detector_spacing: None,
        };
        let pts = points(&spec, SweepTarget::Gate, 0.2, 0.0025).unwrap();
        assert_eq!(pts.len(), 6);
        assert!(pts.iter().all(|p| p.spacing.is_none()));
        let spec = SweepSpec { detector_spacing: Some(vec![10.0, 12.0]), ..spec };
        assert_eq!(points(&spec, SweepTarget::Film, 0.4, 0.0025).unwrap().len(), 12);
    }

    #[test]
    fn empty_or_misplaced_axes_are_usage_errors() {
        let empty = SweepSpec { gain: Some(vec![]), ..Default::default() };
        assert!(points(&empty, SweepTarget::Gate, 0.2, 0.0025).is_err());
        assert!(points(&SweepSpec::default(), SweepTarget::Gate, 0.2, 0.0025).is_err());
        let spacing = SweepSpec { detector_spacing: Some(vec![10.0]), ..Default::default() };
        assert!(points(&spacing, SweepTarget::Gate, 0.2, 0.0025).is_err());
    }
}
