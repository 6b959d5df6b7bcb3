use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use num_complex::Complex64;
use stno::film::{
    decode_contacts, fig3_layout, phase_locks, simulate_film, write_probes_csv, write_snapshot_csv,
    write_snapshot_pgm, Contact, ContactLock, FilmGrid, FilmParams, FilmRun, FilmSettings, Polarity,
    DEFAULT_FILM_DT, DEFAULT_FILM_GAIN, DEFAULT_FILM_LENGTH, DEFAULT_FILM_SIZE, DEFAULT_FILM_U0,
    DEFAULT_PROBE_STRIDE,
};
use stno::logic::CarrierSpec;
use stno::readout::CorrelationResult;
use stno::Error;

use crate::config::{set, ExperimentConfig, ExperimentKind};
use crate::fail::usage;
use crate::output::{prepare, write_file};
use crate::Common;

pub const DEFAULT_FILM_PERIODS: u32 = 6;

/// Probe deviation from the padded reference above which reflections are
/// reported.
pub const REFLECTION_TOLERANCE: f64 = 0.1;

pub const CSV_HELP: &str = "\
The layout file is a JSON array of contacts:
  [{\"id\": 1, \"center\": [16.0, 8.0], \"radius\": 3.0, \"polarity\": \"positive\"}, ...]
with polarity positive, negative or detector. Without --layout the default
eight-site layout is used (sources 1-4, detectors 5-8).
Outputs:
  site_<id>.csv           t,re_u_<id>,im_u_<id>,abs_u_<id>  (contact-mean field)
  summary.csv             site,role,digit,integral,confidence,source,distance,phase_offset,delay
  summary.txt             the same table plus diagnostics flags
  snapshots/snap_<k>.csv  i,j,re_u,im_u   (with --snapshot-stride)
  snapshots/snap_<k>.pgm  |u| as a greyscale image
Without the sponge (or with --check-reflections) the first carrier period is
compared against the same contacts centred in a sponge-padded domain twice as
wide; probe deviations above 10% are flagged as reflection artifacts.
An undecodable detector or a numerical instability exits with status 1.";

#[derive(Args, Debug)]
pub struct FilmArgs {
    /// JSON contact layout [default: eight-site layout].
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Grid points per side (power of two).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Domain side length.
    #[arg(long)]
    pub length: Option<f64>,
    /// Disable the absorbing boundary layer.
    #[arg(long)]
    pub no_sponge: bool,
    /// Compare against a sponge-padded domain twice as wide.
    #[arg(long)]
    pub check_reflections: bool,
    /// Write a field snapshot every this many steps.
    #[arg(long)]
    pub snapshot_stride: Option<usize>,
    /// Record probes every this many steps.
    #[arg(long)]
    pub probe_stride: Option<usize>,
    /// Constant sub-threshold drive inside detector contacts.
    #[arg(long)]
    pub detector_bias: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

/// Everything needed to run one film experiment.
#[derive(Debug, Clone)]
pub struct FilmSetup {
    pub grid: FilmGrid,
    pub params: FilmParams,
    pub contacts: Vec<Contact>,
    pub carrier: CarrierSpec,
    pub gain: f64,
    pub t_end: f64,
    pub settings: FilmSettings,
    pub u0: f64,
}

fn read_layout(path: &Path) -> Result<Vec<Contact>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read layout {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid layout {}: {e}", path.display())))
}

impl FilmSetup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let n = cfg.grid.unwrap_or(DEFAULT_FILM_SIZE);
        let length = cfg.length.unwrap_or(DEFAULT_FILM_LENGTH);
        let sponge = cfg.sponge.unwrap_or(true);
        let mut grid = FilmGrid::new(n, n, length, length, sponge)?;
        let u0 = cfg.u0.unwrap_or(DEFAULT_FILM_U0);
        grid.fill(Complex64::new(u0, 0.0));
        let contacts = match (&cfg.layout, &cfg.contacts) {
            (Some(path), _) => read_layout(path)?,
            (None, Some(list)) => list.clone(),
            (None, None) => fig3_layout(length, length)?,
        };
        let params = cfg.film_params.unwrap_or_default();
        params.validate()?;
        let carrier = cfg.carrier()?;
        let settings = FilmSettings {
            dt: cfg.dt.unwrap_or(DEFAULT_FILM_DT),
            probe_stride: cfg.probe_stride.unwrap_or(DEFAULT_PROBE_STRIDE),
            snapshot_stride: cfg.snapshot_stride,
            detector_bias: cfg.detector_bias.unwrap_or(0.0),
        };
        Ok(FilmSetup {
            grid,
            params,
            contacts,
            carrier,
            gain: cfg.gain.unwrap_or(DEFAULT_FILM_GAIN),
            t_end: f64::from(cfg.periods.unwrap_or(DEFAULT_FILM_PERIODS)) * carrier.period(),
            settings,
            u0,
        })
    }

    pub fn simulate(&self) -> stno::Result<FilmRun> {
        simulate_film(&self.grid, &self.params, &self.contacts, &self.carrier, self.gain, self.t_end, self.settings)
    }

    /// Same contacts centred in a sponge-padded domain twice as wide, on a
    /// grid with the same spacing.
    fn padded(&self) -> stno::Result<FilmSetup> {
        let g = &self.grid;
        let mut grid = FilmGrid::new(2 * g.nx, 2 * g.ny, 2.0 * g.lx, 2.0 * g.ly, true)?;
        grid.fill(Complex64::new(self.u0, 0.0));
        let (sx, sy) = (0.5 * g.lx, 0.5 * g.ly);
        let contacts = self
            .contacts
            .iter()
            .map(|c| Contact { center: (c.center.0 + sx, c.center.1 + sy), ..*c })
            .collect();
        Ok(FilmSetup {
            grid,
            contacts,
            settings: FilmSettings { snapshot_stride: None, ..self.settings },
            ..self.clone()
        })
    }
}

/// One summary row.
#[derive(Debug, Clone)]
pub struct SiteSummary {
    pub contact: Contact,
    pub correlation: Option<CorrelationResult>,
    pub lock: Option<ContactLock>,
}

fn role(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "source+",
        Polarity::Negative => "source-",
        Polarity::Detector => "detector",
    }
}

/// Correlation for every site and, per detector, the lock to its nearest
/// source. A detector whose bursts cannot be paired gets no lock.
pub fn summarize(run: &FilmRun, contacts: &[Contact], carrier: &CarrierSpec) -> Vec<SiteSummary> {
    let correlations = decode_contacts(&run.probes, carrier).ok();
    let forced: Vec<Contact> = contacts.iter().filter(|c| c.polarity.is_forced()).copied().collect();
    contacts
        .iter()
        .map(|c| {
            let correlation = correlations
                .as_ref()
                .and_then(|all| all.iter().find(|(id, _)| *id == c.id).map(|(_, r)| *r));
            let lock = if c.polarity == Polarity::Detector {
                let mut pair = forced.clone();
                pair.push(*c);
                phase_locks(&run.probes, &pair, carrier).ok().and_then(|l| l.first().copied())
            } else {
                None
            };
            SiteSummary { contact: *c, correlation, lock }
        })
        .collect()
}

fn digit_text(s: &SiteSummary) -> String {
    s.correlation.and_then(|r| r.digit).map_or("?".to_string(), |d| d.to_string())
}

fn write_summary_csv<W: Write>(mut w: W, rows: &[SiteSummary]) -> std::io::Result<()> {
    writeln!(w, "site,role,digit,integral,confidence,source,distance,phase_offset,delay")?;
    for s in rows {
        let (integral, confidence) = s
            .correlation
            .map_or((String::new(), String::new()), |r| (r.integral.to_string(), r.confidence.to_string()));
        let (source, distance, phase, delay) = s.lock.map_or(Default::default(), |l| {
            (l.source.to_string(), l.distance.to_string(), l.lock.phase.to_string(), l.lock.delay.to_string())
        });
        writeln!(
            w,
            "{},{},{},{integral},{confidence},{source},{distance},{phase},{delay}",
            s.contact.id,
            role(s.contact.polarity),
            digit_text(s)
        )?;
    }
    Ok(())
}

fn summary_table(rows: &[SiteSummary], flags: &[String]) -> String {
    let mut text = format!(
        "{:>4}  {:<8}  {:>5}  {:>11}  {:>6}  {:>8}  {:>8}\n",
        "site", "role", "digit", "integral", "source", "phase", "delay"
    );
    for s in rows {
        let integral = s.correlation.map_or("-".to_string(), |r| format!("{:+.4e}", r.integral));
        let (source, phase, delay) = s.lock.map_or(("-".into(), "-".into(), "-".into()), |l| {
            (l.source.to_string(), format!("{:+.3}", l.lock.phase), format!("{:.2}", l.lock.delay))
        });
        text += &format!(
            "{:>4}  {:<8}  {:>5}  {:>11}  {:>6}  {:>8}  {:>8}\n",
            s.contact.id,
            role(s.contact.polarity),
            digit_text(s),
            integral,
            source,
            phase,
            delay
        );
    }
    for f in flags {
        text += &format!("flag: {f}\n");
    }
    text
}

/// Largest deviation of any probe magnitude from the reference over the
/// first `horizon` time units, relative to that probe's reference peak.
/// Later samples are not compared: the film amplifies tiny differences
/// between the two runs within a few carrier periods.
pub fn probe_deviation(run: &FilmRun, reference: &FilmRun, horizon: f64) -> f64 {
    run.probes
        .iter()
        .filter_map(|p| reference.probe(p.id).map(|r| (p, r)))
        .map(|(p, r)| {
            let t_max = p.times[0] + horizon + 1e-9;
            let n = p.times.partition_point(|&t| t <= t_max).min(r.times.len());
            let (a, b) = (&p.abs()[..n], &r.abs()[..n]);
            let peak = b.iter().copied().fold(0.0, f64::max);
            let worst = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if peak > 0.0 {
                worst / peak
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn run(args: FilmArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    cfg.expect_kind(&[ExperimentKind::Film])?;
    set(&mut cfg.layout, args.layout);
    set(&mut cfg.grid, args.grid);
    set(&mut cfg.length, args.length);
    set(&mut cfg.snapshot_stride, args.snapshot_stride);
    set(&mut cfg.probe_stride, args.probe_stride);
    set(&mut cfg.detector_bias, args.detector_bias);
    if args.no_sponge {
        cfg.sponge = Some(false);
    }
    if args.check_reflections {
        cfg.check_reflections = Some(true);
    }
    let setup = FilmSetup::from_config(&cfg)?;
    let sponge = setup.grid.has_sponge();
    let dir = cfg.out_dir();
    prepare(&dir)?;

    let mut flags = Vec::new();
    let run = match setup.simulate() {
        Ok(run) => run,
        Err(e @ Error::Instability { .. }) => {
            flags.push(format!("instability{}: {e}", if sponge { "" } else { " without sponge" }));
            let text = summary_table(&[], &flags);
            write_file(&dir, "summary.txt", |w| w.write_all(text.as_bytes()))?;
            print!("{text}");
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };

    if !sponge || cfg.check_reflections.unwrap_or(false) {
        let padded = setup.padded()?;
        let reference = simulate_film(
            &padded.grid,
            &padded.params,
            &padded.contacts,
            &padded.carrier,
            padded.gain,
            padded.carrier.period().min(padded.t_end),
            padded.settings,
        );
        match reference {
            Ok(reference) => {
                let dev = probe_deviation(&run, &reference, setup.carrier.period());
                let verdict = if dev > REFLECTION_TOLERANCE { "reflection artifacts" } else { "ok" };
                flags.push(format!(
                    "reflection check: {verdict} (probe deviation {:.1}% from a sponge-padded domain)",
                    100.0 * dev
                ));
            }
            Err(e) => flags.push(format!("reflection check failed: {e}")),
        }
    }

    for p in &run.probes {
        write_file(&dir, &format!("site_{}.csv", p.id), |w| write_probes_csv(w, std::slice::from_ref(p)))?;
    }
    if !run.snapshots.is_empty() {
        let snaps = dir.join("snapshots");
        prepare(&snaps)?;
        for (k, s) in run.snapshots.iter().enumerate() {
            write_file(&snaps, &format!("snap_{k:04}.csv"), |w| write_snapshot_csv(w, &run.grid, s))?;
            write_file(&snaps, &format!("snap_{k:04}.pgm"), |w| write_snapshot_pgm(w, &run.grid, s))?;
        }
    }
    let rows = summarize(&run, &setup.contacts, &setup.carrier);
    write_file(&dir, "summary.csv", |w| write_summary_csv(w, &rows))?;
    let text = summary_table(&rows, &flags);
    write_file(&dir, "summary.txt", |w| w.write_all(text.as_bytes()))?;
    print!("{text}");

    let undecided: Vec<String> = rows
        .iter()
        .filter(|s| s.contact.polarity == Polarity::Detector && digit_text(s) == "?")
        .map(|s| s.contact.id.to_string())
        .collect();
    if !undecided.is_empty() {
        anyhow::bail!("detectors {} are indeterminate", undecided.join(", "));
    }
    Ok(())
}
