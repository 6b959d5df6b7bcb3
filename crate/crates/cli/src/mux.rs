use std::io::Write;

use anyhow::Result;
use clap::Args;
use num_complex::Complex64;
use stno::forcing::{multiplex_forcing, DEFAULT_GAIN};
use stno::logic::{CarrierSpec, Digit, GateKind};
use stno::network::{Network, NetworkState, DEFAULT_U0};
use stno::readout::{correlate_multiplex, write_correlations_csv};

use crate::config::{set, ExperimentKind};
use crate::fail::usage;
use crate::output::{prepare, write_file};
use crate::Common;

pub const DEFAULT_MUX_PERIODS: u32 = 12;

pub const CSV_HELP: &str = "\
Outputs:
  mux_trajectory.csv         t,re_u_0,im_u_0,abs_u_0,v_0
  mux_channel_<k>_<GATE>.csv t,abs_u,p,abs_u_p   (p is channel k's carrier)
  mux_correlations.csv       label,integral,digit,confidence
Channel k runs at frequency f·ratio^k. Prints `GATE:digit` per channel
(`?` when indeterminate, which exits with status 1).";

#[derive(Args, Debug)]
pub struct MuxArgs {
    /// First input digit.
    pub a: Option<Digit>,
    /// Second input digit.
    pub b: Option<Digit>,
    /// Gates, one per carrier [default: NAND,OR].
    #[arg(long, value_delimiter = ',')]
    pub gates: Option<Vec<GateKind>>,
    /// Frequency ratio between successive carriers [default: sqrt 2].
    #[arg(long)]
    pub ratio: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(args: MuxArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    cfg.expect_kind(&[ExperimentKind::Mux])?;
    set(&mut cfg.a, args.a);
    set(&mut cfg.b, args.b);
    set(&mut cfg.gates, args.gates);
    set(&mut cfg.ratio, args.ratio);
    let (Some(a), Some(b)) = (cfg.a, cfg.b) else {
        return Err(usage("inputs a and b are required (as arguments or in the config)"));
    };
    let gates = cfg.gates.clone().unwrap_or_else(|| vec![GateKind::Nand, GateKind::Or]);
    if gates.is_empty() {
        return Err(usage("at least one gate is required"));
    }
    let ratio = cfg.ratio.unwrap_or(std::f64::consts::SQRT_2);
    let params = cfg.params()?;
    let base = cfg.carrier()?;
    let gain = cfg.gain.unwrap_or(DEFAULT_GAIN);
    let periods = cfg.periods.unwrap_or(DEFAULT_MUX_PERIODS);

    let carriers: Vec<CarrierSpec> = (0..gates.len())
        .map(|k| CarrierSpec { frequency: base.frequency * ratio.powi(k as i32), ..base })
        .collect();
    let channels: Vec<_> = gates.iter().zip(&carriers).map(|(&g, &c)| (c, g, a, b)).collect();
    let forcing = multiplex_forcing(&channels, gain)?;
    let net = Network::new(params, vec![forcing])?;
    let state = NetworkState::uniform(1, Complex64::new(DEFAULT_U0, 0.0), cfg.tau(&base));
    let traj = net.integrate(&state, f64::from(periods) * base.period(), cfg.step_settings())?;
    let results = correlate_multiplex(&traj, 0, &carriers, net.reference_radius(0))?;

    let dir = cfg.out_dir();
    prepare(&dir)?;
    write_file(&dir, "mux_trajectory.csv", |w| traj.write_csv(w, None))?;
    let abs_u = traj.abs_u(0);
    for (k, (g, c)) in gates.iter().zip(&carriers).enumerate() {
        write_file(&dir, &format!("mux_channel_{k}_{g}.csv"), |w| {
            writeln!(w, "t,abs_u,p,abs_u_p")?;
            for (&t, &r) in traj.times.iter().zip(&abs_u) {
                let p = c.value(t);
                writeln!(w, "{t},{r},{p},{}", r * p)?;
            }
            Ok(())
        })?;
    }
    let rows: Vec<(String, _)> = gates.iter().zip(&results).map(|(g, r)| (g.to_string(), *r)).collect();
    write_file(&dir, "mux_correlations.csv", |w| write_correlations_csv(w, &rows))?;

    let line: Vec<String> = rows
        .iter()
        .map(|(g, r)| format!("{g}:{}", r.digit.map_or("?".to_string(), |d| d.to_string())))
        .collect();
    println!("{}", line.join(" "));
    for r in &results {
        r.require_digit()?;
    }
    Ok(())
}
