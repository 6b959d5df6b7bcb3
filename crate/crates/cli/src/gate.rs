use anyhow::Result;
use clap::Args;
use stno::forcing::DEFAULT_GAIN;
use stno::logic::{Digit, GateKind};
use stno::network::run_logic_gate_with;
use stno::readout::{correlate_gate_run, write_correlations_csv};

use crate::config::{set, ExperimentKind};
use crate::fail::usage;
use crate::output::{prepare, write_file};
use crate::Common;

pub const DEFAULT_GATE_PERIODS: u32 = 3;

pub const CSV_HELP: &str = "\
Outputs:
  gate_trajectory.csv   t,re_u_0,im_u_0,abs_u_0,v_0,abs_u_0_p
                        (abs_u_0_p = |u|·p(t), the burst-times-carrier trace)
  gate_correlation.csv  label,integral,digit,confidence
Prints the decoded digit; an indeterminate readout exits with status 1.";

#[derive(Args, Debug)]
pub struct GateArgs {
    /// OR, AND or NAND.
    pub gate: Option<GateKind>,
    /// First input digit.
    pub a: Option<Digit>,
    /// Second input digit.
    pub b: Option<Digit>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(args: GateArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    cfg.expect_kind(&[ExperimentKind::Gate])?;
    set(&mut cfg.gate, args.gate);
    set(&mut cfg.a, args.a);
    set(&mut cfg.b, args.b);
    let (Some(gate), Some(a), Some(b)) = (cfg.gate, cfg.a, cfg.b) else {
        return Err(usage("gate, a and b are required (as arguments or in the config)"));
    };
    let params = cfg.params()?;
    let carrier = cfg.carrier()?;
    let gain = cfg.gain.unwrap_or(DEFAULT_GAIN);
    let periods = cfg.periods.unwrap_or(DEFAULT_GATE_PERIODS);
    let traj = run_logic_gate_with(gate, a, b, &params, &carrier, gain, periods, cfg.step_settings())?;
    let r_ref = params.reference_radius(gain);
    let corr = correlate_gate_run(&traj, 0, &carrier, r_ref)?;

    let dir = cfg.out_dir();
    prepare(&dir)?;
    write_file(&dir, "gate_trajectory.csv", |w| traj.write_csv(w, Some(&carrier)))?;
    write_file(&dir, "gate_correlation.csv", |w| {
        write_correlations_csv(w, &[(format!("{gate}({a},{b})"), corr)])
    })?;
    let digit = corr.require_digit()?;
    println!("{digit}");
    Ok(())
}
