use std::collections::HashMap;
use std::io::Write;

use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stno::circuit::{
    compile, compile_xor_paper, evaluate_coupled_with, evaluate_staged_with, parse_expr, to_nand, BoolExpr,
    CircuitConfig, Operand, COUPLED_PERIODS_PER_STAGE,
};
use stno::forcing::DEFAULT_GAIN;
use stno::logic::Digit;

use crate::config::{set, ExperimentKind, Mode};
use crate::fail::usage;
use crate::output::{prepare, write_file};
use crate::Common;

pub const CSV_HELP: &str = "\
Bindings are given as name=digit, e.g. `stno circuit \"a ^ b\" a=1 b=0`.
Outputs:
  circuit.net   netlist, one line per gate (`g<i> = <ref> NAND <ref>`),
                preceded by `inputs ...` and followed by `output <ref>`
  circuit.json  compiled node list, schedule and parameters
Prints the netlist path, then the output digit on the last line.
With --stencil the three-node XOR stencil (inputs a, b) is used instead of
an expression.";

#[derive(Args, Debug)]
pub struct CircuitArgs {
    /// Expression over variables with ~ & !& ^ | and parentheses.
    pub expr: Option<String>,
    /// Input bindings as name=digit.
    pub bindings: Vec<String>,
    /// Evaluate node by node (staged) or as one coupled network.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Use the three-node XOR stencil instead of NAND synthesis.
    #[arg(long)]
    pub stencil: bool,
    /// Replace the expression by a random one of this depth over the bound
    /// variables.
    #[arg(long)]
    pub random_depth: Option<usize>,
    /// Seed for --random-depth.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coupled-mode run length [default: 4 carrier periods per stage].
    #[arg(long)]
    pub t_end: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn parse_binding(text: &str) -> Result<(String, Digit)> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| usage(format!("binding `{text}` is not of the form name=digit")))?;
    let digit = value
        .trim()
        .parse::<Digit>()
        .map_err(|_| usage(format!("binding `{text}`: `{value}` is not 0 or 1")))?;
    Ok((name.trim().to_string(), digit))
}

fn random_expr(rng: &mut ChaCha8Rng, vars: &[String], depth: usize) -> BoolExpr {
    if depth == 0 || rng.gen_bool(0.2) {
        return BoolExpr::var(&vars[rng.gen_range(0..vars.len())]);
    }
    match rng.gen_range(0..5u8) {
        0 => BoolExpr::not(random_expr(rng, vars, depth - 1)),
        op => {
            let a = random_expr(rng, vars, depth - 1);
            let b = random_expr(rng, vars, depth - 1);
            match op {
                1 => BoolExpr::and(a, b),
                2 => BoolExpr::or(a, b),
                3 => BoolExpr::nand(a, b),
                _ => BoolExpr::xor(a, b),
            }
        }
    }
}

fn operand_name(op: &Operand, inputs: &[String]) -> String {
    match *op {
        Operand::Input(i) => inputs[i].clone(),
        Operand::NegatedInput(i) => format!("~{}", inputs[i]),
        Operand::Node(j) => format!("n{j}"),
        Operand::NegatedNode(j) => format!("~n{j}"),
        Operand::Const(d) => d.to_string(),
    }
}

/// Netlist of a compiled circuit with arbitrary gate kinds.
fn describe(config: &CircuitConfig) -> String {
    let mut text = format!("inputs {}\n", config.inputs.join(" "));
    for (j, n) in config.nodes.iter().enumerate() {
        let (l, r) = (operand_name(&n.left, &config.inputs), operand_name(&n.right, &config.inputs));
        text += &format!("n{j} = {l} {} {r}\n", n.gate);
    }
    text += &format!("output {}\n", operand_name(&config.output, &config.inputs));
    text
}

pub fn run(args: CircuitArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    cfg.expect_kind(&[ExperimentKind::Circuit, ExperimentKind::Xor])?;
    // expressions never contain `=`, so a leading binding is not one
    let mut bindings = args.bindings;
    let expr = match args.expr {
        Some(e) if e.contains('=') => {
            bindings.insert(0, e);
            None
        }
        other => other,
    };
    set(&mut cfg.expr, expr);
    set(&mut cfg.mode, args.mode);
    set(&mut cfg.random_depth, args.random_depth);
    set(&mut cfg.seed, args.seed);
    set(&mut cfg.t_end, args.t_end);
    if args.stencil {
        cfg.stencil = Some(true);
    }
    let stencil = cfg.stencil.unwrap_or(false) || cfg.experiment == Some(ExperimentKind::Xor);
    let mut inputs: HashMap<String, Digit> = cfg.inputs.clone().unwrap_or_default().into_iter().collect();
    for b in &bindings {
        let (name, digit) = parse_binding(b)?;
        inputs.insert(name, digit);
    }

    let params = cfg.params()?;
    let carrier = cfg.carrier()?;
    let gain = cfg.gain.unwrap_or(DEFAULT_GAIN);
    let tau = cfg.tau(&carrier);
    let (config, netlist) = if stencil {
        let c = compile_xor_paper(params, carrier, gain, tau)?;
        let text = describe(&c);
        (c, text)
    } else {
        let expr = match (cfg.random_depth, &cfg.expr) {
            (Some(depth), _) => {
                let mut vars: Vec<String> = inputs.keys().cloned().collect();
                vars.sort();
                if vars.is_empty() {
                    return Err(usage("--random-depth needs at least one binding"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
                let e = random_expr(&mut rng, &vars, depth);
                println!("expression: {e}");
                e
            }
            (None, Some(text)) => parse_expr(text)?,
            (None, None) => return Err(usage("an expression is required (or --stencil / --random-depth)")),
        };
        let dag = to_nand(&expr);
        (compile(&dag, params, carrier, gain, tau)?, dag.to_netlist())
    };
    // bind before running so missing variables fail fast
    config.bind(&inputs)?;

    let dir = cfg.out_dir();
    prepare(&dir)?;
    let net_path = write_file(&dir, "circuit.net", |w| w.write_all(netlist.as_bytes()))?;
    write_file(&dir, "circuit.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &config)?;
        writeln!(w)
    })?;
    println!("netlist: {}", net_path.display());

    let settings = cfg.step_settings();
    let digit = match cfg.mode.unwrap_or_default() {
        Mode::Staged => evaluate_staged_with(&config, &inputs, settings)?,
        Mode::Coupled => {
            let t_end = cfg
                .t_end
                .unwrap_or(config.stage_count() as f64 * COUPLED_PERIODS_PER_STAGE * carrier.period());
            evaluate_coupled_with(&config, &inputs, t_end, settings)?
        }
    };
    println!("{digit}");
    Ok(())
}
