#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stno::circuit::BoolExpr;
use stno::film::{
    fig3_layout, simulate_film, Contact, FilmGrid, FilmParams, FilmRun, FilmSettings, DEFAULT_FILM_GAIN,
};
use stno::forcing::{dynamic_gate_forcing, ForcingTerm, InputRef};
use stno::logic::{Amplitude, CarrierSpec, Digit, GateKind};
use stno::network::{NetworkState, StepSettings, StnoParams, Trajectory};

pub const FILM_PERIODS: f64 = 6.0;

/// Drive `c` held constant: a carrier slow enough that `cos` stays at 1
/// within 1e-12 over the spans used here.
pub fn constant_drive(c: f64) -> ForcingTerm {
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

pub fn run_constant(c: f64, u0: f64, t_end: f64, dt: f64) -> Trajectory {
    let state = NetworkState::uniform(1, Complex64::new(u0, 0.0), 1.0);
    stno::network::integrate(&state, &StnoParams::default(), &[constant_drive(c)], t_end, StepSettings { dt, stride: 1 })
        .unwrap()
}

/// `|u|²` of `ds/dt = 2(g − b s)s` with `g = λ + C`.
pub fn logistic(g: f64, b: f64, s0: f64, t: f64) -> f64 {
    let e = (2.0 * g * t).exp();
    g * s0 * e / (g + b * s0 * (e - 1.0))
}

pub fn bindings(names: &[&str], bits: usize) -> HashMap<String, Digit> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), Digit::from_bool(bits >> i & 1 == 1)))
        .collect()
}

pub fn assignments(vars: &[String]) -> Vec<HashMap<String, Digit>> {
    (0..1usize << vars.len())
        .map(|bits| {
            vars.iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), Digit::from_bool(bits >> i & 1 == 1)))
                .collect()
        })
        .collect()
}

pub fn random_expr(rng: &mut ChaCha8Rng, vars: &[&str], depth: usize) -> BoolExpr {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.05) {
            BoolExpr::Const(rng.gen_bool(0.5))
        } else {
            BoolExpr::var(vars[rng.gen_range(0..vars.len())])
        };
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


pub fn film_carrier() -> CarrierSpec {
    CarrierSpec::default()
}

pub fn run_layout(contacts: &[Contact]) -> FilmRun {
    let carrier = film_carrier();
    simulate_film(
        &FilmGrid::default_film(),
        &FilmParams::default(),
        contacts,
        &carrier,
        DEFAULT_FILM_GAIN,
        FILM_PERIODS * carrier.period(),
        FilmSettings::default(),
    )
    .unwrap()
}

pub fn default_layout() -> Vec<Contact> {
    fig3_layout(40.0, 40.0).unwrap()
}

/// The default eight-site experiment, run once per test binary.
pub fn default_run() -> &'static FilmRun {
    static RUN: OnceLock<FilmRun> = OnceLock::new();
    RUN.get_or_init(|| run_layout(&default_layout()))
}

/// Default layout with the detectors moved further from the sources.
pub fn far_detector_layout() -> Vec<Contact> {
    let mut contacts = default_layout();
    let offsets = [(13.0, -4.0), (13.0, 4.0), (-13.0, 4.0), (-13.0, -4.0)];
    for (c, (ox, oy)) in contacts[4..].iter_mut().zip(offsets) {
        c.center = (20.0 + ox, 20.0 + oy);
    }
    contacts
}
