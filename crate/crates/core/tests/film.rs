mod common;

use std::f64::consts::FRAC_PI_4;

use common::{default_layout, default_run, film_carrier, run_layout};
use num_complex::Complex64;
use stno::film::{
    decode_contacts, decode_detectors, phase_locks, simulate_film, write_probes_csv, write_snapshot_csv,
    write_snapshot_pgm, Contact, FilmGrid, FilmParams, FilmSettings, Polarity, DEFAULT_FILM_GAIN,
};
use stno::forcing::{gate_forcing, DEFAULT_GAIN};
use stno::logic::{Digit, GateKind};
use stno::network::{run_logic_gate, StnoParams};

fn digits(pairs: &[(usize, Digit)]) -> Vec<(usize, u8)> {
    pairs.iter().map(|&(id, d)| (id, d.as_u8())).collect()
}

#[test]
fn sources_and_detectors_decode() {
    let run = default_run();
    let carrier = film_carrier();
    let all = decode_contacts(&run.probes, &carrier).unwrap();
    let sources: Vec<(usize, Option<u8>)> = all[..4].iter().map(|(id, r)| (*id, r.digit.map(Digit::as_u8))).collect();
    assert_eq!(sources, vec![(1, Some(1)), (2, Some(1)), (3, Some(0)), (4, Some(0))]);
    let detectors = decode_detectors(&run.probes, &default_layout(), &carrier).unwrap();
    assert_eq!(digits(&detectors), vec![(5, 1), (6, 0), (7, 0), (8, 1)]);
}

#[test]
fn detectors_lock_to_their_nearest_sources_with_a_delay() {
    let locks = phase_locks(&default_run().probes, &default_layout(), &film_carrier()).unwrap();
    let pairs: Vec<(usize, usize)> = locks.iter().map(|l| (l.detector, l.source)).collect();
    assert_eq!(pairs, vec![(5, 2), (6, 4), (7, 3), (8, 1)]);
    for l in &locks {
        assert!(l.lock.phase.abs() < FRAC_PI_4, "{l:?}");
        assert!(l.lock.delay > 0.0, "{l:?}");
    }
}

#[test]
fn flipping_source_polarity_flips_detector_digits() {
    let flipped: Vec<Contact> = default_layout()
        .into_iter()
        .map(|c| Contact { polarity: c.polarity.flipped(), ..c })
        .collect();
    let run = run_layout(&flipped);
    let got = decode_detectors(&run.probes, &flipped, &film_carrier()).unwrap();
    let base = decode_detectors(&default_run().probes, &default_layout(), &film_carrier()).unwrap();
    for ((id, d), (id0, d0)) in got.iter().zip(&base) {
        assert_eq!(id, id0);
        assert_eq!(*d, !*d0);
    }
}

#[test]
fn mirror_pairs_agree() {
    // x -> 40 - x exchanges sources 1,2 and 3,4 and detectors 5,8 and 6,7
    let carrier = film_carrier();
    let contacts = default_layout();
    let early = simulate_film(
        &FilmGrid::default_film(),
        &FilmParams::default(),
        &contacts,
        &carrier,
        DEFAULT_FILM_GAIN,
        carrier.period(),
        FilmSettings::default(),
    )
    .unwrap();
    for (a, b) in [(5, 8), (6, 7), (1, 2), (3, 4)] {
        let (pa, pb) = (early.probe(a).unwrap(), early.probe(b).unwrap());
        let worst = pa.values.iter().zip(&pb.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "sites {a},{b}: {worst:e}");
    }
    // over the whole run the relative source phase drifts, but the readout does not
    let all = decode_contacts(&default_run().probes, &carrier).unwrap();
    let integral = |id: usize| all.iter().find(|(i, _)| *i == id).unwrap().1.integral;
    for (a, b) in [(5, 8), (6, 7), (1, 2), (3, 4)] {
        let (x, y) = (integral(a), integral(b));
        assert!((x - y).abs() / x.abs() < 0.02, "sites {a},{b}: {x} vs {y}");
    }
}

#[test]
fn weakly_dispersive_contacts_follow_the_single_oscillator() {
    let carrier = film_carrier();
    let gain = DEFAULT_GAIN;
    let params = FilmParams {
        d: Complex64::new(1.0, 0.01) * 1e-4,
        ..Default::default()
    };
    let contacts = [
        Contact { id: 1, center: (12.0, 20.0), radius: 6.0, polarity: Polarity::Positive },
        Contact { id: 2, center: (28.0, 20.0), radius: 6.0, polarity: Polarity::Negative },
    ];
    let settings = FilmSettings { probe_stride: 5, ..Default::default() };
    let run = simulate_film(&FilmGrid::default_film(), &params, &contacts, &carrier, gain, carrier.period(), settings)
        .unwrap();
    for (id, gate, digit) in [(1, GateKind::Or, Digit::One), (2, GateKind::And, Digit::Zero)] {
        assert!(gate_forcing(gate, digit, digit, carrier, gain).is_ok());
        let ode = run_logic_gate(gate, digit, digit, &StnoParams::default(), &carrier, gain, 3).unwrap();
        let ode_abs = ode.abs_u(0);
        let probe = run.probe(id).unwrap();
        let (mut worst, mut peak) = (0.0f64, 0.0f64);
        for (t, z) in probe.times.iter().zip(&probe.values) {
            let k = ode.times.partition_point(|&s| s < t - 1e-9);
            assert!((ode.times[k] - t).abs() < 1e-9);
            worst = worst.max((z.norm() - ode_abs[k]).abs());
            peak = peak.max(ode_abs[k]);
        }
        assert!(worst / peak < 0.05, "contact {id}: {:.3}", worst / peak);
    }
}

#[test]
fn without_a_sponge_a_small_domain_reflects() {
    // a probe near the edge of a small box against the same source in a box twice as wide
    let carrier = film_carrier();
    let probe = |n: usize, sponge: bool| {
        let l = n as f64 * 0.375;
        let c = l / 2.0;
        let mut grid = FilmGrid::new(n, n, l, l, sponge).unwrap();
        grid.fill(Complex64::new(0.01, 0.0));
        let contacts = [
            Contact { id: 1, center: (c, c), radius: 3.0, polarity: Polarity::Positive },
            Contact { id: 2, center: (c + 7.0, c), radius: 0.5, polarity: Polarity::Detector },
        ];
        simulate_film(&grid, &FilmParams::default(), &contacts, &carrier, DEFAULT_FILM_GAIN, 400.0, FilmSettings::default())
            .unwrap()
            .probe(2)
            .unwrap()
            .abs()
    };
    let reference = probe(128, true);
    let error = |sponge: bool| {
        let got = probe(64, sponge);
        let peak = reference.iter().cloned().fold(0.0, f64::max);
        got.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak
    };
    let (open, closed) = (error(true), error(false));
    assert!(closed > 0.1 && closed > 2.0 * open, "closed {closed:e} open {open:e}");
}

#[test]
fn writers_produce_headers_and_rows() {
    let run = default_run();
    let mut csv = Vec::new();
    write_probes_csv(&mut csv, &run.probes[4..6]).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,re_u_5,im_u_5,abs_u_5,re_u_6,im_u_6,abs_u_6");
    assert_eq!(lines.count(), run.probes[4].times.len());

    let mut grid = FilmGrid::new(4, 4, 2.0, 2.0, false).unwrap();
    grid.fill(Complex64::new(1.0, 0.0));
    grid.u[5] = Complex64::new(2.0, 0.0);
    let snap = stno::film::Snapshot { t: 0.0, u: grid.u.clone() };
    let mut out = Vec::new();
    write_snapshot_csv(&mut out, &grid, &snap).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("i,j,re_u,im_u\n0,0,1,0\n"));
    assert_eq!(text.lines().count(), 17);
    let mut out = Vec::new();
    write_snapshot_pgm(&mut out, &grid, &snap).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("P2\n4 4\n255\n"));
    assert!(text.contains("255"));
}
