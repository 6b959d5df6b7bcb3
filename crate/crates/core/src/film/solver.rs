//! Strang-split spectral stepping of the film equation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::layout::{validate_layout, Contact};
use super::{FilmGrid, FilmParams};
use crate::error::{Error, Result};
use crate::logic::CarrierSpec;

pub const DEFAULT_FILM_DT: f64 = 0.02;
/// Contacts of radius 3 need roughly twice the single-oscillator gain to
/// overcome the loss of energy to spin waves.
pub const DEFAULT_FILM_GAIN: f64 = 0.4;
pub const DEFAULT_PROBE_STRIDE: usize = 10;
/// Largest allowed growth of `max|u|` in one step.
pub const INSTABILITY_GROWTH: f64 = 10.0;
/// Upper bound on the constant detector bias.
pub const MAX_DETECTOR_BIAS: f64 = 0.09;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmSettings {
    pub dt: f64,
    pub probe_stride: usize,
    /// Record the whole field every this many steps.
    pub snapshot_stride: Option<usize>,
    /// Constant sub-threshold drive added inside detector contacts.
    pub detector_bias: f64,
}

impl Default for FilmSettings {
    fn default() -> Self {
        FilmSettings {
            dt: DEFAULT_FILM_DT,
            probe_stride: DEFAULT_PROBE_STRIDE,
            snapshot_stride: None,
            detector_bias: 0.0,
        }
    }
}

/// Contact-mean samples of `u` for one contact.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub id: usize,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl ProbeSeries {
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct FilmRun {
    pub probes: Vec<ProbeSeries>,
    pub snapshots: Vec<Snapshot>,
    pub grid: FilmGrid,
}

impl FilmRun {
    pub fn probe(&self, id: usize) -> Option<&ProbeSeries> {
        self.probes.iter().find(|p| p.id == id)
    }
}

struct ContactCells {
    sign: f64,
    forced: bool,
    cells: Vec<usize>,
}

/// Stepper bound to one grid geometry, parameter set, layout and step size.
pub struct FilmSolver {
    params: FilmParams,
    carrier: CarrierSpec,
    gain: f64,
    dt: f64,
    nx: usize,
    ny: usize,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
    /// Linear multiplier in transposed order, including the `e^{-iω dt}`
    /// rotation and the inverse-transform normalization.
    linear: Vec<Complex64>,
    /// Unforced linear rate `λ + sponge (+ detector bias)` per cell.
    rate: Vec<f64>,
    /// Precomputed half-step logistic factors `e` and `q` for cells outside
    /// forced contacts: `|u|² ← |u|² e / (1 + q|u|²)`.
    half_e: Vec<f64>,
    half_q: Vec<f64>,
    forced: Vec<bool>,
    contacts: Vec<ContactCells>,
    last_max: Option<f64>,
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|m| {
            let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            base * m
        })
        .collect()
}

/// Logistic factors for `d|u|²/dt = 2(g − b|u|²)|u|²` over a time `h`.
fn logistic(g: f64, b: f64, h: f64) -> (f64, f64) {
    if g.abs() < 1e-12 {
        (1.0, 2.0 * b * h)
    } else {
        let e = (2.0 * g * h).exp();
        (e, b * (e - 1.0) / g)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

impl FilmSolver {
    pub fn new(
        grid: &FilmGrid,
        params: FilmParams,
        contacts: &[Contact],
        carrier: CarrierSpec,
        gain: f64,
        dt: f64,
        detector_bias: f64,
    ) -> Result<Self> {
        params.validate()?;
        carrier.validate()?;
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(Error::invalid("gain", format!("{gain} must be >= 0")));
        }
        if !(0.0..=MAX_DETECTOR_BIAS).contains(&detector_bias) {
            return Err(Error::invalid(
                "detector_bias",
                format!("{detector_bias} outside [0, {MAX_DETECTOR_BIAS}]"),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{dt} must be positive")));
        }
        let limit = grid.max_dt(&params);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt, limit });
        }
        validate_layout(grid, contacts)?;

        let (nx, ny) = (grid.nx, grid.ny);
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(nx);
        let ifft_x = planner.plan_fft_inverse(nx);
        let fft_y = planner.plan_fft_forward(ny);
        let ifft_y = planner.plan_fft_inverse(ny);
        let scratch_len = [&fft_x, &ifft_x, &fft_y, &ifft_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);

        let kx = wavenumbers(nx, grid.lx);
        let ky = wavenumbers(ny, grid.ly);
        let norm = 1.0 / (nx * ny) as f64;
        let rotation = Complex64::new(0.0, -params.omega * dt).exp();
        let mut linear = vec![Complex64::new(0.0, 0.0); nx * ny];
        for (ix, &kx) in kx.iter().enumerate() {
            for (iy, &ky) in ky.iter().enumerate() {
                let k2 = kx * kx + ky * ky;
                linear[ix * ny + iy] = (Complex64::i() * params.d * (k2 * dt)).exp() * rotation * norm;
            }
        }

        let mut rate: Vec<f64> = grid.sponge.iter().map(|s| params.lambda + s).collect();
        let mut forced = vec![false; nx * ny];
        let mut cells = Vec::with_capacity(contacts.len());
        for c in contacts {
            let idx = grid.cells_in(c);
            if c.polarity.is_forced() {
                for &k in &idx {
                    forced[k] = true;
                }
            } else {
                for &k in &idx {
                    rate[k] += detector_bias;
                }
            }
            cells.push(ContactCells {
                sign: c.polarity.sign(),
                forced: c.polarity.is_forced(),
                cells: idx,
            });
        }
        let h = 0.5 * dt;
        let (half_e, half_q): (Vec<f64>, Vec<f64>) = rate.iter().map(|&g| logistic(g, params.b, h)).unzip();

        Ok(FilmSolver {
            params,
            carrier,
            gain,
            dt,
            nx,
            ny,
            fft_x,
            ifft_x,
            fft_y,
            ifft_y,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transposed: vec![Complex64::new(0.0, 0.0); nx * ny],
            linear,
            rate,
            half_e,
            half_q,
            forced,
            contacts: cells,
            last_max: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Radial logistic update over half a step with the drive sampled at
    /// `t_mid`; returns the largest `|u|²` afterwards.
    fn pointwise(&self, u: &mut [Complex64], t_mid: f64) -> f64 {
        let h = 0.5 * self.dt;
        let b = self.params.b;
        for (k, z) in u.iter_mut().enumerate() {
            if self.forced[k] {
                continue;
            }
            let s = z.norm_sqr();
            *z *= (self.half_e[k] / (1.0 + self.half_q[k] * s)).sqrt();
        }
        let drive = self.gain * self.carrier.value(t_mid);
        let floor = self.params.amplitude_floor;
        for c in self.contacts.iter().filter(|c| c.forced) {
            let mut power = 0.0;
            for &k in &c.cells {
                let (e, q) = logistic(self.rate[k] + c.sign * drive, b, h);
                let s = u[k].norm_sqr();
                u[k] *= (e / (1.0 + q * s)).sqrt();
                power += u[k].norm_sqr();
            }
            // the floor acts on the contact as a whole; clamping cells one by
            // one leaves only their phases free, which is chaotic
            let rms = (power / c.cells.len() as f64).sqrt();
            if rms > 0.0 && rms < floor {
                let scale = floor / rms;
                for &k in &c.cells {
                    u[k] *= scale;
                }
            }
        }
        u.iter().map(Complex64::norm_sqr).fold(0.0, f64::max)
    }

    fn linear_step(&mut self, u: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        self.fft_x.process_with_scratch(u, &mut self.scratch);
        transpose(u, &mut self.transposed, ny, nx);
        self.fft_y.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for (z, m) in self.transposed.iter_mut().zip(&self.linear) {
            *z *= m;
        }
        self.ifft_y.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, u, nx, ny);
        self.ifft_x.process_with_scratch(u, &mut self.scratch);
    }

    /// Advance `grid` by one step.
    pub fn step(&mut self, grid: &mut FilmGrid) -> Result<()> {
        if grid.nx != self.nx || grid.ny != self.ny {
            return Err(Error::invalid("grid", "solver was built for a different grid"));
        }
        let before = match self.last_max {
            Some(m) => m,
            None => grid.max_abs(),
        };
        let t = grid.t;
        let h = 0.5 * self.dt;
        self.pointwise(&mut grid.u, t + 0.5 * h);
        self.linear_step(&mut grid.u);
        let after = self.pointwise(&mut grid.u, t + 1.5 * h).sqrt();
        grid.t = t + self.dt;
        if before > 0.0 && !(after <= INSTABILITY_GROWTH * before) {
            return Err(Error::Instability { before, after, t: grid.t });
        }
        self.last_max = Some(after);
        Ok(())
    }
}

/// One step on a copy of `grid`.
pub fn step_film(
    grid: &FilmGrid,
    params: &FilmParams,
    contacts: &[Contact],
    carrier: &CarrierSpec,
    gain: f64,
    dt: f64,
) -> Result<FilmGrid> {
    let mut solver = FilmSolver::new(grid, *params, contacts, *carrier, gain, dt, 0.0)?;
    let mut next = grid.clone();
    solver.step(&mut next)?;
    Ok(next)
}

/// Step from `grid0.t` to `grid0.t + t_end`, sampling the contact means of
/// `u` every `probe_stride` steps and at the end. The step is shortened if
/// needed so that a whole number of steps spans `t_end`.
pub fn simulate_film(
    grid0: &FilmGrid,
    params: &FilmParams,
    contacts: &[Contact],
    carrier: &CarrierSpec,
    gain: f64,
    t_end: f64,
    settings: FilmSettings,
) -> Result<FilmRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", format!("{t_end} must be positive")));
    }
    if !(settings.dt > 0.0 && settings.dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{} must be positive", settings.dt)));
    }
    if settings.probe_stride == 0 || settings.snapshot_stride == Some(0) {
        return Err(Error::invalid("stride", "must be >= 1"));
    }
    let steps = ((t_end / settings.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let mut solver = FilmSolver::new(grid0, *params, contacts, *carrier, gain, dt, settings.detector_bias)?;
    let cells: Vec<Vec<usize>> = contacts.iter().map(|c| grid0.cells_in(c)).collect();

    let mut grid = grid0.clone();
    let t0 = grid0.t;
    let mut probes: Vec<ProbeSeries> = contacts
        .iter()
        .map(|c| ProbeSeries {
            id: c.id,
            times: Vec::new(),
            values: Vec::new(),
        })
        .collect();
    let mut snapshots = Vec::new();
    let record = |grid: &FilmGrid, probes: &mut [ProbeSeries]| {
        for (p, cells) in probes.iter_mut().zip(&cells) {
            p.times.push(grid.t);
            p.values.push(grid.mean_over(cells));
        }
    };
    record(&grid, &mut probes);
    if settings.snapshot_stride.is_some() {
        snapshots.push(Snapshot { t: grid.t, u: grid.u.clone() });
    }
    for step in 1..=steps {
        solver.step(&mut grid)?;
        grid.t = t0 + step as f64 * dt;
        if step % settings.probe_stride == 0 || step == steps {
            record(&grid, &mut probes);
        }
        if let Some(every) = settings.snapshot_stride {
            if step % every == 0 || step == steps {
                snapshots.push(Snapshot { t: grid.t, u: grid.u.clone() });
            }
        }
    }
    Ok(FilmRun { probes, snapshots, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::film::{dispersion_frequency, Polarity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn linear_params(d: Complex64) -> FilmParams {
        FilmParams {
            d,
            lambda: 0.0,
            b: 0.0,
            amplitude_floor: 0.0,
            ..Default::default()
        }
    }

    fn relative_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(Complex64::norm_sqr).sum();
        (num / den).sqrt()
    }

    #[test]
    fn plane_waves_follow_the_dispersion_relation() {
        let params = linear_params(Complex64::new(1.0, 0.01));
        let carrier = CarrierSpec::default();
        let (n, length, dt) = (32, 20.0, 0.1);
        for (mx, my) in [(1i32, 0i32), (2, -3), (-5, 4)] {
            let mut grid = FilmGrid::new(n, n, length, length, false).unwrap();
            let k = (2.0 * PI * f64::from(mx) / length, 2.0 * PI * f64::from(my) / length);
            let wave = |x: f64, y: f64| Complex64::new(0.0, k.0 * x + k.1 * y).exp();
            for iy in 0..n {
                for ix in 0..n {
                    let (x, y) = grid.position(ix, iy);
                    grid.u[iy * n + ix] = wave(x, y);
                }
            }
            let start = grid.u.clone();
            let mut solver = FilmSolver::new(&grid, params, &[], carrier, 0.0, dt, 0.0).unwrap();
            for _ in 0..100 {
                solver.step(&mut grid).unwrap();
            }
            let omega = dispersion_frequency(&params, k);
            let factor = (-Complex64::i() * omega * (100.0 * dt)).exp();
            let expected: Vec<Complex64> = start.iter().map(|z| z * factor).collect();
            let err = relative_l2(&grid.u, &expected);
            assert!(err < 1e-8, "k = {k:?}: relative error {err:e}");
        }
    }

    #[test]
    fn uniform_field_rotates_at_omega() {
        let params = linear_params(Complex64::new(1.0, 0.01));
        let mut grid = FilmGrid::new(16, 16, 10.0, 10.0, false).unwrap();
        grid.fill(Complex64::new(0.3, 0.4));
        let mut solver = FilmSolver::new(&grid, params, &[], CarrierSpec::default(), 0.0, 0.05, 0.0).unwrap();
        for _ in 0..200 {
            solver.step(&mut grid).unwrap();
        }
        let expected = Complex64::new(0.3, 0.4) * Complex64::new(0.0, -0.15 * 10.0).exp();
        for z in &grid.u {
            assert!((z.norm() - 0.5).abs() < 1e-12);
            assert!((z - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn unitary_case_conserves_the_norm() {
        let params = linear_params(Complex64::new(1.0, 0.0));
        let mut grid = FilmGrid::new(32, 32, 20.0, 20.0, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for z in grid.u.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let n0 = grid.l2_norm();
        let mut solver = FilmSolver::new(&grid, params, &[], CarrierSpec::default(), 0.0, 0.1, 0.0).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let before = grid.l2_norm();
            solver.step(&mut grid).unwrap();
            worst = worst.max((grid.l2_norm() - before).abs() / before);
        }
        assert!(worst < 1e-10, "per-step drift {worst:e}");
        assert!((grid.l2_norm() - n0).abs() / n0 < 1e-8);
    }

    #[test]
    fn unforced_damped_film_dissipates() {
        let params = FilmParams::default();
        let mut grid = FilmGrid::new(64, 64, 40.0, 40.0, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for z in grid.u.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        }
        let mut solver = FilmSolver::new(&grid, params, &[], CarrierSpec::default(), 0.0, 0.1, 0.0).unwrap();
        let mut last = grid.l2_norm();
        for _ in 0..500 {
            solver.step(&mut grid).unwrap();
            let now = grid.l2_norm();
            assert!(now <= last * (1.0 + 1e-12));
            last = now;
        }
    }

    #[test]
    fn uniform_pointwise_update_is_logistic() {
        // k = 0 is untouched by the spectral step apart from the rotation
        let params = FilmParams { lambda: 0.1, amplitude_floor: 0.0, ..Default::default() };
        let mut grid = FilmGrid::new(8, 8, 4.0, 4.0, false).unwrap();
        let s0: f64 = 1e-4;
        grid.fill(Complex64::new(s0.sqrt(), 0.0));
        let mut solver = FilmSolver::new(&grid, params, &[], CarrierSpec::default(), 0.0, 0.1, 0.0).unwrap();
        for _ in 0..300 {
            solver.step(&mut grid).unwrap();
        }
        let (lam, b, t): (f64, f64, f64) = (0.1, 0.1, 30.0);
        let e = (2.0 * lam * t).exp();
        let exact = lam * s0 * e / (lam + b * s0 * (e - 1.0));
        assert!((grid.u[0].norm_sqr() - exact).abs() / exact < 1e-10);
    }

    fn single_source_run(dt: f64) -> Vec<Complex64> {
        let params = FilmParams { amplitude_floor: 0.0, ..Default::default() };
        let mut grid = FilmGrid::new(64, 64, 40.0, 40.0, true).unwrap();
        grid.fill(Complex64::new(0.01, 0.0));
        let contacts = [Contact {
            id: 1,
            center: (20.0, 20.0),
            radius: 3.0,
            polarity: Polarity::Positive,
        }];
        let carrier = CarrierSpec::default();
        let run = simulate_film(
            &grid,
            &params,
            &contacts,
            &carrier,
            DEFAULT_FILM_GAIN,
            carrier.period(),
            FilmSettings { dt, probe_stride: 1000, ..Default::default() },
        )
        .unwrap();
        run.grid.u
    }

    #[test]
    fn splitting_is_second_order() {
        let reference = single_source_run(0.0125);
        let coarse = relative_l2(&single_source_run(0.1), &reference);
        let fine = relative_l2(&single_source_run(0.05), &reference);
        let ratio = coarse / fine;
        assert!((3.0..=5.0).contains(&ratio), "error ratio {ratio} ({coarse:e}, {fine:e})");
    }

    #[test]
    fn guards() {
        let grid = FilmGrid::default_film();
        let params = FilmParams::default();
        let carrier = CarrierSpec::default();
        assert!(matches!(
            step_film(&grid, &params, &[], &carrier, 0.4, 0.1),
            Err(Error::StepTooLarge { .. })
        ));
        let bad_bias = FilmSolver::new(&grid, params, &[], carrier, 0.4, 0.02, 0.2);
        assert!(bad_bias.is_err());
        let hot = FilmParams { lambda: 200.0, b: 0.0, ..Default::default() };
        assert!(matches!(
            step_film(&grid, &hot, &[], &carrier, 0.0, 0.02),
            Err(Error::Instability { .. })
        ));
    }

    #[test]
    fn probes_and_snapshots_are_recorded() {
        let mut grid = FilmGrid::new(32, 32, 20.0, 20.0, false).unwrap();
        grid.fill(Complex64::new(0.01, 0.0));
        let contacts = [
            Contact { id: 4, center: (6.0, 10.0), radius: 2.0, polarity: Polarity::Positive },
            Contact { id: 9, center: (14.0, 10.0), radius: 2.0, polarity: Polarity::Detector },
        ];
        let settings = FilmSettings { dt: 0.1, probe_stride: 7, snapshot_stride: Some(20), detector_bias: 0.0 };
        let run = simulate_film(&grid, &FilmParams::default(), &contacts, &CarrierSpec::default(), 0.4, 5.0, settings)
            .unwrap();
        // 50 steps: samples at 0, 7, ..., 49, 50
        let p = run.probe(9).unwrap();
        assert_eq!(p.times.len(), 1 + 7 + 1);
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        assert!((p.times.last().unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(run.snapshots.len(), 1 + 2 + 1);
        assert!((run.grid.t - 5.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn any_grid_mode_follows_the_dispersion_relation(mx in -7i32..=7, my in -7i32..=7, im in 0.0f64..0.05) {
            let params = linear_params(Complex64::new(1.0, im));
            let (n, length, dt) = (16, 12.0, 0.05);
            let mut grid = FilmGrid::new(n, n, length, length, false).unwrap();
            let k = (2.0 * PI * f64::from(mx) / length, 2.0 * PI * f64::from(my) / length);
            for iy in 0..n {
                for ix in 0..n {
                    let (x, y) = grid.position(ix, iy);
                    grid.u[iy * n + ix] = Complex64::new(0.0, k.0 * x + k.1 * y).exp();
                }
            }
            let start = grid.u.clone();
            let mut solver = FilmSolver::new(&grid, params, &[], CarrierSpec::default(), 0.0, dt, 0.0).unwrap();
            for _ in 0..20 {
                solver.step(&mut grid).unwrap();
            }
            let factor = (-Complex64::i() * dispersion_frequency(&params, k) * (20.0 * dt)).exp();
            let expected: Vec<Complex64> = start.iter().map(|z| z * factor).collect();
            proptest::prop_assert!(relative_l2(&grid.u, &expected) < 1e-9);
        }
    }
}
