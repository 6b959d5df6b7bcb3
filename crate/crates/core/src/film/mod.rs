//! Forced complex Ginzburg-Landau film with point contacts.
//!
//! The field obeys `i u_t = D∇²u + ωu + i(λ + C − b|u|²)u` on a periodic
//! grid. An absorbing sponge lowers `λ` near the edges so that outgoing spin
//! waves are not reflected back into the interior.

mod analysis;
mod layout;
mod solver;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::DEFAULT_AMPLITUDE_FLOOR;

pub use analysis::{
    decode_contacts, decode_detectors, phase_locks, probe_threshold, write_probes_csv,
    write_snapshot_csv, write_snapshot_pgm, ContactLock, PROBE_BURST_FRACTION,
};
pub use layout::{
    contact_indicator, fig3_layout, fig3_layout_with_radius, film_forcing, validate_layout, Contact,
    Polarity, DEFAULT_CONTACT_RADIUS,
};
pub use solver::{
    simulate_film, step_film, FilmRun, FilmSettings, FilmSolver, ProbeSeries, Snapshot, DEFAULT_FILM_DT,
    DEFAULT_FILM_GAIN, DEFAULT_PROBE_STRIDE, INSTABILITY_GROWTH,
};

/// Width of the absorbing boundary layer in space units.
pub const SPONGE_WIDTH: f64 = 4.0;
/// Largest reduction of `λ` at the outer edge of the sponge.
pub const SPONGE_DEPTH: f64 = 0.5;

pub const DEFAULT_FILM_SIZE: usize = 128;
pub const DEFAULT_FILM_LENGTH: f64 = 40.0;
pub const DEFAULT_FILM_U0: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilmParams {
    pub d: Complex64,
    pub omega: f64,
    pub lambda: f64,
    pub b: f64,
    /// Floor on the RMS magnitude of each forced contact; 0 disables it.
    pub amplitude_floor: f64,
}

impl Default for FilmParams {
    fn default() -> Self {
        FilmParams {
            d: Complex64::new(1.0, 0.01),
            omega: 0.15,
            lambda: -0.1,
            b: 0.1,
            amplitude_floor: DEFAULT_AMPLITUDE_FLOOR,
        }
    }
}

impl FilmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d.re > 0.0 && self.d.re.is_finite()) {
            return Err(Error::invalid("d", format!("Re(D) = {} must be positive", self.d.re)));
        }
        if !(self.d.im >= 0.0 && self.d.im.is_finite()) {
            return Err(Error::invalid("d", format!("Im(D) = {} must be >= 0", self.d.im)));
        }
        if !self.omega.is_finite() || !self.lambda.is_finite() {
            return Err(Error::invalid("omega/lambda", "must be finite"));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("b", format!("{} must be >= 0", self.b)));
        }
        if !(self.amplitude_floor >= 0.0 && self.amplitude_floor.is_finite()) {
            return Err(Error::invalid("amplitude_floor", "must be >= 0"));
        }
        Ok(())
    }
}

/// `Ω(k) = ω − D|k|²` for plane waves `exp(i(k·x − Ωt))`.
pub fn dispersion_frequency(params: &FilmParams, k: (f64, f64)) -> Complex64 {
    params.omega - params.d * (k.0 * k.0 + k.1 * k.1)
}

/// Field on an `nx × ny` periodic grid; cell `(ix, iy)` sits at
/// `((ix + ½)dx, (iy + ½)dy)` and is stored at `iy·nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub u: Vec<Complex64>,
    pub t: f64,
    pub sponge: Vec<f64>,
}

impl FilmGrid {
    /// Zero field, with or without the absorbing layer.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, sponge: bool) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(Error::invalid(name, format!("{n} is not a power of two >= 2")));
            }
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::invalid("domain", "lengths must be positive"));
        }
        let (dx, dy) = (lx / nx as f64, ly / ny as f64);
        if (dx - dy).abs() > 1e-12 * dx {
            return Err(Error::invalid("domain", format!("cells are not square (dx = {dx}, dy = {dy})")));
        }
        let mut grid = FilmGrid {
            nx,
            ny,
            lx,
            ly,
            u: vec![Complex64::new(0.0, 0.0); nx * ny],
            t: 0.0,
            sponge: vec![0.0; nx * ny],
        };
        if sponge {
            for iy in 0..ny {
                for ix in 0..nx {
                    let (x, y) = grid.position(ix, iy);
                    let d = x.min(lx - x).min(y).min(ly - y);
                    if d < SPONGE_WIDTH {
                        let depth = (SPONGE_WIDTH - d) / SPONGE_WIDTH;
                        grid.sponge[iy * nx + ix] = -SPONGE_DEPTH * depth * depth;
                    }
                }
            }
        }
        Ok(grid)
    }

    /// Default 128×128 grid on a 40×40 domain with sponge and `u = 0.01`.
    pub fn default_film() -> Self {
        let mut g = FilmGrid::new(DEFAULT_FILM_SIZE, DEFAULT_FILM_SIZE, DEFAULT_FILM_LENGTH, DEFAULT_FILM_LENGTH, true)
            .expect("default grid is valid");
        g.fill(Complex64::new(DEFAULT_FILM_U0, 0.0));
        g
    }

    pub fn fill(&mut self, value: Complex64) {
        self.u.fill(value);
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn has_sponge(&self) -> bool {
        self.sponge.iter().any(|&s| s != 0.0)
    }

    pub fn position(&self, ix: usize, iy: usize) -> (f64, f64) {
        let dx = self.dx();
        ((ix as f64 + 0.5) * dx, (iy as f64 + 0.5) * dx)
    }

    /// Largest step allowed by the splitting accuracy guard, `0.5·dx²/|D|`.
    pub fn max_dt(&self, params: &FilmParams) -> f64 {
        0.5 * self.dx() * self.dx() / params.d.norm()
    }

    /// Discrete L² norm `sqrt(Σ|u|² dx²)`.
    pub fn l2_norm(&self) -> f64 {
        let dx = self.dx();
        (self.u.iter().map(Complex64::norm_sqr).sum::<f64>() * dx * dx).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Flat indices of cells whose centres lie in the closed disk.
    pub fn cells_in(&self, contact: &Contact) -> Vec<usize> {
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let (x, y) = self.position(ix, iy);
                if contact_indicator(contact, x, y) == 1 {
                    out.push(iy * self.nx + ix);
                }
            }
        }
        out
    }

    /// Complex mean of `u` over a set of cells.
    pub fn mean_over(&self, cells: &[usize]) -> Complex64 {
        if cells.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        cells.iter().map(|&c| self.u[c]).sum::<Complex64>() / cells.len() as f64
    }
}
