//! Point contacts and the default eight-site layout.

use serde::{Deserialize, Serialize};

use super::{FilmGrid, SPONGE_WIDTH};
use crate::error::{Error, Result};
use crate::logic::CarrierSpec;

/// Contact radius of the default layout, in space units.
pub const DEFAULT_CONTACT_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Forced in phase with the carrier.
    Positive,
    /// Forced in anti-phase.
    Negative,
    /// Passive probe.
    Detector,
}

impl Polarity {
    pub fn sign(&self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
            Polarity::Detector => 0.0,
        }
    }

    pub fn is_forced(&self) -> bool {
        !matches!(self, Polarity::Detector)
    }

    pub fn flipped(&self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Detector => Polarity::Detector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact {
    pub id: usize,
    pub center: (f64, f64),
    pub radius: f64,
    pub polarity: Polarity,
}

impl Contact {
    pub fn distance_to(&self, other: &Contact) -> f64 {
        (self.center.0 - other.center.0).hypot(self.center.1 - other.center.1)
    }
}

/// 1 inside the closed disk, 0 outside.
pub fn contact_indicator(c: &Contact, x: f64, y: f64) -> u8 {
    let (dx, dy) = (x - c.center.0, y - c.center.1);
    u8::from(dx * dx + dy * dy <= c.radius * c.radius)
}

/// `gain · p(t) · Σ ±χ_j(x, y)`; detectors contribute nothing.
pub fn film_forcing(contacts: &[Contact], carrier: &CarrierSpec, gain: f64, t: f64, x: f64, y: f64) -> f64 {
    let chi: f64 = contacts
        .iter()
        .map(|c| c.polarity.sign() * f64::from(contact_indicator(c, x, y)))
        .sum();
    gain * carrier.value(t) * chi
}

/// Sources 1,2 in phase and 3,4 in anti-phase on opposite sides of the film,
/// with detectors 5,6 on the right and 7,8 on the left. Sites 5,8 are
/// nearest to 1,2 and sites 6,7 nearest to 3,4.
pub fn fig3_layout(lx: f64, ly: f64) -> Result<Vec<Contact>> {
    fig3_layout_with_radius(lx, ly, DEFAULT_CONTACT_RADIUS)
}

pub fn fig3_layout_with_radius(lx: f64, ly: f64, radius: f64) -> Result<Vec<Contact>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius", format!("{radius} must be positive")));
    }
    let (cx, cy) = (0.5 * lx, 0.5 * ly);
    use Polarity::*;
    let sites = [
        (-4.0, -12.0, Positive),
        (4.0, -12.0, Positive),
        (-4.0, 12.0, Negative),
        (4.0, 12.0, Negative),
        (12.0, -6.0, Detector),
        (12.0, 6.0, Detector),
        (-12.0, 6.0, Detector),
        (-12.0, -6.0, Detector),
    ];
    let contacts: Vec<Contact> = sites
        .iter()
        .enumerate()
        .map(|(k, &(ox, oy, polarity))| Contact {
            id: k + 1,
            center: (cx + ox, cy + oy),
            radius,
            polarity,
        })
        .collect();
    for c in &contacts {
        if !inside(c, lx, ly, SPONGE_WIDTH) {
            return Err(Error::LayoutOverflow { id: c.id });
        }
    }
    Ok(contacts)
}

fn inside(c: &Contact, lx: f64, ly: f64, margin: f64) -> bool {
    let (x, y) = c.center;
    x - c.radius >= margin && x + c.radius <= lx - margin && y - c.radius >= margin && y + c.radius <= ly - margin
}

/// Contacts must be disjoint, cover at least one cell, and stay out of the
/// sponge (or inside the domain when there is no sponge).
pub fn validate_layout(grid: &FilmGrid, contacts: &[Contact]) -> Result<()> {
    let margin = if grid.has_sponge() { SPONGE_WIDTH } else { 0.0 };
    for (k, c) in contacts.iter().enumerate() {
        if !(c.radius > 0.0 && c.radius.is_finite() && c.center.0.is_finite() && c.center.1.is_finite()) {
            return Err(Error::invalid("contact", format!("contact {} has invalid geometry", c.id)));
        }
        if contacts[..k].iter().any(|o| o.id == c.id) {
            return Err(Error::invalid("contact", format!("duplicate id {}", c.id)));
        }
        if !inside(c, grid.lx, grid.ly, margin) {
            return Err(Error::LayoutOverflow { id: c.id });
        }
        for o in &contacts[..k] {
            if c.distance_to(o) <= c.radius + o.radius {
                return Err(Error::OverlappingContacts(o.id, c.id));
            }
        }
        if grid.cells_in(c).is_empty() {
            return Err(Error::EmptyContact(c.id));
        }
    }
    Ok(())
}
