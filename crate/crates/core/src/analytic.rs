//! Closed-form reference capacitances.
//!
//! These are the idealized (infinite-plane / whole-body) expressions used as
//! solver oracles and fit-model generators:
//!
//! - ideal parallel plates `C = eps0 A / d`
//! - sphere-plane image series `C = 4 pi eps0 R sinh(a) sum 1/sinh(n a)`
//!   with `cosh(a) = 1 + d/R`
//! - sphere-plane small-gap expansion (improved PFA)
//!   `C = 2 pi eps0 R (ln(R/d) + ln 2 + 23/20 + theta/63)`, `theta in [0,1]`
//! - cylinder-plane `C = 2 pi eps0 L / arccosh(1 + d/R)` and its Puiseux
//!   (PFA) limit `C = sqrt(2R) pi eps0 L / sqrt(d)`
//!
//! The energy relation behind the capacitance extraction is `C = 2 W_el / V^2`
//! for a conductor pair under a potential difference `V`.

use crate::{Error, Result, EPSILON_0};
use serde::{Deserialize, Serialize};

/// Which closed-form model an [`AnalyticModel`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnalyticKind {
    ParallelPlateIdeal,
    SphereExact,
    SphereIpfa,
    SpherePfa,
    CylinderExact,
    CylinderPfa,
}

/// A closed-form capacitance model bound to its geometric parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AnalyticModel {
    pub kind: AnalyticKind,
    /// Plate area (m^2); used by `ParallelPlateIdeal`.
    pub area: f64,
    /// Sphere or cylinder radius (m).
    pub radius: f64,
    /// Cylinder length (m).
    pub length: f64,
    /// Bracket parameter of the sphere small-gap expansion, in [0, 1].
    pub theta: f64,
}

impl AnalyticModel {
    pub fn parallel_plate(area: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::ParallelPlateIdeal, area, radius: 0.0, length: 0.0, theta: 0.0 }
    }

    pub fn sphere_exact(radius: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::SphereExact, area: 0.0, radius, length: 0.0, theta: 0.0 }
    }

    pub fn sphere_ipfa(radius: f64, theta: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::SphereIpfa, area: 0.0, radius, length: 0.0, theta }
    }

    pub fn sphere_pfa(radius: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::SpherePfa, area: 0.0, radius, length: 0.0, theta: 0.0 }
    }

    pub fn cylinder_exact(radius: f64, length: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::CylinderExact, area: 0.0, radius, length, theta: 0.0 }
    }

    pub fn cylinder_pfa(radius: f64, length: f64) -> Self {
        AnalyticModel { kind: AnalyticKind::CylinderPfa, area: 0.0, radius, length, theta: 0.0 }
    }

    /// Capacitance at gap `d`.
    pub fn eval(&self, d: f64) -> Result<f64> {
        match self.kind {
            AnalyticKind::ParallelPlateIdeal => cap_parallel_ideal(self.area, d),
            AnalyticKind::SphereExact => Ok(cap_sphere_exact(self.radius, d, 1e-12)?.capacitance),
            AnalyticKind::SphereIpfa => cap_sphere_ipfa(self.radius, d, self.theta),
            AnalyticKind::SpherePfa => cap_sphere_pfa(self.radius, d),
            AnalyticKind::CylinderExact => cap_cylinder_exact(self.radius, self.length, d),
            AnalyticKind::CylinderPfa => cap_cylinder_pfa(self.radius, self.length, d).map(|v| v.value),
        }
    }
}

/// Ideal parallel-plate capacitance `eps0 A / d`.
pub fn cap_parallel_ideal(area: f64, d: f64) -> Result<f64> {
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::domain(format!("plate area must be > 0, got {area}")));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("distance must be > 0, got {d}")));
    }
    Ok(EPSILON_0 * area / d)
}

/// Result of summing the sphere-plane image series, with truncation metadata.
#[derive(Clone, Copy, Debug)]
pub struct SeriesCap {
    pub capacitance: f64,
    pub terms_used: usize,
    /// Geometric bound on the truncated tail, in farads.
    pub truncation_bound: f64,
    /// True when the term cap was hit before the tolerance was met.
    pub hit_term_cap: bool,
}

/// Term cap for the sphere-plane series at extremely small `d/R`.
const SPHERE_SERIES_MAX_TERMS: usize = 5_000_000;

/// Sphere-plane capacitance from the image-charge series
/// `4 pi eps0 R sinh(a) sum_{n>=1} 1/sinh(n a)`, `cosh(a) = 1 + d/R`.
///
/// Terms are summed until the geometric tail bound drops below
/// `tol * partial_sum`, so two evaluations with tolerances `t1 < t2` agree
/// within `~t2` relative.
pub fn cap_sphere_exact(radius: f64, d: f64, tol: f64) -> Result<SeriesCap> {
    if !(radius > 0.0 && d > 0.0) || !radius.is_finite() || !d.is_finite() {
        return Err(Error::domain(format!(
            "sphere series needs R > 0 and d > 0, got R={radius}, d={d}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    let x = d / radius;
    let alpha = (1.0 + x).acosh();
    let decay = (-alpha).exp();
    let mut sum = 0.0f64;
    let mut n = 0usize;
    let mut tail = f64::INFINITY;
    while tail > tol * sum || n == 0 {
        n += 1;
        let term = 1.0 / (n as f64 * alpha).sinh();
        sum += term;
        // 1/sinh(m a) < 2 e^{-m a} for m a > ln 3; geometric tail bound
        tail = term * decay / (1.0 - decay);
        if n >= SPHERE_SERIES_MAX_TERMS {
            break;
        }
    }
    let scale = 4.0 * std::f64::consts::PI * EPSILON_0 * radius * alpha.sinh();
    Ok(SeriesCap {
        capacitance: scale * sum,
        terms_used: n,
        truncation_bound: scale * tail,
        hit_term_cap: n >= SPHERE_SERIES_MAX_TERMS,
    })
}

/// Improved-PFA sphere-plane capacitance
/// `2 pi eps0 R (ln(R/d) + ln 2 + 23/20 + theta/63)`.
///
/// Valid for small gaps (`d/R < 1`); `theta` brackets the constant term.
pub fn cap_sphere_ipfa(radius: f64, d: f64, theta: f64) -> Result<f64> {
    if !(radius > 0.0 && d > 0.0) {
        return Err(Error::domain(format!(
            "sphere IPFA needs R > 0 and d > 0, got R={radius}, d={d}"
        )));
    }
    if d / radius >= 1.0 {
        return Err(Error::domain(format!(
            "sphere IPFA is a small-gap expansion; d/R = {} >= 1",
            d / radius
        )));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain(format!("theta must be in [0, 1], got {theta}")));
    }
    Ok(2.0 * std::f64::consts::PI
        * EPSILON_0
        * radius
        * ((radius / d).ln() + 2.0f64.ln() + 23.0 / 20.0 + theta / 63.0))
}

/// Leading PFA term of the sphere-plane capacitance, `2 pi eps0 R ln(R/d)`.
pub fn cap_sphere_pfa(radius: f64, d: f64) -> Result<f64> {
    if !(radius > 0.0 && d > 0.0) {
        return Err(Error::domain("sphere PFA needs R > 0 and d > 0".to_string()));
    }
    if d / radius >= 1.0 {
        return Err(Error::domain(format!(
            "sphere PFA is a small-gap expansion; d/R = {} >= 1",
            d / radius
        )));
    }
    Ok(2.0 * std::f64::consts::PI * EPSILON_0 * radius * (radius / d).ln())
}

/// Cylinder-plane capacitance `2 pi eps0 L / arccosh(1 + d/R)`.
pub fn cap_cylinder_exact(radius: f64, length: f64, d: f64) -> Result<f64> {
    if !(radius > 0.0 && length > 0.0 && d > 0.0) {
        return Err(Error::domain(format!(
            "cylinder formula needs R, L, d > 0; got R={radius}, L={length}, d={d}"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * EPSILON_0 * length / (1.0 + d / radius).acosh())
}

/// PFA capacitance with validity flag.
#[derive(Clone, Copy, Debug)]
pub struct PfaCap {
    pub value: f64,
    /// Set when evaluated outside the small-gap regime (`d/R >= 0.1`).
    pub outside_validity: bool,
}

/// Puiseux/PFA limit of the cylinder-plane capacitance
/// `sqrt(2R) pi eps0 L / sqrt(d)`.
pub fn cap_cylinder_pfa(radius: f64, length: f64, d: f64) -> Result<PfaCap> {
    if !(radius > 0.0 && length > 0.0 && d > 0.0) {
        return Err(Error::domain(format!(
            "cylinder PFA needs R, L, d > 0; got R={radius}, L={length}, d={d}"
        )));
    }
    Ok(PfaCap {
        value: (2.0 * radius).sqrt() * std::f64::consts::PI * EPSILON_0 * length / d.sqrt(),
        outside_validity: d / radius >= 0.1,
    })
}
