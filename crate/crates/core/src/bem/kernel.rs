//! Potential and field of a uniformly charged flat panel.
//!
//! The free-space Green's function integral over a planar polygon has a
//! closed form built from per-edge log terms and the subtended solid angle
//! (the Hess-Smith / Newman panel result):
//!
//! ```text
//! I(p) = \int dA' / |p - r'| = sum_e d_e ln((R_b + s_b)/(R_a + s_a)) - |h| Omega
//! ```
//!
//! where `h` is the signed height of `p` over the panel plane, `d_e` the
//! in-plane distance from the projection of `p` to edge `e` (positive on the
//! interior side), `s_a, s_b` the endpoint coordinates along the edge from
//! the foot of the perpendicular, `R_a, R_b` the endpoint distances, and
//! `Omega` the solid angle of the panel at `p`. Evaluating this exactly for
//! every matrix entry removes quadrature error entirely; the remaining
//! discretization error is the piecewise-constant charge assumption itself.

use crate::geometry::Panel;
use crate::EPSILON_0;
use nalgebra::{Point3, Vector3};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// `I(p)` as above, the potential integral without the `1/(4 pi eps0)` and
/// charge-density factors.
fn geometry_integral(panel: &Panel, p: &Point3<f64>) -> f64 {
    let verts = panel.vertices();
    let n_hat = panel.normal;
    let h = (p - verts[0]).dot(&n_hat);
    let diam = panel.diameter();
    let eps = 1e-14 * diam;

    let mut acc = 0.0;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let l = b - a;
        let len = l.norm();
        if len < eps {
            continue;
        }
        let l_hat = l / len;
        let nu = l_hat.cross(&n_hat); // in-plane outward edge normal
        let pa = a - p;
        let pb = b - p;
        let d_e = pa.dot(&nu); // positive when p projects inside this edge
        let s_a = pa.dot(&l_hat);
        let s_b = pb.dot(&l_hat);
        let r_a = pa.norm();
        let r_b = pb.norm();
        let d2h2 = (r_a * r_a - s_a * s_a).max(0.0); // = d_e^2 + h^2
        if d2h2 < eps * eps {
            // p on the edge line; the d_e-weighted term vanishes
            continue;
        }
        acc += d_e * (ln_r_plus_s(r_b, s_b, d2h2) - ln_r_plus_s(r_a, s_a, d2h2));
    }
    if h.abs() > eps {
        acc -= h.abs() * solid_angle(verts, p).abs();
    }
    acc
}

/// `ln(R + s)` with the stable reformulation `R + s = (d^2 + h^2)/(R - s)`
/// when `s < 0` would cancel.
fn ln_r_plus_s(r: f64, s: f64, d2h2: f64) -> f64 {
    if s >= 0.0 {
        (r + s).ln()
    } else {
        d2h2.ln() - (r - s).ln()
    }
}

/// Signed solid angle of the polygon at `p` (van Oosterom-Strackee on the
/// triangle fan from the first vertex).
fn solid_angle(verts: &[Point3<f64>], p: &Point3<f64>) -> f64 {
    let mut total = 0.0;
    for i in 1..verts.len() - 1 {
        let r1 = verts[0] - p;
        let r2 = verts[i] - p;
        let r3 = verts[i + 1] - p;
        let (n1, n2, n3) = (r1.norm(), r2.norm(), r3.norm());
        let numer = r1.dot(&r2.cross(&r3));
        let denom = n1 * n2 * n3 + r1.dot(&r2) * n3 + r2.dot(&r3) * n1 + r3.dot(&r1) * n2;
        total += 2.0 * numer.atan2(denom);
    }
    total
}

/// Potential at `p` per unit *total* charge spread uniformly on the panel,
/// in volts per coulomb. Exact for the flat panel.
pub fn potential_coeff(panel: &Panel, p: &Point3<f64>) -> f64 {
    geometry_integral(panel, p) / (FOUR_PI * EPSILON_0 * panel.area)
}

/// Electric field at `p` per unit total charge on the panel (V/C/m).
///
/// Gradient of the closed form: the edge log terms carry the in-plane
/// components and the signed solid angle carries the normal jump.
pub fn field_coeff(panel: &Panel, p: &Point3<f64>) -> Vector3<f64> {
    let verts = panel.vertices();
    let n_hat = panel.normal;
    let h = (p - verts[0]).dot(&n_hat);
    let diam = panel.diameter();
    let eps = 1e-14 * diam;

    let mut e = Vector3::zeros();
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let l = b - a;
        let len = l.norm();
        if len < eps {
            continue;
        }
        let l_hat = l / len;
        let nu = l_hat.cross(&n_hat);
        let pa = a - p;
        let pb = b - p;
        let s_a = pa.dot(&l_hat);
        let s_b = pb.dot(&l_hat);
        let r_a = pa.norm();
        let r_b = pb.norm();
        let d2h2 = (r_a * r_a - s_a * s_a).max(0.0);
        if d2h2 < eps * eps {
            continue;
        }
        let q = ln_r_plus_s(r_b, s_b, d2h2) - ln_r_plus_s(r_a, s_a, d2h2);
        e += nu * q;
    }
    let omega = solid_angle(verts, p);
    e += n_hat * (h.signum() * omega.abs());
    e / (FOUR_PI * EPSILON_0 * panel.area)
}

/// Gauss-quadrature approximation of [`potential_coeff`] for far panels.
///
/// `order` 1 is the centroid (monopole) rule; higher orders tile the panel
/// with the tensor Gauss-Legendre rule on each corner triangle.
pub fn potential_coeff_quadrature(panel: &Panel, p: &Point3<f64>, order: usize) -> f64 {
    if order <= 1 {
        return 1.0 / (FOUR_PI * EPSILON_0 * (p - panel.centroid).norm());
    }
    // triangulate from the centroid and integrate 1/r per triangle with a
    // degree-2 symmetric rule scaled by subtriangle area
    let verts = panel.vertices();
    let c = panel.centroid;
    let mut acc = 0.0;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let area2 = (a - c).cross(&(b - c)).norm(); // 2 * subtriangle area
        // midpoints rule (degree 2 on triangles)
        let m1 = Point3::from((c.coords + a.coords) * 0.5);
        let m2 = Point3::from((a.coords + b.coords) * 0.5);
        let m3 = Point3::from((b.coords + c.coords) * 0.5);
        let s: f64 = [m1, m2, m3]
            .iter()
            .map(|m| 1.0 / (p - m).norm())
            .sum();
        acc += area2 * 0.5 * s / 3.0;
    }
    acc / (FOUR_PI * EPSILON_0 * panel.area)
}
