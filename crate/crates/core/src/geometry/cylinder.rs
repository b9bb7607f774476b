//! Cylinder and truncated-cylinder meshes.
//!
//! Local frame: axis along `y`, centered, with the near-gap line at
//! `z = -R` (angle 0). The lateral surface spans angles `[-theta, +theta]`
//! about that line; a half-angle of `pi` is the whole cylinder, closed with
//! end discs. Truncated cylinders are closed with a flat chord plate at the
//! cut plane plus the two end segments, so the body is a closed surface.
//! Lateral quads are planar (two rulings at fixed angles), so no
//! triangulation is needed there.

use super::grading::{focus_graded_points, uniform_points};
use super::{Panel, PanelMesh, ShapeTag};
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};
use std::f64::consts::PI;

pub fn build_cylinder(
    radius: f64,
    length: f64,
    resolution: usize,
    half_angle: f64,
) -> Result<PanelMesh> {
    build_cylinder_graded(radius, length, resolution, half_angle, 0.0)
}

pub fn build_cylinder_graded(
    radius: f64,
    length: f64,
    resolution: usize,
    half_angle: f64,
    refinement: f64,
) -> Result<PanelMesh> {
    if !(radius > 0.0 && radius.is_finite()) || !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid_spec(format!(
            "cylinder radius/length must be > 0, got R={radius}, L={length}"
        )));
    }
    if !(half_angle > 0.0 && half_angle <= PI * (1.0 + 1e-12)) {
        return Err(Error::invalid_spec(format!(
            "truncation half-angle must be in (0, pi], got {half_angle}"
        )));
    }
    let whole = (half_angle - PI).abs() < 1e-12;
    let theta_t = if whole { PI } else { half_angle };

    let thetas = theta_grid(radius, resolution, theta_t, refinement);
    let ys = axial_grid(radius, length, resolution);
    let n_theta = thetas.len() - 1;
    let n_y = ys.len() - 1;

    // chord-sagitta compensation as in the sphere mesh: station radii are
    // pushed out so flat strips straddle the true circle
    let comp_radius = |i: usize| {
        let below = if i > 0 { thetas[i] - thetas[i - 1] } else { thetas[1] - thetas[0] };
        let above = if i < n_theta {
            thetas[i + 1] - thetas[i]
        } else {
            thetas[n_theta] - thetas[n_theta - 1]
        };
        radius / (0.25 * (below + above)).cos()
    };
    let at = |i: usize, y: f64| {
        let r = comp_radius(i);
        Point3::new(r * thetas[i].sin(), y, -r * thetas[i].cos())
    };

    let mut panels = Vec::new();
    for i in 0..n_theta {
        for j in 0..n_y {
            let p = Panel::quad(
                at(i, ys[j]),
                at(i + 1, ys[j]),
                at(i + 1, ys[j + 1]),
                at(i, ys[j + 1]),
            )?;
            let radial = Vector3::new(p.centroid.x, 0.0, p.centroid.z);
            panels.push(orient(p, radial));
        }
    }

    if whole {
        let rim = comp_radius(0); // theta grid wraps at +-pi
        for (y_end, out) in [(-0.5 * length, -Vector3::y()), (0.5 * length, Vector3::y())] {
            disc_panels(&mut panels, rim, y_end, out, resolution)?;
        }
    } else {
        let rim = at(n_theta, 0.0);
        chord_and_segments(&mut panels, rim, length, &thetas, n_y, |i| at(i, 0.0))?;
    }

    Ok(PanelMesh {
        panels,
        shape: if whole { ShapeTag::Cylinder } else { ShapeTag::TruncatedCylinder },
        characteristic_size: radius,
    })
}

/// Angular grid over the sector, graded symmetrically toward the near-gap
/// line at angle 0. Panels per radian are fixed by `resolution` over a
/// half-turn, so a sector of half the angle gets exactly half the panels of
/// the whole cylinder.
pub(crate) fn theta_grid(
    _radius: f64,
    resolution: usize,
    theta_t: f64,
    refinement: f64,
) -> Vec<f64> {
    let n_theta = ((resolution as f64 * 2.0 * theta_t / PI).round() as usize).max(4);
    focus_graded_points(-theta_t, theta_t, n_theta, 0.0, refinement)
}

/// Uniform grid along the cylinder axis.
pub(crate) fn axial_grid(radius: f64, length: f64, resolution: usize) -> Vec<f64> {
    let n_y = ((resolution as f64 * length / (PI * radius)).round() as usize).max(3);
    uniform_points(-0.5 * length, 0.5 * length, n_y)
}

fn disc_panels(
    panels: &mut Vec<Panel>,
    radius: f64,
    y: f64,
    outward: Vector3<f64>,
    resolution: usize,
) -> Result<()> {
    let n_ring = resolution.max(2);
    let n_phi = (2 * resolution).max(8);
    let rs = uniform_points(0.0, radius, n_ring);
    let at = |r: f64, k: usize| {
        let phi = 2.0 * PI * k as f64 / n_phi as f64;
        Point3::new(r * phi.cos(), y, r * phi.sin())
    };
    for k in 0..n_phi {
        panels.push(orient(
            Panel::tri(Point3::new(0.0, y, 0.0), at(rs[1], k), at(rs[1], k + 1))?,
            outward,
        ));
    }
    for i in 1..n_ring {
        for k in 0..n_phi {
            panels.push(orient(
                Panel::quad(at(rs[i], k), at(rs[i + 1], k), at(rs[i + 1], k + 1), at(rs[i], k + 1))?,
                outward,
            ));
        }
    }
    Ok(())
}

/// Flat chord plate at the cut plane plus the two end circular segments.
///
/// `rim` is the (compensated) lateral-edge vertex at the cut angle and
/// `arc_at` yields the cross-section position of angular station `i`, so
/// the closures share vertices with the lateral strips.
fn chord_and_segments(
    panels: &mut Vec<Panel>,
    rim: Point3<f64>,
    length: f64,
    thetas: &[f64],
    n_y: usize,
    arc_at: impl Fn(usize) -> Point3<f64>,
) -> Result<()> {
    let z_cut = rim.z;
    let half_chord = rim.x.abs();
    let n_x = (thetas.len() - 1).max(2);
    let xs = uniform_points(-half_chord, half_chord, n_x);
    let ys = uniform_points(-0.5 * length, 0.5 * length, n_y);
    for i in 0..n_x {
        for j in 0..n_y {
            panels.push(orient(
                Panel::quad(
                    Point3::new(xs[i], ys[j], z_cut),
                    Point3::new(xs[i + 1], ys[j], z_cut),
                    Point3::new(xs[i + 1], ys[j + 1], z_cut),
                    Point3::new(xs[i], ys[j + 1], z_cut),
                )?,
                Vector3::z(),
            ));
        }
    }
    // end segments: fan from an interior point to the arc and the chord
    let r_bottom = arc_at(thetas.len() / 2).z.abs().max(rim.z.abs());
    for (y_end, out) in [(-0.5 * length, -Vector3::y()), (0.5 * length, Vector3::y())] {
        let hub = Point3::new(0.0, y_end, 0.5 * (z_cut - r_bottom));
        for i in 0..thetas.len() - 1 {
            let a = arc_at(i);
            let b = arc_at(i + 1);
            panels.push(orient(
                Panel::tri(hub, Point3::new(a.x, y_end, a.z), Point3::new(b.x, y_end, b.z))?,
                out,
            ));
        }
        for w in xs.windows(2) {
            panels.push(orient(
                Panel::tri(
                    hub,
                    Point3::new(w[0], y_end, z_cut),
                    Point3::new(w[1], y_end, z_cut),
                )?,
                out,
            ));
        }
    }
    Ok(())
}

fn orient(p: Panel, outward: Vector3<f64>) -> Panel {
    if p.normal.dot(&outward) < 0.0 {
        p.flipped()
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lateral_area(mesh: &PanelMesh, _radius: f64) -> f64 {
        // lateral panels have radial normals; closures are axial or +z flats
        mesh.panels
            .iter()
            .filter(|p| {
                let r = (p.centroid.x.powi(2) + p.centroid.z.powi(2)).sqrt();
                if r == 0.0 || p.normal.y.abs() > 0.5 {
                    return false;
                }
                let radial = Vector3::new(p.centroid.x / r, 0.0, p.centroid.z / r);
                p.normal.dot(&radial) > 0.9
            })
            .map(|p| p.area)
            .sum()
    }

    #[test]
    fn whole_cylinder_lateral_area() {
        // paper narrow cylinder: R = 12 mm, width 4 mm
        let (r, l) = (12e-3, 4e-3);
        let m = build_cylinder(r, l, 48, PI).unwrap();
        let lat = lateral_area(&m, r);
        let exact = 2.0 * PI * r * l;
        assert!(((exact - lat) / exact).abs() < 2e-3, "lateral {lat} vs {exact}");
    }

    #[test]
    fn wide_cylinder_builds() {
        let m = build_cylinder(12e-3, 12e-3, 24, PI).unwrap();
        assert_eq!(m.shape, ShapeTag::Cylinder);
        assert!(m.len() > 0);
    }

    #[test]
    fn half_sector_has_half_lateral_area() {
        let (r, l, n) = (1.0, 0.5, 24);
        let whole = build_cylinder(r, l, n, PI).unwrap();
        let half = build_cylinder(r, l, n, PI / 2.0).unwrap();
        let a_whole = lateral_area(&whole, r);
        let a_half = lateral_area(&half, r);
        assert!(
            (a_half / a_whole - 0.5).abs() < 1e-13,
            "sector proportionality: {a_half} vs {a_whole}"
        );
    }

    #[test]
    fn truncated_cylinder_is_closed_with_chord() {
        let m = build_cylinder(1.0, 2.0, 16, PI / 3.0).unwrap();
        assert_eq!(m.shape, ShapeTag::TruncatedCylinder);
        let z_cut = m
            .panels
            .iter()
            .filter(|p| p.normal.z > 0.99)
            .map(|p| p.centroid.z)
            .fold(f64::NEG_INFINITY, f64::max);
        let chord_area: f64 = m
            .panels
            .iter()
            .filter(|p| (p.centroid.z - z_cut).abs() < 1e-12 && p.normal.z > 0.99)
            .map(|p| p.area)
            .sum();
        let exact = 2.0 * (PI / 3.0).sin() * 2.0;
        assert!((chord_area - exact).abs() / exact < 5e-3, "chord {chord_area} vs {exact}");
    }

    #[test]
    fn bottom_line_sits_near_minus_r() {
        let r = 12e-3;
        let m = build_cylinder_graded(r, 4e-3, 32, PI / 2.0, 2.5).unwrap();
        let z = m.min_z();
        assert!(z <= -r * (1.0 - 1e-12) && z > -1.001 * r, "min z {z}");
    }

    #[test]
    fn invalid_angles_rejected() {
        assert!(build_cylinder(1.0, 1.0, 8, 0.0).is_err());
        assert!(build_cylinder(1.0, 1.0, 8, 3.5).is_err());
        assert!(build_cylinder(0.0, 1.0, 8, PI).is_err());
        assert!(build_cylinder(1.0, -1.0, 8, PI).is_err());
    }
}
