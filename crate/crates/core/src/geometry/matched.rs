//! Plate meshes whose grids follow the probe's panel layout.
//!
//! Capacitance at small gaps is dominated by near-matched panel pairs
//! facing each other across the gap; a plate gridded independently of the
//! probe leaves the induced-charge spot under-resolved and misaligned, and
//! the error swamps refinement. These builders project the probe's own
//! grid onto the plate (sphere latitude rings to concentric plate rings,
//! cylinder angular stations to plate grid lines) and continue outward with
//! a geometric ladder to the plate rim.

use super::cylinder::{axial_grid, theta_grid};
use super::grading::geometric_ladder;
use super::plate::build_plate_from_grids;
use super::sphere::{cap_angle, lat_grid, lon_count};
use super::{Panel, PanelMesh, ShapeSpec, ShapeTag};
use crate::{Error, Result};
use nalgebra::Point3;
use std::f64::consts::{FRAC_PI_2, PI};

/// Spacing growth of the ladder continuing a matched core to the rim.
const LADDER_GROWTH: f64 = 1.4;
/// Probe rings are projected out to this colatitude/angle.
const MATCH_ANGLE: f64 = FRAC_PI_2;

/// Plate grid lines matched under a sphere or truncated sphere.
fn sphere_ring_radii(radius: f64, cap_height: Option<f64>, resolution: usize, refinement: f64) -> Vec<f64> {
    let psi_max = cap_angle(radius, cap_height);
    let psis = lat_grid(psi_max, resolution.max(3), refinement);
    let mut radii: Vec<f64> = psis
        .iter()
        .take_while(|&&p| p <= MATCH_ANGLE + 1e-12)
        .map(|&p| radius * p.sin())
        .collect();
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-18);
    radii
}

/// Square plate with a polar patch under a centered sphere.
///
/// Rings inside the patch sit exactly under the sphere's latitude rings;
/// outside, ring vertices walk a geometric ladder along each azimuth ray
/// until they reach the square rim. With the azimuth count a multiple of 8,
/// rays pass through the square's corners and the mesh tiles the square
/// exactly.
pub(super) fn polar_matched_square_plate(
    side: f64,
    probe_radius: f64,
    cap_height: Option<f64>,
    probe_resolution: usize,
    probe_refinement: f64,
) -> Result<PanelMesh> {
    let half = 0.5 * side;
    let n_lon = lon_count(probe_resolution);
    let rings = sphere_ring_radii(probe_radius, cap_height, probe_resolution, probe_refinement);
    if rings.len() < 2 {
        return Err(Error::invalid_spec("matched plate needs at least one probe ring"));
    }

    // exit length of each azimuth ray to the square rim
    let ray_exit = |phi: f64| -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        half / c.abs().max(s.abs())
    };

    // keep matched rings comfortably inside the rim, then ladder outward
    let max_core = rings
        .iter()
        .rposition(|&r| r < 0.8 * half)
        .map(|i| i + 1)
        .unwrap_or(rings.len());
    let core = &rings[..max_core.max(2)];
    let r_core = core[core.len() - 1];
    let last_spacing = (core[core.len() - 1] - core[core.len() - 2]).max(1e-6 * side);
    // normalized ladder from the core radius to 1 (the rim), shared by rays
    let ladder_u: Vec<f64> = if r_core < half * (1.0 - 1e-9) {
        geometric_ladder(0.0, 1.0, last_spacing / (half - r_core), LADDER_GROWTH)
    } else {
        vec![0.0, 1.0]
    };

    let vertex = |ring: usize, k: usize| -> Point3<f64> {
        let phi = 2.0 * PI * k as f64 / n_lon as f64;
        let rho = if ring < core.len() {
            core[ring]
        } else {
            let t = ladder_u[ring - core.len() + 1];
            r_core + (ray_exit(phi) - r_core) * t
        };
        Point3::new(rho * phi.cos(), rho * phi.sin(), 0.0)
    };
    let n_rings = core.len() + ladder_u.len() - 1;

    let mut panels = Vec::new();
    for k in 0..n_lon {
        panels.push(orient_up(Panel::tri(
            Point3::new(0.0, 0.0, 0.0),
            vertex(1, k),
            vertex(1, k + 1),
        )?));
    }
    for ring in 1..n_rings - 1 {
        for k in 0..n_lon {
            panels.push(orient_up(Panel::quad(
                vertex(ring, k),
                vertex(ring + 1, k),
                vertex(ring + 1, k + 1),
                vertex(ring, k + 1),
            )?));
        }
    }
    Ok(PanelMesh {
        panels,
        shape: ShapeTag::SquarePlate,
        characteristic_size: side,
    })
}

fn orient_up(p: Panel) -> Panel {
    if p.normal.z < 0.0 {
        p.flipped()
    } else {
        p
    }
}

/// Tensor plate with both grids matched under a sphere at `offset`
/// (fallback for offset scenes, where the polar patch would leave the rim).
fn tensor_matched_sphere_plate(
    side: f64,
    offset: f64,
    probe_radius: f64,
    cap_height: Option<f64>,
    probe_resolution: usize,
    probe_refinement: f64,
) -> Result<PanelMesh> {
    let half = 0.5 * side;
    let rings = sphere_ring_radii(probe_radius, cap_height, probe_resolution, probe_refinement);
    let xs = ladder_extend(&rings, offset, -half, half);
    let ys = ladder_extend(&rings, 0.0, -half, half);
    build_plate_from_grids(&xs, &ys)
}

/// Mirror `rings` around `center` and extend both ends to `[lo, hi]`.
fn ladder_extend(rings: &[f64], center: f64, lo: f64, hi: f64) -> Vec<f64> {
    let spacing = (rings[rings.len() - 1] - rings[rings.len() - 2]).max(1e-12);
    let mut xs: Vec<f64> = Vec::new();
    for &r in rings.iter().rev() {
        let x = center - r;
        if x > lo {
            xs.push(x);
        }
    }
    for &r in rings.iter() {
        let x = center + r;
        if x < hi && (xs.is_empty() || x > xs[xs.len() - 1]) {
            xs.push(x);
        }
    }
    // geometric ladders out to the rim on both sides
    let first = xs[0];
    if first > lo {
        let down: Vec<f64> = geometric_ladder(0.0, first - lo, spacing, LADDER_GROWTH)
            .iter()
            .skip(1)
            .map(|s| first - s)
            .collect();
        for x in down {
            xs.insert(0, x);
        }
    }
    let last = xs[xs.len() - 1];
    if last < hi {
        for s in geometric_ladder(0.0, hi - last, spacing, LADDER_GROWTH).iter().skip(1) {
            xs.push(last + s);
        }
    }
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-18);
    xs
}

/// Rect plate matched under a cylinder: transverse grid lines sit beneath
/// the cylinder's angular stations, axial lines continue the cylinder's own
/// axial grid.
fn tensor_matched_cylinder_plate(
    side_transverse: f64,
    side_axial: f64,
    offset: f64,
    radius: f64,
    length: f64,
    theta_t: f64,
    resolution: usize,
    refinement: f64,
) -> Result<PanelMesh> {
    let (hx, hy) = (0.5 * side_transverse, 0.5 * side_axial);
    let thetas = theta_grid(radius, resolution, theta_t, refinement);
    let stations: Vec<f64> = thetas
        .iter()
        .filter(|&&t| t.abs() <= MATCH_ANGLE.min(theta_t) + 1e-12)
        .map(|&t| radius * t.sin())
        .collect();
    let mut half_stations: Vec<f64> = stations.iter().copied().filter(|&x| x >= 0.0).collect();
    half_stations.dedup_by(|a, b| (*a - *b).abs() < 1e-18);
    let xs = ladder_extend(&half_stations, offset, -hx, hx);

    let ys_core = axial_grid(radius, length, resolution);
    let y_spacing = ys_core[1] - ys_core[0];
    let mut ys: Vec<f64> = ys_core.iter().copied().filter(|y| y.abs() < hy).collect();
    let first = ys[0];
    if first > -hy {
        let down: Vec<f64> = geometric_ladder(0.0, first + hy, y_spacing, LADDER_GROWTH)
            .iter()
            .skip(1)
            .map(|s| first - s)
            .collect();
        for y in down {
            ys.insert(0, y);
        }
    }
    let last = ys[ys.len() - 1];
    if last < hy {
        for s in geometric_ladder(0.0, hy - last, y_spacing, LADDER_GROWTH).iter().skip(1) {
            ys.push(last + s);
        }
    }
    build_plate_from_grids(&xs, &ys)
}

/// Build the plate mesh for a curved probe, matching grids where possible.
pub(super) fn plate_for_probe(
    plate: &ShapeSpec,
    probe: &ShapeSpec,
    offset: f64,
) -> Result<PanelMesh> {
    plate.validate()?;
    probe.validate()?;
    let (side_x, side_y) = match *plate {
        ShapeSpec::SquarePlate { side, .. } => (side, side),
        ShapeSpec::RectPlate { side_x, side_y, .. } => (side_x, side_y),
        _ => {
            return Err(Error::UnsupportedGeometry(
                "matched plates are built from plate specs only".to_string(),
            ))
        }
    };
    match *probe {
        ShapeSpec::Sphere { radius, resolution, refinement } => {
            if offset == 0.0 && (side_x - side_y).abs() < 1e-18 {
                polar_matched_square_plate(side_x, radius, None, resolution, refinement)
            } else {
                tensor_matched_sphere_plate(side_x, offset, radius, None, resolution, refinement)
            }
        }
        ShapeSpec::TruncatedSphere { radius, cap_height, resolution, refinement } => {
            if offset == 0.0 && (side_x - side_y).abs() < 1e-18 {
                polar_matched_square_plate(
                    side_x,
                    radius,
                    Some(cap_height),
                    resolution,
                    refinement,
                )
            } else {
                tensor_matched_sphere_plate(
                    side_x,
                    offset,
                    radius,
                    Some(cap_height),
                    resolution,
                    refinement,
                )
            }
        }
        ShapeSpec::Cylinder { radius, length, resolution, refinement } => {
            tensor_matched_cylinder_plate(
                side_x, side_y, offset, radius, length, PI, resolution, refinement,
            )
        }
        ShapeSpec::TruncatedCylinder { radius, length, half_angle, resolution, refinement } => {
            tensor_matched_cylinder_plate(
                side_x, side_y, offset, radius, length, half_angle, resolution, refinement,
            )
        }
        _ => Err(Error::UnsupportedGeometry(
            "matched plates pair with curved probes".to_string(),
        )),
    }
}
