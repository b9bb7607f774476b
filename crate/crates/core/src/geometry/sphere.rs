//! Triangulated sphere and truncated-sphere (lens) meshes.
//!
//! Built in a local frame with the sphere center at the origin and the
//! near-gap pole at `z = -R`. Colatitude is measured from that pole, so
//! grading strength clusters latitude bands toward the gap. All curved
//! panels are triangles (flat inscribed facets); the truncation cut is
//! closed by a flat disc at the cut plane with `+z` normals.

use super::grading::{focus_graded_points, uniform_points};
use super::{Panel, PanelMesh, ShapeTag};
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};
use std::f64::consts::PI;

/// Closed triangulated sphere; total area tends to `4 pi R^2` from below.
pub fn build_sphere(radius: f64, resolution: usize) -> Result<PanelMesh> {
    build_sphere_graded(radius, resolution, 0.0)
}

pub fn build_sphere_graded(radius: f64, resolution: usize, refinement: f64) -> Result<PanelMesh> {
    check_radius(radius)?;
    let n_lat = resolution.max(3);
    let n_lon = lon_count(resolution);
    let psis = lat_grid(PI, n_lat, refinement);
    let panels = lateral_triangles(radius, &psis, n_lon, true)?;
    Ok(PanelMesh {
        panels,
        shape: ShapeTag::Sphere,
        characteristic_size: radius,
    })
}

/// Spherical cap of height `cap_height` facing the plate, closed by a flat
/// back disc. `cap_height = 2R` degenerates to the whole sphere.
pub fn build_truncated_sphere(
    radius: f64,
    cap_height: f64,
    resolution: usize,
) -> Result<PanelMesh> {
    build_truncated_sphere_graded(radius, cap_height, resolution, 0.0)
}

pub fn build_truncated_sphere_graded(
    radius: f64,
    cap_height: f64,
    resolution: usize,
    refinement: f64,
) -> Result<PanelMesh> {
    check_radius(radius)?;
    if !(cap_height > 1e-9 * radius) || !cap_height.is_finite() {
        return Err(Error::invalid_spec(format!(
            "cap height must exceed the degeneracy floor 1e-9*R; got {cap_height}"
        )));
    }
    if cap_height > 2.0 * radius * (1.0 + 1e-12) {
        return Err(Error::invalid_spec(format!(
            "cap height must be <= 2R; got h/R = {}",
            cap_height / radius
        )));
    }
    if cap_height >= 2.0 * radius * (1.0 - 1e-12) {
        let whole = build_sphere_graded(radius, resolution, refinement)?;
        return Ok(PanelMesh { shape: ShapeTag::TruncatedSphere, ..whole });
    }

    let psi_t = (1.0 - cap_height / radius).acos();
    let n_lat = resolution.max(3);
    let n_lon = lon_count(resolution);
    let psis = lat_grid(psi_t, n_lat, refinement);
    let mut panels = lateral_triangles(radius, &psis, n_lon, false)?;

    // flat back disc sealing the cut, matching the compensated cap rim so
    // the surface stays watertight; normals +z (away from the cap body)
    let rim_vertex = ring_vertex(radius, &psis, n_lon, n_lat, 0);
    let z_cut = rim_vertex.z;
    let rim = (rim_vertex.x * rim_vertex.x + rim_vertex.y * rim_vertex.y).sqrt();
    let rs = uniform_points(0.0, rim, n_lat.max(2));
    let ring = |r: f64, k: usize| {
        let phi = 2.0 * PI * k as f64 / n_lon as f64;
        Point3::new(r * phi.cos(), r * phi.sin(), z_cut)
    };
    for k in 0..n_lon {
        panels.push(orient(
            Panel::tri(Point3::new(0.0, 0.0, z_cut), ring(rs[1], k), ring(rs[1], k + 1))?,
            Vector3::z(),
        ));
    }
    for i in 1..rs.len() - 1 {
        for k in 0..n_lon {
            panels.push(orient(
                Panel::quad(
                    ring(rs[i], k),
                    ring(rs[i + 1], k),
                    ring(rs[i + 1], k + 1),
                    ring(rs[i], k + 1),
                )?,
                Vector3::z(),
            ));
        }
    }

    Ok(PanelMesh {
        panels,
        shape: ShapeTag::TruncatedSphere,
        characteristic_size: radius,
    })
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_spec(format!("radius must be > 0, got {radius}")))
    }
}

/// Azimuth count: a multiple of 8 keeps the alternating-diagonal
/// triangulation mirror symmetric and puts rays through the diagonals of a
/// square plate beneath. Capped because the azimuthal charge variation
/// stays smooth even when latitude bands are graded fine.
pub(crate) fn lon_count(resolution: usize) -> usize {
    ((2 * resolution).clamp(8, 48) + 7) / 8 * 8
}

/// Latitude bands clustered toward the gap-side pole (`psi = 0`).
pub(crate) fn lat_grid(psi_max: f64, n_lat: usize, refinement: f64) -> Vec<f64> {
    focus_graded_points(0.0, psi_max, n_lat, 0.0, refinement)
}

/// Colatitude extent of a spec's curved surface (`pi` for a whole sphere).
pub(crate) fn cap_angle(radius: f64, cap_height: Option<f64>) -> f64 {
    match cap_height {
        Some(h) if h < 2.0 * radius * (1.0 - 1e-12) => (1.0 - h / radius).acos(),
        _ => PI,
    }
}

/// Sagitta compensation: inscribed flat facets sit inside the true surface
/// by `~R (1 - cos(w/2))` for a band of angular width `w`, which biases
/// capacitance low. Pushing ring vertices out so the facet mid-surface
/// straddles the sphere removes the leading-order shape deficit.
fn lat_compensation(psis: &[f64], j: usize) -> f64 {
    let n = psis.len() - 1;
    let below = if j > 0 { psis[j] - psis[j - 1] } else { psis[1] - psis[0] };
    let above = if j < n { psis[j + 1] - psis[j] } else { psis[n] - psis[n - 1] };
    1.0 / (0.25 * (below + above)).cos()
}

/// In-plane (azimuthal chord) compensation for an `n_lon`-gon ring.
fn az_compensation(n_lon: usize) -> f64 {
    1.0 / (PI / n_lon as f64).cos().sqrt()
}

/// Compensated position of the ring-`j` vertex at longitude `k`.
pub(crate) fn ring_vertex(
    radius: f64,
    psis: &[f64],
    n_lon: usize,
    j: usize,
    k: usize,
) -> Point3<f64> {
    let psi = psis[j];
    let r = radius * lat_compensation(psis, j);
    let az = az_compensation(n_lon);
    let phi = 2.0 * PI * k as f64 / n_lon as f64;
    Point3::new(
        az * r * psi.sin() * phi.cos(),
        az * r * psi.sin() * phi.sin(),
        -r * psi.cos(),
    )
}

/// Triangles for latitude bands `psis` with `n_lon` longitudes; closes the
/// far pole when `close_top` and the band grid reaches `pi`.
fn lateral_triangles(
    radius: f64,
    psis: &[f64],
    n_lon: usize,
    close_top: bool,
) -> Result<Vec<Panel>> {
    let vertex = |j: usize, k: usize| ring_vertex(radius, psis, n_lon, j, k);
    let n_lat = psis.len() - 1;
    let mut panels = Vec::with_capacity(2 * n_lat * n_lon);
    let radial_orient = |p: Panel| {
        let dir = p.centroid.coords.normalize();
        orient(p, Vector3::from(dir))
    };
    // pole fan
    let pole = vertex(0, 0);
    for k in 0..n_lon {
        panels.push(radial_orient(Panel::tri(pole, vertex(1, k), vertex(1, k + 1))?));
    }
    let top_band = if close_top && (psis[n_lat] - PI).abs() < 1e-12 {
        n_lat - 1
    } else {
        n_lat
    };
    for j in 1..top_band {
        for k in 0..n_lon {
            let (tl, tr) = (vertex(j, k), vertex(j, k + 1));
            let (bl, br) = (vertex(j + 1, k), vertex(j + 1, k + 1));
            // alternate the split diagonal so reflections map the
            // triangulation onto itself
            if k % 2 == 0 {
                panels.push(radial_orient(Panel::tri(tl, tr, br)?));
                panels.push(radial_orient(Panel::tri(tl, br, bl)?));
            } else {
                panels.push(radial_orient(Panel::tri(tl, tr, bl)?));
                panels.push(radial_orient(Panel::tri(tr, br, bl)?));
            }
        }
    }
    if top_band == n_lat - 1 {
        let apex = vertex(n_lat, 0);
        for k in 0..n_lon {
            panels.push(radial_orient(Panel::tri(
                apex,
                vertex(n_lat - 1, k),
                vertex(n_lat - 1, k + 1),
            )?));
        }
    }
    Ok(panels)
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

    #[test]
    fn paper_sphere_area() {
        let r = 0.15e-3;
        let m = build_sphere(r, 32).unwrap();
        let exact = 4.0 * PI * r * r; // ~0.2827 mm^2
        let rel = (exact - m.total_area()) / exact;
        assert!(rel.abs() < 5e-3, "rel deviation {rel}");
    }

    #[test]
    fn sphere_area_deficit_shrinks_with_refinement() {
        let exact = 4.0 * PI;
        let deficits: Vec<f64> = [6usize, 12, 24]
            .iter()
            .map(|&n| ((exact - build_sphere(1.0, n).unwrap().total_area()) / exact).abs())
            .collect();
        assert!(deficits[0] > deficits[1] && deficits[1] > deficits[2]);
        // at least first order per doubling (sagitta compensation makes the
        // leading area error higher order than the raw inscribed mesh)
        let order = (deficits[1] / deficits[2]).log2();
        assert!(order > 1.0, "observed order {order}");
    }

    #[test]
    fn sphere_centroid_at_center() {
        let m = build_sphere(1.0, 12).unwrap();
        assert!(m.area_centroid().coords.norm() < 1e-9);
    }

    #[test]
    fn normals_point_outward() {
        let m = build_sphere_graded(2.0, 10, 2.0).unwrap();
        for p in &m.panels {
            assert!(p.normal.dot(&p.centroid.coords) > 0.0);
        }
    }

    #[test]
    fn truncated_cap_area_converges_to_2_pi_r_h() {
        let (r, h) = (0.15e-3, 0.05e-3);
        let m = build_truncated_sphere(r, h, 32).unwrap();
        // the flat back disc panels all share the cut plane and +z normal
        let z_cut = m
            .panels
            .iter()
            .filter(|p| p.normal.z > 0.999)
            .map(|p| p.centroid.z)
            .fold(f64::NEG_INFINITY, f64::max);
        let curved: f64 = m
            .panels
            .iter()
            .filter(|p| (p.centroid.z - z_cut).abs() > 1e-7 * r || p.normal.z < 0.999)
            .map(|p| p.area)
            .sum();
        let exact = 2.0 * PI * r * h; // ~0.0471 mm^2
        assert!((curved - exact).abs() / exact < 5e-3, "cap area {curved} vs {exact}");
    }

    #[test]
    fn full_height_truncation_equals_whole_sphere() {
        let whole = build_sphere(1.0, 10).unwrap();
        let t = build_truncated_sphere(1.0, 2.0, 10).unwrap();
        assert_eq!(t.shape, ShapeTag::TruncatedSphere);
        assert!((t.total_area() - whole.total_area()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_cap_heights_rejected() {
        assert!(build_truncated_sphere(1.0, 0.0, 10).is_err());
        assert!(build_truncated_sphere(1.0, 1e-12, 10).is_err());
        assert!(build_truncated_sphere(1.0, 2.5, 10).is_err());
        assert!(build_sphere(-1.0, 10).is_err());
    }

    #[test]
    fn lowest_vertex_sits_near_minus_r() {
        // the compensated pole dips just below -R by the band sagitta
        let r = 0.15e-3;
        let m = build_truncated_sphere_graded(r, 3e-6, 16, 2.0).unwrap();
        let z = m.min_z();
        assert!(z <= -r && z > -1.001 * r, "min z {z}");
    }
}
