//! Zero-thickness rectangular plate meshes.

use super::grading::{edge_graded_points, focus_graded_points, uniform_points};
use super::{Panel, PanelMesh, ShapeTag};
use crate::{Error, Result};
use nalgebra::Point3;

/// How plate grid lines are distributed.
///
/// `Edges` refines toward the plate rim (plate-plate scenes, where the charge
/// density diverges at the free edges). `Focus` refines toward the point
/// beneath a curved probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlateGrading {
    Uniform,
    Edges { strength: f64 },
    Focus { x: f64, y: f64, strength: f64 },
}

impl PlateGrading {
    pub fn edges(strength: f64) -> PlateGrading {
        if strength.abs() < 1e-9 {
            PlateGrading::Uniform
        } else {
            PlateGrading::Edges { strength }
        }
    }

    pub fn focus(x: f64, y: f64, strength: f64) -> PlateGrading {
        if strength.abs() < 1e-9 {
            PlateGrading::Uniform
        } else {
            PlateGrading::Focus { x, y, strength }
        }
    }
}

/// Uniform n x n quad mesh of a square plate in `z = 0`, normals `+z`.
pub fn build_square_plate(side: f64, resolution: usize) -> Result<PanelMesh> {
    build_square_plate_graded(side, resolution, PlateGrading::Uniform)
}

pub fn build_square_plate_graded(
    side: f64,
    resolution: usize,
    grading: PlateGrading,
) -> Result<PanelMesh> {
    let mesh = build_rect_plate_graded(side, side, resolution, resolution, grading)?;
    Ok(PanelMesh { shape: ShapeTag::SquarePlate, ..mesh })
}

/// Uniform rectangular plate; `nx`/`ny` panels along x/y.
pub fn build_rect_plate(side_x: f64, side_y: f64, resolution: usize) -> Result<PanelMesh> {
    let ny = ((resolution as f64 * side_y / side_x).round() as usize).max(2);
    build_rect_plate_graded(side_x, side_y, resolution, ny, PlateGrading::Uniform)
}

pub fn build_rect_plate_graded(
    side_x: f64,
    side_y: f64,
    nx: usize,
    ny: usize,
    grading: PlateGrading,
) -> Result<PanelMesh> {
    if !(side_x > 0.0 && side_y > 0.0) || !side_x.is_finite() || !side_y.is_finite() {
        return Err(Error::invalid_spec(format!(
            "plate sides must be > 0, got {side_x} x {side_y}"
        )));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::invalid_spec("plate resolution must be >= 2"));
    }
    let (hx, hy) = (0.5 * side_x, 0.5 * side_y);
    let (xs, ys) = match grading {
        PlateGrading::Uniform => (uniform_points(-hx, hx, nx), uniform_points(-hy, hy, ny)),
        PlateGrading::Edges { strength } => (
            edge_graded_points(-hx, hx, nx, strength),
            edge_graded_points(-hy, hy, ny, strength),
        ),
        PlateGrading::Focus { x, y, strength } => (
            focus_graded_points(-hx, hx, nx, x, strength),
            focus_graded_points(-hy, hy, ny, y, strength),
        ),
    };
    let mut panels = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            panels.push(Panel::quad(
                Point3::new(xs[i], ys[j], 0.0),
                Point3::new(xs[i + 1], ys[j], 0.0),
                Point3::new(xs[i + 1], ys[j + 1], 0.0),
                Point3::new(xs[i], ys[j + 1], 0.0),
            )?);
        }
    }
    Ok(PanelMesh {
        panels,
        shape: ShapeTag::RectPlate,
        characteristic_size: side_x.max(side_y),
    })
}

/// Tensor plate from explicit grid lines (used by probe-matched plates).
pub fn build_plate_from_grids(xs: &[f64], ys: &[f64]) -> Result<PanelMesh> {
    if xs.len() < 3 || ys.len() < 3 {
        return Err(Error::invalid_spec("plate grids need at least 2 cells per axis"));
    }
    let mut panels = Vec::with_capacity((xs.len() - 1) * (ys.len() - 1));
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            panels.push(Panel::quad(
                Point3::new(xs[i], ys[j], 0.0),
                Point3::new(xs[i + 1], ys[j], 0.0),
                Point3::new(xs[i + 1], ys[j + 1], 0.0),
                Point3::new(xs[i], ys[j + 1], 0.0),
            )?);
        }
    }
    let side_x = xs[xs.len() - 1] - xs[0];
    let side_y = ys[ys.len() - 1] - ys[0];
    Ok(PanelMesh {
        panels,
        shape: ShapeTag::RectPlate,
        characteristic_size: side_x.max(side_y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_plate_area() {
        // L = 8.86 mm -> A = 78.4996 mm^2
        let m = build_square_plate(8.86e-3, 16).unwrap();
        let area = m.total_area();
        assert!((area - 78.4996e-6).abs() / 78.4996e-6 < 1e-12);
    }

    #[test]
    fn unit_plate_coarse_subdivision() {
        let m = build_square_plate(1.0, 2).unwrap();
        assert_eq!(m.len(), 4);
        for p in &m.panels {
            assert!((p.area - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn small_plate_area() {
        let m = build_square_plate(0.5e-3, 10).unwrap();
        assert!((m.total_area() - 0.25e-6).abs() / 0.25e-6 < 1e-12);
    }

    #[test]
    fn graded_plate_keeps_total_area() {
        for grading in [
            PlateGrading::Edges { strength: 2.5 },
            PlateGrading::Focus { x: 0.1, y: -0.2, strength: 3.0 },
        ] {
            let m = build_square_plate_graded(2.0, 12, grading).unwrap();
            assert!((m.total_area() - 4.0).abs() / 4.0 < 1e-12);
        }
    }

    #[test]
    fn invalid_plate_specs_rejected() {
        assert!(build_square_plate(0.0, 4).is_err());
        assert!(build_square_plate(-1.0, 4).is_err());
        assert!(build_square_plate(1.0, 1).is_err());
        assert!(build_rect_plate(1.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn normals_point_up() {
        let m = build_square_plate(1.0, 3).unwrap();
        for p in &m.panels {
            assert!((p.normal.z - 1.0).abs() < 1e-12);
        }
    }
}
