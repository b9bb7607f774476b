//! Panel meshes for the conductor shapes under study and probe/plate scenes.
//!
//! Conductors are discretized into flat triangular or quadrilateral panels.
//! Curved bodies (spheres, cylinders) may be graded so panels shrink toward
//! the near-gap region, where the surface charge concentrates. Plates are
//! zero-thickness open surfaces; a panel charge is the total for both faces.
//! Truncated bodies are closed with flat back faces so the conductor bounds
//! a well-defined interior.

pub mod grading;

mod cylinder;
mod matched;
mod plate;
mod sphere;

pub use cylinder::{build_cylinder, build_cylinder_graded};
pub use plate::{
    build_rect_plate, build_rect_plate_graded, build_square_plate, build_square_plate_graded,
    PlateGrading,
};
pub use sphere::{
    build_sphere, build_sphere_graded, build_truncated_sphere, build_truncated_sphere_graded,
};

use crate::{Error, Result};
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

/// A flat surface panel: 3 or 4 vertices, centroid, area, outward unit normal.
#[derive(Clone, Debug)]
pub struct Panel {
    verts: [Point3<f64>; 4],
    nverts: u8,
    pub centroid: Point3<f64>,
    pub area: f64,
    pub normal: Vector3<f64>,
}

impl Panel {
    pub fn tri(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) -> Result<Panel> {
        let cross = (b - a).cross(&(c - a));
        let area = 0.5 * cross.norm();
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::invalid_spec("degenerate triangle panel"));
        }
        Ok(Panel {
            verts: [a, b, c, c],
            nverts: 3,
            centroid: Point3::from((a.coords + b.coords + c.coords) / 3.0),
            area,
            normal: cross.normalize(),
        })
    }

    /// Planar quad with vertices in cyclic order. The two triangles
    /// `(a,b,c)` and `(a,c,d)` must agree on orientation and plane.
    pub fn quad(a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) -> Result<Panel> {
        let c1 = (b - a).cross(&(c - a));
        let c2 = (c - a).cross(&(d - a));
        let a1 = 0.5 * c1.norm();
        let a2 = 0.5 * c2.norm();
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(Error::invalid_spec("degenerate quad panel"));
        }
        let n1 = c1 / (2.0 * a1);
        let n2 = c2 / (2.0 * a2);
        if n1.dot(&n2) < 1.0 - 1e-8 {
            return Err(Error::invalid_spec("non-planar or folded quad panel"));
        }
        let area = a1 + a2;
        let cen1 = (a.coords + b.coords + c.coords) / 3.0;
        let cen2 = (a.coords + c.coords + d.coords) / 3.0;
        Ok(Panel {
            verts: [a, b, c, d],
            nverts: 4,
            centroid: Point3::from((cen1 * a1 + cen2 * a2) / area),
            area,
            normal: (c1 + c2).normalize(),
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.verts[..self.nverts as usize]
    }

    /// Longest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max((v[i] - v[j]).norm());
            }
        }
        d
    }

    /// Same panel with reversed vertex order (flipped normal).
    pub fn flipped(&self) -> Panel {
        let mut p = self.clone();
        p.verts[..p.nverts as usize].reverse();
        p.normal = -p.normal;
        p
    }

    pub fn translated(&self, t: Vector3<f64>) -> Panel {
        let mut p = self.clone();
        for v in p.verts.iter_mut() {
            *v += t;
        }
        p.centroid += t;
        p
    }
}

/// Which conductor shape a mesh discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeTag {
    SquarePlate,
    RectPlate,
    Sphere,
    TruncatedSphere,
    Cylinder,
    TruncatedCylinder,
}

impl ShapeTag {
    pub fn is_plate(self) -> bool {
        matches!(self, ShapeTag::SquarePlate | ShapeTag::RectPlate)
    }
}

/// An ordered collection of panels discretizing one conductor surface.
#[derive(Clone, Debug)]
pub struct PanelMesh {
    pub panels: Vec<Panel>,
    pub shape: ShapeTag,
    /// Length scale of the shape: plate side, sphere/cylinder radius.
    pub characteristic_size: f64,
}

impl PanelMesh {
    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn translated(&self, t: Vector3<f64>) -> PanelMesh {
        PanelMesh {
            panels: self.panels.iter().map(|p| p.translated(t)).collect(),
            shape: self.shape,
            characteristic_size: self.characteristic_size,
        }
    }

    pub fn flipped(&self) -> PanelMesh {
        PanelMesh {
            panels: self.panels.iter().map(|p| p.flipped()).collect(),
            shape: self.shape,
            characteristic_size: self.characteristic_size,
        }
    }

    /// Mean panel centroid, area-weighted.
    pub fn area_centroid(&self) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        let mut area = 0.0;
        for p in &self.panels {
            acc += p.centroid.coords * p.area;
            area += p.area;
        }
        Point3::from(acc / area)
    }

    pub fn min_z(&self) -> f64 {
        self.panels
            .iter()
            .flat_map(|p| p.vertices())
            .map(|v| v.z)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_panel_diameter(&self) -> f64 {
        self.panels.iter().map(|p| p.diameter()).fold(0.0, f64::max)
    }
}

/// Declarative description of a conductor shape, as read from config files.
///
/// `resolution` counts panels per characteristic length (plate side, or
/// quarter-circumference for curved bodies). `refinement` is the grading
/// strength toward the near-gap region; 0 disables grading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ShapeSpec {
    SquarePlate {
        side: f64,
        resolution: usize,
        refinement: f64,
    },
    RectPlate {
        side_x: f64,
        side_y: f64,
        resolution: usize,
        refinement: f64,
    },
    Sphere {
        radius: f64,
        resolution: usize,
        refinement: f64,
    },
    TruncatedSphere {
        radius: f64,
        cap_height: f64,
        resolution: usize,
        refinement: f64,
    },
    Cylinder {
        radius: f64,
        length: f64,
        resolution: usize,
        refinement: f64,
    },
    TruncatedCylinder {
        radius: f64,
        length: f64,
        half_angle: f64,
        resolution: usize,
        refinement: f64,
    },
}

impl ShapeSpec {
    pub fn tag(&self) -> ShapeTag {
        match self {
            ShapeSpec::SquarePlate { .. } => ShapeTag::SquarePlate,
            ShapeSpec::RectPlate { .. } => ShapeTag::RectPlate,
            ShapeSpec::Sphere { .. } => ShapeTag::Sphere,
            ShapeSpec::TruncatedSphere { .. } => ShapeTag::TruncatedSphere,
            ShapeSpec::Cylinder { .. } => ShapeTag::Cylinder,
            ShapeSpec::TruncatedCylinder { .. } => ShapeTag::TruncatedCylinder,
        }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            ShapeSpec::SquarePlate { resolution, .. }
            | ShapeSpec::RectPlate { resolution, .. }
            | ShapeSpec::Sphere { resolution, .. }
            | ShapeSpec::TruncatedSphere { resolution, .. }
            | ShapeSpec::Cylinder { resolution, .. }
            | ShapeSpec::TruncatedCylinder { resolution, .. } => resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid_spec(format!("{name} must be > 0, got {v}")))
            }
        };
        match *self {
            ShapeSpec::SquarePlate { side, resolution, .. } => {
                positive(side, "side")?;
                if resolution < 2 {
                    return Err(Error::invalid_spec("plate resolution must be >= 2"));
                }
            }
            ShapeSpec::RectPlate { side_x, side_y, resolution, .. } => {
                positive(side_x, "side_x")?;
                positive(side_y, "side_y")?;
                if resolution < 2 {
                    return Err(Error::invalid_spec("plate resolution must be >= 2"));
                }
            }
            ShapeSpec::Sphere { radius, .. } => positive(radius, "radius")?,
            ShapeSpec::TruncatedSphere { radius, cap_height, .. } => {
                positive(radius, "radius")?;
                if !(cap_height > 1e-9 * radius && cap_height <= 2.0 * radius) {
                    return Err(Error::invalid_spec(format!(
                        "cap_height must be in (0, 2R]; got h/R = {}",
                        cap_height / radius
                    )));
                }
            }
            ShapeSpec::Cylinder { radius, length, .. } => {
                positive(radius, "radius")?;
                positive(length, "length")?;
            }
            ShapeSpec::TruncatedCylinder { radius, length, half_angle, .. } => {
                positive(radius, "radius")?;
                positive(length, "length")?;
                if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI) {
                    return Err(Error::invalid_spec(format!(
                        "half_angle must be in (0, pi]; got {half_angle}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Build the mesh in its canonical local frame.
    ///
    /// Plates lie in `z = 0` centered at the origin with `+z` normals.
    /// Spheres are centered at the origin (near-gap pole at `z = -R`);
    /// cylinders have their axis along `y` (near-gap line at `z = -R`).
    pub fn build(&self) -> Result<PanelMesh> {
        self.validate()?;
        match *self {
            ShapeSpec::SquarePlate { side, resolution, refinement } => {
                build_square_plate_graded(side, resolution, PlateGrading::edges(refinement))
            }
            ShapeSpec::RectPlate { side_x, side_y, resolution, refinement } => {
                let ny = rect_cross_resolution(side_x, side_y, resolution);
                build_rect_plate_graded(
                    side_x,
                    side_y,
                    resolution,
                    ny,
                    PlateGrading::edges(refinement),
                )
            }
            ShapeSpec::Sphere { radius, resolution, refinement } => {
                build_sphere_graded(radius, resolution, refinement)
            }
            ShapeSpec::TruncatedSphere { radius, cap_height, resolution, refinement } => {
                build_truncated_sphere_graded(radius, cap_height, resolution, refinement)
            }
            ShapeSpec::Cylinder { radius, length, resolution, refinement } => {
                build_cylinder_graded(radius, length, resolution, std::f64::consts::PI, refinement)
            }
            ShapeSpec::TruncatedCylinder {
                radius,
                length,
                half_angle,
                resolution,
                refinement,
            } => build_cylinder_graded(radius, length, resolution, half_angle, refinement),
        }
    }

}

fn rect_cross_resolution(side_x: f64, side_y: f64, resolution: usize) -> usize {
    ((resolution as f64 * side_y / side_x).round() as usize).max(2)
}

/// Probe and plate meshes positioned at a prescribed gap.
///
/// The plate lies in the `z = 0` plane centered at the origin. The probe is
/// translated so its lowest surface point sits at `z = gap`, displaced by
/// `offset` along the plate's `x` axis.
#[derive(Clone, Debug)]
pub struct GeometryScene {
    pub probe: PanelMesh,
    pub plate: PanelMesh,
    pub gap: f64,
    pub offset: f64,
}

impl GeometryScene {
    /// Minimum distance from probe panel vertices to the plate rectangle.
    pub fn min_separation(&self) -> f64 {
        let (hx, hy) = plate_half_extents(&self.plate);
        let mut best = f64::INFINITY;
        for p in &self.probe.panels {
            for v in p.vertices() {
                let dx = (v.x.abs() - hx).max(0.0);
                let dy = (v.y.abs() - hy).max(0.0);
                let d = (dx * dx + dy * dy + v.z * v.z).sqrt();
                best = best.min(d);
            }
        }
        best
    }

    pub fn panel_count(&self) -> usize {
        self.probe.len() + self.plate.len()
    }
}

fn plate_half_extents(plate: &PanelMesh) -> (f64, f64) {
    let mut hx = 0.0f64;
    let mut hy = 0.0f64;
    for p in &plate.panels {
        for v in p.vertices() {
            hx = hx.max(v.x.abs());
            hy = hy.max(v.y.abs());
        }
    }
    (hx, hy)
}

/// Position a probe above a plate at the given surface-to-surface gap.
///
/// The plate spec must be a plate shape. For plate probes both plates share
/// the same grid so panel pairs align across the gap; under curved probes
/// the plate grid is matched to the probe's own panel layout (see
/// [`matched`](self) internals), which is what makes small-gap solves
/// converge.
pub fn assemble_scene(
    probe: &ShapeSpec,
    plate: &ShapeSpec,
    gap: f64,
    offset: f64,
) -> Result<GeometryScene> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::invalid_spec(format!("gap must be > 0, got {gap}")));
    }
    if !plate.tag().is_plate() {
        return Err(Error::UnsupportedGeometry(format!(
            "scene plate must be a plate shape, got {:?}",
            plate.tag()
        )));
    }
    let (probe_mesh, plate_mesh) = if probe.tag().is_plate() {
        let base = plate.build()?;
        let top = probe
            .build()?
            .flipped()
            .translated(Vector3::new(offset, 0.0, gap));
        (top, base)
    } else {
        let base = matched::plate_for_probe(plate, probe, offset)?;
        let body = probe.build()?;
        // lift so the lowest mesh vertex sits exactly at z = gap
        let lift = -body.min_z();
        (body.translated(Vector3::new(offset, 0.0, gap + lift)), base)
    };
    Ok(GeometryScene {
        probe: probe_mesh,
        plate: plate_mesh,
        gap,
        offset,
    })
}
