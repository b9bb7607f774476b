//! Charge-based boundary-element solver.
//!
//! Panels carry piecewise-constant charge; collocation at panel centroids
//! with prescribed conductor potentials gives a dense influence system
//! `P q = v`. The two-conductor capacitance is extracted from the probe
//! charge under an antisymmetric drive `+-V/2`, `C = Q_probe / (V_probe -
//! V_plate)`, which for an isolated pair equals the field-energy form
//! `2 W_el / V^2`.

pub mod kernel;

use crate::geometry::{GeometryScene, Panel};
use crate::{Error, Result, EPSILON_0};
use nalgebra::{DMatrix, DVector, Point3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// How the dense system is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    /// Cholesky on the symmetrized matrix, LU fallback.
    DirectDense,
    /// Jacobi-preconditioned conjugate gradients.
    IterativeCg,
}

/// Assembly and solve controls.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    /// 0 evaluates the exact panel integral for every entry; k >= 1 switches
    /// far pairs to a quadrature rule of that order.
    pub quadrature_order: usize,
    /// Pairs farther than this many source-panel diameters count as far.
    pub far_threshold: f64,
    pub method: SolveMethod,
    /// Relative residual target for the iterative solve.
    pub iterative_tol: f64,
    pub max_iterations: usize,
    /// Assembly refuses scenes above this panel count (dense-memory guard).
    pub max_panels: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            quadrature_order: 0,
            far_threshold: 8.0,
            method: SolveMethod::DirectDense,
            iterative_tol: 1e-10,
            max_iterations: 5000,
            max_panels: 12_000,
        }
    }
}

/// Dense panel-to-panel potential coefficients for one scene.
///
/// Rows/columns are ordered probe panels first, then plate panels.
#[derive(Clone, Debug)]
pub struct InfluenceMatrix {
    entries: DMatrix<f64>,
    n_probe: usize,
    n_plate: usize,
    /// Largest relative asymmetry observed before symmetrization.
    pub max_rel_asymmetry: f64,
}

impl InfluenceMatrix {
    pub fn len(&self) -> usize {
        self.n_probe + self.n_plate
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_probe(&self) -> usize {
        self.n_probe
    }

    pub fn n_plate(&self) -> usize {
        self.n_plate
    }

    /// Row index of a probe (`true`) or plate (`false`) panel.
    pub fn row_of(&self, probe: bool, panel_index: usize) -> usize {
        if probe {
            panel_index
        } else {
            self.n_probe + panel_index
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Binary dump: 8-byte little-endian panel count, then row-major
    /// little-endian f64 entries.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.len() as u64;
        w.write_all(&n.to_le_bytes())?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                w.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a dump written by [`InfluenceMatrix::write_binary`]; the probe
    /// split is not stored, so the caller supplies it.
    pub fn read_binary<R: Read>(mut r: R, n_probe: usize) -> Result<InfluenceMatrix> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let n = u64::from_le_bytes(head) as usize;
        if n_probe > n {
            return Err(Error::Parse(format!("probe split {n_probe} exceeds size {n}")));
        }
        let mut buf = vec![0u8; 8 * n * n];
        r.read_exact(&mut buf)?;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let off = 8 * (i * n + j);
                m[(i, j)] = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            }
        }
        Ok(InfluenceMatrix {
            entries: m,
            n_probe,
            n_plate: n - n_probe,
            max_rel_asymmetry: 0.0,
        })
    }
}

/// Conductor potentials applied to the pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub v_probe: f64,
    pub v_plate: f64,
}

impl Drive {
    /// The antisymmetric `+-V/2` drive used for capacitance extraction.
    pub fn antisymmetric(v: f64) -> Drive {
        Drive { v_probe: 0.5 * v, v_plate: -0.5 * v }
    }
}

/// Solved surface charges for one drive.
#[derive(Clone, Debug)]
pub struct ChargeSolution {
    pub panel_charges: DVector<f64>,
    pub q_probe: f64,
    pub q_plate: f64,
    pub drive: Drive,
    /// Relative residual `|Pq - v| / |v|` of the returned solution.
    pub residual_norm: f64,
    /// Conjugate-gradient iterations, when the iterative path ran.
    pub iterations: usize,
}

/// Assemble the influence matrix for a scene.
///
/// Entry `(i, j)` is the potential at centroid `i` per unit charge on panel
/// `j`; the matrix is symmetrized after assembly (the raw asymmetry is kept
/// as a diagnostic).
pub fn assemble(scene: &GeometryScene, settings: &SolverSettings) -> Result<InfluenceMatrix> {
    let n_probe = scene.probe.len();
    let n_plate = scene.plate.len();
    let n = n_probe + n_plate;
    if n == 0 {
        return Err(Error::Assembly("empty scene".into()));
    }
    if n > settings.max_panels {
        return Err(Error::Assembly(format!(
            "{n} panels exceed the configured cap of {} (dense storage is N^2 doubles; \
             raise max_panels or coarsen the mesh)",
            settings.max_panels
        )));
    }
    let panels: Vec<&Panel> = scene
        .probe
        .panels
        .iter()
        .chain(scene.plate.panels.iter())
        .collect();

    // overlapping or duplicated panels make the collocation system singular
    let scale = scene
        .probe
        .characteristic_size
        .max(scene.plate.characteristic_size);
    let mut sorted: Vec<(usize, &Point3<f64>)> =
        panels.iter().map(|p| &p.centroid).enumerate().collect();
    sorted.sort_by(|a, b| {
        (a.1.x.total_cmp(&b.1.x))
            .then(a.1.y.total_cmp(&b.1.y))
            .then(a.1.z.total_cmp(&b.1.z))
    });
    for w in sorted.windows(2) {
        if (w[0].1 - w[1].1).norm() < 1e-12 * scale {
            return Err(Error::Assembly(format!(
                "panels {} and {} share a centroid (overlapping mesh?)",
                w[0].0, w[1].0
            )));
        }
    }

    let mut entries = DMatrix::<f64>::zeros(n, n);
    {
        let rows: Vec<_> = entries.row_iter_mut().collect();
        // rows are independent; each row i collocates at centroid i
        let row_data: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let at = panels[i].centroid;
                (0..n)
                    .map(|j| {
                        let src = panels[j];
                        if settings.quadrature_order == 0 || i == j {
                            kernel::potential_coeff(src, &at)
                        } else {
                            let r = (at - src.centroid).norm();
                            if r > settings.far_threshold * src.diameter() {
                                kernel::potential_coeff_quadrature(
                                    src,
                                    &at,
                                    settings.quadrature_order,
                                )
                            } else {
                                kernel::potential_coeff(src, &at)
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        for (mut row, data) in rows.into_iter().zip(row_data) {
            for (j, v) in data.into_iter().enumerate() {
                row[j] = v;
            }
        }
    }

    // symmetrize; collocation is symmetric only to leading order
    let mut max_rel_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = entries[(i, j)];
            let b = entries[(j, i)];
            let m = 0.5 * (a + b);
            if m.abs() > 0.0 {
                max_rel_asym = max_rel_asym.max(((a - b) / m).abs());
            }
            entries[(i, j)] = m;
            entries[(j, i)] = m;
        }
    }

    // self terms dominate every row for well-formed meshes
    for i in 0..n {
        let diag = entries[(i, i)];
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Assembly(format!(
                "non-positive self coefficient on panel {i} (degenerate panel?)"
            )));
        }
    }

    Ok(InfluenceMatrix {
        entries,
        n_probe,
        n_plate,
        max_rel_asymmetry: max_rel_asym,
    })
}

/// Solve `P q = v` for the panel charges under the given conductor drive.
pub fn solve_charges(
    matrix: &InfluenceMatrix,
    drive: Drive,
    settings: &SolverSettings,
) -> Result<ChargeSolution> {
    if !drive.v_probe.is_finite() || !drive.v_plate.is_finite() {
        return Err(Error::Solver("drive potentials must be finite".into()));
    }
    let n = matrix.len();
    let mut v = DVector::zeros(n);
    for i in 0..matrix.n_probe {
        v[i] = drive.v_probe;
    }
    for i in matrix.n_probe..n {
        v[i] = drive.v_plate;
    }

    let (q, iterations) = match settings.method {
        SolveMethod::DirectDense => (solve_direct(&matrix.entries, &v)?, 0),
        SolveMethod::IterativeCg => solve_cg(
            &matrix.entries,
            &v,
            settings.iterative_tol,
            settings.max_iterations,
        )?,
    };

    let v_norm = v.norm();
    let residual_norm = if v_norm > 0.0 {
        (&matrix.entries * &q - &v).norm() / v_norm
    } else {
        0.0
    };
    if !residual_norm.is_finite() || residual_norm > 1e-6 {
        return Err(Error::Solver(format!(
            "ill-conditioned influence matrix: relative residual {residual_norm:.3e} \
             (diagonal range {:.3e}..{:.3e})",
            (0..n).map(|i| matrix.entries[(i, i)]).fold(f64::INFINITY, f64::min),
            (0..n).map(|i| matrix.entries[(i, i)]).fold(0.0f64, f64::max),
        )));
    }

    let q_probe = q.rows(0, matrix.n_probe).sum();
    let q_plate = q.rows(matrix.n_probe, matrix.n_plate).sum();
    Ok(ChargeSolution {
        panel_charges: q,
        q_probe,
        q_plate,
        drive,
        residual_norm,
        iterations,
    })
}

fn solve_direct(p: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    // symmetrized single-layer matrices are positive definite
    if let Some(chol) = p.clone().cholesky() {
        return Ok(chol.solve(v));
    }
    p.clone()
        .lu()
        .solve(v)
        .ok_or_else(|| Error::Solver("singular influence matrix".into()))
}

fn solve_cg(
    p: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<(DVector<f64>, usize)> {
    let n = b.len();
    let diag: Vec<f64> = (0..n).map(|i| p[(i, i)]).collect();
    let precond = |r: &DVector<f64>| {
        DVector::from_iterator(n, r.iter().zip(&diag).map(|(ri, di)| ri / di))
    };
    let matvec = |x: &DVector<f64>| -> DVector<f64> {
        let xs = x.as_slice();
        let out: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = p.row(i);
                let mut acc = 0.0;
                for j in 0..n {
                    acc += row[j] * xs[j];
                }
                acc
            })
            .collect();
        DVector::from_vec(out)
    };

    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok((DVector::zeros(n), 0));
    }
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut d = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iterations {
        let pd = matvec(&d);
        let alpha = rz / d.dot(&pd);
        x += &d * alpha;
        r -= pd * alpha;
        if r.norm() / b_norm < tol {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        d = z.clone() + d * beta;
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not reach {tol:.1e} in {max_iterations} iterations \
         (residual {:.3e})",
        r.norm() / b_norm
    )))
}

/// Two-conductor capacitance under the antisymmetric unit drive.
pub fn capacitance(scene: &GeometryScene, settings: &SolverSettings) -> Result<f64> {
    Ok(capacitance_detailed(scene, settings)?.0)
}

/// Capacitance plus the underlying charge solution.
pub fn capacitance_detailed(
    scene: &GeometryScene,
    settings: &SolverSettings,
) -> Result<(f64, ChargeSolution)> {
    let matrix = assemble(scene, settings)?;
    let drive = Drive::antisymmetric(1.0);
    let sol = solve_charges(&matrix, drive, settings)?;
    let c = sol.q_probe / (drive.v_probe - drive.v_plate);
    Ok((c, sol))
}

/// Capacitance from the charge facing the gap only.
///
/// For parallel-plate scenes this discards the outer-field (fringing)
/// contribution by integrating the normal field flux through the mid-gap
/// plane over the region where the plates overlap: by Gauss's law that flux
/// equals the inner-face charge of the facing region.
pub fn capacitance_inner_region(
    scene: &GeometryScene,
    settings: &SolverSettings,
) -> Result<f64> {
    if !(scene.probe.shape.is_plate() && scene.plate.shape.is_plate()) {
        return Err(Error::UnsupportedGeometry(
            "inner-region capacitance is defined for parallel-plate scenes".into(),
        ));
    }
    let matrix = assemble(scene, settings)?;
    let drive = Drive::antisymmetric(1.0);
    let sol = solve_charges(&matrix, drive, settings)?;

    let panels: Vec<&Panel> = scene
        .probe
        .panels
        .iter()
        .chain(scene.plate.panels.iter())
        .collect();
    let z_mid = 0.5 * scene.gap;

    // overlap footprint: intersection of the two plates' x/y extents
    let ext = |mesh: &crate::geometry::PanelMesh| {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.panels {
            for v in p.vertices() {
                lo[0] = lo[0].min(v.x);
                lo[1] = lo[1].min(v.y);
                hi[0] = hi[0].max(v.x);
                hi[1] = hi[1].max(v.y);
            }
        }
        (lo, hi)
    };
    let (plo, phi) = ext(&scene.probe);
    let (blo, bhi) = ext(&scene.plate);
    let lo = [plo[0].max(blo[0]), plo[1].max(blo[1])];
    let hi = [phi[0].min(bhi[0]), phi[1].min(bhi[1])];
    if lo[0] >= hi[0] || lo[1] >= hi[1] {
        return Ok(0.0);
    }

    // flux through the mid-gap plane, sampled on the plate grid
    let charges = sol.panel_charges.as_slice();
    let flux: f64 = scene
        .plate
        .panels
        .par_iter()
        .map(|cell| {
            let c = cell.centroid;
            if c.x < lo[0] || c.x > hi[0] || c.y < lo[1] || c.y > hi[1] {
                return 0.0;
            }
            let at = Point3::new(c.x, c.y, z_mid);
            let mut ez = 0.0;
            for (j, p) in panels.iter().enumerate() {
                ez += charges[j] * kernel::field_coeff(p, &at).z;
            }
            ez * cell.area
        })
        .sum();

    // field points from +V/2 (top) to -V/2 (bottom): flux is downward
    let v = drive.v_probe - drive.v_plate;
    Ok(EPSILON_0 * (-flux) / v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{assemble_scene, build_sphere, ShapeSpec};

    fn plate_pair(side: f64, d: f64, n: usize) -> GeometryScene {
        let spec = ShapeSpec::SquarePlate { side, resolution: n, refinement: 0.0 };
        assemble_scene(&spec, &spec, d, 0.0).unwrap()
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn far_apart_panels_couple_like_point_charges() {
        let scene = plate_pair(1.0, 100.0, 2);
        let m = assemble(&scene, &settings()).unwrap();
        // probe panel 0 vs plate panel 0: distance ~100, panel size 0.5
        let expect = |r: f64| 1.0 / (4.0 * std::f64::consts::PI * EPSILON_0 * r);
        let i = m.row_of(true, 0);
        let j = m.row_of(false, 0);
        let got = m.entry(i, j);
        // centroids are vertically aligned at distance 100
        assert!(((got - expect(100.0)) / expect(100.0)).abs() < 1e-3);
    }

    #[test]
    fn swapping_panel_order_permutes_consistently() {
        let scene = plate_pair(1.0, 0.3, 3);
        let m = assemble(&scene, &settings()).unwrap();
        let mut swapped = scene.clone();
        swapped.probe.panels.swap(1, 5);
        let m2 = assemble(&swapped, &settings()).unwrap();
        let perm = |k: usize| match k {
            1 => 5,
            5 => 1,
            other => other,
        };
        for i in 0..6 {
            for j in 0..6 {
                let a = m.entry(perm(i), perm(j));
                let b = m2.entry(i, j);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            }
        }
    }

    #[test]
    fn panel_cap_reports_guidance() {
        let scene = plate_pair(1.0, 0.1, 8);
        let tight = SolverSettings { max_panels: 10, ..settings() };
        match assemble(&scene, &tight) {
            Err(Error::Assembly(msg)) => assert!(msg.contains("max_panels")),
            other => panic!("expected assembly error, got {other:?}"),
        }
    }

    #[test]
    fn isolated_sphere_capacitance() {
        // lone sphere at 1 V: Q -> 4 pi eps0 R under refinement
        let mesh = build_sphere(1.0, 14).unwrap();
        let scene = GeometryScene {
            probe: mesh,
            plate: crate::geometry::build_square_plate(1.0, 2)
                .unwrap()
                .translated(nalgebra::Vector3::new(0.0, 0.0, -1e6)),
            gap: 1e6,
            offset: 0.0,
        };
        let m = assemble(&scene, &settings()).unwrap();
        let sol = solve_charges(&m, Drive { v_probe: 1.0, v_plate: 0.0 }, &settings()).unwrap();
        let isolated = 4.0 * std::f64::consts::PI * EPSILON_0;
        assert!(
            ((sol.q_probe - isolated) / isolated).abs() < 0.01,
            "got {} vs {}",
            sol.q_probe,
            isolated
        );
    }

    #[test]
    fn drive_linearity_and_charge_antisymmetry() {
        let scene = plate_pair(1.0, 0.05, 4);
        let m = assemble(&scene, &settings()).unwrap();
        let s1 = solve_charges(&m, Drive::antisymmetric(1.0), &settings()).unwrap();
        let s3 = solve_charges(&m, Drive::antisymmetric(3.0), &settings()).unwrap();
        for i in 0..m.len() {
            assert!(
                (s3.panel_charges[i] - 3.0 * s1.panel_charges[i]).abs()
                    < 1e-9 * s1.panel_charges.amax(),
            );
        }
        // mirror-symmetric pair: total charge cancels and per-panel charges
        // are antisymmetric across the gap
        let n = m.n_probe();
        let total: f64 = s1.q_probe + s1.q_plate;
        let q_scale: f64 = s1.q_probe.abs();
        assert!(total.abs() < 1e-10 * q_scale);
        for i in 0..n {
            let qa = s1.panel_charges[i];
            let qb = s1.panel_charges[n + i];
            assert!((qa + qb).abs() < 1e-9 * q_scale);
        }
    }

    #[test]
    fn reciprocity_of_mutual_coupling() {
        let probe = ShapeSpec::Sphere { radius: 0.5, resolution: 8, refinement: 0.0 };
        let plate = ShapeSpec::SquarePlate { side: 2.0, resolution: 6, refinement: 0.0 };
        let scene = assemble_scene(&probe, &plate, 0.2, 0.0).unwrap();
        let m = assemble(&scene, &settings()).unwrap();
        // C12 from driving the probe equals C21 from driving the plate
        let a = solve_charges(&m, Drive { v_probe: 1.0, v_plate: 0.0 }, &settings()).unwrap();
        let b = solve_charges(&m, Drive { v_probe: 0.0, v_plate: 1.0 }, &settings()).unwrap();
        let c12 = a.q_plate;
        let c21 = b.q_probe;
        assert!(
            ((c12 - c21) / c12).abs() < 1e-8,
            "reciprocity violated: {c12} vs {c21}"
        );
    }

    #[test]
    fn cg_matches_direct() {
        let scene = plate_pair(1.0, 0.1, 5);
        let m = assemble(&scene, &settings()).unwrap();
        let direct = solve_charges(&m, Drive::antisymmetric(1.0), &settings()).unwrap();
        let cg_settings = SolverSettings {
            method: SolveMethod::IterativeCg,
            iterative_tol: 1e-12,
            ..settings()
        };
        let cg = solve_charges(&m, Drive::antisymmetric(1.0), &cg_settings).unwrap();
        assert!(cg.iterations > 0);
        let diff = (&cg.panel_charges - &direct.panel_charges).amax();
        assert!(diff < 1e-8 * direct.panel_charges.amax());
    }

    #[test]
    fn cg_nonconvergence_reports_residual() {
        let scene = plate_pair(1.0, 0.1, 5);
        let m = assemble(&scene, &settings()).unwrap();
        let strangled = SolverSettings {
            method: SolveMethod::IterativeCg,
            iterative_tol: 1e-14,
            max_iterations: 2,
            ..settings()
        };
        match solve_charges(&m, Drive::antisymmetric(1.0), &strangled) {
            Err(Error::Solver(msg)) => assert!(msg.contains("iterations")),
            other => panic!("expected solver error, got {other:?}"),
        }
    }

    #[test]
    fn binary_dump_round_trips() {
        let scene = plate_pair(1.0, 0.2, 3);
        let m = assemble(&scene, &settings()).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 * m.len() * m.len());
        let back = InfluenceMatrix::read_binary(buf.as_slice(), m.n_probe()).unwrap();
        assert_eq!(back.len(), m.len());
        for i in 0..m.len() {
            for j in 0..m.len() {
                assert_eq!(back.entry(i, j), m.entry(i, j));
            }
        }
    }

    #[test]
    fn inner_region_rejects_curved_probe() {
        let probe = ShapeSpec::Sphere { radius: 0.5, resolution: 6, refinement: 0.0 };
        let plate = ShapeSpec::SquarePlate { side: 2.0, resolution: 4, refinement: 0.0 };
        let scene = assemble_scene(&probe, &plate, 0.1, 0.0).unwrap();
        assert!(matches!(
            capacitance_inner_region(&scene, &settings()),
            Err(Error::UnsupportedGeometry(_))
        ));
    }
}
