//! End-to-end sweep orchestration.
//!
//! A [`SweepPlan`] fixes the probe/plate geometry, a log-uniform distance
//! grid, and solver settings; [`run_sweep`] solves every distance (in
//! parallel, rigidly translating the same meshes so the discretization
//! error varies smoothly along the curve) and assembles a
//! [`CapacitanceCurve`]. Results are deterministic for a given plan and may
//! be cached on disk keyed by `(scene hash, distance)`.

mod cache;
mod reproduce;

pub use cache::{SolveCache, CACHE_DIR_ENV};
pub use reproduce::{
    cylinder_sweep_plan, plate_sweep_plan, reproduce, sphere_sweep_plan, table_curves,
    BundleManifest, ReproduceTarget, TableCurves, Tier, CYLINDER_HALF_ANGLE,
    CYLINDER_NARROW_LENGTH, CYLINDER_RADIUS, CYLINDER_WIDE_LENGTH, CYL_PLATE_ALONG_AXIS,
    CYL_PLATE_TRANSVERSE, PLATE_SIDE, SPHERE_CAP_RATIO, SPHERE_PLATE_SIDE, SPHERE_RADIUS,
    TABLE1_CYLINDER_WINDOW, TABLE1_PLATE_WINDOW, TABLE1_SPHERE_WINDOW, TABLE2_CYLINDER_WINDOWS,
    TABLE2_PLATE_WINDOWS, TABLE2_SPHERE_WINDOWS,
};

use crate::bem::{self, SolveMethod, SolverSettings};
use crate::geometry::{assemble_scene, ShapeSpec};
use crate::numdiff::{CapacitanceCurve, CurveMeta};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Log-uniform distance grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl DistanceGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.end > self.start) {
            return Err(Error::invalid_spec(format!(
                "distance grid needs 0 < start < end, got [{}, {}]",
                self.start, self.end
            )));
        }
        if self.points < 3 {
            return Err(Error::invalid_spec(format!(
                "distance grid needs >= 3 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        crate::numdiff::log_grid(self.start, self.end, self.points)
    }
}

/// Everything needed to produce one capacitance curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPlan {
    pub probe: ShapeSpec,
    pub plate: ShapeSpec,
    /// Lateral displacement of the probe along the plate x axis (m).
    pub offset: f64,
    pub grid: DistanceGrid,
    pub settings: SolverSettings,
    /// Label written into curve metadata and CSV rows.
    pub geometry_label: String,
}

impl SweepPlan {
    /// Hash of the full plan (geometry, grid, solver settings).
    pub fn plan_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("plan serialization");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex16(&h.finalize())
    }

    /// Hash of everything except the grid: the per-distance cache key base.
    pub fn scene_hash(&self) -> String {
        let canon = serde_json::to_string(&(
            &self.probe,
            &self.plate,
            self.offset,
            &self.settings,
        ))
        .expect("scene serialization");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex16(&h.finalize())
    }

    pub fn validate(&self) -> Result<()> {
        self.probe.validate()?;
        self.plate.validate()?;
        self.grid.validate()
    }
}

fn hex16(digest: &[u8]) -> String {
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Timing and provenance for one solved distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveStat {
    pub d: f64,
    pub capacitance: f64,
    pub panels: usize,
    pub millis: u128,
    pub from_cache: bool,
    /// Set when the iterative solve failed and the dense path recovered it.
    pub fell_back_to_direct: bool,
}

/// Record of a completed sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan_hash: String,
    pub scene_hash: String,
    pub stats: Vec<SolveStat>,
    pub version: String,
}

impl RunRecord {
    pub fn total_millis(&self) -> u128 {
        self.stats.iter().map(|s| s.millis).sum()
    }

    pub fn cache_hits(&self) -> usize {
        self.stats.iter().filter(|s| s.from_cache).count()
    }
}

/// Solve the plan's full distance grid into a capacitance curve.
///
/// Distances are independent solves; iterative non-convergence falls back
/// to the dense direct path (recorded per distance). Any unrecoverable
/// distance fails the sweep with an [`Error::Sweep`] carrying all failures
/// and the successfully solved partial samples.
pub fn run_sweep(plan: &SweepPlan, cache: Option<&SolveCache>) -> Result<(CapacitanceCurve, RunRecord)> {
    plan.validate()?;
    let scene_hash = plan.scene_hash();
    let distances = plan.grid.values();

    let results: Vec<(f64, std::result::Result<SolveStat, String>)> = distances
        .par_iter()
        .map(|&d| (d, solve_one(plan, &scene_hash, d, cache)))
        .collect();

    let mut stats = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut partial = Vec::new();
    for (d, r) in results {
        match r {
            Ok(stat) => {
                partial.push((d, stat.capacitance));
                stats.push(stat);
            }
            Err(msg) => failures.push((d, msg)),
        }
    }
    if !failures.is_empty() {
        let summary = failures[0].1.clone();
        return Err(Error::Sweep {
            total: distances.len(),
            failures,
            partial,
            summary,
        });
    }

    let d: Vec<f64> = stats.iter().map(|s| s.d).collect();
    let c: Vec<f64> = stats.iter().map(|s| s.capacitance).collect();
    let curve = CapacitanceCurve::new(
        d,
        c,
        CurveMeta {
            geometry: plan.geometry_label.clone(),
            resolution: plan.probe.resolution(),
            solver: format!("bem-{:?}", plan.settings.method),
        },
    )?;
    let record = RunRecord {
        plan_hash: plan.plan_hash(),
        scene_hash,
        stats,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok((curve, record))
}

fn solve_one(
    plan: &SweepPlan,
    scene_hash: &str,
    d: f64,
    cache: Option<&SolveCache>,
) -> std::result::Result<SolveStat, String> {
    if let Some(c) = cache.and_then(|c| c.get(scene_hash, d)) {
        return Ok(SolveStat {
            d,
            capacitance: c,
            panels: 0,
            millis: 0,
            from_cache: true,
            fell_back_to_direct: false,
        });
    }
    let start = std::time::Instant::now();
    let scene = assemble_scene(&plan.probe, &plan.plate, d, plan.offset)
        .map_err(|e| e.to_string())?;
    let panels = scene.panel_count();
    let mut fell_back = false;
    let c = match bem::capacitance(&scene, &plan.settings) {
        Ok(c) => c,
        Err(Error::Solver(_)) if plan.settings.method == SolveMethod::IterativeCg => {
            // iterative non-convergence is recoverable: retry dense
            fell_back = true;
            let direct = SolverSettings {
                method: SolveMethod::DirectDense,
                ..plan.settings
            };
            bem::capacitance(&scene, &direct).map_err(|e| e.to_string())?
        }
        Err(e) => return Err(e.to_string()),
    };
    if let Some(cache) = cache {
        // cache write failures must not fail the solve
        let _ = cache.put(scene_hash, d, c);
    }
    Ok(SolveStat {
        d,
        capacitance: c,
        panels,
        millis: start.elapsed().as_millis(),
        from_cache: false,
        fell_back_to_direct: fell_back,
    })
}

/// Overlap length between a cylinder and the plate along the cylinder axis.
pub fn effective_length(cylinder_length: f64, plate_length_along_axis: f64) -> f64 {
    cylinder_length.min(plate_length_along_axis)
}

/// Result of a Richardson extrapolation over mesh refinement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Richardson {
    pub order: f64,
    pub extrapolated: f64,
    /// True when the measured order fell outside [0.5, 4] and was clamped.
    pub clamped: bool,
}

/// Extrapolate a refinement sequence `(n_i, C_i)` to `n -> inf`, assuming
/// `C(n) = C* + A n^-p`. The order is measured from the last three levels
/// and clamped to [0.5, 4] when the sequence is not yet asymptotic.
pub fn richardson(resolutions: &[usize], values: &[f64]) -> Result<Richardson> {
    if resolutions.len() != values.len() || resolutions.len() < 3 {
        return Err(Error::InsufficientPoints(
            "Richardson extrapolation needs >= 3 refinement levels".into(),
        ));
    }
    let k = resolutions.len();
    let (n1, n2, n3) = (
        resolutions[k - 3] as f64,
        resolutions[k - 2] as f64,
        resolutions[k - 1] as f64,
    );
    let (c1, c2, c3) = (values[k - 3], values[k - 2], values[k - 1]);
    let target = (c1 - c2) / (c2 - c3);
    // solve (n1^-p - n2^-p)/(n2^-p - n3^-p) = target for p by bisection
    let ratio = |p: f64| {
        (n1.powf(-p) - n2.powf(-p)) / (n2.powf(-p) - n3.powf(-p))
    };
    let mut order = f64::NAN;
    if target.is_finite() && target > 0.0 {
        let (mut lo, mut hi) = (0.05, 8.0);
        if (ratio(lo) - target) * (ratio(hi) - target) < 0.0 {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (ratio(mid) - target) * (ratio(lo) - target) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            order = 0.5 * (lo + hi);
        }
    }
    let clamped = !(0.5..=4.0).contains(&order) || order.is_nan();
    let p = if clamped { order.clamp(0.5, 4.0) } else { order };
    let p = if p.is_nan() { 1.0 } else { p };
    let denom = (n3 / n2).powf(p) - 1.0;
    Ok(Richardson {
        order: if order.is_nan() { p } else { order },
        extrapolated: c3 + (c3 - c2) / denom,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeSpec;

    fn plate_plan(points: usize) -> SweepPlan {
        let spec = ShapeSpec::SquarePlate { side: 1e-3, resolution: 4, refinement: 0.0 };
        SweepPlan {
            probe: spec.clone(),
            plate: spec,
            offset: 0.0,
            grid: DistanceGrid { start: 1e-6, end: 1e-4, points },
            settings: SolverSettings::default(),
            geometry_label: "tiny-plates".into(),
        }
    }

    #[test]
    fn sweep_produces_sorted_decreasing_curve() {
        let (curve, record) = run_sweep(&plate_plan(5), None).unwrap();
        assert_eq!(curve.len(), 5);
        let c = curve.capacitances();
        for w in c.windows(2) {
            assert!(w[1] < w[0], "capacitance must decrease with distance");
        }
        assert_eq!(record.stats.len(), 5);
        assert_eq!(record.cache_hits(), 0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let plan = plate_plan(4);
        let (a, ra) = run_sweep(&plan, None).unwrap();
        let (b, rb) = run_sweep(&plan, None).unwrap();
        assert_eq!(a.capacitances(), b.capacitances());
        assert_eq!(ra.plan_hash, rb.plan_hash);
    }

    #[test]
    fn plan_hash_tracks_configuration() {
        let p1 = plate_plan(4);
        let mut p2 = plate_plan(4);
        assert_eq!(p1.plan_hash(), p2.plan_hash());
        p2.grid.end *= 2.0;
        assert_ne!(p1.plan_hash(), p2.plan_hash());
        // the scene hash ignores the grid
        assert_eq!(p1.scene_hash(), p2.scene_hash());
        let mut p3 = plate_plan(4);
        p3.settings.quadrature_order = 2;
        assert_ne!(p1.scene_hash(), p3.scene_hash());
    }

    #[test]
    fn invalid_grid_rejected() {
        let mut plan = plate_plan(4);
        plan.grid = DistanceGrid { start: 1e-4, end: 1e-6, points: 5 };
        assert!(run_sweep(&plan, None).is_err());
        plan.grid = DistanceGrid { start: 1e-6, end: 1e-4, points: 2 };
        assert!(run_sweep(&plan, None).is_err());
    }

    #[test]
    fn unrecoverable_failures_carry_partial_results() {
        // a panel cap below the scene size fails every distance the same way
        let mut plan = plate_plan(4);
        plan.settings.max_panels = 3;
        match run_sweep(&plan, None) {
            Err(Error::Sweep { failures, partial, total, .. }) => {
                assert_eq!(total, 4);
                assert_eq!(failures.len(), 4);
                assert!(partial.is_empty());
            }
            other => panic!("expected sweep error, got {other:?}"),
        }
    }

    #[test]
    fn richardson_on_synthetic_sequence() {
        // C(n) = 1 + 3 n^-2
        let ns = [8usize, 16, 32];
        let cs: Vec<f64> = ns.iter().map(|&n| 1.0 + 3.0 / (n * n) as f64).collect();
        let r = richardson(&ns, &cs).unwrap();
        assert!((r.order - 2.0).abs() < 1e-6, "order {}", r.order);
        assert!((r.extrapolated - 1.0).abs() < 1e-9);
        assert!(!r.clamped);
    }

    #[test]
    fn richardson_clamps_non_asymptotic_sequences() {
        let ns = [8usize, 16, 32];
        let cs = [1.0, 1.1, 0.9]; // oscillating: no consistent order
        let r = richardson(&ns, &cs).unwrap();
        assert!(r.clamped);
        assert!(r.extrapolated.is_finite());
    }

    #[test]
    fn effective_length_is_the_overlap() {
        assert_eq!(effective_length(4e-3, 10e-3), 4e-3);
        assert_eq!(effective_length(12e-3, 10e-3), 10e-3);
    }
}
