//! Reproduction bundles for the reference figure and table configurations.
//!
//! Each target runs the corresponding geometry set at its published
//! dimensions (8.86 mm square plates; a 0.15 mm sphere over a 0.5 mm plate,
//! centered, edge-offset, and truncated; 12 mm radius cylinders of width 4
//! and 12 mm over a 10 x 28 mm plate) and writes curves, closed-form
//! reference traces, fit tables with reference values attached, and a run
//! manifest into a bundle directory.
//!
//! Geometry choices not fixed by the published dimensions and recorded in
//! every manifest: the truncated sphere uses a shallow lens-like cap with
//! `h/R = 0.02`, and truncated cylinders are cut at half-angle `pi/2`.

use super::{run_sweep, DistanceGrid, SolveCache, SweepPlan};
use crate::bem::SolverSettings;
use crate::fitting::{
    exponent_drift_scan, table_one, table_two, FitModel, TableOneInputs, TableTwoSpec, Weighting,
};
use crate::geometry::ShapeSpec;
use crate::numdiff::{force_curve, log_grid, CapacitanceCurve, Transform};
use crate::{analytic, csvio, Error, Result, EPSILON_0};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Which published figure or table to reproduce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReproduceTarget {
    Fig2,
    Fig3,
    Fig4,
    Table1,
    Table2,
}

impl ReproduceTarget {
    pub fn parse(s: &str) -> Result<ReproduceTarget> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" => Ok(ReproduceTarget::Fig2),
            "fig3" => Ok(ReproduceTarget::Fig3),
            "fig4" => Ok(ReproduceTarget::Fig4),
            "table1" => Ok(ReproduceTarget::Table1),
            "table2" => Ok(ReproduceTarget::Table2),
            other => Err(Error::invalid_spec(format!(
                "unknown target `{other}`; expected fig2|fig3|fig4|table1|table2"
            ))),
        }
    }
}

impl fmt::Display for ReproduceTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReproduceTarget::Fig2 => "fig2",
            ReproduceTarget::Fig3 => "fig3",
            ReproduceTarget::Fig4 => "fig4",
            ReproduceTarget::Table1 => "table1",
            ReproduceTarget::Table2 => "table2",
        };
        f.write_str(s)
    }
}

/// Mesh/grid budget tier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    /// Coarse meshes, 9 distances: seconds, trend-quality only.
    Smoke,
    /// Medium meshes, 25 distances: minutes on a desktop.
    Desk,
    /// Fine meshes, 50 distances.
    Full,
}

impl Tier {
    pub fn parse(s: &str) -> Result<Tier> {
        match s.to_ascii_lowercase().as_str() {
            "smoke" => Ok(Tier::Smoke),
            "desk" => Ok(Tier::Desk),
            "full" => Ok(Tier::Full),
            other => Err(Error::invalid_spec(format!(
                "unknown tier `{other}`; expected smoke|desk|full"
            ))),
        }
    }

    pub fn grid_points(self) -> usize {
        match self {
            Tier::Smoke => 9,
            Tier::Desk => 25,
            Tier::Full => 50,
        }
    }

    fn scale(self, desk_resolution: usize) -> usize {
        let f = match self {
            Tier::Smoke => 0.6,
            Tier::Desk => 1.0,
            Tier::Full => 1.4,
        };
        ((desk_resolution as f64 * f).round() as usize).max(4)
    }

    /// Rough per-solve panel budget; exceeding it earns a manifest warning.
    fn panel_budget(self) -> usize {
        match self {
            Tier::Smoke => 1200,
            Tier::Desk => 4000,
            Tier::Full => 10_000,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tier::Smoke => "smoke",
            Tier::Desk => "desk",
            Tier::Full => "full",
        };
        f.write_str(s)
    }
}

// Published dimensions of the reference configurations.
pub const PLATE_SIDE: f64 = 8.86e-3;
pub const SPHERE_RADIUS: f64 = 0.15e-3;
pub const SPHERE_PLATE_SIDE: f64 = 0.5e-3;
/// Shallow lens-like truncation: cap height over sphere radius.
pub const SPHERE_CAP_RATIO: f64 = 0.02;
pub const CYLINDER_RADIUS: f64 = 12e-3;
pub const CYLINDER_NARROW_LENGTH: f64 = 4e-3;
pub const CYLINDER_WIDE_LENGTH: f64 = 12e-3;
/// Plate under the cylinders: 10 mm along the axis, 28 mm transverse.
pub const CYL_PLATE_ALONG_AXIS: f64 = 10e-3;
pub const CYL_PLATE_TRANSVERSE: f64 = 28e-3;
/// Truncated cylinders are cut at this half-angle.
pub const CYLINDER_HALF_ANGLE: f64 = std::f64::consts::FRAC_PI_2;

/// Parallel-plate sweep behind the plate figure/tables.
pub fn plate_sweep_plan(tier: Tier) -> SweepPlan {
    let spec = ShapeSpec::SquarePlate {
        side: PLATE_SIDE,
        resolution: tier.scale(16),
        refinement: 0.0,
    };
    SweepPlan {
        probe: spec.clone(),
        plate: spec,
        offset: 0.0,
        grid: DistanceGrid { start: 5e-6, end: 8e-3, points: tier.grid_points().max(20) },
        settings: SolverSettings::default(),
        geometry_label: "plates-L8.86mm".into(),
    }
}

/// Sphere-over-plate sweep (whole or truncated, centered or offset).
pub fn sphere_sweep_plan(tier: Tier, offset: f64, truncated: bool) -> SweepPlan {
    let resolution = tier.scale(16);
    let probe = if truncated {
        ShapeSpec::TruncatedSphere {
            radius: SPHERE_RADIUS,
            cap_height: SPHERE_CAP_RATIO * SPHERE_RADIUS,
            resolution,
            refinement: 2.0,
        }
    } else {
        ShapeSpec::Sphere { radius: SPHERE_RADIUS, resolution, refinement: 2.5 }
    };
    let label = match (truncated, offset != 0.0) {
        (true, _) => "sphere-truncated",
        (false, true) => "sphere-edge",
        (false, false) => "sphere-centered",
    };
    SweepPlan {
        probe,
        plate: ShapeSpec::SquarePlate {
            side: SPHERE_PLATE_SIDE,
            resolution: tier.scale(20),
            refinement: 2.5,
        },
        offset,
        grid: DistanceGrid { start: 0.2e-6, end: 25e-6, points: tier.grid_points() },
        settings: SolverSettings::default(),
        geometry_label: label.into(),
    }
}

/// Cylinder-over-plate sweep.
pub fn cylinder_sweep_plan(tier: Tier, length: f64, truncated: bool) -> SweepPlan {
    let half_angle = if truncated {
        CYLINDER_HALF_ANGLE
    } else {
        std::f64::consts::PI
    };
    let probe = if truncated {
        ShapeSpec::TruncatedCylinder {
            radius: CYLINDER_RADIUS,
            length,
            half_angle,
            resolution: tier.scale(40),
            refinement: 3.0,
        }
    } else {
        ShapeSpec::Cylinder { radius: CYLINDER_RADIUS, length, resolution: tier.scale(40), refinement: 3.0 }
    };
    let label = format!(
        "cylinder-{}-{}mm",
        if truncated { "trunc" } else { "whole" },
        (length * 1e3).round() as i64
    );
    SweepPlan {
        probe,
        // x is transverse to the axis (the 28 mm direction), y along it
        plate: ShapeSpec::RectPlate {
            side_x: CYL_PLATE_TRANSVERSE,
            side_y: CYL_PLATE_ALONG_AXIS,
            resolution: tier.scale(36),
            refinement: 3.0,
        },
        offset: 0.0,
        grid: DistanceGrid { start: 0.4e-6, end: 160e-6, points: tier.grid_points() },
        settings: SolverSettings::default(),
        geometry_label: label,
    }
}

/// Key-value manifest describing a bundle; written as plain text.
#[derive(Clone, Debug, Default)]
pub struct BundleManifest {
    pub entries: Vec<(String, String)>,
}

impl BundleManifest {
    fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(&format!("{k}={v}\n"));
        }
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Run a reproduction target and write its bundle under `out_dir`.
pub fn reproduce(
    target: ReproduceTarget,
    tier: Tier,
    out_dir: impl AsRef<Path>,
    cache: Option<&SolveCache>,
) -> Result<BundleManifest> {
    let bundle = out_dir.as_ref().join(format!("{target}_{tier}"));
    std::fs::create_dir_all(&bundle)?;
    let mut manifest = BundleManifest::default();
    manifest.push("target", target);
    manifest.push("tier", tier);
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    manifest.push("sphere_cap_ratio", SPHERE_CAP_RATIO);
    manifest.push("cylinder_half_angle_rad", CYLINDER_HALF_ANGLE);

    match target {
        ReproduceTarget::Fig2 => fig2(&bundle, tier, cache, &mut manifest)?,
        ReproduceTarget::Fig3 => fig3(&bundle, tier, cache, &mut manifest)?,
        ReproduceTarget::Fig4 => fig4(&bundle, tier, cache, &mut manifest)?,
        ReproduceTarget::Table1 => table1(&bundle, tier, cache, &mut manifest)?,
        ReproduceTarget::Table2 => table2_bundle(&bundle, tier, cache, &mut manifest)?,
    }

    // timestamps are confined to the manifest so data files stay bit-stable
    manifest.push(
        "unix_time",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    );
    manifest.write(&bundle.join("manifest.txt"))?;
    Ok(manifest)
}

fn run_recorded(
    plan: &SweepPlan,
    tier: Tier,
    cache: Option<&SolveCache>,
    manifest: &mut BundleManifest,
) -> Result<CapacitanceCurve> {
    let probe_panels = plan.probe.build()?.len();
    let plate_panels = plan.plate.build()?.len();
    if probe_panels + plate_panels > tier.panel_budget() {
        manifest.push(
            &format!("warning_{}", plan.geometry_label),
            format!(
                "panel count {} exceeds the {tier} tier budget {}",
                probe_panels + plate_panels,
                tier.panel_budget()
            ),
        );
    }
    let (curve, record) = run_sweep(plan, cache)?;
    manifest.push(&format!("plan_hash_{}", plan.geometry_label), &record.plan_hash);
    manifest.push(
        &format!("panels_{}", plan.geometry_label),
        probe_panels + plate_panels,
    );
    manifest.push(
        &format!("solve_millis_{}", plan.geometry_label),
        record.total_millis(),
    );
    Ok(curve)
}

fn write(path: PathBuf, text: String) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn fig2(bundle: &Path, tier: Tier, cache: Option<&SolveCache>, m: &mut BundleManifest) -> Result<()> {
    let plan = plate_sweep_plan(tier);
    let curve = run_recorded(&plan, tier, cache, m)?;
    write(bundle.join("capacitance_plates.csv"), csvio::capacitance_to_csv(&curve))?;

    let area = PLATE_SIDE * PLATE_SIDE;
    let mut reference = String::from("d_m,C_ideal_F\n");
    for d in curve.distances() {
        reference.push_str(&format!("{d:.12e},{:.12e}\n", EPSILON_0 * area / d));
    }
    write(bundle.join("reference_ideal.csv"), reference)?;

    // growing windows reaching into the d ~ L regime
    let d_min = curve.distances()[0];
    let d_maxes = log_grid(2e-4, 8e-3, 10);
    let base = FitModel::power_law_cap(1.0).with_fixed_k(EPSILON_0 * area);
    let scan = exponent_drift_scan(&curve, &base, &d_maxes, Weighting::RelativeError)?;
    let mut drift = String::from(
        "d_max_m,eps_fixed_d0,eps_fixed_d0_err,eps_free_d0,eps_free_d0_err,d0_free_m\n",
    );
    for p in &scan {
        drift.push_str(&format!(
            "{:.12e},{},{},{},{},{:e}\n",
            p.d_max,
            p.fixed_d0.eps.value,
            p.fixed_d0.eps.std_err,
            p.free_d0.eps.value,
            p.free_d0.eps.std_err,
            p.free_d0.d0.value,
        ));
    }
    write(bundle.join("exponent_drift.csv"), drift)?;
    m.push("drift_windows", scan.len());
    m.push("drift_d_min_m", d_min);
    Ok(())
}

fn fig3(bundle: &Path, tier: Tier, cache: Option<&SolveCache>, m: &mut BundleManifest) -> Result<()> {
    let configs = [
        ("sphere_centered", sphere_sweep_plan(tier, 0.0, false)),
        ("sphere_edge", sphere_sweep_plan(tier, 0.5 * SPHERE_PLATE_SIDE, false)),
        ("sphere_truncated", sphere_sweep_plan(tier, 0.0, true)),
    ];
    let mut grid = None;
    for (name, plan) in configs {
        let curve = run_recorded(&plan, tier, cache, m)?;
        grid.get_or_insert_with(|| curve.distances().to_vec());
        write(
            bundle.join(format!("capacitance_{name}.csv")),
            csvio::capacitance_to_csv(&curve),
        )?;
    }
    let mut reference = String::from("d_m,C_exact_F,C_ipfa_theta0_F,C_ipfa_theta1_F,C_pfa_F\n");
    for &d in grid.as_deref().unwrap_or_default() {
        reference.push_str(&format!(
            "{d:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            analytic::cap_sphere_exact(SPHERE_RADIUS, d, 1e-12)?.capacitance,
            analytic::cap_sphere_ipfa(SPHERE_RADIUS, d, 0.0)?,
            analytic::cap_sphere_ipfa(SPHERE_RADIUS, d, 1.0)?,
            analytic::cap_sphere_pfa(SPHERE_RADIUS, d)?,
        ));
    }
    write(bundle.join("reference_traces.csv"), reference)?;
    Ok(())
}

fn fig4(bundle: &Path, tier: Tier, cache: Option<&SolveCache>, m: &mut BundleManifest) -> Result<()> {
    let configs = [
        ("cyl_narrow_trunc", CYLINDER_NARROW_LENGTH, true),
        ("cyl_narrow_whole", CYLINDER_NARROW_LENGTH, false),
        ("cyl_wide_trunc", CYLINDER_WIDE_LENGTH, true),
        ("cyl_wide_whole", CYLINDER_WIDE_LENGTH, false),
    ];
    let mut columns: Vec<(String, Vec<f64>, f64)> = Vec::new();
    let mut grid: Option<Vec<f64>> = None;
    for (name, length, truncated) in configs {
        let plan = cylinder_sweep_plan(tier, length, truncated);
        let curve = run_recorded(&plan, tier, cache, m)?;
        write(
            bundle.join(format!("capacitance_{name}.csv")),
            csvio::capacitance_to_csv(&curve),
        )?;
        let l_eff = super::effective_length(length, CYL_PLATE_ALONG_AXIS);
        grid.get_or_insert_with(|| curve.distances().to_vec());
        columns.push((name.to_string(), curve.capacitances().to_vec(), l_eff));
        m.push(&format!("l_eff_{name}"), l_eff);
    }
    // per-unit-effective-length comparison against the closed form
    let grid = grid.unwrap_or_default();
    let mut cmp = String::from("d_m");
    for (name, _, _) in &columns {
        cmp.push_str(&format!(",{name}_F_per_m"));
    }
    cmp.push_str(",reference_exact_F_per_m\n");
    for (i, &d) in grid.iter().enumerate() {
        cmp.push_str(&format!("{d:.12e}"));
        for (_, c, l_eff) in &columns {
            cmp.push_str(&format!(",{:.12e}", c[i] / l_eff));
        }
        let per_len = analytic::cap_cylinder_exact(CYLINDER_RADIUS, 1.0, d)?;
        cmp.push_str(&format!(",{per_len:.12e}\n"));
    }
    write(bundle.join("fig4_comparison.csv"), cmp)?;
    Ok(())
}

// Published reference values attached to the table bundles for comparison.
// Ordering matches the table rows produced below.
const TABLE1_REFERENCE: &[(&str, f64, f64, &str)] = &[
    ("parallel plates", -90e-9, 20e-9, "d0 at eps fixed to 1"),
    ("whole sphere", 13e-9, 3e-9, "d0 of the log fit"),
    ("truncated sphere", 144e-9, 13e-9, "d0 of the log fit"),
    ("cylinder", -18e-9, 3e-9, "d0 at eps fixed to 0.5"),
];

const TABLE2_REFERENCE: &[(&str, f64, f64, f64, f64)] = &[
    // geometry/window, K_f, eps_f, d0 (m), d0/dmin
    ("parallel plates 7-50um", 3.59e-16, 1.9971, 10.5e-9, 0.0015),
    ("parallel plates 50-450um", 4.4e-16, 1.973, 800e-9, 0.016),
    ("whole sphere 0.2-3um", 6.1e-15, 0.97, 2e-9, 0.010),
    ("whole sphere 3-25um", 1.4e-15, 1.10, -430e-9, 0.143),
    ("truncated sphere 0.2-3um", 4.3e-17, 1.30, -35e-9, 0.175),
    ("truncated sphere 3-25um", 1.4e-21, 1.92, -480e-9, 0.160),
    ("truncated cylinder 0.5-10um", 36.4e-16, 1.513, -5.8e-9, 0.012),
    ("truncated cylinder 10-160um", 29.2e-16, 1.538, -370e-9, 0.037),
];

/// Fit windows for the capacitance table (m).
pub const TABLE1_PLATE_WINDOW: (f64, f64) = (5e-6, 50e-6);
pub const TABLE1_SPHERE_WINDOW: (f64, f64) = (0.2e-6, 3e-6);
pub const TABLE1_CYLINDER_WINDOW: (f64, f64) = (0.4e-6, 10e-6);

/// Force-fit windows (m) per geometry, small and large.
pub const TABLE2_PLATE_WINDOWS: [(f64, f64); 2] = [(7e-6, 50e-6), (50e-6, 450e-6)];
pub const TABLE2_SPHERE_WINDOWS: [(f64, f64); 2] = [(0.2e-6, 3e-6), (3e-6, 25e-6)];
pub const TABLE2_CYLINDER_WINDOWS: [(f64, f64); 2] = [(0.5e-6, 10e-6), (10e-6, 160e-6)];

/// Curves for the four table geometries, reused by both table targets.
pub struct TableCurves {
    pub plates: CapacitanceCurve,
    pub sphere: CapacitanceCurve,
    pub truncated_sphere: CapacitanceCurve,
    pub cylinder: CapacitanceCurve,
}

/// Solve the four geometry sweeps behind the tables.
pub fn table_curves(tier: Tier, cache: Option<&SolveCache>) -> Result<TableCurves> {
    let mut manifest = BundleManifest::default();
    Ok(TableCurves {
        plates: run_recorded(&plate_sweep_plan(tier), tier, cache, &mut manifest)?,
        sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, false), tier, cache, &mut manifest)?,
        truncated_sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, true), tier, cache, &mut manifest)?,
        cylinder: run_recorded(
            &cylinder_sweep_plan(tier, CYLINDER_NARROW_LENGTH, true),
            tier,
            cache,
            &mut manifest,
        )?,
    })
}

fn table1(bundle: &Path, tier: Tier, cache: Option<&SolveCache>, m: &mut BundleManifest) -> Result<()> {
    let curves = TableCurves {
        plates: run_recorded(&plate_sweep_plan(tier), tier, cache, m)?,
        sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, false), tier, cache, m)?,
        truncated_sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, true), tier, cache, m)?,
        cylinder: run_recorded(
            &cylinder_sweep_plan(tier, CYLINDER_NARROW_LENGTH, true),
            tier,
            cache,
            m,
        )?,
    };
    for (name, curve) in [
        ("plates", &curves.plates),
        ("sphere", &curves.sphere),
        ("sphere_truncated", &curves.truncated_sphere),
        ("cylinder", &curves.cylinder),
    ] {
        write(
            bundle.join(format!("capacitance_{name}.csv")),
            csvio::capacitance_to_csv(curve),
        )?;
    }
    let table = table_one(&TableOneInputs {
        plates: (&curves.plates, TABLE1_PLATE_WINDOW),
        sphere: (&curves.sphere, TABLE1_SPHERE_WINDOW),
        truncated_sphere: (&curves.truncated_sphere, TABLE1_SPHERE_WINDOW),
        cylinder: (&curves.cylinder, TABLE1_CYLINDER_WINDOW),
        weights: Weighting::Uniform,
    })?;
    write(bundle.join("table1.txt"), table.to_string())?;

    let mut csv = String::from(
        "geometry,d0_m,d0_err_m,d0_over_dmin,reference_d0_m,reference_d0_err_m,reference_note\n",
    );
    for (col, reference) in table.columns.iter().zip(TABLE1_REFERENCE) {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{}\n",
            col.geometry,
            col.fixed.d0.value,
            col.fixed.d0.std_err,
            col.d0_over_dmin(),
            reference.1,
            reference.2,
            reference.3,
        ));
    }
    write(bundle.join("table1.csv"), csv)?;
    write(bundle.join("table1_full.csv"), table.to_csv())?;
    Ok(())
}

fn table2_bundle(
    bundle: &Path,
    tier: Tier,
    cache: Option<&SolveCache>,
    m: &mut BundleManifest,
) -> Result<()> {
    let curves = TableCurves {
        plates: run_recorded(&plate_sweep_plan(tier), tier, cache, m)?,
        sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, false), tier, cache, m)?,
        truncated_sphere: run_recorded(&sphere_sweep_plan(tier, 0.0, true), tier, cache, m)?,
        cylinder: run_recorded(
            &cylinder_sweep_plan(tier, CYLINDER_NARROW_LENGTH, true),
            tier,
            cache,
            m,
        )?,
    };
    // plates and cylinder differentiate log-log; spheres semilog
    let volt = 1.0;
    let f_plates = force_curve(&curves.plates, volt, Transform::Log)?;
    let f_sphere = force_curve(&curves.sphere, volt, Transform::SemiLog)?;
    let f_trunc = force_curve(&curves.truncated_sphere, volt, Transform::SemiLog)?;
    let f_cyl = force_curve(&curves.cylinder, volt, Transform::Log)?;
    for (name, f) in [
        ("plates", &f_plates),
        ("sphere", &f_sphere),
        ("sphere_truncated", &f_trunc),
        ("cylinder", &f_cyl),
    ] {
        write(bundle.join(format!("force_{name}.csv")), csvio::derived_to_csv(f))?;
    }

    let mut specs = Vec::new();
    for (geometry, curve, windows, eps_init) in [
        ("parallel plates", &f_plates, TABLE2_PLATE_WINDOWS, 2.0),
        ("whole sphere", &f_sphere, TABLE2_SPHERE_WINDOWS, 1.0),
        ("truncated sphere", &f_trunc, TABLE2_SPHERE_WINDOWS, 1.0),
        ("truncated cylinder", &f_cyl, TABLE2_CYLINDER_WINDOWS, 1.5),
    ] {
        for window in windows {
            specs.push(TableTwoSpec {
                geometry: geometry.to_string(),
                curve,
                window,
                eps_init,
            });
        }
    }
    let table = table_two(&specs, Weighting::Uniform)?;
    write(bundle.join("table2.txt"), table.to_string())?;

    let mut csv = String::from(
        "geometry,window_lo_m,window_hi_m,k_f,eps_f,eps_f_err,d0_m,d0_over_dmin,\
         reference_k_f,reference_eps_f,reference_d0_m,reference_d0_over_dmin\n",
    );
    for (row, reference) in table.rows.iter().zip(TABLE2_REFERENCE) {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{},{},{:e},{:e},{:e},{},{:e},{:e}\n",
            row.geometry,
            row.window.0,
            row.window.1,
            row.result.k.value,
            row.result.eps.value,
            row.result.eps.std_err,
            row.result.d0.value,
            row.d0_over_dmin(),
            reference.1,
            reference.2,
            reference.3,
            reference.4,
        ));
    }
    write(bundle.join("table2.csv"), csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_and_tier_parsing() {
        assert_eq!(ReproduceTarget::parse("Fig2").unwrap(), ReproduceTarget::Fig2);
        assert_eq!(ReproduceTarget::parse("table1").unwrap(), ReproduceTarget::Table1);
        assert!(ReproduceTarget::parse("fig9").is_err());
        assert_eq!(Tier::parse("desk").unwrap(), Tier::Desk);
        assert!(Tier::parse("huge").is_err());
        assert_eq!(Tier::Smoke.grid_points(), 9);
        assert_eq!(Tier::Full.grid_points(), 50);
    }

    #[test]
    fn plans_carry_published_dimensions() {
        let p = plate_sweep_plan(Tier::Desk);
        match p.probe {
            ShapeSpec::SquarePlate { side, .. } => assert_eq!(side, 8.86e-3),
            _ => panic!("plate probe expected"),
        }
        let s = sphere_sweep_plan(Tier::Desk, 0.0, true);
        match s.probe {
            ShapeSpec::TruncatedSphere { radius, cap_height, .. } => {
                assert_eq!(radius, 0.15e-3);
                assert!((cap_height - 3e-6).abs() < 1e-18);
            }
            _ => panic!("truncated sphere expected"),
        }
        let c = cylinder_sweep_plan(Tier::Desk, CYLINDER_WIDE_LENGTH, false);
        match c.probe {
            ShapeSpec::Cylinder { radius, length, .. } => {
                assert_eq!(radius, 12e-3);
                assert_eq!(length, 12e-3);
            }
            _ => panic!("whole cylinder expected"),
        }
        // smoke tier coarsens but keeps dimensions
        let sm = sphere_sweep_plan(Tier::Smoke, 0.0, false);
        assert!(sm.probe.resolution() < s.probe.resolution() + 10);
    }
}
