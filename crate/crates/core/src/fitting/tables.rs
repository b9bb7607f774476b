//! Summary tables of the calibration fits across geometries.

use super::{fit, FitModel, FitResult, Weighting};
use crate::numdiff::{CapacitanceCurve, DerivedCurve};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Capacitance curves and fit windows for the four reference geometries.
pub struct TableOneInputs<'a> {
    /// Parallel plates; power-law fit with ideal exponent 1.
    pub plates: (&'a CapacitanceCurve, (f64, f64)),
    /// Whole sphere; logarithmic fit (no exponent exists).
    pub sphere: (&'a CapacitanceCurve, (f64, f64)),
    /// Truncated sphere; logarithmic fit.
    pub truncated_sphere: (&'a CapacitanceCurve, (f64, f64)),
    /// Truncated narrow cylinder; power-law fit with ideal exponent 0.5.
    pub cylinder: (&'a CapacitanceCurve, (f64, f64)),
    pub weights: Weighting,
}

/// One geometry column: the fixed-exponent fit, and where the model has an
/// exponent, the free-exponent refit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableOneColumn {
    pub geometry: String,
    pub d_min: f64,
    pub fixed: FitResult,
    pub free: Option<FitResult>,
}

impl TableOneColumn {
    pub fn d0_over_dmin(&self) -> f64 {
        self.fixed.d0.value / self.d_min
    }

    pub fn d0_free_over_dmin(&self) -> Option<f64> {
        self.free.as_ref().map(|f| f.d0.value / self.d_min)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableOne {
    pub columns: Vec<TableOneColumn>,
}

/// Fit the distance offset `d0` for the four capacitance configurations.
///
/// Plates and cylinder get a fixed-exponent fit (1 and 0.5) plus a
/// free-exponent variant; the sphere columns use the logarithmic model,
/// where no exponent can be introduced.
pub fn table_one(inputs: &TableOneInputs) -> Result<TableOne> {
    let mut columns = Vec::new();

    for (name, (curve, window), ideal_eps) in [
        ("parallel plates", &inputs.plates, 1.0),
        ("cylinder", &inputs.cylinder, 0.5),
    ] {
        let (d, y) = (curve.distances(), curve.capacitances());
        let fixed_model = FitModel::power_law_cap(ideal_eps).with_fixed_eps(ideal_eps);
        let fixed = fit(d, y, &fixed_model, *window, inputs.weights)?;
        let free = fit(d, y, &FitModel::power_law_cap(ideal_eps), *window, inputs.weights)?;
        columns.push(TableOneColumn {
            geometry: name.to_string(),
            d_min: fixed.d_min(),
            fixed,
            free: Some(free),
        });
    }

    for (name, (curve, window)) in [
        ("whole sphere", &inputs.sphere),
        ("truncated sphere", &inputs.truncated_sphere),
    ] {
        let (d, y) = (curve.distances(), curve.capacitances());
        let fixed = fit(d, y, &FitModel::log_cap(), *window, inputs.weights)?;
        columns.push(TableOneColumn {
            geometry: name.to_string(),
            d_min: fixed.d_min(),
            fixed,
            free: None,
        });
    }

    // order columns as plates, sphere, truncated sphere, cylinder
    columns.swap(1, 2);
    columns.swap(2, 3);
    Ok(TableOne { columns })
}

impl fmt::Display for TableOne {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>14} {:>10} {:>14} {:>10} {:>10}",
            "geometry", "d0 (nm)", "d0/dmin", "d0' (nm)", "d0'/dmin", "eps"
        )?;
        for c in &self.columns {
            let (free_d0, free_ratio, free_eps) = match &c.free {
                Some(fr) => (
                    format!("{:.1}+-{:.1}", fr.d0.value * 1e9, fr.d0.std_err * 1e9),
                    format!("{:.2}%", 100.0 * fr.d0.value / c.d_min),
                    format!("{:.4}", fr.eps.value),
                ),
                None => ("N/A".into(), "N/A".into(), "N/A".into()),
            };
            writeln!(
                f,
                "{:<18} {:>14} {:>10} {:>14} {:>10} {:>10}",
                c.geometry,
                format!("{:.1}+-{:.1}", c.fixed.d0.value * 1e9, c.fixed.d0.std_err * 1e9),
                format!("{:.2}%", 100.0 * c.d0_over_dmin()),
                free_d0,
                free_ratio,
                free_eps,
            )?;
        }
        Ok(())
    }
}

impl TableOne {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "geometry,d_min_m,d0_m,d0_err_m,d0_over_dmin,d0_free_m,d0_free_err_m,d0_free_over_dmin,eps_free,eps_free_err\n",
        );
        for c in &self.columns {
            let (fd0, fde, fdr, fe, fee) = match &c.free {
                Some(fr) => (
                    format!("{:e}", fr.d0.value),
                    format!("{:e}", fr.d0.std_err),
                    format!("{:e}", fr.d0.value / c.d_min),
                    format!("{}", fr.eps.value),
                    format!("{}", fr.eps.std_err),
                ),
                None => (String::new(), String::new(), String::new(), String::new(), String::new()),
            };
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{},{},{},{},{}\n",
                c.geometry,
                c.d_min,
                c.fixed.d0.value,
                c.fixed.d0.std_err,
                c.d0_over_dmin(),
                fd0,
                fde,
                fdr,
                fe,
                fee,
            ));
        }
        s
    }
}

/// One geometry/window row request for the force-fit table.
pub struct TableTwoSpec<'a> {
    pub geometry: String,
    pub curve: &'a DerivedCurve,
    pub window: (f64, f64),
    /// Starting exponent for the free-exponent fit (ideal force exponent).
    pub eps_init: f64,
}

/// Free-exponent force fit `F = F0 + K V^2/(d - d0)^eps` for one window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableTwoRow {
    pub geometry: String,
    pub window: (f64, f64),
    pub result: FitResult,
}

impl TableTwoRow {
    pub fn d0_over_dmin(&self) -> f64 {
        self.result.d0.value / self.result.d_min()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableTwo {
    pub rows: Vec<TableTwoRow>,
}

/// Fit every requested force window with the exponent left free.
pub fn table_two(specs: &[TableTwoSpec], weights: Weighting) -> Result<TableTwo> {
    let mut rows = Vec::with_capacity(specs.len());
    for s in specs {
        let volt = match s.curve.kind {
            crate::numdiff::DerivedKind::Force { volt } => volt,
            crate::numdiff::DerivedKind::Curvature { volt, .. } => volt,
        };
        let model = FitModel::power_law_force(s.eps_init, volt);
        let result = fit(&s.curve.d, &s.curve.y, &model, s.window, weights)?;
        rows.push(TableTwoRow {
            geometry: s.geometry.clone(),
            window: s.window,
            result,
        });
    }
    Ok(TableTwo { rows })
}

impl fmt::Display for TableTwo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>18} {:>14} {:>16} {:>14} {:>10}",
            "geometry", "window (um)", "K_f", "eps_f", "d0 (nm)", "d0/dmin"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<20} {:>18} {:>14} {:>16} {:>14} {:>10}",
                r.geometry,
                format!("{:.1}-{:.1}", r.window.0 * 1e6, r.window.1 * 1e6),
                format!("{:.3e}", r.result.k.value),
                format!("{:.4}+-{:.4}", r.result.eps.value, r.result.eps.std_err),
                format!("{:.1}+-{:.1}", r.result.d0.value * 1e9, r.result.d0.std_err * 1e9),
                format!("{:.2}%", 100.0 * r.d0_over_dmin()),
            )?;
        }
        Ok(())
    }
}

impl TableTwo {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "geometry,window_lo_m,window_hi_m,k_f,k_f_err,eps_f,eps_f_err,d0_m,d0_err_m,d0_over_dmin\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{},{},{:e},{:e},{:e}\n",
                r.geometry,
                r.window.0,
                r.window.1,
                r.result.k.value,
                r.result.k.std_err,
                r.result.eps.value,
                r.result.eps.std_err,
                r.result.d0.value,
                r.result.d0.std_err,
                r.d0_over_dmin(),
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff::{force_curve, log_grid, CapacitanceCurve, CurveMeta, Transform};
    use crate::{analytic, EPSILON_0};

    fn meta(name: &str) -> CurveMeta {
        CurveMeta { geometry: name.into(), resolution: 0, solver: "analytic".into() }
    }

    #[test]
    fn table_one_on_ideal_curves_gives_null_offsets() {
        let plates = CapacitanceCurve::from_fn(
            log_grid(5e-6, 5e-5, 20),
            |d| EPSILON_0 * 78.4996e-6 / d,
            meta("plates"),
        )
        .unwrap();
        let sphere = CapacitanceCurve::from_fn(
            log_grid(2e-7, 3e-6, 20),
            |d| analytic::cap_sphere_ipfa(0.15e-3, d, 0.5).unwrap(),
            meta("sphere"),
        )
        .unwrap();
        let cyl = CapacitanceCurve::from_fn(
            log_grid(4e-7, 1e-5, 20),
            |d| analytic::cap_cylinder_pfa(12e-3, 4e-3, d).unwrap().value,
            meta("cylinder"),
        )
        .unwrap();
        let t = table_one(&TableOneInputs {
            plates: (&plates, (5e-6, 5e-5)),
            sphere: (&sphere, (2e-7, 3e-6)),
            truncated_sphere: (&sphere, (2e-7, 3e-6)),
            cylinder: (&cyl, (4e-7, 1e-5)),
            weights: Weighting::Uniform,
        })
        .unwrap();
        assert_eq!(t.columns.len(), 4);
        assert_eq!(t.columns[0].geometry, "parallel plates");
        assert_eq!(t.columns[3].geometry, "cylinder");
        for c in &t.columns {
            assert!(
                c.d0_over_dmin().abs() < 1e-4,
                "{}: d0/dmin = {}",
                c.geometry,
                c.d0_over_dmin()
            );
        }
        // sphere columns carry no exponent
        assert!(t.columns[1].free.is_none());
        assert!(t.columns[2].free.is_none());
        let text = t.to_string();
        assert!(text.contains("N/A"));
        assert!(t.to_csv().lines().count() == 5);
    }

    #[test]
    fn table_two_recovers_ideal_force_exponents() {
        let plates = CapacitanceCurve::from_fn(
            log_grid(5e-6, 6e-4, 40),
            |d| EPSILON_0 * 78.4996e-6 / d,
            meta("plates"),
        )
        .unwrap();
        let f = force_curve(&plates, 1.0, Transform::Log).unwrap();
        let t = table_two(
            &[TableTwoSpec {
                geometry: "parallel plates".into(),
                curve: &f,
                window: (7e-6, 5e-5),
                eps_init: 2.0,
            }],
            Weighting::Uniform,
        )
        .unwrap();
        let row = &t.rows[0];
        assert!((row.result.eps.value - 2.0).abs() < 1e-6);
        assert!(row.d0_over_dmin().abs() < 1e-6);
        assert!(t.to_string().contains("parallel plates"));
    }
}
