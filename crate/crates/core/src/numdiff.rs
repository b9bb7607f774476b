//! Numerical differentiation of capacitance curves.
//!
//! Capacitance curves are differentiated with the Lagrange three-point
//! formula (valid for unevenly spaced abscissae) after transforming to the
//! domain where the samples are closest to equally spaced and the ideal
//! curve closest to polynomial: the fully logarithmic domain
//! (`ln C` vs `ln d`) for plate-plate and cylinder-plane data, where ideal
//! power laws become straight lines, or the semilogarithmic domain
//! (`C` vs `ln d`) for sphere-plane data, where the ideal log dependence
//! becomes a straight line. Chain rules map the transformed derivatives
//! back to `dC/dd` and `d2C/dd2`.
//!
//! Force and square-frequency-shift observables follow as
//! `F = -1/2 (dC/dd) V^2` and
//! `dnu2 = (1/(8 pi^2 m_eff)) (d2C/dd2) V^2`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Provenance carried along curves.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    /// Geometry label, e.g. `sphere-R0.15mm-plate0.5mm`.
    pub geometry: String,
    /// Mesh resolution parameter behind the samples (0 for analytic curves).
    pub resolution: usize,
    /// Solver or formula label.
    pub solver: String,
}

/// Ordered (distance, capacitance) samples with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceCurve {
    d: Vec<f64>,
    c: Vec<f64>,
    pub meta: CurveMeta,
}

impl CapacitanceCurve {
    /// Samples must have strictly increasing `d` and strictly positive `C`.
    pub fn new(d: Vec<f64>, c: Vec<f64>, meta: CurveMeta) -> Result<CapacitanceCurve> {
        if d.len() != c.len() {
            return Err(Error::invalid_spec(format!(
                "length mismatch: {} distances vs {} capacitances",
                d.len(),
                c.len()
            )));
        }
        if d.is_empty() {
            return Err(Error::InsufficientPoints("empty curve".into()));
        }
        for w in d.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid_spec(format!(
                    "distances must be strictly increasing; {} !< {}",
                    w[0], w[1]
                )));
            }
        }
        if !d[0].is_finite() || !(d[0] > 0.0) {
            return Err(Error::invalid_spec("distances must be positive"));
        }
        for (i, &ci) in c.iter().enumerate() {
            if !(ci > 0.0) || !ci.is_finite() {
                return Err(Error::invalid_spec(format!(
                    "capacitance must be positive and finite; sample {i} is {ci}"
                )));
            }
        }
        Ok(CapacitanceCurve { d, c, meta })
    }

    pub fn from_fn(
        d: Vec<f64>,
        f: impl Fn(f64) -> f64,
        meta: CurveMeta,
    ) -> Result<CapacitanceCurve> {
        let c = d.iter().map(|&x| f(x)).collect();
        CapacitanceCurve::new(d, c, meta)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    pub fn capacitances(&self) -> &[f64] {
        &self.c
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.d.iter().copied().zip(self.c.iter().copied())
    }

    /// Samples restricted to `d` in `[window.0, window.1]`.
    pub fn windowed(&self, window: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
        let mut d = Vec::new();
        let mut c = Vec::new();
        for (x, y) in self.samples() {
            if x >= window.0 && x <= window.1 {
                d.push(x);
                c.push(y);
            }
        }
        (d, c)
    }
}

/// Coordinate transform used before differencing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// `w = ln C` against `u = ln d`; exact for power laws.
    Log,
    /// `C` against `u = ln d`; exact for logarithmic capacitance laws.
    SemiLog,
    /// No transform; exact for polynomials in `d` up to degree 2.
    Direct,
}

/// What a derived curve holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DerivedKind {
    /// Electrostatic force per the first derivative, in newtons.
    Force { volt: f64 },
    /// Square-frequency shift per the second derivative, in Hz^2.
    Curvature { volt: f64, m_eff: f64 },
}

/// (distance, observable) samples produced by differentiation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivedCurve {
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub kind: DerivedKind,
    pub transform: Transform,
    pub meta: CurveMeta,
}

/// Derivative at `at` of the quadratic through three distinct points.
pub fn lagrange3_derivative(xs: &[f64; 3], ys: &[f64; 3], at: f64) -> Result<f64> {
    check_distinct(xs)?;
    let [x0, x1, x2] = *xs;
    let [y0, y1, y2] = *ys;
    let d0 = (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let d1 = (2.0 * at - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let d2 = (2.0 * at - x0 - x1) / ((x2 - x0) * (x2 - x1));
    Ok(y0 * d0 + y1 * d1 + y2 * d2)
}

/// Second derivative (constant) of the quadratic through three points.
pub fn lagrange3_second_derivative(xs: &[f64; 3], ys: &[f64; 3]) -> Result<f64> {
    check_distinct(xs)?;
    let [x0, x1, x2] = *xs;
    let [y0, y1, y2] = *ys;
    Ok(2.0
        * (y0 / ((x0 - x1) * (x0 - x2))
            + y1 / ((x1 - x0) * (x1 - x2))
            + y2 / ((x2 - x0) * (x2 - x1))))
}

fn check_distinct(xs: &[f64; 3]) -> Result<()> {
    if xs[0] == xs[1] || xs[0] == xs[2] || xs[1] == xs[2] {
        return Err(Error::invalid_spec(format!(
            "stencil abscissae must be distinct, got {xs:?}"
        )));
    }
    Ok(())
}

/// First derivative `dC/dd` at every sample via three-point stencils in the
/// transformed domain. Interior points use centered stencils; the endpoints
/// reuse the adjacent stencil one-sidedly.
fn curve_derivative(curve: &CapacitanceCurve, transform: Transform) -> Result<Vec<f64>> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::InsufficientPoints(format!(
            "need at least 3 samples for the three-point stencil, got {n}"
        )));
    }
    let (u, w) = transformed(curve, transform);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = i.clamp(1, n - 2); // stencil center index
        let xs = [u[j - 1], u[j], u[j + 1]];
        let ys = [w[j - 1], w[j], w[j + 1]];
        let dw_du = lagrange3_derivative(&xs, &ys, u[i])?;
        let slope = match transform {
            Transform::Log => curve.c[i] / curve.d[i] * dw_du,
            Transform::SemiLog => dw_du / curve.d[i],
            Transform::Direct => dw_du,
        };
        out.push(slope);
    }
    Ok(out)
}

fn transformed(curve: &CapacitanceCurve, transform: Transform) -> (Vec<f64>, Vec<f64>) {
    let u = match transform {
        Transform::Direct => curve.d.clone(),
        _ => curve.d.iter().map(|&x| x.ln()).collect(),
    };
    let w = match transform {
        Transform::Log => curve.c.iter().map(|&y| y.ln()).collect(),
        _ => curve.c.clone(),
    };
    (u, w)
}

/// Second derivative `d2C/dd2` at every sample, chain-ruled back from the
/// transformed domain.
fn curve_second_derivative(curve: &CapacitanceCurve, transform: Transform) -> Result<Vec<f64>> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::InsufficientPoints(format!(
            "need at least 3 samples for the three-point stencil, got {n}"
        )));
    }
    let (u, w) = transformed(curve, transform);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = i.clamp(1, n - 2);
        let xs = [u[j - 1], u[j], u[j + 1]];
        let ys = [w[j - 1], w[j], w[j + 1]];
        let w1 = lagrange3_derivative(&xs, &ys, u[i])?;
        let w2 = lagrange3_second_derivative(&xs, &ys)?;
        let dd = curve.d[i] * curve.d[i];
        let val = match transform {
            // C = e^w(u): C'' = C/d^2 (w'^2 + w'' - w')
            Transform::Log => curve.c[i] / dd * (w1 * w1 + w2 - w1),
            // C = w(u): C'' = (w'' - w')/d^2
            Transform::SemiLog => (w2 - w1) / dd,
            Transform::Direct => w2,
        };
        out.push(val);
    }
    Ok(out)
}

/// Electrostatic force curve `F = -1/2 (dC/dd) V^2`.
///
/// Monotone-decreasing capacitance gives positive (attractive) `F`.
pub fn force_curve(
    curve: &CapacitanceCurve,
    volt: f64,
    transform: Transform,
) -> Result<DerivedCurve> {
    if !volt.is_finite() {
        return Err(Error::invalid_spec("drive voltage must be finite"));
    }
    let slope = curve_derivative(curve, transform)?;
    Ok(DerivedCurve {
        d: curve.d.clone(),
        y: slope.iter().map(|s| -0.5 * s * volt * volt).collect(),
        kind: DerivedKind::Force { volt },
        transform,
        meta: curve.meta.clone(),
    })
}

/// Square-frequency-shift curve
/// `dnu2 = (1/(8 pi^2 m_eff)) (d2C/dd2) V^2`.
pub fn curvature_curve(
    curve: &CapacitanceCurve,
    volt: f64,
    m_eff: f64,
    transform: Transform,
) -> Result<DerivedCurve> {
    if !(m_eff > 0.0) || !m_eff.is_finite() {
        return Err(Error::invalid_spec(format!(
            "effective mass must be > 0, got {m_eff}"
        )));
    }
    let second = curve_second_derivative(curve, transform)?;
    let pref = volt * volt / (8.0 * std::f64::consts::PI.powi(2) * m_eff);
    Ok(DerivedCurve {
        d: curve.d.clone(),
        y: second.iter().map(|s| pref * s).collect(),
        kind: DerivedKind::Curvature { volt, m_eff },
        transform,
        meta: curve.meta.clone(),
    })
}

/// Log-uniform grid of `points` distances spanning `[start, end]`.
pub fn log_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    assert!(start > 0.0 && end > start && points >= 2);
    let (a, b) = (start.ln(), end.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{analytic, EPSILON_0};
    use approx::assert_relative_eq;

    fn meta() -> CurveMeta {
        CurveMeta { geometry: "test".into(), resolution: 0, solver: "analytic".into() }
    }

    #[test]
    fn lagrange3_exact_for_quadratics() {
        let d = lagrange3_derivative(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0], 1.0).unwrap();
        assert_relative_eq!(d, 2.0, max_relative = 1e-14);
        // uneven spacing
        let d = lagrange3_derivative(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0], 2.0).unwrap();
        assert_relative_eq!(d, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn lagrange3_ln_accuracy() {
        // y = ln x on (1, 1.1, 1.21): derivative at 1.1 carries the O(h^2)
        // interpolant error, h+*h-*f'''/6 ~ 0.4% here
        let xs = [1.0, 1.1, 1.21];
        let ys = [0.0, 1.1f64.ln(), 1.21f64.ln()];
        let d = lagrange3_derivative(&xs, &ys, 1.1).unwrap();
        let exact = 1.0 / 1.1;
        assert!(((d - exact) / exact).abs() < 5e-3);
    }

    #[test]
    fn coincident_abscissae_rejected() {
        assert!(lagrange3_derivative(&[1.0, 1.0, 2.0], &[0.0; 3], 1.0).is_err());
        assert!(lagrange3_second_derivative(&[1.0, 2.0, 1.0], &[0.0; 3]).is_err());
    }

    #[test]
    fn force_exact_for_power_law_in_log_mode() {
        // C = eps0 A / d sampled log-uniformly: log-log quadratic is exact
        let a = 78.4996e-6;
        let d = log_grid(1e-5, 1e-3, 17);
        let curve =
            CapacitanceCurve::from_fn(d, |x| EPSILON_0 * a / x, meta()).unwrap();
        let f = force_curve(&curve, 1.0, Transform::Log).unwrap();
        for (x, y) in f.d.iter().zip(&f.y) {
            let exact = 0.5 * EPSILON_0 * a / (x * x);
            assert_relative_eq!(*y, exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn force_matches_cylinder_analytic_derivative() {
        let (r, l) = (12e-3, 1.0);
        let d = log_grid(1e-6, 1e-4, 41);
        let curve = CapacitanceCurve::from_fn(
            d,
            |x| analytic::cap_cylinder_exact(r, l, x).unwrap(),
            meta(),
        )
        .unwrap();
        let f = force_curve(&curve, 1.0, Transform::Log).unwrap();
        for (i, (x, y)) in f.d.iter().zip(&f.y).enumerate() {
            if i == 0 || i == f.d.len() - 1 {
                continue; // one-sided stencils carry a larger constant
            }
            // dC/dd = -2 pi eps0 L / (acosh(1+x)^2 sqrt((1+x/R)^2 - 1)) / R
            let xr = x / r;
            let acosh = (1.0 + xr).acosh();
            let dc = -2.0 * std::f64::consts::PI * EPSILON_0 * l
                / (acosh * acosh * ((1.0 + xr) * (1.0 + xr) - 1.0).sqrt())
                / r;
            let exact = -0.5 * dc;
            assert!(
                ((y - exact) / exact).abs() < 1e-3,
                "at d={x}: {y} vs {exact}"
            );
        }
    }

    #[test]
    fn semilog_matches_sphere_series_derivative() {
        let r = 0.15e-3;
        let d = log_grid(0.2e-6, 20e-6, 61);
        let curve = CapacitanceCurve::from_fn(
            d,
            |x| analytic::cap_sphere_exact(r, x, 1e-13).unwrap().capacitance,
            meta(),
        )
        .unwrap();
        let f = force_curve(&curve, 1.0, Transform::SemiLog).unwrap();
        // analytic derivative by a fine central difference of the series
        for i in (5..f.d.len() - 5).step_by(7) {
            let x = f.d[i];
            let h = 1e-5 * x;
            let cp = analytic::cap_sphere_exact(r, x + h, 1e-13).unwrap().capacitance;
            let cm = analytic::cap_sphere_exact(r, x - h, 1e-13).unwrap().capacitance;
            let exact = -0.5 * (cp - cm) / (2.0 * h);
            assert!(
                ((f.y[i] - exact) / exact).abs() < 2e-3,
                "at d={x}: {} vs {exact}",
                f.y[i]
            );
        }
    }

    #[test]
    fn curvature_of_ideal_plate_curve() {
        // C = eps0 A/d: d2C/dd2 = 2 eps0 A / d^3
        let a = 1e-4;
        let d = log_grid(1e-5, 1e-3, 33);
        let curve = CapacitanceCurve::from_fn(d, |x| EPSILON_0 * a / x, meta()).unwrap();
        let nu = curvature_curve(&curve, 1.0, 1.0, Transform::Log).unwrap();
        for (x, y) in nu.d.iter().zip(&nu.y) {
            let exact = 2.0 * EPSILON_0 * a / x.powi(3) / (8.0 * std::f64::consts::PI.powi(2));
            assert_relative_eq!(*y, exact, max_relative = 1e-3);
        }
    }

    #[test]
    fn curvature_of_linear_curve_is_zero() {
        // C linear in d: the quadratic interpolant of a line has zero
        // second derivative (differencing directly in d)
        let d: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let curve = CapacitanceCurve::from_fn(d, |x| 5.0 - 0.1 * x, meta()).unwrap();
        let nu = curvature_curve(&curve, 1.0, 1.0, Transform::Direct).unwrap();
        for (x, y) in nu.d.iter().zip(&nu.y) {
            assert!(y.abs() < 1e-12, "at d={x}: {y}");
        }
        // the log-abscissa variant keeps its O(h^2) interpolant error
        let semi = curvature_curve(&curve, 1.0, 1.0, Transform::SemiLog).unwrap();
        assert!(semi.y.iter().any(|y| y.abs() > 1e-12));
    }

    #[test]
    fn curvature_matches_cylinder_analytic_second_derivative() {
        let (r, l) = (12e-3, 1.0);
        let d = log_grid(2e-6, 5e-5, 61);
        let curve = CapacitanceCurve::from_fn(
            d,
            |x| analytic::cap_cylinder_exact(r, l, x).unwrap(),
            meta(),
        )
        .unwrap();
        let nu = curvature_curve(&curve, 1.0, 1.0, Transform::Log).unwrap();
        for i in (4..nu.d.len() - 4).step_by(9) {
            let x = nu.d[i];
            let h = 2e-4 * x;
            let c = |y: f64| analytic::cap_cylinder_exact(r, l, y).unwrap();
            let exact = (c(x + h) - 2.0 * c(x) + c(x - h)) / (h * h)
                / (8.0 * std::f64::consts::PI.powi(2));
            assert!(
                ((nu.y[i] - exact) / exact).abs() < 2e-3,
                "at d={x}: {} vs {exact}",
                nu.y[i]
            );
        }
    }

    #[test]
    fn insufficient_points_rejected() {
        let curve = CapacitanceCurve::new(vec![1.0, 2.0], vec![1.0, 0.5], meta()).unwrap();
        assert!(matches!(
            force_curve(&curve, 1.0, Transform::Log),
            Err(Error::InsufficientPoints(_))
        ));
    }

    #[test]
    fn second_order_convergence_on_analytic_curves() {
        // halving the log spacing cuts the interior stencil error ~4x
        let r = 0.15e-3;
        let sphere = |x: f64| analytic::cap_sphere_exact(r, x, 1e-13).unwrap().capacitance;
        let errs: Vec<f64> = [31usize, 61]
            .iter()
            .map(|&n| {
                let d = log_grid(0.5e-6, 5e-6, n);
                let curve = CapacitanceCurve::from_fn(d, sphere, meta()).unwrap();
                let f = force_curve(&curve, 1.0, Transform::SemiLog).unwrap();
                let mid = n / 2;
                let x = f.d[mid];
                let h = 1e-5 * x;
                let exact = -0.5 * (sphere(x + h) - sphere(x - h)) / (2.0 * h);
                ((f.y[mid] - exact) / exact).abs()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "observed order {order} (errors {errs:?})");
    }
}
