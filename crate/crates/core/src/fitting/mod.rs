//! Nonlinear least-squares estimation of calibration parameters.
//!
//! Three fit models cover the calibration analysis:
//!
//! - `PowerLawCap`:   `C(d) = C0 + K / (d - d0)^eps`
//! - `LogCap`:        `C(d) = C0 + K ln(d - d0)`       (no exponent)
//! - `PowerLawForce`: `F(d) = F0 + K V^2 / (d - d0)^eps`
//!
//! Each parameter may be fixed or free. The engine is a damped Gauss-Newton
//! (Levenberg) iteration with analytic Jacobians; `K` and the offset `C0`
//! are initialized by linear least squares at the initial `(d0, eps)`.
//! Steps that would push `d0` past `0.9 * min(d)` of the window are rejected
//! so `(d - d0)^eps` stays real; hitting that guard is recorded in the
//! diagnostics. Standard errors come from the linearized covariance
//! `sigma^2 (J^T W J)^-1` with `sigma^2 = RSS_w / (m - n)`.

mod tables;

pub use tables::{
    table_one, table_two, TableOne, TableOneColumn, TableOneInputs, TableTwo, TableTwoRow,
    TableTwoSpec,
};

use crate::numdiff::CapacitanceCurve;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Which calibration model is being fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    PowerLawCap,
    LogCap,
    PowerLawForce,
}

/// A model parameter: estimated by the fit or pinned to a value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Free,
    Fixed(f64),
}

impl Param {
    pub fn is_free(&self) -> bool {
        matches!(self, Param::Free)
    }
}

/// Residual weighting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Uniform,
    /// `w_i = 1 / y_i^2`; appropriate when the noise is relative.
    RelativeError,
}

/// A fit model: kind, per-parameter free/fixed state, and initialization.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitModel {
    pub kind: ModelKind,
    /// Constant offset `C0` (or `F0`). Fixed to 0 for simulation data,
    /// where no parasitic background capacitance exists.
    pub c0: Param,
    pub k: Param,
    pub d0: Param,
    /// Ignored by `LogCap`.
    pub eps: Param,
    /// Starting exponent for free-`eps` fits (the ideal value of the
    /// geometry: 1 for plates, 0.5 for cylinders, 2 for plate forces...).
    pub eps_init: f64,
    /// Drive voltage whose square multiplies `K` in `PowerLawForce`.
    pub volt: f64,
}

impl FitModel {
    /// `C = K/(d - d0)^eps` with `C0` fixed to zero and everything else free.
    pub fn power_law_cap(eps_init: f64) -> FitModel {
        FitModel {
            kind: ModelKind::PowerLawCap,
            c0: Param::Fixed(0.0),
            k: Param::Free,
            d0: Param::Free,
            eps: Param::Free,
            eps_init,
            volt: 1.0,
        }
    }

    /// `C = C0 + K ln(d - d0)`, all three parameters free.
    pub fn log_cap() -> FitModel {
        FitModel {
            kind: ModelKind::LogCap,
            c0: Param::Free,
            k: Param::Free,
            d0: Param::Free,
            eps: Param::Fixed(0.0),
            eps_init: 0.0,
            volt: 1.0,
        }
    }

    /// `F = K V^2/(d - d0)^eps` with `F0` fixed to zero.
    pub fn power_law_force(eps_init: f64, volt: f64) -> FitModel {
        FitModel {
            kind: ModelKind::PowerLawForce,
            c0: Param::Fixed(0.0),
            k: Param::Free,
            d0: Param::Free,
            eps: Param::Free,
            eps_init,
            volt,
        }
    }

    pub fn with_fixed_eps(mut self, eps: f64) -> FitModel {
        self.eps = Param::Fixed(eps);
        self.eps_init = eps;
        self
    }

    pub fn with_fixed_d0(mut self, d0: f64) -> FitModel {
        self.d0 = Param::Fixed(d0);
        self
    }

    pub fn with_free_c0(mut self) -> FitModel {
        self.c0 = Param::Free;
        self
    }

    pub fn with_fixed_k(mut self, k: f64) -> FitModel {
        self.k = Param::Fixed(k);
        self
    }

    fn uses_eps(&self) -> bool {
        !matches!(self.kind, ModelKind::LogCap)
    }

    /// `K` multiplier (`V^2` for force fits).
    fn k_scale(&self) -> f64 {
        match self.kind {
            ModelKind::PowerLawForce => self.volt * self.volt,
            _ => 1.0,
        }
    }

    fn eval(&self, d: f64, p: &Params) -> f64 {
        let s = self.k_scale();
        match self.kind {
            ModelKind::PowerLawCap | ModelKind::PowerLawForce => {
                p.c0 + s * p.k * (d - p.d0).powf(-p.eps)
            }
            ModelKind::LogCap => p.c0 + p.k * (d - p.d0).ln(),
        }
    }

    /// Analytic partials in the order `[c0, k, d0, eps]`.
    fn gradient(&self, d: f64, p: &Params) -> [f64; 4] {
        let s = self.k_scale();
        match self.kind {
            ModelKind::PowerLawCap | ModelKind::PowerLawForce => {
                let base = d - p.d0;
                let pw = base.powf(-p.eps);
                [
                    1.0,
                    s * pw,
                    s * p.k * p.eps * base.powf(-p.eps - 1.0),
                    -s * p.k * pw * base.ln(),
                ]
            }
            ModelKind::LogCap => {
                let base = d - p.d0;
                [1.0, base.ln(), -p.k / base, 0.0]
            }
        }
    }
}

/// Full parameter set (free and fixed together).
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
struct Params {
    c0: f64,
    k: f64,
    d0: f64,
    eps: f64,
}

impl Params {
    fn get(&self, idx: usize) -> f64 {
        [self.c0, self.k, self.d0, self.eps][idx]
    }

    fn set(&mut self, idx: usize, v: f64) {
        match idx {
            0 => self.c0 = v,
            1 => self.k = v,
            2 => self.d0 = v,
            _ => self.eps = v,
        }
    }
}

const PARAM_NAMES: [&str; 4] = ["c0", "k", "d0", "eps"];

/// One estimated (or pinned) parameter of a completed fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub value: f64,
    /// Square root of the covariance diagonal; 0 for fixed parameters.
    pub std_err: f64,
    pub fixed: bool,
}

/// Estimates, covariance, residual statistics, and convergence diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ModelKind,
    pub c0: ParamEstimate,
    pub k: ParamEstimate,
    pub d0: ParamEstimate,
    pub eps: ParamEstimate,
    /// Covariance over the free parameters, ordered as `free_names`.
    pub covariance: Vec<Vec<f64>>,
    pub free_names: Vec<String>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    /// Realized window: min and max distance of the fitted samples.
    pub window: (f64, f64),
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_step_norm: f64,
    /// True when a step hit the `d0 < 0.9 min(d)` feasibility guard.
    pub d0_bound_hit: bool,
}

impl FitResult {
    /// Minimum distance inside the fitted window (for `d0/d_min` ratios).
    pub fn d_min(&self) -> f64 {
        self.window.0
    }
}

/// Fit `model` to `(d, y)` samples restricted to `window`.
///
/// Returns `Ok` with `converged = false` when the iteration stalls or runs
/// out of budget: the partial state is the caller's to inspect. Hard input
/// errors (too few points, empty window) are `Err`.
pub fn fit(
    d: &[f64],
    y: &[f64],
    model: &FitModel,
    window: (f64, f64),
    weights: Weighting,
) -> Result<FitResult> {
    if d.len() != y.len() {
        return Err(Error::invalid_spec(format!(
            "length mismatch: {} abscissae vs {} ordinates",
            d.len(),
            y.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&x, &v) in d.iter().zip(y) {
        if x >= window.0 && x <= window.1 {
            xs.push(x);
            ys.push(v);
        }
    }
    let free: Vec<usize> = [model.c0, model.k, model.d0, model.eps]
        .iter()
        .enumerate()
        .filter(|(i, p)| p.is_free() && (*i != 3 || model.uses_eps()))
        .map(|(i, _)| i)
        .collect();
    let n_free = free.len();
    if xs.len() < n_free + 1 {
        return Err(Error::InsufficientPoints(format!(
            "window [{:.3e}, {:.3e}] holds {} samples; need at least {}",
            window.0,
            window.1,
            xs.len(),
            n_free + 1
        )));
    }
    let d_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let d0_cap = 0.9 * d_min;

    let w: Vec<f64> = match weights {
        Weighting::Uniform => vec![1.0; xs.len()],
        Weighting::RelativeError => ys
            .iter()
            .map(|&v| {
                let a = v.abs().max(f64::MIN_POSITIVE);
                1.0 / (a * a)
            })
            .collect(),
    };

    // initialize: fixed values verbatim, d0 = 0, eps at the ideal value,
    // then K (and C0) from weighted linear least squares
    let mut p = Params::default();
    for (i, prm) in [model.c0, model.k, model.d0, model.eps].iter().enumerate() {
        if let Param::Fixed(v) = prm {
            p.set(i, *v);
        }
    }
    if model.eps.is_free() {
        p.eps = model.eps_init;
    }
    if model.d0.is_free() {
        p.d0 = 0.0;
    }
    initialize_linear(&mut p, model, &xs, &ys, &w);

    let mut rss = weighted_rss(model, &p, &xs, &ys, &w);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut step_norm = f64::INFINITY;
    let mut bound_hit = false;
    let max_iterations = 200;

    while iterations < max_iterations {
        iterations += 1;
        let (a, g) = normal_equations(model, &p, &xs, &ys, &w, &free);
        let scale: Vec<f64> = (0..n_free)
            .map(|j| a[(j, j)].sqrt().max(f64::MIN_POSITIVE))
            .collect();
        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = a.clone();
            for j in 0..n_free {
                damped[(j, j)] += lambda * scale[j] * scale[j];
            }
            let delta = match damped.lu().solve(&g) {
                Some(x) => -x,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = p;
            for (j, &idx) in free.iter().enumerate() {
                trial.set(idx, trial.get(idx) + delta[j]);
            }
            if model.d0.is_free() && trial.d0 >= d0_cap {
                bound_hit = true;
                lambda *= 10.0;
                continue;
            }
            let trial_rss = weighted_rss(model, &trial, &xs, &ys, &w);
            if trial_rss.is_finite() && trial_rss <= rss {
                step_norm = (0..n_free)
                    .map(|j| {
                        let denom = p.get(free[j]).abs().max(1e-300);
                        (delta[j] / denom).abs()
                    })
                    .fold(0.0f64, f64::max);
                let rel_improvement = (rss - trial_rss) / rss.max(f64::MIN_POSITIVE);
                p = trial;
                rss = trial_rss;
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if step_norm < 1e-12 || rel_improvement < 1e-14 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary point
            converged = rss.is_finite();
            break;
        }
        if converged {
            break;
        }
    }

    // covariance at the solution from the undamped normal matrix
    let (a, _) = normal_equations(model, &p, &xs, &ys, &w, &free);
    let dof = (xs.len() - n_free).max(1);
    let sigma2 = rss / dof as f64;
    let cov = a
        .try_inverse()
        .map(|inv| inv * sigma2)
        .unwrap_or_else(|| DMatrix::from_element(n_free, n_free, f64::NAN));

    let estimate = |idx: usize| -> ParamEstimate {
        match free.iter().position(|&f| f == idx) {
            Some(j) => ParamEstimate {
                value: p.get(idx),
                std_err: cov[(j, j)].max(0.0).sqrt(),
                fixed: false,
            },
            None => ParamEstimate { value: p.get(idx), std_err: 0.0, fixed: true },
        }
    };

    Ok(FitResult {
        kind: model.kind,
        c0: estimate(0),
        k: estimate(1),
        d0: estimate(2),
        eps: estimate(3),
        covariance: (0..n_free)
            .map(|i| (0..n_free).map(|j| cov[(i, j)]).collect())
            .collect(),
        free_names: free.iter().map(|&i| PARAM_NAMES[i].to_string()).collect(),
        rss,
        window: (d_min, xs.iter().copied().fold(0.0, f64::max)),
        n_points: xs.len(),
        iterations,
        converged,
        final_step_norm: step_norm,
        d0_bound_hit: bound_hit,
    })
}

/// Weighted linear least squares for `K` (and `C0` when free) at the
/// current `(d0, eps)`.
fn initialize_linear(p: &mut Params, model: &FitModel, xs: &[f64], ys: &[f64], w: &[f64]) {
    if !model.k.is_free() {
        return;
    }
    let s = model.k_scale();
    let basis = |x: f64| -> f64 {
        match model.kind {
            ModelKind::PowerLawCap | ModelKind::PowerLawForce => s * (x - p.d0).powf(-p.eps),
            ModelKind::LogCap => (x - p.d0).ln(),
        }
    };
    if model.c0.is_free() {
        let (mut s11, mut s1p, mut spp, mut s1y, mut spy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..xs.len() {
            let phi = basis(xs[i]);
            s11 += w[i];
            s1p += w[i] * phi;
            spp += w[i] * phi * phi;
            s1y += w[i] * ys[i];
            spy += w[i] * phi * ys[i];
        }
        let det = s11 * spp - s1p * s1p;
        if det.abs() > 0.0 {
            p.c0 = (spp * s1y - s1p * spy) / det;
            p.k = (s11 * spy - s1p * s1y) / det;
        }
    } else {
        let (mut spp, mut spy) = (0.0, 0.0);
        for i in 0..xs.len() {
            let phi = basis(xs[i]);
            spp += w[i] * phi * phi;
            spy += w[i] * phi * (ys[i] - p.c0);
        }
        if spp > 0.0 {
            p.k = spy / spp;
        }
    }
}

fn weighted_rss(model: &FitModel, p: &Params, xs: &[f64], ys: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..xs.len() {
        if xs[i] - p.d0 <= 0.0 {
            return f64::INFINITY;
        }
        let r = model.eval(xs[i], p) - ys[i];
        acc += w[i] * r * r;
    }
    acc
}

/// `(J^T W J, J^T W r)` over the free parameters.
fn normal_equations(
    model: &FitModel,
    p: &Params,
    xs: &[f64],
    ys: &[f64],
    w: &[f64],
    free: &[usize],
) -> (DMatrix<f64>, DVector<f64>) {
    let n = free.len();
    let mut a = DMatrix::zeros(n, n);
    let mut g = DVector::zeros(n);
    for i in 0..xs.len() {
        let grad_full = model.gradient(xs[i], p);
        let r = model.eval(xs[i], p) - ys[i];
        for (j, &fj) in free.iter().enumerate() {
            let gj = grad_full[fj];
            g[j] += w[i] * gj * r;
            for (k, &fk) in free.iter().enumerate().skip(j) {
                a[(j, k)] += w[i] * gj * grad_full[fk];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[(j, k)] = a[(k, j)];
        }
    }
    (a, g)
}

/// One window of an exponent drift scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftPoint {
    pub d_max: f64,
    /// Fit with `d0` pinned to 0 (a priori known absolute distance).
    pub fixed_d0: FitResult,
    /// Fit with `d0` free (the experimental situation).
    pub free_d0: FitResult,
}

/// Repeated fits over growing windows `[d_min(curve), d_max]`, tracking the
/// optimal exponent as points at larger distance are included.
pub fn exponent_drift_scan(
    curve: &CapacitanceCurve,
    base: &FitModel,
    d_max_list: &[f64],
    weights: Weighting,
) -> Result<Vec<DriftPoint>> {
    if base.kind != ModelKind::PowerLawCap {
        return Err(Error::invalid_spec(
            "drift scans are defined for the power-law capacitance model",
        ));
    }
    let d = curve.distances();
    let y = curve.capacitances();
    let d_min = d[0];
    let mut out = Vec::with_capacity(d_max_list.len());
    for &d_max in d_max_list {
        let fixed = fit(d, y, &base.with_fixed_d0(0.0), (d_min, d_max), weights)?;
        let freed = fit(d, y, base, (d_min, d_max), weights)?;
        out.push(DriftPoint { d_max, fixed_d0: fixed, free_d0: freed });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff::{log_grid, CurveMeta};
    use crate::{analytic, EPSILON_0};

    fn gen(model: &FitModel, truth: &Params, d: &[f64]) -> Vec<f64> {
        d.iter().map(|&x| model.eval(x, truth)).collect()
    }

    #[test]
    fn recovers_power_law_cap_exactly() {
        let model = FitModel::power_law_cap(0.5);
        let truth = Params { c0: 0.0, k: 3.2e-12, d0: 2.0e-8, eps: 0.47 };
        let d = log_grid(4e-7, 1e-5, 25);
        let y = gen(&model, &truth, &d);
        let r = fit(&d, &y, &model, (0.0, 1.0), Weighting::Uniform).unwrap();
        assert!(r.converged, "diagnostics: {r:?}");
        assert!((r.k.value - truth.k).abs() / truth.k < 1e-8);
        assert!((r.d0.value - truth.d0).abs() / truth.d0.abs() < 1e-6);
        assert!((r.eps.value - truth.eps).abs() / truth.eps < 1e-8);
    }

    #[test]
    fn recovers_log_cap_exactly() {
        let model = FitModel::log_cap();
        let truth = Params { c0: 8.0e-14, k: -7.5e-15, d0: -3.0e-8, eps: 0.0 };
        let d = log_grid(2e-7, 3e-6, 21);
        let y = gen(&model, &truth, &d);
        let r = fit(&d, &y, &model, (0.0, 1.0), Weighting::Uniform).unwrap();
        assert!(r.converged);
        assert!((r.c0.value - truth.c0).abs() / truth.c0.abs() < 1e-7);
        assert!((r.k.value - truth.k).abs() / truth.k.abs() < 1e-8);
        assert!((r.d0.value - truth.d0).abs() / truth.d0.abs() < 1e-5);
    }

    #[test]
    fn recovers_force_model_with_voltage_scale() {
        let volt = 0.5;
        let model = FitModel::power_law_force(2.0, volt);
        let truth = Params { c0: 0.0, k: 3.6e-16, d0: 1.0e-8, eps: 1.997 };
        let d = log_grid(7e-6, 5e-5, 19);
        let y = gen(&model, &truth, &d);
        let r = fit(&d, &y, &model, (0.0, 1.0), Weighting::Uniform).unwrap();
        assert!(r.converged);
        assert!((r.k.value - truth.k).abs() / truth.k < 1e-8);
        assert!((r.eps.value - truth.eps).abs() / truth.eps < 1e-8);
    }

    #[test]
    fn ideal_cylinder_data_yields_zero_offset() {
        // PFA-regime data from the exact formula: d0 compatible with 0
        let (r, l) = (12e-3, 4e-3);
        let d = log_grid(4e-7, 2e-6, 15);
        let y: Vec<f64> = d
            .iter()
            .map(|&x| analytic::cap_cylinder_exact(r, l, x).unwrap())
            .collect();
        let model = FitModel::power_law_cap(0.5).with_fixed_eps(0.5);
        let res = fit(&d, &y, &model, (0.0, 1.0), Weighting::Uniform).unwrap();
        assert!(res.converged);
        // the exact formula deviates from pure PFA only at O(d/R) ~ 1e-7
        assert!(
            res.d0.value.abs() < 1e-3 * d[0],
            "d0 = {} vs d_min = {}",
            res.d0.value,
            d[0]
        );
    }

    #[test]
    fn window_restriction_and_insufficient_points() {
        let model = FitModel::power_law_cap(1.0);
        let d = log_grid(1e-6, 1e-4, 20);
        let y = gen(&model, &Params { c0: 0.0, k: 1e-15, d0: 0.0, eps: 1.0 }, &d);
        let r = fit(&d, &y, &model, (5e-6, 5e-5), Weighting::Uniform).unwrap();
        assert!(r.n_points < 20);
        assert!(r.window.0 >= 5e-6 && r.window.1 <= 5e-5);
        assert!(matches!(
            fit(&d, &y, &model, (9e-5, 9.5e-5), Weighting::Uniform),
            Err(Error::InsufficientPoints(_))
        ));
    }

    #[test]
    fn drift_scan_on_ideal_plate_curve_pins_unit_exponent() {
        let area = 78.4996e-6;
        let d = log_grid(2e-5, 8e-3, 40);
        let curve = CapacitanceCurve::from_fn(
            d,
            |x| EPSILON_0 * area / x,
            CurveMeta { geometry: "plates".into(), resolution: 0, solver: "ideal".into() },
        )
        .unwrap();
        let base = FitModel::power_law_cap(1.0).with_fixed_k(EPSILON_0 * area);
        let scan =
            exponent_drift_scan(&curve, &base, &[1e-4, 1e-3, 8e-3], Weighting::RelativeError)
                .unwrap();
        for p in &scan {
            assert!((p.fixed_d0.eps.value - 1.0).abs() < 1e-7, "window {}", p.d_max);
            assert!((p.free_d0.eps.value - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn covariance_matches_reported_errors() {
        let model = FitModel::power_law_cap(1.0);
        let d = log_grid(1e-6, 1e-4, 25);
        let y = gen(&model, &Params { c0: 0.0, k: 1e-15, d0: 1e-8, eps: 0.99 }, &d);
        let r = fit(&d, &y, &model, (0.0, 1.0), Weighting::Uniform).unwrap();
        for (j, name) in r.free_names.iter().enumerate() {
            let sd = r.covariance[j][j].max(0.0).sqrt();
            let est = match name.as_str() {
                "k" => r.k.std_err,
                "d0" => r.d0.std_err,
                "eps" => r.eps.std_err,
                _ => r.c0.std_err,
            };
            assert!((sd - est).abs() <= 1e-12 * sd.max(est).max(1e-300));
        }
    }

    #[test]
    fn d0_guard_keeps_iterates_feasible() {
        // data generated with d0 close to d_min stresses the guard
        let model = FitModel::power_law_cap(1.0);
        let truth = Params { c0: 0.0, k: 1e-15, d0: 8.5e-7, eps: 1.0 };
        let d = log_grid(1e-6, 1e-4, 30);
        let y = gen(&model, &truth, &d);
        let r = fit(&d, &y, &model, (0.0, 1.0), Weighting::RelativeError).unwrap();
        assert!(r.d0.value < 0.9e-6);
        assert!((r.d0.value - truth.d0).abs() / truth.d0 < 1e-4, "d0 {}", r.d0.value);
    }
}
