//! Graded 1-D grids for mesh refinement near gap regions and free edges.

/// `n + 1` uniformly spaced points spanning `[a, b]`.
pub fn uniform_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// `n + 1` points on `[a, b]` clustered around `focus` via a sinh stretch.
///
/// `strength` is the sinh stretching exponent beta; 0 gives a uniform grid,
/// values around 2-4 give a few-to-one spacing contrast. A focus outside
/// `[a, b]` clusters toward the nearer endpoint.
pub fn focus_graded_points(a: f64, b: f64, n: usize, focus: f64, strength: f64) -> Vec<f64> {
    assert!(b > a && n >= 1);
    if strength.abs() < 1e-9 {
        return uniform_points(a, b, n);
    }
    let beta = strength;
    if focus <= a {
        // one-sided: cluster at a
        return (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                a + (b - a) * (beta * t).sinh() / beta.sinh()
            })
            .collect();
    }
    if focus >= b {
        return (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                b - (b - a) * (beta * (1.0 - t)).sinh() / beta.sinh()
            })
            .collect();
    }
    // interior focus: x(t) = focus + s0*sinh(beta*(t - t0)); solve for t0 by
    // bisection on sinh(beta(1-t0))/sinh(beta t0) = (b-focus)/(focus-a)
    let rho = (b - focus) / (focus - a);
    let g = |t0: f64| (beta * (1.0 - t0)).sinh() / (beta * t0).sinh();
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = 0.5 * (lo + hi);
    let s0 = (focus - a) / (beta * t0).sinh();
    let mut pts: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            focus + s0 * (beta * (t - t0)).sinh()
        })
        .collect();
    // pin endpoints exactly
    pts[0] = a;
    pts[n] = b;
    pts
}

/// `n + 1` points on `[a, b]` clustered toward both endpoints (tanh stretch).
pub fn edge_graded_points(a: f64, b: f64, n: usize, strength: f64) -> Vec<f64> {
    assert!(b > a && n >= 1);
    if strength.abs() < 1e-9 {
        return uniform_points(a, b, n);
    }
    let beta = strength;
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut pts: Vec<f64> = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            c + half * (beta * (2.0 * t - 1.0)).tanh() / beta.tanh()
        })
        .collect();
    pts[0] = a;
    pts[n] = b;
    pts
}

/// Points from `from` to `to` whose spacing starts at `start_spacing` and
/// grows geometrically by `growth`; the last point is pinned to `to`.
pub fn geometric_ladder(from: f64, to: f64, start_spacing: f64, growth: f64) -> Vec<f64> {
    assert!(to > from && start_spacing > 0.0 && growth > 1.0);
    let mut pts = vec![from];
    let mut step = start_spacing;
    let mut x = from;
    loop {
        x += step;
        if x >= to - 0.25 * step {
            pts.push(to);
            return pts;
        }
        pts.push(x);
        step *= growth;
    }
}

/// Sinh strength `beta` such that the smallest cell of an `n`-cell one-sided
/// graded grid is `contrast` times the interval length. A `contrast` at or
/// above the uniform spacing `1/n` gives 0 (uniform).
pub fn sinh_beta_for_contrast(n: usize, contrast: f64) -> f64 {
    assert!(n >= 1 && contrast > 0.0);
    if contrast >= 1.0 / n as f64 {
        return 0.0;
    }
    let smallest = |beta: f64| (beta / n as f64).sinh() / beta.sinh();
    let (mut lo, mut hi) = (1e-6, 30.0);
    if smallest(hi) > contrast {
        return hi; // contrast beyond what the grid can express
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if smallest(mid) > contrast {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_endpoints_and_spacing() {
        let p = uniform_points(-1.0, 3.0, 8);
        assert_eq!(p.len(), 9);
        assert_eq!(p[0], -1.0);
        assert_eq!(p[8], 3.0);
        let h = p[1] - p[0];
        for w in p.windows(2) {
            assert!((w[1] - w[0] - h).abs() < 1e-12);
        }
    }

    #[test]
    fn focus_grading_clusters_at_focus() {
        let p = focus_graded_points(0.0, 1.0, 20, 0.3, 3.0);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[20], 1.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]), "monotone grid");
        // smallest spacing should straddle the focus
        let (imin, _) = p
            .windows(2)
            .enumerate()
            .min_by(|a, b| (a.1[1] - a.1[0]).partial_cmp(&(b.1[1] - b.1[0])).unwrap())
            .unwrap();
        let near = 0.5 * (p[imin] + p[imin + 1]);
        assert!((near - 0.3).abs() < 0.1);
    }

    #[test]
    fn edge_grading_is_symmetric() {
        let p = edge_graded_points(-2.0, 2.0, 16, 2.5);
        for i in 0..p.len() {
            assert!((p[i] + p[p.len() - 1 - i]).abs() < 1e-12);
        }
        let first = p[1] - p[0];
        let mid = p[8] - p[7];
        assert!(first < mid, "end spacing finer than center");
    }

    #[test]
    fn zero_strength_is_uniform() {
        let p = focus_graded_points(0.0, 2.0, 10, 0.7, 0.0);
        let u = uniform_points(0.0, 2.0, 10);
        for (a, b) in p.iter().zip(&u) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ladder_reaches_target_with_growing_steps() {
        let p = geometric_ladder(1.0, 100.0, 0.5, 1.4);
        assert_eq!(p[0], 1.0);
        assert_eq!(*p.last().unwrap(), 100.0);
        let steps: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        for w in steps.windows(2).take(steps.len() - 2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn beta_solves_requested_contrast() {
        let n = 30;
        let contrast = 1e-3;
        let beta = sinh_beta_for_contrast(n, contrast);
        let pts = focus_graded_points(0.0, 1.0, n, 0.0, beta);
        let smallest = pts[1] - pts[0];
        assert!((smallest / contrast - 1.0).abs() < 1e-6, "smallest {smallest}");
        assert_eq!(sinh_beta_for_contrast(10, 0.2), 0.0);
    }
}
