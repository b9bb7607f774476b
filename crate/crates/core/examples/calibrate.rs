//! Scratch calibration runs for mesh/tier tuning. Not part of the test suite.

use edgecap::analytic;
use edgecap::bem::{self, SolverSettings};
use edgecap::geometry::{assemble_scene, ShapeSpec};
use edgecap::EPSILON_0;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "plates".into());
    match which.as_str() {
        "plates" => plates(),
        "sphere" => sphere(),
        "timing" => timing(),
        "cyl" => cylinder(),
        "matched" => sphere_matched(),
        other => eprintln!("unknown mode {other}"),
    }
}

fn plates() {
    let side = 8.86e-3;
    let area = side * side;
    for d in [1e-6, 5e-6, 20e-6] {
        for n in [8usize, 12, 16, 24] {
            let spec = ShapeSpec::SquarePlate { side, resolution: n, refinement: 0.0 };
            let scene = assemble_scene(&spec, &spec, d, 0.0).unwrap();
            let t = Instant::now();
            let c = bem::capacitance(&scene, &SolverSettings::default()).unwrap();
            let ideal = EPSILON_0 * area / d;
            println!(
                "d={:>6.1}um n={:>2} N={:>5} C={:.6e} rel={:+.4}% [{} ms]",
                d * 1e6,
                n,
                scene.panel_count(),
                c,
                100.0 * (c - ideal) / ideal,
                t.elapsed().as_millis()
            );
        }
    }
}

fn sphere() {
    let r = 0.15e-3;
    let plate_mult: f64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(60.0);
    let side = plate_mult * r;
    for x in [0.03, 0.3] {
        let d = x * r;
        for ns in [20usize, 28] {
            let np = ns;
            let target = 0.4 * (2.0 * x).sqrt() / std::f64::consts::PI;
            let beta = edgecap::geometry::grading::sinh_beta_for_contrast(ns, target);
            let probe = ShapeSpec::Sphere { radius: r, resolution: ns, refinement: beta };
            let plate = ShapeSpec::SquarePlate { side, resolution: np, refinement: 0.0 };
            let scene = assemble_scene(&probe, &plate, d, 0.0).unwrap();
            let t = Instant::now();
            let c = bem::capacitance(&scene, &SolverSettings::default()).unwrap();
            let exact = analytic::cap_sphere_exact(r, d, 1e-13).unwrap().capacitance;
            println!(
                "d/R={:>5.2} ns={:>2} np={:>2} N={:>5} C={:.6e} exact={:.6e} rel={:+.3}% [{} ms]",
                x,
                ns,
                np,
                scene.panel_count(),
                c,
                exact,
                100.0 * (c - exact) / exact,
                t.elapsed().as_millis()
            );
        }
        println!();
    }
}

fn cylinder() {
    // narrow truncated cylinder over the 10x28 plate, spot checks vs exact
    let r = 12e-3;
    let len = 4e-3;
    for d in [0.4e-6, 10e-6, 160e-6] {
        for (nc, np) in [(32usize, 28usize), (48, 36), (64, 44)] {
            let probe = ShapeSpec::TruncatedCylinder {
                radius: r,
                length: len,
                half_angle: std::f64::consts::FRAC_PI_2,
                resolution: nc,
                refinement: 3.0,
            };
            let plate = ShapeSpec::RectPlate {
                side_x: 28e-3,
                side_y: 10e-3,
                resolution: np,
                refinement: 3.0,
            };
            let scene = assemble_scene(&probe, &plate, d, 0.0).unwrap();
            let t = Instant::now();
            let c = bem::capacitance(&scene, &SolverSettings::default()).unwrap();
            let exact = analytic::cap_cylinder_exact(r, len, d).unwrap();
            println!(
                "d={:>7.2}um nc={:>2} np={:>2} N={:>5} C={:.6e} Cexact={:.6e} ratio={:.4} [{} ms]",
                d * 1e6,
                nc,
                np,
                scene.panel_count(),
                c,
                exact,
                c / exact,
                t.elapsed().as_millis()
            );
        }
        println!();
    }
}

fn sphere_matched() {
    // hypothesis test: plate rings aligned under the sphere's latitude rings
    use edgecap::geometry::{GeometryScene, Panel, PanelMesh, ShapeTag};
    use nalgebra::{Point3, Vector3};
    let r = 0.15e-3;
    let plate_radius: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(30.0) * r;

    for x in [0.3] {
        let d = x * r;
        for (ns, beta) in [(28usize, 0.0)] {
            let probe = ShapeSpec::Sphere { radius: r, resolution: ns, refinement: beta };
            let sphere = probe.build().unwrap().translated(Vector3::new(0.0, 0.0, d + r));
            // rebuild the lat grid the same way the sphere builder does
            let psis = edgecap::geometry::grading::focus_graded_points(
                0.0,
                std::f64::consts::PI,
                ns.max(3),
                0.0,
                beta,
            );
            let n_lon = ((2 * ns).clamp(8, 48) + 3) / 4 * 4;
            // plate rings: sphere rings projected for psi <= pi/2, then
            // geometric growth out to the plate rim
            let mut rs: Vec<f64> = psis
                .iter()
                .take_while(|&&p| p <= std::f64::consts::FRAC_PI_2 + 1e-12)
                .map(|&p| r * p.sin())
                .collect();
            let mut grow = rs[rs.len() - 1] - rs[rs.len() - 2];
            let mut last = rs[rs.len() - 1];
            while last < plate_radius {
                grow *= 1.35;
                last = (last + grow).min(plate_radius);
                rs.push(last);
            }
            let at = |rho: f64, k: usize| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n_lon as f64;
                Point3::new(rho * phi.cos(), rho * phi.sin(), 0.0)
            };
            let mut panels = Vec::new();
            for k in 0..n_lon {
                panels.push(Panel::tri(Point3::new(0.0, 0.0, 0.0), at(rs[1], k), at(rs[1], k + 1)).unwrap());
            }
            for i in 1..rs.len() - 1 {
                for k in 0..n_lon {
                    panels.push(
                        Panel::quad(at(rs[i], k), at(rs[i + 1], k), at(rs[i + 1], k + 1), at(rs[i], k + 1))
                            .unwrap(),
                    );
                }
            }
            let plate = PanelMesh { panels, shape: ShapeTag::RectPlate, characteristic_size: 2.0 * plate_radius };
            let scene = GeometryScene { probe: sphere, plate, gap: d, offset: 0.0 };
            let t = Instant::now();
            let c = bem::capacitance(&scene, &SolverSettings::default()).unwrap();
            let exact = analytic::cap_sphere_exact(r, d, 1e-13).unwrap().capacitance;
            println!(
                "d/R={:>5.2} ns={:>2} N={:>5} C={:.6e} exact={:.6e} rel={:+.3}% [{} ms]",
                x,
                ns,
                scene.panel_count(),
                c,
                exact,
                100.0 * (c - exact) / exact,
                t.elapsed().as_millis()
            );
        }
        println!();
    }
}

fn timing() {
    for n in [16usize, 24, 32, 40] {
        let spec = ShapeSpec::SquarePlate { side: 1e-3, resolution: n, refinement: 0.0 };
        let scene = assemble_scene(&spec, &spec, 1e-5, 0.0).unwrap();
        let t0 = Instant::now();
        let m = bem::assemble(&scene, &SolverSettings::default()).unwrap();
        let t1 = Instant::now();
        let _ =
            bem::solve_charges(&m, bem::Drive::antisymmetric(1.0), &SolverSettings::default())
                .unwrap();
        println!(
            "N={:>6}: assemble {:>6} ms, solve {:>6} ms",
            scene.panel_count(),
            (t1 - t0).as_millis(),
            t1.elapsed().as_millis()
        );
    }
}
