use proptest::prelude::*;

use planar_perspective::ivp::{derivative_pair, solve_regular, BranchSign, Direction, IvpOptions, RegularIC};
use planar_perspective::param::polar_to_cartesian;
use planar_perspective::taylor::second_derivative_roots;
use planar_perspective::{Interval, ModulusModel};

/// `rho = c + a sin(theta) + b cos(2 theta)` and the matching `U` source.
fn trig(c: f64, a: f64, b: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64, String) {
    let rho = move |t: f64| c + a * t.sin() + b * (2.0 * t).cos();
    let drho = move |t: f64| a * t.cos() - 2.0 * b * (2.0 * t).sin();
    let src = format!("({c} + {a}*sin(theta) + {b}*cos(2*theta))^2 + ({a}*cos(theta) - 2*{b}*sin(2*theta))^2");
    (rho, drho, src)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn roots_solve_the_quadratic(rho0 in 0.1f64..10.0, u2 in -50.0f64..50.0) {
        if let Ok((b1, b2)) = second_derivative_roots(rho0, u2) {
            prop_assert!(b1 <= b2);
            for b in [b1, b2] {
                let q = 2.0 * b * b + 2.0 * rho0 * b - u2;
                prop_assert!(q.abs() <= 1e-12 * (1.0 + u2.abs() + rho0 * rho0));
            }
        } else {
            prop_assert!(rho0 * rho0 + 2.0 * u2 < 0.0);
        }
    }

    #[test]
    fn slope_pair_is_symmetric(c in 1.0f64..4.0, a in -0.5f64..0.5, f in 0.05f64..0.95) {
        let u = ModulusModel::parse(&format!("{c} + {a}*sin(theta)"), Interval::new(0.0, 1.0).unwrap()).unwrap();
        let t0 = 0.5;
        let rho0 = f * u.eval(t0).unwrap().sqrt();
        let (p, m) = derivative_pair(&u, RegularIC::new(t0, rho0)).unwrap();
        let alpha = (c + a * t0.sin() - rho0 * rho0).sqrt();
        prop_assert_eq!(p, -m);
        prop_assert!((p - alpha).abs() <= 1e-12 * (1.0 + alpha));
    }

    #[test]
    fn stable_direction_recovers_the_curve(
        c in 1.5f64..4.0,
        a in 0.2f64..1.0,
        b in -0.05f64..0.05,
        t0 in -0.5f64..0.5,
    ) {
        let (rho, drho, src) = trig(c, a, b);
        let u = ModulusModel::parse(&src, Interval::new(-0.6, 0.6).unwrap()).unwrap();
        prop_assume!((0..=200).all(|k| drho(-0.6 + 1.2 * k as f64 / 200.0) > 0.05));
        let ic = RegularIC::new(t0, rho(t0));
        // Rising and integrated forward, the direction in which errors decay.
        let p = solve_regular(&u, ic, BranchSign::Plus, Direction::Forward, &IvpOptions::default()).unwrap();
        let err = p.nodes.iter().map(|n| (n.rho - rho(n.theta)).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-7, "error {err:e}");
    }

    #[test]
    fn solutions_stay_below_sqrt_u(c in 1.0f64..3.0, a in -0.4f64..0.4, f in 0.1f64..0.9, sign in any::<bool>(), fwd in any::<bool>()) {
        let u = ModulusModel::parse(&format!("{c} + {a}*sin(3*theta)"), Interval::new(0.0, 2.0).unwrap()).unwrap();
        let rho0 = f * u.eval(1.0).unwrap().sqrt();
        let sign = if sign { BranchSign::Plus } else { BranchSign::Minus };
        let dir = if fwd { Direction::Forward } else { Direction::Backward };
        let p = solve_regular(&u, RegularIC::new(1.0, rho0), sign, dir, &IvpOptions::default()).unwrap();
        for n in &p.nodes {
            let cap = (c + a * (3.0 * n.theta).sin()).sqrt();
            prop_assert!(n.rho <= cap + 1e-8, "rho {} above {cap} at {}", n.rho, n.theta);
            prop_assert!(n.rho > 0.0);
        }
    }

    #[test]
    fn polar_points_round_trip(theta in 0.0f64..std::f64::consts::PI, rho in 0.01f64..100.0) {
        let p = polar_to_cartesian(theta, rho).unwrap();
        prop_assert!((p.x.hypot(p.y) - rho).abs() <= 1e-12 * rho);
        prop_assert!((p.y.atan2(p.x) - theta).abs() <= 1e-12);
    }
}
