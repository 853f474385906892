use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use tongues::farey::{farey_algorithm, FareyStop, Omega, Rational};
use tongues::gauss::GaussPolynomial;
use tongues::islands::f_of_lambda;
use tongues::map::{
    angle_diff, det, step_torus, torus_jacobian, wrap_angle, CylinderMap, CylinderPoint, MapParams, OrbitLabel,
    TorusPoint,
};
use tongues::spectroscopy::{ep_linear, intersects_subcritical};

fn coprime_label() -> impl Strategy<Value = OrbitLabel> {
    (1u64..40, 0u64..40).prop_filter_map("coprime", |(p, m)| OrbitLabel::new(p, m % p).ok())
}

fn torus_dist(a: TorusPoint, b: TorusPoint) -> f64 {
    angle_diff(a.j, b.j).abs().max(angle_diff(a.theta, b.theta).abs())
}

proptest! {
    #[test]
    fn wrapped_angles_stay_in_range(x in -1e6f64..1e6) {
        let w = wrap_angle(x);
        prop_assert!((0.0..TAU).contains(&w));
        prop_assert!(angle_diff(w, x).abs() < 1e-9);
    }

    #[test]
    fn one_step_preserves_area(
        omega in 0.0f64..1.0, kt in -4.0f64..4.0, j in 0.0f64..TAU, th in 0.0f64..TAU,
    ) {
        let params = MapParams::new(omega, kt);
        prop_assert!((det(&torus_jacobian(TorusPoint::new(j, th), &params)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn period_map_preserves_area(
        label in coprime_label(), da in -0.05f64..0.05, kt in -0.5f64..0.5, l in -1.0f64..1.0, th in 0.0f64..TAU,
    ) {
        let map = CylinderMap::from_params(&MapParams::new(label.ratio() + da, kt), label);
        let (_, jac) = map.compose_with_tangent(CylinderPoint::new(l, th));
        let scale = jac.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
        prop_assert!((det(&jac) - 1.0).abs() < 1e-13 * scale * scale);
    }

    #[test]
    fn conjugate_parameters_shift_theta(
        omega in 0.0f64..1.0, kt in -4.0f64..4.0, j in 0.0f64..TAU, th in 0.0f64..TAU,
    ) {
        let params = MapParams::new(omega, kt);
        let a = step_torus(TorusPoint::new(j, th), &params);
        let b = step_torus(TorusPoint::new(j, th + PI), &params.conjugate());
        prop_assert!(torus_dist(b, TorusPoint::new(a.j, a.theta + PI)) < 1e-12);
    }

    #[test]
    fn cylinder_lift_projects_to_torus(
        label in coprime_label(), da in -0.05f64..0.05, kt in -1.0f64..1.0, l in -1.0f64..1.0, th in 0.0f64..TAU,
    ) {
        let map = CylinderMap::from_params(&MapParams::new(label.ratio() + da, kt), label);
        let params = map.params();
        let pts = map.period_points(CylinderPoint::new(l, th));
        for n in 0..label.p() {
            let on_torus = step_torus(map.to_torus(n, pts[n as usize]), &params);
            prop_assert!(torus_dist(on_torus, map.to_torus(n + 1, pts[n as usize + 1])) < 1e-9);
        }
    }

    #[test]
    fn gauss_sum_modulus(label in coprime_label(), s in 0u64..80) {
        let poly = GaussPolynomial::new(label);
        let v = poly.eval(poly.rho(s));
        prop_assert!((v.norm() - (label.p() as f64).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn area_function_decreases(a in 0.0f64..0.999, b in 0.0f64..0.999) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(f_of_lambda(lo).unwrap() >= f_of_lambda(hi).unwrap());
    }

    #[test]
    fn farey_intervals_enclose_target(m in 1u64..500, q in 2u64..500) {
        prop_assume!(m < q);
        let target = Rational::from_u64(m, q).unwrap();
        let omega = Omega::Rational(target.clone());
        let seq = farey_algorithm(&omega, &FareyStop::MaxSteps(1000)).unwrap();
        prop_assert!(seq.last().unwrap().is_point());
        for iv in &seq {
            let (l, r) = iv.endpoints();
            prop_assert!(l <= &target && &target <= r);
            if !iv.is_point() {
                prop_assert_eq!(iv.determinant(), Some(1.into()));
            }
        }
    }

    #[test]
    fn windows_lie_inside_the_tongue(
        w in 0.001f64..0.999, alpha in 0.5f64..200.0, label in coprime_label(), frac in 0.0f64..1.0,
    ) {
        let ep = ep_linear(Omega::Rational(format!("{w:.6}").parse().unwrap()), alpha).unwrap();
        let x = intersects_subcritical(&ep, label, 6.0).unwrap();
        let p = label.p() as f64;
        for win in [x.left, x.right].into_iter().flatten() {
            let t = win.ktilde.0 + frac * (win.ktilde.1 - win.ktilde.0);
            prop_assume!(t > win.ktilde.0 && t < win.ktilde.1);
            let om = ep.omega_at(win.arm.sign() * t);
            prop_assert!((om - label.ratio()).abs() <= t / (TAU * p.sqrt()) + 1e-12);
            prop_assert!(t < 6.0 * p.powf(-1.5));
        }
    }
}
