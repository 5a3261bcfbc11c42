use caplab_core::covering::vitali_select;
use caplab_core::functionals::{line_integral, thresholds};
use caplab_core::geometry::integrate;
use caplab_core::{Capsule, OseenKernel, Preset, QuadratureSpec, Vec3, VectorField};
use num_rational::Rational64;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("nonzero", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn capsule(spread: f64) -> impl Strategy<Value = Capsule> {
    (vec3(spread), 0.2..2.0f64, 1.0..5.0f64, direction())
        .prop_map(|(c, r, stretch, e)| Capsule::new(c, r, r * stretch, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_is_homogeneous_and_matches_membership(c in capsule(3.0), y in vec3(6.0), t in 0.1..3.0f64) {
        let g = c.gauge(&y);
        let scaled = c.center() + (y - c.center()) * t;
        prop_assert!((c.gauge(&scaled) - t * g).abs() <= 1e-9 * (1.0 + t * g));
        if (g - 1.0).abs() > 1e-9 {
            prop_assert_eq!(c.contains(&y), g < 1.0);
        }
    }

    #[test]
    fn intersection_is_symmetric_and_exact(a in capsule(4.0), b in capsule(4.0)) {
        prop_assert_eq!(a.intersects(&b), b.intersects(&a));
        prop_assert_eq!(a.intersects(&b), a.core_distance(&b) < a.radius() + b.radius());
        prop_assert!(a.intersects(&a.dilate(2.0).unwrap()));
    }

    #[test]
    fn unit_integral_is_volume(c in capsule(2.0)) {
        let v = integrate(&c, |_| 1.0, &QuadratureSpec::Gauss { order: 4 }).unwrap();
        prop_assert!((v / c.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_selection_is_disjoint_and_attached(family in prop::collection::vec(capsule(6.0), 1..60)) {
        let s = vitali_select(&family);
        prop_assert!(s.disjoint && s.attached);
        prop_assert!(s.iterations <= family.len());
        for (i, &a) in s.selected.iter().enumerate() {
            for &b in &s.selected[i + 1..] {
                prop_assert!(!family[a].intersects(&family[b]));
            }
        }
    }

    #[test]
    fn constant_field_line_integral(u in vec3(3.0), x0 in vec3(2.0), x1 in vec3(2.0)) {
        let field: VectorField = Preset::Constant { velocity: u }.into();
        let got = line_integral(&field, &x0, &x1, 4).unwrap();
        let want = u.dot(&(x1 - x0));
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn kernel_solves_pde_and_respects_gradient_bound(
        speed in 0.0..20.0f64, nu in 0.1..5.0f64, dir in direction(), r in 0.05..10.0f64,
    ) {
        let k = OseenKernel::new(nu, speed).unwrap();
        let x = dir * r;
        prop_assert!(k.relative_residual(&x).unwrap() < 1e-8);
        prop_assert!(k.grad_gamma(&x).unwrap().norm() <= k.gradient_bound(&x).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn alpha_threshold_is_exact(num in 0i64..50, den in 51i64..200) {
        let a = Rational64::new(num, den);
        let f = Rational64::new(5, 12);
        let t = thresholds(a, Rational64::new(0, 1), f, f).unwrap();
        prop_assert_eq!(t.p_alpha, Rational64::from_integer(4) / (Rational64::from_integer(1) - a));
        prop_assert_eq!(t.p_beta, Rational64::from_integer(4));
    }
}
