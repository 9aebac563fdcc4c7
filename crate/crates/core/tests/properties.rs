//! Property-based checks of invariants across modules.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use bvtrace::asymptotics::{expansion_terms, quotient_expansion, ExpansionInput};
use bvtrace::cli::{parse_config, ResultRecord};
use bvtrace::exact::lambda1_closed_form;
use bvtrace::geometry::{triangulate, Domain, P2};
use bvtrace::isoperimetric::{geometric_quotient, SubsetRegion};
use bvtrace::plaplace::rayleigh_quotient;
use bvtrace::shape::{shape_derivative, transported_quotient, PerturbationField};
use proptest::prelude::*;

/// Star-shaped polygon around the origin: simple by construction.
fn star(radii: &[f64], phase: f64) -> Vec<P2> {
    let n = radii.len();
    radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let th = phase + TAU * i as f64 / n as f64;
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

fn rigid(angle: f64, shift: P2) -> impl Fn(P2) -> P2 {
    let (c, s) = (angle.cos(), angle.sin());
    move |p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]
}

fn radii() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..1.5, 5..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polygon_measures_rigid_invariant(r in radii(), angle in 0.0..TAU, sx in -5.0..5.0f64, sy in -5.0..5.0f64) {
        let d = Domain::polygon(star(&r, 0.1)).unwrap();
        let moved = d.map_polygon(rigid(angle, [sx, sy])).unwrap();
        let (v0, b0) = d.measures().unwrap();
        let (v1, b1) = moved.measures().unwrap();
        prop_assert!((v0 - v1).abs() <= 1e-12 * v0.max(1.0) * 10.0);
        prop_assert!((b0 - b1).abs() <= 1e-12 * b0.max(1.0) * 10.0);
    }

    #[test]
    fn dilation_scales_measures(r in radii(), t in prop::sample::select(vec![0.5, 2.0]), n in 2usize..5, radius in 0.1..5.0f64) {
        for d in [Domain::polygon(star(&r, 0.0)).unwrap(), Domain::ball(n, radius).unwrap()] {
            let dim = d.dim() as i32;
            let (v0, b0) = d.measures().unwrap();
            let (v1, b1) = d.dilate(t).unwrap().measures().unwrap();
            prop_assert!((v1 - t.powi(dim) * v0).abs() <= 1e-12 * v1);
            prop_assert!((b1 - t.powi(dim - 1) * b0).abs() <= 1e-12 * b1);
        }
    }

    #[test]
    fn closed_form_monotone_in_radius(n in 2usize..6, r1 in 0.01..20.0f64, dr in 0.0..5.0f64) {
        let a = lambda1_closed_form(&Domain::ball(n, r1).unwrap()).unwrap().lambda1;
        let b = lambda1_closed_form(&Domain::ball(n, r1 + dr).unwrap()).unwrap().lambda1;
        prop_assert!(a <= b && b <= 1.0);
    }

    #[test]
    fn expansion_below_one_iff_curvature_sum_exceeds_one(
        kappa in prop::collection::vec(0.05..3.0f64, 1..4),
        eps in 0.001..0.3f64,
    ) {
        let sum: f64 = kappa.iter().sum();
        prop_assume!((sum - 1.0).abs() > 1e-9);
        prop_assume!(eps * eps * kappa.iter().cloned().fold(0.0, f64::max) < 1.0);
        let input = ExpansionInput::new(kappa, eps).unwrap();
        let q = quotient_expansion(&input).unwrap();
        prop_assert_eq!(q < 1.0, sum > 1.0);
        let t = expansion_terms(&input).unwrap();
        prop_assert!(t.bdry >= t.grad);
    }

    #[test]
    fn geometric_quotient_rigid_invariant(r in radii(), k in 0usize..5, angle in 0.0..TAU, sx in -3.0..3.0f64, sy in -3.0..3.0f64) {
        let v = star(&r, 0.3);
        let d = Domain::polygon(v.clone()).unwrap();
        let k = k % v.len();
        let tri = vec![[0.0, 0.0], v[k], v[(k + 1) % v.len()]];
        let a = SubsetRegion::polygon(tri.clone(), &d).unwrap();
        let q0 = geometric_quotient(&a, &d).unwrap();
        let f = rigid(angle, [sx, sy]);
        let d1 = d.map_polygon(&f).unwrap();
        let a1 = SubsetRegion::polygon(tri.into_iter().map(&f).collect(), &d1).unwrap();
        let q1 = geometric_quotient(&a1, &d1).unwrap();
        prop_assert!((q0 - q1).abs() <= 1e-12 * q0.max(1.0) * 10.0, "{} vs {}", q0, q1);
    }

    #[test]
    fn quotient_increases_under_dilation(r in radii(), k in 0usize..5, t1 in 0.2..3.0f64, dt in 0.01..2.0f64) {
        let v = star(&r, 0.0);
        let k = k % v.len();
        let tri = [[0.0, 0.0], v[k], v[(k + 1) % v.len()]];
        let q = |t: f64| {
            let d = Domain::polygon(v.iter().map(|p| [t * p[0], t * p[1]]).collect()).unwrap();
            let a = SubsetRegion::polygon(tri.iter().map(|p| [t * p[0], t * p[1]]).collect(), &d).unwrap();
            geometric_quotient(&a, &d).unwrap()
        };
        prop_assert!(q(t1) < q(t1 + dt));
    }

    #[test]
    fn shape_derivative_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, s in -0.8..0.8f64, phi in 0.0..TAU) {
        let d = Domain::disk(1.0).unwrap();
        let set = SubsetRegion::cap(&d, [phi.cos(), phi.sin()], s).unwrap();
        let lam = geometric_quotient(&set, &d).unwrap();
        let r1 = PerturbationField::dilation(2);
        let r2 = PerturbationField::tangential_polynomial(2);
        let r12 = PerturbationField::combine(a, &r1, b, &r2).unwrap();
        let v1 = shape_derivative(&set, lam, &r1).unwrap();
        let v2 = shape_derivative(&set, lam, &r2).unwrap();
        let v12 = shape_derivative(&set, lam, &r12).unwrap();
        prop_assert!((v12.value - (a * v1.value + b * v2.value)).abs() <= 1e-10);
        prop_assert_eq!(v12.value, v12.interior + v12.trace + v12.transport);
    }

    #[test]
    fn translations_have_zero_derivative(cx in -1.0..1.0f64, cy in -1.0..1.0f64, s in -0.8..0.8f64, phi in 0.0..TAU) {
        let d = Domain::disk(1.0).unwrap();
        let set = SubsetRegion::cap(&d, [phi.cos(), phi.sin()], s).unwrap();
        let lam = geometric_quotient(&set, &d).unwrap();
        let f = PerturbationField::translation(vec![cx, cy]).unwrap();
        prop_assert!(shape_derivative(&set, lam, &f).unwrap().value.abs() <= 1e-10);
    }

    #[test]
    fn transported_quotient_is_lipschitz_in_delta(delta in -0.05..0.05f64, s in -0.5..0.5f64) {
        let d = Domain::disk(1.0).unwrap();
        let set = SubsetRegion::cap(&d, [0.0, 1.0], s).unwrap();
        let field = PerturbationField::shear();
        let q0 = geometric_quotient(&set, &d).unwrap();
        let q = transported_quotient(&d, &set, &field, delta).unwrap();
        // sup|DR| = 1 for the shear; allow a generous constant.
        prop_assert!((q - q0).abs() <= 10.0 * q0 * delta.abs() + 1e-12);
    }

    #[test]
    fn polynomial_jacobians_match_differences(c in prop::collection::vec(-1.0..1.0f64, 6)) {
        let terms = [
            vec![(1, 0, c[0]), (2, 1, c[1]), (0, 3, c[2])],
            vec![(0, 1, c[3]), (1, 1, c[4]), (3, 0, c[5])],
        ];
        let f = PerturbationField::polynomial(terms, "random").unwrap();
        prop_assert!(f.jacobian_error(10, 1e-6, 3) <= 1e-6);
    }

    #[test]
    fn config_echo_round_trips(radius in 0.01..100.0f64, seed in 0u64..1000) {
        let text = format!("command=exact\ndomain=disk\nR={radius}\nseed={seed}\n");
        let c = parse_config(&text).unwrap();
        prop_assert_eq!(c.params["R"].parse::<f64>().unwrap(), radius);
        let out = bvtrace::cli::run(&c, c.seed).unwrap();
        let back: ResultRecord = serde_json::from_str(&out.files[0].1).unwrap();
        prop_assert_eq!(back, out.record);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rayleigh_quotient_scale_invariant(
        vals in prop::collection::vec(0.0..2.0f64, 1..2),
        c in prop::sample::select(vec![-3.0, -0.5, 1e-3, 2.0, 1e3]),
        p in 1.1..3.0f64,
        seed in 0u64..1000,
    ) {
        let mesh = Arc::new(triangulate(&Domain::disk(1.0).unwrap(), 0.2).unwrap());
        let n = mesh.num_vertices();
        // Deterministic pseudo-random field from the seed.
        let u: Vec<f64> = (0..n)
            .map(|i| vals[0] + ((i as f64 + 1.0) * (seed as f64 + 0.7) * PI).sin())
            .collect();
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let q = rayleigh_quotient(&mesh, &u, p).unwrap();
        let qc = rayleigh_quotient(&mesh, &cu, p).unwrap();
        prop_assert!((q - qc).abs() <= 1e-12 * q, "{} vs {}", q, qc);
    }
}
