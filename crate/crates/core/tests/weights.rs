use bolab_core::spectral::Transform;
use bolab_core::weighted::{
    bracket_weighted_l2, tail_amplitude, truncated_weight, weighted_l2_truncated, z_norm, WeightSpec, XW_BOUND,
};
use bolab_core::{Field, Grid};
use proptest::prelude::*;
use std::f64::consts::PI;

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_invariants_hold(cap in 1.5..5000.0f64) {
        let w = WeightSpec::new(cap).unwrap();
        let mut prev = w.value(0.0);
        for i in 1..=4000 {
            let x = 4.0 * cap * i as f64 / 4000.0;
            let v = w.value(x);
            let s = w.slope(x);
            prop_assert!(v >= prev);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(x * s <= XW_BOUND * v);
            prop_assert_eq!(w.value(-x), v);
            prev = v;
        }
        prop_assert_eq!(truncated_weight(&w, 4.0 * cap), 2.0 * cap);
        prop_assert_eq!(truncated_weight(&w, -3.0 * cap), 2.0 * cap);
        prop_assert_eq!(truncated_weight(&w, 0.0), 1.0);
        // Continuity of value and slope at both knots.
        for knot in [cap, 3.0 * cap] {
            let e = knot * 1e-12;
            prop_assert!((w.value(knot + e) - w.value(knot - e)).abs() < 1e-10 * knot.max(1.0));
            prop_assert!((w.slope(knot + e) - w.slope(knot - e)).abs() < 1e-10);
        }
    }

    #[test]
    fn weight_grows_towards_bracket(cap in 1.5..500.0f64, factor in 1.0..10.0f64, x in 0.0..5000.0f64) {
        let small = WeightSpec::new(cap).unwrap();
        let large = WeightSpec::new(cap * factor).unwrap();
        prop_assert!(small.value(x) <= large.value(x) + 1e-12 * x.max(1.0));
        prop_assert!(large.value(x) <= bracket(x) * (1.0 + 1e-12));
    }
}

#[test]
fn truncated_norm_inside_definition_region() {
    let g = Grid::new(4096, 400.0).unwrap();
    let u = Field::from_fn(g, |x| if x.abs() < 5.0 { (1.0 - (x / 5.0).powi(2)).powi(3) } else { 0.0 }).unwrap();
    let w = WeightSpec::new(10.0).unwrap();
    for p in 1..=3u32 {
        let exact: f64 = u
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| (bracket(g.x(j)).powi(p as i32) * v).powi(2))
            .sum::<f64>();
        let exact = (g.dx() * exact).sqrt();
        let got = weighted_l2_truncated(&u, &w, p).unwrap();
        assert!(((got - exact) / exact).abs() < 1e-12);
    }
    assert!(weighted_l2_truncated(&u, &w, 4).is_err());
}

#[test]
fn truncated_norm_increases_with_cap_and_saturates() {
    let g = Grid::new(8192, 400.0).unwrap();
    let u = Field::from_fn(g, |x| 1.0 / (1.0 + x.powi(4))).unwrap();
    let mut prev = 0.0;
    for cap in [2.0, 4.0, 8.0, 16.0, 32.0] {
        let v = weighted_l2_truncated(&u, &WeightSpec::new(cap).unwrap(), 1).unwrap();
        assert!(v >= prev);
        prev = v;
    }
    let gauss = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let limit = bracket_weighted_l2(&gauss, 1);
    let v = weighted_l2_truncated(&gauss, &WeightSpec::new(50.0).unwrap(), 1).unwrap();
    assert!(((v - limit) / limit).abs() < 1e-14);
}

#[test]
fn z_norm_examples() {
    let g = Grid::new(8192, 400.0).unwrap();
    let tr = Transform::new(g).unwrap();
    let mut ws = tr.workspace();
    let zero = z_norm(&tr, &mut ws, &Field::zeros(g), 2.0, 3.0).unwrap();
    assert_eq!((zero.hs_norm, zero.weight_norm, zero.z_norm), (0.0, 0.0, 0.0));

    let u = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let r0 = z_norm(&tr, &mut ws, &u, 0.0, 0.0).unwrap();
    assert!((r0.weight_norm - u.l2_norm()).abs() < 1e-12 * u.l2_norm());
    assert!((r0.hs_norm - u.l2_norm()).abs() < 1e-12 * u.l2_norm());

    let r2 = z_norm(&tr, &mut ws, &u, 1.0, 2.0).unwrap();
    let expected = 3.0 / 16.0 * (PI / 2.0).sqrt();
    assert!((r2.weight_norm.powi(2) - expected).abs() < 1e-8);
    assert!((r2.z_norm.powi(2) - r2.hs_norm.powi(2) - r2.weight_norm.powi(2)).abs() < 1e-12);
    assert!(r2.reliable);
    // ||u||_{H^1}^2 = int (1 + xi^2) |u_hat|^2 / 2pi = ||u||^2 + ||u'||^2.
    let h1 = (PI / 2.0).sqrt() + (PI / 2.0).sqrt();
    assert!((r2.hs_norm.powi(2) - h1).abs() < 1e-10);

    let wide = Field::from_fn(g, |_| 1.0).unwrap();
    assert!(!z_norm(&tr, &mut ws, &wide, 0.0, 1.0).unwrap().reliable);
    assert!(z_norm(&tr, &mut ws, &u, 9.0, 1.0).is_err());
}

#[test]
fn tail_fit_on_gaussian_makes_no_claim() {
    let g = Grid::new(8192, 400.0).unwrap();
    let u = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let fit = tail_amplitude(&u, (20.0, 80.0)).unwrap();
    assert!(!fit.reliable);
    assert_eq!(fit.amplitude, 0.0);
}
