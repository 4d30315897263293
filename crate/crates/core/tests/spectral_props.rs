use bolab_core::spectral::{
    commutator, dealias, derivative, hilbert, linear_propagator, Transform, Workspace,
};
use bolab_core::weighted::windowed_coordinate;
use bolab_core::{Field, Grid};
use proptest::prelude::*;

fn setup(n: usize, l: f64) -> (Grid, Transform, Workspace) {
    let g = Grid::new(n, l).unwrap();
    let tr = Transform::new(g).unwrap();
    let ws = tr.workspace();
    (g, tr, ws)
}

/// Sum of Gaussian bumps, narrow enough to be resolved and to vanish at the edges.
fn bumps(g: Grid, params: &[(f64, f64, f64)]) -> Field {
    Field::from_fn(g, |x| {
        params.iter().map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum()
    })
    .unwrap()
}

fn rel_diff(a: &Field, b: &Field) -> f64 {
    let num = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let den = b.values().iter().map(|y| y * y).sum::<f64>();
    (num / den).sqrt()
}

fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -5.0..5.0f64, 0.8..2.0f64), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_is_identity(p in bump_params(), n_pow in 7u32..12, three in any::<bool>()) {
        let n = if three { 3 << (n_pow - 1) } else { 1 << n_pow };
        let (g, tr, mut ws) = setup(n, 60.0);
        let f = bumps(g, &p);
        prop_assume!(f.max_abs() > 1e-3);
        let back = tr.inverse(&tr.forward(&f, &mut ws).unwrap(), &mut ws).unwrap();
        prop_assert!(rel_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn parseval_and_hermitian(p in bump_params(), l in 40.0..120.0f64) {
        let (g, tr, mut ws) = setup(1024, l);
        let f = bumps(g, &p);
        prop_assume!(f.max_abs() > 1e-3);
        let s = tr.forward(&f, &mut ws).unwrap();
        let lhs = s.l2_norm_sq();
        let rhs = f.l2_norm().powi(2);
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-10);
        prop_assert!(s.hermitian_defect() < 1e-12);
    }

    #[test]
    fn hilbert_squared_is_minus_identity_on_zero_mean(p in bump_params()) {
        let (g, tr, mut ws) = setup(1024, 60.0);
        let f = bumps(g, &p);
        let mean = f.integral() / g.length();
        let f0 = Field::new(g, f.values().iter().map(|v| v - mean).collect()).unwrap();
        prop_assume!(f0.max_abs() > 1e-3);
        let hh = tr.inverse(&hilbert(&hilbert(&tr.forward(&f0, &mut ws).unwrap())), &mut ws).unwrap();
        prop_assert!(rel_diff(&hh.scale(-1.0), &f0) < 1e-12);
    }

    #[test]
    fn propagator_is_unitary_and_a_group(p in bump_params(), t in -50.0..50.0f64) {
        let (g, tr, mut ws) = setup(2048, 80.0);
        let f = bumps(g, &p);
        prop_assume!(f.max_abs() > 1e-3);
        let s = tr.forward(&f, &mut ws).unwrap();
        let w = linear_propagator(&s, t);
        prop_assert!(((w.l2_norm_sq() - s.l2_norm_sq()) / s.l2_norm_sq()).abs() < 1e-13);
        let back = tr.inverse(&linear_propagator(&w, -t), &mut ws).unwrap();
        prop_assert!(rel_diff(&back, &f) < 1e-12);
    }

    #[test]
    fn dealias_keeps_retained_band(p in bump_params(), keep in 0.2..1.0f64) {
        let (g, tr, mut ws) = setup(256, 40.0);
        let s = tr.forward(&bumps(g, &p), &mut ws).unwrap();
        let d = dealias(&s, keep).unwrap();
        for (a, b) in d.coeffs().iter().zip(s.coeffs()) {
            prop_assert!(*a == *b || a.norm() == 0.0);
        }
        prop_assert!(d.l2_norm_sq() <= s.l2_norm_sq());
    }
}

fn gaussian_derivative(g: Grid, order: u32) -> Field {
    let base = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let tr = Transform::new(g).unwrap();
    let mut ws = tr.workspace();
    tr.inverse(&derivative(&tr.forward(&base, &mut ws).unwrap(), order).unwrap(), &mut ws).unwrap()
}

const COMM_N: usize = 16384;
const COMM_L: f64 = 800.0;
const INNER: f64 = 100.0;
const OUTER: f64 = 180.0;

fn window_max(f: &Field) -> f64 {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .filter(|(j, _)| g.x(*j).abs() <= INNER)
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// `x H f - H(x f)` with no derivatives.
fn plain_commutator(tr: &Transform, ws: &mut Workspace, a: &Field, f: &Field) -> Field {
    let hf = tr.inverse(&hilbert(&tr.forward(f, ws).unwrap()), ws).unwrap();
    let h_af = tr.inverse(&hilbert(&tr.forward(&a.mul(f).unwrap(), ws).unwrap()), ws).unwrap();
    a.mul(&hf).unwrap().sub(&h_af).unwrap()
}

#[test]
fn coordinate_commutes_with_hilbert_after_derivatives() {
    let (g, tr, mut ws) = setup(COMM_N, COMM_L);
    let x1 = windowed_coordinate(g, 1, INNER, OUTER).unwrap();
    let x2 = windowed_coordinate(g, 2, INNER, OUTER).unwrap();
    // Zero mean and zero first moment.
    let f = gaussian_derivative(g, 2);
    let c1 = commutator(&tr, &mut ws, &x1, &f, 0, 1).unwrap();
    let c2 = commutator(&tr, &mut ws, &x2, &f, 0, 2).unwrap();
    assert!(window_max(&c1) < 1e-6, "[H;x]f' = {:e}", window_max(&c1));
    assert!(window_max(&c2) < 1e-6, "[H;x^2]f'' = {:e}", window_max(&c2));
}

#[test]
fn coordinate_commutator_vanishes_only_for_zero_mean() {
    let (g, tr, mut ws) = setup(COMM_N, COMM_L);
    let x1 = windowed_coordinate(g, 1, INNER, OUTER).unwrap();
    let zero_mean = gaussian_derivative(g, 3);
    assert!(zero_mean.integral().abs() < 1e-12);
    let c = plain_commutator(&tr, &mut ws, &x1, &zero_mean);
    assert!(window_max(&c) < 1e-6, "zero-mean branch {:e}", window_max(&c));

    let bump = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    let c = plain_commutator(&tr, &mut ws, &x1, &bump);
    // [H; x] f = (1/pi) int f on the line.
    let expected = bump.integral() / std::f64::consts::PI;
    let centre = c.values()[COMM_N / 2];
    assert!((centre - expected).abs() < 1e-3 * expected, "centre {centre} vs {expected}");
    assert!(window_max(&c) > 0.5);
}

#[test]
fn commutator_with_shifted_constant_is_zero() {
    let (g, tr, mut ws) = setup(1024, 60.0);
    let a = Field::from_fn(g, |_| 3.5).unwrap();
    let f = Field::from_fn(g, |x| (-x * x).exp()).unwrap();
    for (l, m) in [(0, 1), (1, 0), (2, 3)] {
        let c = commutator(&tr, &mut ws, &a, &f, l, m).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }
}
