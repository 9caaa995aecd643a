use super::*;
use crate::expr::Expr;

#[test]
fn basis_commutators_are_exact() {
    let m0 = Sl2Elem::m0();
    let m1 = Sl2Elem::m1();
    let m2 = Sl2Elem::m2();
    assert_eq!(m0.bracket(&m1), m0);
    assert_eq!(m0.bracket(&m2), m1.scale(2.0));
    assert_eq!(m1.bracket(&m2), m2);
    // Antisymmetry comes along for free.
    assert_eq!(m1.bracket(&m0), m0.scale(-1.0));
}

#[test]
fn basis_matrices_have_documented_entries() {
    assert_eq!(Sl2Elem::m0().to_matrix(), [0.0, -1.0, 0.0, 0.0]);
    assert_eq!(Sl2Elem::m1().to_matrix(), [-0.5, 0.0, 0.0, 0.5]);
    assert_eq!(Sl2Elem::m2().to_matrix(), [0.0, 0.0, 1.0, 0.0]);
}

#[test]
fn coordinates_round_trip_through_matrices() {
    let x = Sl2Elem::new(0.75, -2.0, 3.5);
    let back = Sl2Elem::from_matrix(x.to_matrix()).unwrap();
    assert_eq!(x, back);
    assert!(Sl2Elem::from_matrix([1.0, 0.0, 0.0, 1.0]).is_err());
}

#[test]
fn mobius_covers_all_three_branches() {
    let a = Sl2::new(2.0, 1.0, 1.0, 1.0).unwrap(); // det = 1
    assert_eq!(a.mobius(ExtReal::Finite(0.0)), ExtReal::Finite(1.0));
    // Pole: y = −δ/γ = −1.
    assert_eq!(a.mobius(ExtReal::Finite(-1.0)), ExtReal::Infinity);
    // ∞ ↦ α/γ = 2.
    assert_eq!(a.mobius(ExtReal::Infinity), ExtReal::Finite(2.0));
    // Upper-triangular: ∞ stays ∞.
    let u = Sl2::new(1.0, 3.0, 0.0, 1.0).unwrap();
    assert_eq!(u.mobius(ExtReal::Infinity), ExtReal::Infinity);
}

#[test]
fn mobius_is_a_group_action_spotcheck() {
    let a = Sl2::new(1.2, -0.3, 0.4, 0.7333333333333334).unwrap();
    let b = Sl2::renormalized(0.9, 2.0, -0.1, 1.0).unwrap();
    for y in [ExtReal::Finite(0.0), ExtReal::Finite(-5.5), ExtReal::Infinity] {
        let lhs = a.mul(&b).mobius(y);
        let rhs = a.mobius(b.mobius(y));
        assert!(chordal_distance(lhs, rhs) < 1e-12, "{lhs:?} vs {rhs:?}");
    }
}

#[test]
fn inverse_undoes_mobius_exactly_enough() {
    let a = Sl2::renormalized(3.0, 1.0, 2.0, 1.0).unwrap();
    let id = a.mul(&a.inverse());
    assert!((id.alpha - 1.0).abs() < 1e-15 && id.beta.abs() < 1e-15);
    assert!((id.delta - 1.0).abs() < 1e-15 && id.gamma.abs() < 1e-15);
}

#[test]
fn sl2_constructor_enforces_unimodularity() {
    assert!(Sl2::new(1.0, 0.0, 0.0, 1.0 + 2e-9).is_err());
    assert!(Sl2::new(1.0, 0.0, 0.0, 1.0 + 2e-10).is_ok());
    assert!(Sl2::renormalized(2.0, 0.0, 0.0, 2.0).is_ok());
    assert!(Sl2::renormalized(1.0, 0.0, 0.0, -1.0).is_err());
}

#[test]
fn chordal_distance_identifies_both_infinities() {
    assert_eq!(chordal_distance(ExtReal::Infinity, ExtReal::Infinity), 0.0);
    assert!(chordal_distance(ExtReal::Finite(1e12), ExtReal::Infinity) < 1e-11);
    assert!(chordal_distance(ExtReal::Finite(-1e12), ExtReal::Infinity) < 1e-11);
    // Crossing the pole: −big and +big are close on the circle.
    assert!(chordal_distance(ExtReal::Finite(-1e9), ExtReal::Finite(1e9)) < 1e-8);
    let d = chordal_distance(ExtReal::Finite(0.0), ExtReal::Infinity);
    assert!((d - std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn inverted_chart_coordinates() {
    assert_eq!(ExtReal::Infinity.inverted(), ExtReal::Finite(0.0));
    assert_eq!(ExtReal::Finite(0.0).inverted(), ExtReal::Infinity);
    assert_eq!(ExtReal::Finite(2.0).inverted(), ExtReal::Finite(-0.5));
}

fn shear_scale_curve() -> Sl2Curve {
    // T(β(t))·D(a(t))·S(γ(t)) assembled symbolically: det ≡ 1 by construction.
    let beta = Expr::parse_plain("0.3*sin(t)").unwrap();
    let a = Expr::parse_plain("0.2*cos(t)").unwrap();
    let gamma = Expr::parse_plain("0.4*sin(2*t)").unwrap();
    let ea = a.clone().exp();
    let ena = (-a).exp();
    let alpha = ea + beta.clone() * gamma.clone() * ena.clone();
    let b_entry = beta * ena.clone();
    let g_entry = gamma * ena.clone();
    Sl2Curve::analytic(alpha, b_entry, g_entry, ena, (-3.0, 3.0)).unwrap()
}

#[test]
fn analytic_curve_evaluates_and_checks_det() {
    let c = shear_scale_curve();
    let m = c.eval(1.3).unwrap();
    assert!((m.det() - 1.0).abs() < 1e-15);

    // A curve that drifts off SL(2): alpha = e^t with delta = 1.
    let bad = Sl2Curve::analytic(
        Expr::time().exp(),
        Expr::number(0.0),
        Expr::number(0.0),
        Expr::number(1.0),
        (0.0, 1.0),
    );
    assert!(matches!(bad, Err(Error::NotUnimodular { .. })));
}

#[test]
fn analytic_jet_matches_finite_differences() {
    let c = shear_scale_curve();
    let t = 0.8;
    let (e, de) = c.eval_jet(t).unwrap();
    let h = 1e-5;
    let p = c.eval(t + h).unwrap().to_array();
    let m = c.eval(t - h).unwrap().to_array();
    for k in 0..4 {
        let fd = (p[k] - m[k]) / (2.0 * h);
        assert!((de[k] - fd).abs() < 1e-8, "entry {k}: {} vs {fd}", de[k]);
        assert!((e[k] - c.eval(t).unwrap().to_array()[k]).abs() < 1e-15);
    }
}

#[test]
fn tabulated_curve_interpolates_with_unimodular_output() {
    let src = shear_scale_curve();
    let n = 61;
    let ts: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
    let mats: Vec<[f64; 4]> = ts.iter().map(|&t| src.eval(t).unwrap().to_array()).collect();
    let tangents: Vec<[f64; 4]> = ts.iter().map(|&t| src.eval_jet(t).unwrap().1).collect();
    let tab = Sl2Curve::tabulated(HermiteCurve::new(ts, mats, Some(tangents)).unwrap());

    for k in 0..200 {
        let t = -2.0 + 4.0 * k as f64 / 199.0;
        let a = tab.eval(t).unwrap();
        let b = src.eval(t).unwrap();
        assert!((a.det() - 1.0).abs() < 1e-14);
        let err = a
            .to_array()
            .iter()
            .zip(b.to_array())
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        assert!(err < 1e-6, "interpolation error {err} at t = {t}");
    }

    assert!(matches!(tab.eval(2.5), Err(Error::Precondition(_))));
    assert!(tab.time_span().unwrap() == (-2.0, 2.0));
}

#[test]
fn tabulated_default_tangents_are_usable() {
    let src = shear_scale_curve();
    let n = 101;
    let ts: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let mats: Vec<[f64; 4]> = ts.iter().map(|&t| src.eval(t).unwrap().to_array()).collect();
    let tab = Sl2Curve::tabulated(HermiteCurve::new(ts, mats, None).unwrap());
    for k in 0..50 {
        let t = -1.0 + 2.0 * k as f64 / 49.0;
        let err = tab
            .eval(t)
            .unwrap()
            .to_array()
            .iter()
            .zip(src.eval(t).unwrap().to_array())
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
        assert!(err < 1e-5, "error {err} at t = {t}");
    }
}

#[test]
fn curve_inverse_is_pointwise_inverse() {
    let curves = {
        let src = shear_scale_curve();
        let ts: Vec<f64> = (0..31).map(|i| 2.0 * i as f64 / 30.0).collect();
        let mats: Vec<[f64; 4]> = ts.iter().map(|&t| src.eval(t).unwrap().to_array()).collect();
        let tangents: Vec<[f64; 4]> = ts.iter().map(|&t| src.eval_jet(t).unwrap().1).collect();
        vec![
            Sl2Curve::constant(Sl2::renormalized(2.0, 1.0, 1.0, 1.0).unwrap()),
            src.clone(),
            Sl2Curve::tabulated(HermiteCurve::new(ts, mats, Some(tangents)).unwrap()),
        ]
    };
    for c in curves {
        let inv = c.inverse();
        // 0.2·k lands on knots of the tabulated curve, where interpolation is
        // exact; the tolerance below is about inversion, not interpolation.
        for k in 1..10 {
            let t = 0.2 * k as f64;
            let prod = c.eval(t).unwrap().mul(&inv.eval(t).unwrap());
            assert!((prod.alpha - 1.0).abs() < 1e-9, "{prod:?}");
            assert!(prod.beta.abs() < 1e-9 && prod.gamma.abs() < 1e-9);
        }
    }
}
