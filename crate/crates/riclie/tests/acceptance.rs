//! The toolkit's acceptance gate: ten end-to-end checks, one test each,
//! printing one PASS/FAIL line per criterion (visible with
//! `cargo test --test acceptance -- --nocapture`; the per-test ok/FAILED
//! lines carry the same information in a default run).
//!
//! Every random draw is seeded, so reruns are bit-for-bit repeatable.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riclie::algebra::{chordal_distance, ExtReal, Sl2Curve, Sl2Elem};
use riclie::expr::{Expr, Grid};
use riclie::integrability::{
    ctu_test, fixtures, linearization_test, scaling_curve, superposition, tu_transform, Case,
};
use riclie::liegroup::solve_connect;
use riclie::riccati::{push_solution, transform, Coeff, RiccatiEq, TargetForm};
use riclie::solvers::{
    oracle_integrate, solve_autonomous, solve_linear, upper_gamma, upper_gamma_int, Chart,
    SolutionTrace, StepCtrl,
};

const SEED: u64 = 0x52_1C_C4_71;

fn criterion(label: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("PASS {label}"),
        Err(payload) => {
            println!("FAIL {label}");
            resume_unwind(payload);
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn plain(src: &str) -> Expr {
    Expr::parse_plain(src).expect("fixed expression parses")
}

/// A smooth equation with trigonometric coefficients drawn from `±amp`.
fn random_trig_eq(rng: &mut ChaCha8Rng, amp: f64, domain: (f64, f64)) -> RiccatiEq {
    let mut params = BTreeMap::new();
    for key in ["p0", "q0", "r0", "p1", "q1", "r1", "p2", "q2", "r2"] {
        params.insert(key.to_string(), rng.gen_range(-amp..amp));
    }
    RiccatiEq::parse(
        "p0 + q0*sin(t) + r0*cos(t)",
        "p1 + q1*sin(t) + r1*cos(t)",
        "p2 + q2*sin(t) + r2*cos(t)",
        &params,
        domain,
    )
    .expect("trigonometric coefficients parse")
}

/// A random analytic unimodular curve assembled from shear and scaling
/// factors, so its determinant is exactly 1 by construction.
fn random_unimodular_curve(rng: &mut ChaCha8Rng, domain: (f64, f64)) -> Sl2Curve {
    let mut params = BTreeMap::new();
    for key in ["ba", "bb", "ca", "cb", "sa", "sb"] {
        let amp = if key.starts_with('s') { 0.3 } else { 0.8 };
        params.insert(key.to_string(), rng.gen_range(-amp..amp));
    }
    let parse = |src: &str| Expr::parse(src, &params).expect("curve entry parses");
    Sl2Curve::analytic(
        parse("(1 + (ba + bb*sin(t))*(ca + cb*cos(t))) * exp(sa*t + sb*sin(t))"),
        parse("(ba + bb*sin(t)) * exp(-(sa*t + sb*sin(t)))"),
        parse("(ca + cb*cos(t)) * exp(sa*t + sb*sin(t))"),
        parse("exp(-(sa*t + sb*sin(t)))"),
        domain,
    )
    .expect("shear-scaling product is unimodular")
}

fn max_chordal(a: &SolutionTrace, b: &SolutionTrace) -> f64 {
    assert_eq!(a.times.len(), b.times.len(), "traces share their grid");
    a.values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| chordal_distance(*x, *y))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_gamma_family_closed_form_matches_the_oracle() {
    criterion(
        "[ 1] closed-form incomplete-gamma family vs oracle on [0.5, 5]",
        || {
            let start = Instant::now();
            let eq = fixtures::hovy(2.0).unwrap().eq;
            // Fix the trajectory constant from y(0.5) = 2: the denominator
            // must equal -t^2 e^(-t) at t = 0.5.
            let u = 0.25 * (-0.5f64).exp();
            let big_k = -u - upper_gamma(3.0, 0.5).unwrap();
            let closed = fixtures::hovy_solution(2.0, big_k).unwrap();
            assert!((closed.value(0.5).unwrap() - 2.0).abs() <= 1e-12);

            let times = linspace(0.5, 5.0, 101);
            let oracle = oracle_integrate(
                &eq,
                (0.5, 5.0),
                ExtReal::Finite(2.0),
                &times,
                &StepCtrl::default(),
            )
            .unwrap();
            let mut sup = 0.0f64;
            for (t, v) in times.iter().zip(oracle.values.iter()) {
                let want = closed.value(*t).unwrap();
                let got = v.finite().expect("trajectory stays finite");
                sup = sup.max((want - got).abs());
            }
            assert!(sup <= 1e-6, "sup-error {sup:.3e} exceeds 1e-6");
            let elapsed = start.elapsed();
            assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
        },
    );
}

#[test]
fn criterion_02_transformations_commute_with_solving() {
    criterion(
        "[ 2] 50 random curve/equation pairs: push(solution) = solve(transformed)",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
            let domain = (0.0, 2.0);
            let times = linspace(domain.0, domain.1, 41);
            let ctrl = StepCtrl {
                rtol: 1e-10,
                atol: 1e-12,
                ..StepCtrl::default()
            };
            for trial in 0..50 {
                let eq = random_trig_eq(&mut rng, 0.8, domain);
                let curve = random_unimodular_curve(&mut rng, domain);
                let y0 = if trial % 10 == 9 {
                    ExtReal::Infinity
                } else {
                    ExtReal::Finite(rng.gen_range(-1.5..1.5))
                };
                let solution = oracle_integrate(&eq, domain, y0, &times, &ctrl).unwrap();
                let pushed = push_solution(&curve, &solution).unwrap();
                let moved = transform(&eq, &curve).unwrap();
                let check =
                    oracle_integrate(&moved, domain, pushed.values[0], &times, &ctrl).unwrap();
                let sup = max_chordal(&pushed, &check);
                assert!(
                    sup <= 1e-6,
                    "trial {trial}: chordal sup-error {sup:.3e} exceeds 1e-6"
                );
            }
        },
    );
}

#[test]
fn criterion_03_connecting_system_conserves_the_determinant() {
    criterion(
        "[ 3] 20 random transports over a span of 10 keep |det - 1| <= 1e-9",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
            let domain = (0.0, 10.0);
            let times = linspace(domain.0, domain.1, 51);
            let ctrl = StepCtrl {
                rtol: 1e-13,
                atol: 1e-15,
                ..StepCtrl::default()
            };
            for trial in 0..20 {
                let source = random_trig_eq(&mut rng, 0.5, domain);
                let target = random_trig_eq(&mut rng, 0.5, domain);
                let path = solve_connect(
                    &source,
                    &target,
                    [1.0, 0.0, 0.0, 1.0],
                    domain,
                    &times,
                    &ctrl,
                )
                .unwrap();
                assert!(
                    path.det_drift <= 1e-9,
                    "trial {trial}: determinant drift {:.3e} exceeds 1e-9",
                    path.det_drift
                );
            }
        },
    );
}

#[test]
fn criterion_04_basis_commutators_hold_exactly() {
    criterion("[ 4] [M0,M1] = M0, [M0,M2] = 2 M1, [M1,M2] = M2 exactly", || {
        let m0 = Sl2Elem::m0();
        let m1 = Sl2Elem::m1();
        let m2 = Sl2Elem::m2();
        assert_eq!(m0.bracket(&m1).to_matrix(), m0.to_matrix());
        assert_eq!(m0.bracket(&m2).to_matrix(), m1.scale(2.0).to_matrix());
        assert_eq!(m1.bracket(&m2).to_matrix(), m2.to_matrix());
    });
}

#[test]
fn criterion_05_rescaling_detector_flags_the_known_families() {
    criterion(
        "[ 5] rescaling test: kovalevskaya -> 1, hong-xiang -> -1, perturbed -> rejected",
        || {
            let domain = (0.0, 2.0);
            let grid = Grid::chebyshev(domain.0, domain.1, 129, 1e-8).unwrap();

            let kova = fixtures::kovalevskaya(plain("exp(t)"), 2.0, 4.0, domain).unwrap();
            let ev = ctu_test(&kova.eq, &grid).unwrap().expect("kovalevskaya is flagged");
            assert!((ev.k - 1.0).abs() <= 1e-9, "constant {}", ev.k);
            assert!(ev.deviation <= 1e-10, "deviation {:.3e}", ev.deviation);

            let hong = fixtures::hong_xiang(plain("exp(t)"), 1.0, 4.0, domain).unwrap();
            let ev = ctu_test(&hong.eq, &grid).unwrap().expect("hong-xiang is flagged");
            assert!((ev.k + 1.0).abs() <= 1e-9, "constant {}", ev.k);
            assert!(ev.deviation <= 1e-10, "deviation {:.3e}", ev.deviation);

            // A tenth-scale drift in the linear coefficient breaks the
            // constancy and must be rejected.
            let perturbed = RiccatiEq::parse(
                "exp(t)",
                "3 + 0.1*t",
                "-4*exp(-t)",
                &BTreeMap::new(),
                domain,
            )
            .unwrap();
            assert!(ctu_test(&perturbed, &grid).unwrap().is_none());
        },
    );
}

#[test]
fn criterion_06_rescaling_transformation_reaches_the_target_form() {
    criterion(
        "[ 6] allen-stein rescaled by G = sqrt(b2/b0) lands on sqrt(b0 b2) * (1, C, 1)",
        || {
            let fixture = fixtures::canonical()
                .unwrap()
                .into_iter()
                .find(|f| f.name == "allen-stein")
                .expect("allen-stein is a canonical fixture");
            let Case::CtuIntegrable { k: c_mid } = fixture.expected else {
                panic!("allen-stein is expected to be rescaling-integrable");
            };
            let eq = fixture.eq;
            let domain = eq.domain();
            let grid = Grid::chebyshev(domain.0, domain.1, 129, 1e-8).unwrap();

            let out = tu_transform(&eq, 1.0, c_mid, 1.0, &grid)
                .unwrap()
                .expect("the rescaling transformation exists");
            let curve = scaling_curve(&out.scale, domain, &grid).unwrap();
            let moved = transform(&eq, &curve).unwrap();

            let c = [1.0, c_mid, 1.0];
            for &t in grid.points() {
                let d = (eq.b0().value(t).unwrap() * eq.b2().value(t).unwrap()).sqrt();
                for (i, coeff) in [moved.b0(), moved.b1(), moved.b2()].into_iter().enumerate() {
                    let got = coeff.value(t).unwrap();
                    let want = d * c[i];
                    assert!(
                        (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                        "coefficient {i} at t = {t}: got {got}, want {want}"
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_07_superposition_produces_solutions_for_random_constants() {
    criterion(
        "[ 7] superposition of three tangent branches solves dy/dt = 1 + y^2",
        || {
            let eq =
                RiccatiEq::parse("1", "0", "1", &BTreeMap::new(), (0.0, 0.6)).unwrap();
            let times = linspace(0.0, 0.6, 61);
            let branch = |offset: f64| {
                SolutionTrace::from_values(
                    times.clone(),
                    times
                        .iter()
                        .map(|t| ExtReal::Finite((t + offset).tan()))
                        .collect(),
                )
            };
            let y1 = branch(0.1);
            let y2 = branch(0.3);
            let y3 = branch(0.7);

            // The degenerate constant returns the first solution exactly.
            let collapsed = superposition(&y1, &y2, &y3, ExtReal::Finite(0.0)).unwrap();
            assert_eq!(collapsed.values, y1.values);

            let ctrl = StepCtrl::default();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
            for trial in 0..10 {
                let k = ExtReal::Finite(rng.gen_range(-4.0..4.0));
                let combined = superposition(&y1, &y2, &y3, k).unwrap();
                let check =
                    oracle_integrate(&eq, (0.0, 0.6), combined.values[0], &times, &ctrl)
                        .unwrap();
                let defect = max_chordal(&combined, &check);
                assert!(
                    defect <= 1e-6,
                    "trial {trial} (k = {k:?}): oracle defect {defect:.3e} exceeds 1e-6"
                );
            }
        },
    );
}

#[test]
fn criterion_08_linearization_by_the_constant_solution() {
    criterion(
        "[ 8] ibragimov: root -1/3 found; quadrature solution pulled back matches the oracle",
        || {
            let domain = (0.0, 2.0);
            let grid = Grid::chebyshev(domain.0, domain.1, 129, 1e-8).unwrap();
            let eq =
                fixtures::ibragimov(plain("2 + cos(t)"), plain("1"), 3.0, domain).unwrap().eq;
            let out = linearization_test(&eq, &grid)
                .unwrap()
                .expect("a constant solution exists");
            assert!(
                (out.c + 1.0 / 3.0).abs() <= 1e-9,
                "constant solution {} is not -1/3",
                out.c
            );
            assert!(
                (out.k_invariant * out.c - 1.0).abs() <= 1e-8,
                "kernel invariant {} is not the reciprocal of {}",
                out.k_invariant,
                out.c
            );

            let times = linspace(domain.0, domain.1, 41);
            let ctrl = StepCtrl::default();
            for y0 in [0.4, 2.0, -1.0] {
                let w0 = out
                    .curve
                    .mobius(ExtReal::Finite(y0))
                    .finite()
                    .expect("initial value is mapped to a finite point");
                let linear_trace = solve_linear(&out.linear, domain.0, w0, &times, 1e-9).unwrap();
                let inverse = out.curve.inverse();
                let pulled = SolutionTrace::from_values(
                    linear_trace.times.clone(),
                    linear_trace
                        .values
                        .iter()
                        .map(|w| inverse.mobius(*w))
                        .collect(),
                );
                let oracle =
                    oracle_integrate(&eq, domain, ExtReal::Finite(y0), &times, &ctrl).unwrap();
                let sup = max_chordal(&pulled, &oracle);
                assert!(
                    sup <= 1e-6,
                    "y0 = {y0}: pull-back deviates {sup:.3e} from the oracle"
                );
            }

            // On the autonomous fixture the invariant and the root are
            // reciprocal as well.
            let auto =
                RiccatiEq::parse("-2", "3", "-1", &BTreeMap::new(), domain).unwrap();
            let out = linearization_test(&auto, &grid)
                .unwrap()
                .expect("the autonomous fixture has constant solutions");
            assert!(
                (out.k_invariant * out.c - 1.0).abs() <= 1e-9,
                "reciprocal relation violated: K = {}, c = {}",
                out.k_invariant,
                out.c
            );
        },
    );
}

#[test]
fn criterion_09_autonomous_closed_forms_across_discriminant_signs() {
    criterion(
        "[ 9] 30 random autonomous equations match the oracle, poles included",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
            let domain = (0.0, 3.2);
            let times = linspace(domain.0, domain.1, 81);
            let ctrl = StepCtrl::default();
            let mut pole_passages = 0usize;
            for trial in 0..30 {
                let c = match trial % 3 {
                    0 => {
                        // Two real roots of either orientation.
                        let r1 = rng.gen_range(-1.5..0.0);
                        let r2 = rng.gen_range(0.1..1.5);
                        let c2: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        [c2 * r1 * r2, -c2 * (r1 + r2), c2]
                    }
                    1 => {
                        // A double root: the discriminant vanishes exactly.
                        let r = rng.gen_range(-1.0..1.0);
                        [r * r, -2.0 * r, 1.0]
                    }
                    _ => {
                        // Complex roots r +/- i w with w >= 1, so the span
                        // (0, 3.2) is guaranteed to cross a pole.
                        let r = rng.gen_range(-0.7..0.7);
                        let w = rng.gen_range(1.0..1.6);
                        [r * r + w * w, -2.0 * r, 1.0]
                    }
                };
                let form = TargetForm {
                    d: Coeff::constant(1.0),
                    c,
                };
                let y0 = ExtReal::Finite(rng.gen_range(-2.0..2.0));
                let run = solve_autonomous(&form, domain.0, y0, &times, 1e-9).unwrap();
                let eq = form.to_equation(domain).unwrap();
                let oracle = oracle_integrate(&eq, domain, y0, &times, &ctrl).unwrap();
                let sup = max_chordal(&run.trace, &oracle);
                assert!(
                    sup <= 1e-6,
                    "trial {trial} (c = {c:?}): chordal sup-error {sup:.3e} exceeds 1e-6"
                );
                let crossed = run.trace.values.iter().any(|v| v.is_infinite())
                    || run.trace.charts.iter().any(|ch| *ch == Chart::Inverted);
                if crossed {
                    pole_passages += 1;
                }
            }
            assert!(
                pole_passages >= 3,
                "only {pole_passages} trajectories crossed a pole; need at least 3"
            );
        },
    );
}

#[test]
fn criterion_10_upper_gamma_closed_forms_and_recurrence() {
    criterion(
        "[10] upper gamma: integer-order closed form and recurrence to 1e-12",
        || {
            for n in 0u32..=8 {
                for t in [0.2, 1.0, 3.5, 8.0] {
                    let got = upper_gamma(f64::from(n) + 1.0, t).unwrap();
                    let want = upper_gamma_int(n, t);
                    assert!(
                        (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                        "order {n} at t = {t}: got {got}, closed form {want}"
                    );
                }
            }

            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
            for _ in 0..100 {
                let a = rng.gen_range(0.5..6.0);
                let t: f64 = rng.gen_range(0.1..10.0);
                let lhs = upper_gamma(a, t).unwrap();
                let rec = (a - 1.0) * upper_gamma(a - 1.0, t).unwrap()
                    + t.powf(a - 1.0) * (-t).exp();
                let scale = lhs.abs().max(rec.abs()).max(1.0);
                assert!(
                    (lhs - rec).abs() <= 1e-12 * scale,
                    "recurrence violated at a = {a}, t = {t}: {lhs} vs {rec}"
                );
            }
        },
    );
}
