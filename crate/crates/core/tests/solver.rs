use num_bigint::BigInt;
use obstacle_lab::ansatz::{AnsatzFamily, AnsatzInput, Axis, Rhs};
use obstacle_lab::grid::BoxSpec;
use obstacle_lab::obstacle::{
    complementarity_residual, manufacture_from_ansatz, solve, ObstacleProblem, RhsSampling,
    SolverParams,
};
use obstacle_lab::poly::HomoPoly;
use obstacle_lab::Rational;
use proptest::prelude::*;

fn k3_family() -> AnsatzFamily<Rational> {
    let c = Rational::new(BigInt::from(1), BigInt::from(4));
    let p3 = HomoPoly::from_ints(2, 3, &[(1, &[0, 3]), (-3, &[2, 1])])
        .unwrap()
        .scale(&c);
    AnsatzFamily::build(AnsatzInput::new(2, 3, Axis::last(2), vec![p3], Rhs::Unit).unwrap())
        .unwrap()
}

#[test]
fn second_order_convergence_with_free_boundary() {
    // u* = A^2/2 is not a quadratic, so the stencil error is O(h^2) and nonzero.
    let fam = k3_family();
    let errs: Vec<f64> = [32usize, 64, 128, 256]
        .iter()
        .map(|&n| {
            let m = manufacture_from_ansatz(
                &fam,
                &BoxSpec::centered(2, 1.0, n),
                SolverParams::default(),
                RhsSampling::Analytic,
            )
            .unwrap();
            let s = solve(&m.problem).unwrap();
            assert!(complementarity_residual(&m.problem, &s.u) <= 1e-10);
            s.u.max_abs_diff(&m.exact)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.8..=4.2).contains(&ratio), "ratio {ratio} from {errs:?}");
    }
    assert!(errs[3] < 5e-5);
}

#[test]
fn discrete_sampling_is_exact_on_the_grid() {
    let m = manufacture_from_ansatz(
        &k3_family(),
        &BoxSpec::centered(2, 1.0, 64),
        SolverParams::default(),
        RhsSampling::Discrete,
    )
    .unwrap();
    let s = solve(&m.problem).unwrap();
    assert!(s.u.max_abs_diff(&m.exact) < 1e-9);
}

fn solve_poly(
    n: usize,
    f: impl Fn(&[f64]) -> f64 + Sync,
    g: impl Fn(&[f64]) -> f64 + Sync,
) -> Vec<f64> {
    let spec = BoxSpec::centered(2, 1.0, n);
    let p = ObstacleProblem::from_fns(
        &spec,
        f,
        g,
        SolverParams {
            tolerance: 1e-12,
            ..SolverParams::default()
        },
    )
    .unwrap();
    solve(&p).unwrap().u.values().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn comparison_principle(a in -1.0f64..1.0, b in -1.0f64..1.0, lift in 0.0f64..0.5, extra in 0.0f64..2.0) {
        let g = move |x: &[f64]| (0.5 + a * x[0] + b * x[1]).max(0.0).powi(2);
        // Larger data and smaller rhs give a larger solution.
        let lo = solve_poly(24, |_| 1.0 + extra, g);
        let hi = solve_poly(24, |_| 1.0, move |x| g(x) + lift);
        for (l, h) in lo.iter().zip(&hi) {
            prop_assert!(*l <= *h + 1e-10);
        }
    }

    #[test]
    fn solutions_are_nonnegative(a in -1.0f64..1.0, c in 0.5f64..3.0) {
        let u = solve_poly(20, move |_| c, move |x| (a * x[0] + 0.2).abs());
        prop_assert!(u.iter().all(|v| *v >= 0.0));
    }
}
