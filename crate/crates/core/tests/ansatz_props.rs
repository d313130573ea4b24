use num_bigint::BigInt;
use obstacle_lab::ansatz::{
    delta_inverse, delta_map, random_admissible, AnsatzFamily, AnsatzInput, Axis, Rhs,
};
use obstacle_lab::poly::{HomoPoly, Poly};
use obstacle_lab::signorini::even_odd_split;
use obstacle_lab::Rational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// All exponent vectors of total degree `deg` in `dim` variables.
fn exponents(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![deg]];
    }
    let mut out = Vec::new();
    for a in 0..=deg {
        for mut rest in exponents(dim - 1, deg - a) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

fn homo_from(dim: usize, deg: u32, coeffs: &[i64]) -> HomoPoly<Rational> {
    let terms: Vec<(Rational, Vec<u32>)> = exponents(dim, deg)
        .into_iter()
        .zip(coeffs.iter().cycle())
        .map(|(e, &c)| (q(c, 1), e))
        .collect();
    HomoPoly::from_terms(dim, deg, terms).unwrap()
}

fn family(
    dim: usize,
    order: u32,
    nu: Axis,
    seed: u64,
    rhs: Rhs<Rational>,
) -> AnsatzFamily<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_admissible(&mut rng, dim, order, nu, 4);
    AnsatzFamily::build(AnsatzInput::new(dim, order, nu, p, rhs).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ansatz_is_exact(dim in 2usize..=3, order in 2u32..=5, axis in 0usize..3, neg: bool, seed: u64) {
        let nu = Axis { index: axis % dim, negative: neg };
        let fam = family(dim, order, nu, seed, Rhs::Unit);
        prop_assert!(fam.exactness_residual().is_zero());
    }

    #[test]
    fn ansatz_is_exact_for_general_rhs(order in 2u32..=4, c1 in -3i64..=3, c2 in -3i64..=3, seed: u64) {
        let f = Poly::from_terms(2, vec![(q(2, 1), vec![0, 0]), (q(c1, 1), vec![1, 0]), (q(c2, 2), vec![1, 1])]).unwrap();
        let fam = family(2, order, Axis::last(2), seed, Rhs::Taylor(f));
        prop_assert!(fam.exactness_residual().is_zero());
    }

    #[test]
    fn increment_is_f0_times_new_term(dim in 2usize..=3, order in 3u32..=5, seed: u64) {
        let fam = family(dim, order, Axis::last(dim), seed, Rhs::Unit);
        let lower = AnsatzFamily::build(fam.input().truncate().unwrap()).unwrap();
        prop_assert!(fam.increment_residual(&lower).is_zero());
    }

    #[test]
    fn delta_inverse_inverts(dim in 2usize..=3, deg in 0u32..=4, coeffs in prop::collection::vec(-5i64..=5, 1..8)) {
        let r = homo_from(dim, deg, &coeffs);
        let nu = Axis::last(dim);
        let back = delta_map(&delta_inverse(&r, nu).unwrap(), nu);
        prop_assert_eq!(back, r);
    }

    #[test]
    fn even_odd_split_is_idempotent(deg in 0u32..=5, coeffs in prop::collection::vec(-5i64..=5, 1..8)) {
        let p = Poly::from_homo(homo_from(2, deg, &coeffs));
        let (e, o) = even_odd_split(&p, 1);
        prop_assert_eq!(&(&e + &o), &p);
        let (ee, eo) = even_odd_split(&e, 1);
        prop_assert_eq!(ee, e);
        prop_assert!(eo.is_zero());
        let (oe, oo) = even_odd_split(&o, 1);
        prop_assert!(oe.is_zero());
        prop_assert_eq!(oo, o);
    }

    #[test]
    fn homogeneous_scaling(deg in 0u32..=5, coeffs in prop::collection::vec(-5i64..=5, 1..8),
                           x in prop::array::uniform3(-1.0f64..1.0), t in 0.1f64..3.0) {
        let p = homo_from(3, deg, &coeffs).to_f64();
        let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
        let lhs = p.eval_f64(&tx);
        let rhs = t.powi(deg as i32) * p.eval_f64(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn family_json_round_trips(order in 2u32..=4, seed: u64) {
        let fam = family(2, order, Axis::last(2), seed, Rhs::Unit);
        let back = AnsatzFamily::from_json(&fam.to_json()).unwrap();
        prop_assert_eq!(back.p(), fam.p());
    }
}

#[test]
fn k3_corrections_by_elimination() {
    // R_2 for p_3 = x2^3 - 3 x1^2 x2, recovered by solving Delta(P_3) = 1
    // through degree 2 for the unknown coefficients of R_2 directly.
    let p3 = HomoPoly::from_ints(2, 3, &[(1, &[0, 3]), (-3, &[2, 1])]).unwrap();
    let fam = AnsatzFamily::build(
        AnsatzInput::new(2, 3, Axis::last(2), vec![p3.clone()], Rhs::Unit).unwrap(),
    )
    .unwrap();
    // A = x2 + p3/x2 + x2 (a x1^2 + b x1 x2 + c x2^2); the degree-2 part of
    // Delta(A^2/2) must vanish. Brute force over a small rational lattice.
    let x2 = Poly::from_ints(2, &[(1, &[0, 1])]).unwrap();
    let q3 = Poly::from_ints(2, &[(1, &[0, 2]), (-3, &[2, 0])]).unwrap();
    let mut found = Vec::new();
    for a in -60..=60 {
        for b in -4..=4 {
            for c in -20..=20 {
                let r2 = Poly::from_terms(
                    2,
                    vec![
                        (q(a, 1), vec![2, 0]),
                        (q(b, 1), vec![1, 1]),
                        (q(c, 1), vec![0, 2]),
                    ],
                )
                .unwrap();
                let aa = &(&x2 + &q3) + &(&x2 * &r2);
                let lap = (&aa * &aa).scale(&q(1, 2)).laplacian();
                if lap.part(2).is_zero() {
                    found.push((a, b, c));
                }
            }
        }
    }
    assert_eq!(found, vec![(-24, 0, 4)]);
    let r2 = Poly::from_homo(fam.r_list()[1].clone());
    assert_eq!(
        r2,
        Poly::from_ints(2, &[(-24, &[2, 0]), (4, &[0, 2])]).unwrap()
    );
}
