use num_bigint::BigInt;
use obstacle_lab::diagnostics::{compute_hd, monneau, phi_gamma, PolyField};
use obstacle_lab::poly::Poly;
use obstacle_lab::signorini::{catalog_2d, complex_power, verify_signorini};
use obstacle_lab::Rational;
use proptest::prelude::*;

fn harmonic(m: u32, a: f64, b: f64) -> PolyField {
    let (re, im) = complex_power(m);
    let p = &re.to_f64().scale(&a) + &im.to_f64().scale(&b);
    PolyField::new(p, vec![0.0, 0.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_field_gives_gamma(r in 0.01f64..1.0, gamma in 0.5f64..8.0) {
        let z = PolyField::new(Poly::zero(2), vec![0.0, 0.0]);
        prop_assert_eq!(phi_gamma(&z, &[0.0, 0.0], r, gamma).unwrap(), gamma);
    }

    #[test]
    fn homogeneous_harmonics_have_constant_frequency(m in 1u32..=6, a in -2.0f64..2.0, b in -2.0f64..2.0, r in 0.05f64..2.0) {
        prop_assume!(a.abs() + b.abs() > 0.1);
        let v = harmonic(m, a, b);
        let (h, d) = compute_hd(&v, &[0.0, 0.0], r).unwrap();
        prop_assert!((d / h - m as f64).abs() < 1e-8);
    }

    #[test]
    fn height_is_quadratic_in_amplitude(m in 1u32..=5, t in 0.1f64..5.0, r in 0.1f64..1.0) {
        let (h1, _) = compute_hd(&harmonic(m, 1.0, 0.0), &[0.0, 0.0], r).unwrap();
        let (ht, _) = compute_hd(&harmonic(m, t, 0.0), &[0.0, 0.0], r).unwrap();
        prop_assert!((ht - t * t * h1).abs() <= 1e-10 * ht.abs().max(1e-300));
    }

    #[test]
    fn monneau_is_flat_on_matching_homogeneity(k in 1u32..=5, r1 in 0.05f64..1.0, r2 in 0.05f64..1.0) {
        let v = harmonic(k, 1.0, 0.5);
        let m = monneau(&v, &[0.0, 0.0], &[r1, r2], k).unwrap();
        prop_assert!((m[0] - m[1]).abs() <= 1e-9 * m[0].abs());
    }

    #[test]
    fn catalog_elements_verify(num in 1i64..=9) {
        let lambda = Rational::new(BigInt::from(num), BigInt::from(2));
        for q in catalog_2d(&lambda) {
            prop_assert!(verify_signorini(&q, 1e-8).passes(), "{}", q.label());
        }
    }
}
