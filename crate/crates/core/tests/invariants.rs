use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rsrforge::discovery::{property_from_text, Property};
use rsrforge::expr::{canonicalize, eval, parse, Env};
use rsrforge::query::{binomial, gen_monomials};
use rsrforge::regression::integer::{exhaustive, fit_integer_bounded, mse_tie};
use rsrforge::regression::rationalize::rationalize;
use rsrforge::rng::{derive_seed, stream, uniform};
use rsrforge::sampling::{draw_point, Interval};

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-4i64..=4).prop_map(|n| format!("({n})")),
    ]
}

fn poly_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}*{b})")),
            (inner, 0u32..3).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

fn value(text: &str, x: f64, y: f64) -> f64 {
    let e = parse(text).unwrap();
    eval(&e, &Env::new().with_var("x", x).with_var("y", y)).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Closest p/q by scanning every denominator; ties go to the smaller q.
fn scan_rational(c: f64, max_den: u64) -> (i128, i128) {
    let mut best = (c.round() as i128, 1i128);
    let mut best_err = (c - c.round()).abs();
    for q in 2..=max_den as i128 {
        let p = (c * q as f64).round() as i128;
        let err = (c - p as f64 / q as f64).abs();
        if err < best_err {
            best = (p, q);
            best_err = err;
        }
    }
    let (mut a, mut b) = (best.0.abs(), best.1);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    let g = a.max(1);
    (best.0 / g, best.1 / g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_idempotent(text in poly_text()) {
        let once = canonicalize(&parse(&text).unwrap()).unwrap();
        prop_assert_eq!(canonicalize(&once).unwrap(), once);
    }

    #[test]
    fn canonical_form_keeps_value(text in poly_text(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let canon = canonicalize(&parse(&text).unwrap()).unwrap().to_string();
        prop_assert!(close(value(&text, x, y), value(&canon, x, y)), "{} vs {}", text, canon);
    }

    #[test]
    fn printed_form_parses_back(text in poly_text()) {
        let canon = canonicalize(&parse(&text).unwrap()).unwrap();
        let again = canonicalize(&parse(&canon.to_string()).unwrap()).unwrap();
        prop_assert_eq!(again, canon);
    }

    #[test]
    fn rationalize_matches_scan(c in -20.0f64..20.0, max_den in 1u64..60) {
        let q = rationalize(c, max_den).unwrap();
        let (p, d) = scan_rational(c, max_den);
        let got = (c - q.to_f64()).abs();
        let want = (c - p as f64 / d as f64).abs();
        prop_assert!(q.denom() as u64 <= max_den);
        prop_assert!(got <= want, "{c}: {q} vs {p}/{d}");
    }

    #[test]
    fn integer_search_matches_enumeration(
        rows in 3usize..8,
        cols in 1usize..5,
        bound in 1i64..3,
        active in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut rng = stream(seed, "integer", 0);
        let x = DMatrix::from_fn(rows, cols, |_, _| uniform(&mut rng, -2.0, 2.0));
        let y = DVector::from_fn(rows, |_, _| uniform(&mut rng, -4.0, 4.0));
        let fast = fit_integer_bounded(&x, &y, bound, active).unwrap();
        let slow = exhaustive(&x, &y, bound, active);
        prop_assert!(mse_tie(fast.mse, slow.mse), "{} vs {}", fast.mse, slow.mse);
        prop_assert_eq!(fast.coefficients, slow.coefficients);
    }

    #[test]
    fn monomial_count_is_binomial(n in 1usize..7, d in 1u32..4) {
        let mons = gen_monomials(n, d, 1_000_000).unwrap();
        prop_assert_eq!(mons.len() as u128, binomial(n as u64 + d as u64, d as u64));
        let mut seen = std::collections::BTreeSet::new();
        for m in &mons {
            prop_assert!(m.degree() <= d);
            prop_assert!(seen.insert(m.exponents.clone()));
        }
    }

    #[test]
    fn draws_stay_in_region(seed in any::<u64>(), lo in -5.0f64..0.0, w in 0.1f64..5.0) {
        let region = vec![Interval::new(lo, lo + w); 3];
        let mut rng = stream(seed, "draw", 0);
        for _ in 0..20 {
            let d = draw_point(&mut rng, &region);
            for (v, iv) in d.x.iter().zip(&region).chain(d.r.iter().zip(&region)) {
                prop_assert!(iv.contains(*v));
            }
        }
    }

    #[test]
    fn derived_seeds_are_stable(seed in any::<u64>(), i in 0u64..100) {
        prop_assert_eq!(derive_seed(seed, "a", i), derive_seed(seed, "a", i));
        prop_assert_ne!(derive_seed(seed, "a", i), derive_seed(seed, "b", i));
    }
}

#[test]
fn property_record_round_trips() {
    for text in [
        "f(x + r) - f(x) - f(r) = 0",
        "2*f(x + r)*f(x)*f(r) - f(x + r)*f(x) - f(x + r)*f(r) - f(x)*f(r) + f(x + r) = 0",
        "f(x*r) - f(x)*f(r) = 0",
    ] {
        let p = property_from_text(0, text).unwrap();
        let rec = p.to_record(&[]);
        let json = serde_json::to_string(&rec).unwrap();
        let back = Property::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.identity, p.identity, "{text}");
        assert_eq!(back.to_record(&[]).identity, rec.identity);
    }
}
