use enhance_core::poly::{Poly4, Var};
use proptest::prelude::*;

const VARS: [Var; 4] = [Var::X, Var::Y, Var::U, Var::V];

fn small_poly() -> impl Strategy<Value = Poly4> {
    prop::collection::vec((-4i32..=4, prop::array::uniform4(0u32..=3)), 0..8)
        .prop_map(|terms| Poly4::from_terms(terms.into_iter().map(|(c, e)| (c as f64, e))))
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.5f64..1.5)
}

proptest! {
    #[test]
    fn partial_is_linear(p in small_poly(), q in small_poly(), a in -3i32..=3, v in 0usize..4) {
        let v = VARS[v];
        let lhs = (&p.scale(a as f64) + &q).partial(v);
        let rhs = &p.partial(v).scale(a as f64) + &q.partial(v);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partial_obeys_leibniz(p in small_poly(), q in small_poly(), v in 0usize..4) {
        let v = VARS[v];
        let lhs = (&p * &q).partial(v);
        let rhs = &(&p.partial(v) * &q) + &(&p * &q.partial(v));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn mixed_partials_commute(p in small_poly(), a in 0usize..4, b in 0usize..4) {
        prop_assert_eq!(p.partial(VARS[a]).partial(VARS[b]), p.partial(VARS[b]).partial(VARS[a]));
    }

    #[test]
    fn evaluation_is_a_ring_map(p in small_poly(), q in small_poly(), x in point()) {
        let prod = (&p * &q).eval(&x);
        let sum = (&p + &q).eval(&x);
        let (pe, qe) = (p.eval(&x), q.eval(&x));
        let scale = 1.0 + pe.abs() * qe.abs() + pe.abs() + qe.abs();
        prop_assert!((prod - pe * qe).abs() <= 1e-9 * scale);
        prop_assert!((sum - pe - qe).abs() <= 1e-9 * scale);
    }

    #[test]
    fn partial_matches_central_difference(p in small_poly(), x in point(), v in 0usize..4) {
        let h = 1e-5;
        let (mut fwd, mut bwd) = (x, x);
        fwd[v] += h;
        bwd[v] -= h;
        let fd = (p.eval(&fwd) - p.eval(&bwd)) / (2.0 * h);
        let exact = p.partial(VARS[v]).eval(&x);
        prop_assert!((fd - exact).abs() <= 1e-4 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn no_zero_coefficients_are_stored(p in small_poly(), q in small_poly()) {
        let d = &(&p - &q) + &q;
        prop_assert!(d.terms().all(|(_, c)| *c != 0.0));
        prop_assert_eq!(d, p.clone());
        prop_assert!((&p - &p).is_zero());
    }
}
