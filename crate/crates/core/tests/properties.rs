use proptest::prelude::*;
use robustbound::interpolate::{extend, verify_interpolant};
use robustbound::l2e::{simulate, truncated_sip, CausalOperator, Signal};
use robustbound::prelude::*;
use robustbound::quadform::Direction;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coords(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c(a, b)), n)
}

fn form() -> impl Strategy<Value = HermitianForm2> {
    (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b, d, e)| HermitianForm2::new(a, c(b, d), e))
}

fn weighted() -> Space {
    Space::weighted_diag(Field::Complex, &[2.0, 0.0, 0.5, 1.0]).unwrap()
}

fn operator() -> impl Strategy<Value = CausalOperator> {
    prop_oneof![
        (-0.9..0.9f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_map(|(a, b, cc, d)| CausalOperator::scalar_state_space(a, b, cc, d)),
        prop::collection::vec(-1.0..1.0f64, 1..5).prop_map(|taps| CausalOperator::Fir { taps }),
        (0usize..4).prop_map(|steps| CausalOperator::Delay { steps }),
        (0.1..2.0f64).prop_map(|level| CausalOperator::StaticNl {
            map: Pointwise::Saturation { level }
        }),
        (-2.0..2.0f64).prop_map(CausalOperator::delayed_gain),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sip_is_hermitian_and_cauchy_schwarz(x in coords(4), y in coords(4)) {
        let s = weighted();
        let (x, y) = (s.vector(x).unwrap(), s.vector(y).unwrap());
        let xy = x.sip(&y).unwrap();
        prop_assert!((xy - y.sip(&x).unwrap().conj()).norm() < 1e-10);
        prop_assert!(xy.norm() <= x.norm() * y.norm() + 1e-10);
        prop_assert!(x.sip(&x).unwrap().re >= -1e-12);
    }

    #[test]
    fn null_coordinate_is_invisible(x in coords(4), z in -5.0..5.0f64) {
        let s = weighted();
        let x = s.vector(x).unwrap();
        let mut shifted = x.coords().to_vec();
        shifted[1] += c(z, -z);
        let shifted = s.vector(shifted).unwrap();
        prop_assert!((x.norm() - shifted.norm()).abs() < 1e-10);
    }

    #[test]
    fn qc_matches_its_expansion(m in form(), x in coords(3), y in coords(3)) {
        let s = Space::euclidean(Field::Complex, 3);
        let (x, y) = (s.vector(x).unwrap(), s.vector(y).unwrap());
        let expected = m.m11 * x.norm().powi(2) + 2.0 * (m.m12 * x.sip(&y).unwrap()).re + m.m22 * y.norm().powi(2);
        let got = m.qc_eval(&PairVector::new(x, y).unwrap()).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs() + m.frobenius() * 50.0));
    }

    #[test]
    fn indefinite_factorization_round_trips(m in form()) {
        prop_assume!(m.definiteness() == Definiteness::Indef);
        let f = m.factor_indefinite().unwrap();
        let back = f.reconstruct();
        let want = m.to_mat2();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((back.0[i][j] - want.0[i][j]).norm() <= 1e-10 * (1.0 + m.frobenius()));
            }
        }
        prop_assert!((f.kappa() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonneg_direction_is_nonneg(m in form()) {
        prop_assume!(m.definiteness() != Definiteness::NegDef);
        match m.nonneg_direction() {
            Ok(Direction::Finite(eta)) => prop_assert!(m.direction_value(eta) >= -1e-9 * (1.0 + m.frobenius())),
            Ok(_) => prop_assert!(m.m22 >= -1e-12),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn interpolant_respects_m(m in form(), e in coords(3), y in coords(3), seeds in coords(3)) {
        let s = Space::euclidean(Field::Complex, 3);
        let (e, y) = (s.vector(e).unwrap(), s.vector(y).unwrap());
        let pair = PairVector::new(e.clone(), y.clone()).unwrap();
        prop_assume!(m.qc_eval(&pair).unwrap() >= 0.0);
        let tol = Tolerance::DEFAULT;
        let interp = extend(&s, &m, &e, &y, &tol).unwrap();
        let samples = vec![s.vector(seeds).unwrap(), e.clone(), y.clone()];
        let rep = verify_interpolant(&interp, &m, &samples, &tol).unwrap();
        prop_assert!(rep.anchor_contained, "{rep:?}");
        prop_assert!(rep.qc_ok, "{rep:?}");
    }

    #[test]
    fn operators_are_causal(
        op in operator(),
        x in prop::collection::vec(-2.0..2.0f64, 24),
        tail in prop::collection::vec(-2.0..2.0f64, 24),
        k in 1usize..23,
    ) {
        let mut perturbed = x.clone();
        perturbed[k..].copy_from_slice(&tail[k..]);
        let (a, b) = (simulate(&op, &Signal::real(&x)), simulate(&op, &Signal::real(&perturbed)));
        let unchanged = if op.strictly_causal() { k + 1 } else { k };
        for t in 0..unchanged.min(24) {
            prop_assert_eq!(a.at(t), b.at(t), "t = {}", t);
        }
    }

    #[test]
    fn truncated_norm_grows_with_horizon(x in coords(16), t in 0usize..16) {
        let sig = Signal::new(x);
        prop_assert!(sig.norm_to(t) <= sig.norm_to(t + 1) + 1e-12);
        prop_assert!((truncated_sip(&sig, &sig, t).re - sig.norm_to(t).powi(2)).abs() < 1e-9);
    }
}
