//! Property tests: algebraic facts that should hold for *every* state,
//! angle, and outcome, not just the worked examples in the unit tests.

use core::f64::consts::TAU;

use bellbias_core::protocols::{hopper_posterior, SettingStrategy};
use bellbias_core::quantum::{
    bell_state, fidelity, joint_distribution, outcome_probabilities, project_bell, project_qubit,
    tensor, Amplitude, BellLabel, MeasAngle, Outcome, PureState,
};
use bellbias_core::stats;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = MeasAngle> {
    (0.0..TAU).prop_map(MeasAngle::new)
}

/// Random normalized pure state on `n` qubits.
fn state(n_qubits: usize) -> impl Strategy<Value = PureState> {
    let dim = 1usize << n_qubits;
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter_map("norm too small to normalize", |parts| {
            let norm_sqr: f64 = parts.iter().map(|(re, im)| re * re + im * im).sum();
            if norm_sqr < 1e-6 {
                return None;
            }
            let scale = norm_sqr.sqrt();
            let amps = parts
                .into_iter()
                .map(|(re, im)| Amplitude::new(re / scale, im / scale))
                .collect();
            PureState::new(amps).ok()
        })
}

fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Plus), Just(Outcome::Minus)]
}

proptest! {
    #[test]
    fn outcome_probabilities_are_a_distribution(s in state(1), a in angle()) {
        let (p_plus, p_minus) = outcome_probabilities(&s, 0, a).unwrap();
        prop_assert!(p_plus >= -1e-12 && p_plus <= 1.0 + 1e-12);
        prop_assert!(p_minus >= -1e-12 && p_minus <= 1.0 + 1e-12);
        prop_assert!((p_plus + p_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_weights_complete_and_collapses_normalize(
        s in state(2),
        qubit in 0usize..2,
        a in angle(),
    ) {
        let mut total = 0.0;
        for o in Outcome::BOTH {
            let (w, collapsed) = project_qubit(&s, qubit, a, o).unwrap();
            total += w;
            if let Some(c) = collapsed {
                prop_assert!((c.norm_sqr() - 1.0).abs() < 1e-12);
            } else {
                prop_assert!(w < 1e-15);
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_projection_weights_complete(s in state(2)) {
        let mut total = 0.0;
        for label in BellLabel::ALL {
            let (w, _) = project_bell(&s, 0, 1, label).unwrap();
            prop_assert!(w >= -1e-12);
            total += w;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_states_have_uniform_marginals(label in prop_oneof![
        Just(BellLabel::PsiMinus),
        Just(BellLabel::PhiPlus),
        Just(BellLabel::PhiMinus),
        Just(BellLabel::PsiPlus),
    ], a in angle(), qubit in 0usize..2) {
        let s = bell_state(label);
        let (p_plus, p_minus) = outcome_probabilities(&s, qubit, a).unwrap();
        prop_assert!((p_plus - 0.5).abs() < 1e-12);
        prop_assert!((p_minus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn measurement_order_does_not_matter(
        s in state(2),
        a in angle(),
        b in angle(),
        oa in outcome(),
        ob in outcome(),
    ) {
        let first_a = {
            let (w, collapsed) = project_qubit(&s, 0, a, oa).unwrap();
            match collapsed {
                Some(c) => w * project_qubit(&c, 1, b, ob).unwrap().0,
                None => 0.0,
            }
        };
        let first_b = {
            let (w, collapsed) = project_qubit(&s, 1, b, ob).unwrap();
            match collapsed {
                Some(c) => w * project_qubit(&c, 0, a, oa).unwrap().0,
                None => 0.0,
            }
        };
        prop_assert!((first_a - first_b).abs() < 1e-12);
        let direct = joint_distribution(&s, a, b).unwrap().prob(oa, ob);
        prop_assert!((first_a - direct).abs() < 1e-12);
    }

    #[test]
    fn bell_mixture_is_maximally_mixed(a in angle(), b in angle()) {
        // the four Bell-state tables at any fixed settings sum to the
        // uniform table, cell by cell
        for oa in Outcome::BOTH {
            for ob in Outcome::BOTH {
                let total: f64 = BellLabel::ALL
                    .iter()
                    .map(|&l| joint_distribution(&bell_state(l), a, b).unwrap().prob(oa, ob))
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_preserves_normalization(left in state(1), right in state(1)) {
        let product = tensor(&left, &right).unwrap();
        prop_assert!((product.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(product.n_qubits(), 2);
    }

    #[test]
    fn fidelity_is_bounded_and_reflexive(s in state(2), t in state(2)) {
        let f = fidelity(&s, &t).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angles_wrap_into_one_turn(raw in -1e6f64..1e6) {
        let a = MeasAngle::new(raw);
        prop_assert!(a.radians() >= 0.0 && a.radians() < TAU);
        // wrapping never moves the angle to a different direction
        prop_assert!((a.radians().cos() - raw.cos()).abs() < 1e-6);
        prop_assert!((a.radians().sin() - raw.sin()).abs() < 1e-6);
    }

    #[test]
    fn hopper_posterior_is_a_distribution(
        a in angle(),
        b in angle(),
        oa in outcome(),
        ob in outcome(),
    ) {
        let post = hopper_posterior(a, b, oa, ob).unwrap();
        let total: f64 = post.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(post.iter().all(|&p| p >= -1e-12));
    }

    #[test]
    fn setting_pairs_round_trip_through_their_ids(a in angle(), b in angle()) {
        let quadruple = SettingStrategy::chsh_quadruple();
        for id in 0..quadruple.pair_count() {
            let (pa, pb) = quadruple.pair(id);
            prop_assert_eq!(quadruple.pair_id(pa, pb), Some(id));
        }
        let single = SettingStrategy::single(a, b);
        prop_assert_eq!(single.pair_id(a, b), Some(0));
    }

    #[test]
    fn correlation_estimates_stay_in_range(
        outcomes in proptest::collection::vec((outcome(), outcome()), 1..200),
    ) {
        let e = stats::corr_of_pairs(outcomes).unwrap();
        prop_assert!((-1.0..=1.0).contains(&e.value));
        prop_assert!(e.stderr >= 0.0);
        prop_assert!(e.n >= 1);
    }

    #[test]
    fn tv_distance_is_a_metric_on_the_simplex(
        raw_p in proptest::collection::vec(0.0f64..1.0, 4),
        raw_q in proptest::collection::vec(0.0f64..1.0, 4),
    ) {
        let normalize = |v: &[f64]| -> Option<Vec<f64>> {
            let total: f64 = v.iter().sum();
            (total > 1e-9).then(|| v.iter().map(|x| x / total).collect())
        };
        let (Some(p), Some(q)) = (normalize(&raw_p), normalize(&raw_q)) else {
            return Ok(());
        };
        let d = stats::tv_distance(&p, &q).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        prop_assert!(stats::tv_distance(&p, &p).unwrap() < 1e-15);
        let sym = stats::tv_distance(&q, &p).unwrap();
        prop_assert!((d - sym).abs() < 1e-15);
    }
}
