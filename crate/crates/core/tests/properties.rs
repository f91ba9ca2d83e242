use cmjlab::birth::{tail_prob_exact, BirthRates, OffspringModel};
use cmjlab::config::{parse_model, render_model, Config};
use cmjlab::criteria::{
    classify_phase, linear_moment_test, summability_test, tail_threshold, ClassifyConfig, McConfig, MomentConfig,
    MomentMethod, MomentOutcome, TailGrid, Verdict,
};
use cmjlab::fitness::{FitnessModel, PairSpec, ScalarLaw, TailRule};
use cmjlab::plan::SequencePlan;
use cmjlab::rng::stream;
use cmjlab::tree::GrowthState;
use proptest::prelude::*;

fn light_law() -> impl Strategy<Value = ScalarLaw> {
    prop_oneof![
        (0.1f64..5.0).prop_map(ScalarLaw::PointMass),
        (0.2f64..5.0).prop_map(|r| ScalarLaw::exponential(r).unwrap()),
        (0.1f64..2.0, 0.0f64..3.0).prop_map(|(lo, w)| ScalarLaw::uniform(lo, lo + w).unwrap()),
        (1.2f64..4.0, 0.5f64..2.0).prop_map(|(a, s)| ScalarLaw::pareto(a, s).unwrap()),
    ]
}

fn any_law() -> impl Strategy<Value = ScalarLaw> {
    prop_oneof![
        light_law(),
        (0.2f64..1.0, 0.5f64..2.0).prop_map(|(a, s)| ScalarLaw::pareto(a, s).unwrap()),
        (0.2f64..2.0, 3.0f64..20.0).prop_map(|(nu, x0)| ScalarLaw::log_pareto_tail(nu, x0).unwrap()),
    ]
}

fn any_pair() -> impl Strategy<Value = PairSpec> {
    prop_oneof![
        any_law().prop_map(PairSpec::wrrt),
        any_law().prop_map(PairSpec::additive),
        any_law().prop_map(PairSpec::bianconi_barabasi),
        (any_law(), any_law()).prop_map(|(u, v)| PairSpec::independent(u, v)),
    ]
}

fn any_model() -> impl Strategy<Value = FitnessModel> {
    prop_oneof![
        any_pair().prop_map(|p| FitnessModel::linear(p).unwrap()),
        (
            prop::collection::vec(0.0f64..10.0, 1..6),
            prop_oneof![Just(TailRule::ZeroAfterEnd), Just(TailRule::ConstantLast)]
        )
            .prop_filter("root must reproduce", |(r, _)| r[0] > 0.0)
            .prop_map(|(r, t)| FitnessModel::tabulated(r, t).unwrap()),
    ]
}

/// Pairs whose linear mean is finite at small `t` and whose tails have a
/// closed form, so criteria run without sampling noise.
fn finite_pair() -> impl Strategy<Value = PairSpec> {
    prop_oneof![
        light_law().prop_map(PairSpec::wrrt),
        light_law().prop_map(PairSpec::additive),
        prop_oneof![
            (0.1f64..5.0).prop_map(ScalarLaw::PointMass),
            (0.5f64..3.0, 0.0f64..2.0).prop_map(|(lo, w)| ScalarLaw::uniform(lo, lo + w).unwrap()),
        ]
        .prop_map(PairSpec::bianconi_barabasi),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_config_round_trip(model in any_model()) {
        let text = render_model(&model).to_string();
        let cfg = Config::parse(&text).unwrap();
        prop_assert_eq!(parse_model(&cfg).unwrap(), model);
        cfg.check_all_read().unwrap();
    }

    #[test]
    fn config_text_round_trip(
        entries in prop::collection::btree_map("[a-z]{1,6}(\\.[a-z0-9_]{1,6}){0,2}", "[A-Za-z0-9_.,+ -]{0,12}", 0..8)
    ) {
        let mut cfg = Config::new();
        for (k, v) in &entries {
            cfg.set(k.clone(), v.trim());
        }
        let back = Config::parse(&cfg.to_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn histogram_identities(model in any_model(), n in 1u64..300, seed in any::<u64>()) {
        let mut rng = stream(seed);
        let mut st = GrowthState::new(model, &mut rng);
        st.grow(n - 1, &mut rng);
        let tree = st.tree();
        tree.validate().unwrap();
        let h = tree.degree_histogram();
        prop_assert_eq!(h.nodes(), tree.len() as u64);
        prop_assert_eq!(h.edges(), tree.len() as u64 - 1);
        prop_assert!(tree.len() as u64 == n || st.halted());
    }

    #[test]
    fn pgf_endpoints(c1 in 0.0f64..3.0, c2 in 0.1f64..3.0, t in 0.01f64..2.0) {
        let rates = BirthRates::new(c1, c2).unwrap();
        prop_assert!((rates.pgf_any(t, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let p0 = rates.pgf_any(t, 0.0).unwrap();
        prop_assert!((p0 - (-c2 * t).exp()).abs() < 1e-12 * p0.max(1e-300) + 1e-300);
        // Mean as the PGF slope at 1, by a central difference.
        let h = 1e-5;
        let slope = (rates.pgf_any(t, 1.0).unwrap() - rates.pgf_any(t, 1.0 - h).unwrap()) / h;
        prop_assert!((slope - rates.mean(t)).abs() < 1e-3 * (1.0 + rates.second_moment(t)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A finite linear mean at some small `t` rules out summability evidence.
    #[test]
    fn finite_mean_is_never_summable(pair in finite_pair()) {
        let t = 0.25;
        let moment = linear_moment_test(&pair, t, &MomentConfig::default()).unwrap();
        prop_assert!(moment.is_finite());
        let model = OffspringModel::Mixed(FitnessModel::linear(pair).unwrap());
        let plan = SequencePlan::standard(1.0, 12).unwrap();
        let rep = summability_test(&model, &plan, &McConfig::new(10_000, 0)).unwrap();
        prop_assert_ne!(rep.verdict, Verdict::SummableEvidence);
    }

    /// Where the tail condition holds at `(t_i, 2^{i+1})`, the summability
    /// term is bounded by `exp(-i^{e/2} (ln 2)^{1+e} / 2)`.
    #[test]
    fn tail_condition_bounds_terms(
        law in prop_oneof![
            (0.2f64..2.0, 3.0f64..20.0).prop_map(|(nu, x0)| ScalarLaw::log_pareto_tail(nu, x0).unwrap()),
            (0.2f64..1.0).prop_map(|a| ScalarLaw::pareto(a, 1.0).unwrap()),
            (0.1f64..5.0).prop_map(ScalarLaw::PointMass),
        ],
        eps in 0.2f64..2.0,
    ) {
        let model = OffspringModel::Mixed(FitnessModel::wrrt(law).unwrap());
        let plan = SequencePlan::standard(eps, 24).unwrap();
        let rep = summability_test(&model, &plan, &McConfig::new(10_000, 0)).unwrap();
        for row in &rep.terms {
            prop_assert_eq!(row.method, "exact");
            let x = (row.m_next) as f64;
            let p = tail_prob_exact(&model, row.t, row.m_next).unwrap();
            if p > tail_threshold(x, row.t, eps) {
                let i = row.i as f64;
                let bound = (-(i.powf(eps / 2.0)) * 2f64.ln().powf(1.0 + eps) / 2.0).exp();
                prop_assert!(row.term <= bound * (1.0 + 1e-9), "i={} term={} bound={}", row.i, row.term, bound);
            }
        }
    }

    /// With `U = 0` the moment test returns `E[V] t`: exactly through the
    /// closed form, and within its interval when sampling a bounded law.
    #[test]
    fn zero_u_moment_is_mean_times_t(law in light_law(), t in 0.01f64..2.0, seed in any::<u64>()) {
        let pair = PairSpec::wrrt(law.clone());
        let expect = law.mean() * t;
        match linear_moment_test(&pair, t, &MomentConfig::default()).unwrap() {
            MomentOutcome::Finite { value, .. } => prop_assert!((value - expect).abs() <= 1e-12 * expect),
            other => prop_assert!(false, "{}", other),
        }
        if law.is_bounded() {
            let cfg = MomentConfig { method: MomentMethod::MonteCarlo, nsamples: 40_000, seed };
            match linear_moment_test(&pair, t, &cfg).unwrap() {
                MomentOutcome::Finite { value, lower, upper, .. } => {
                    // 99% interval widened to 4.5 SE against repeated testing.
                    let half = (upper - lower) / 2.0 * 4.5 / 2.576;
                    prop_assert!((value - expect).abs() <= half + 1e-9 * expect, "{} vs {}", value, expect);
                }
                other => prop_assert!(false, "{}", other),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classification_ignores_time_scale(pair in prop_oneof![
        light_law().prop_map(PairSpec::wrrt),
        (0.2f64..2.0).prop_map(|nu| PairSpec::wrrt(ScalarLaw::log_pareto_tail(nu, 8.0).unwrap())),
        (0.2f64..2.0).prop_map(|nu| PairSpec::bianconi_barabasi(ScalarLaw::log_pareto_tail(nu, 8.0).unwrap())),
        (0.5f64..2.0).prop_map(|lo| PairSpec::bianconi_barabasi(ScalarLaw::uniform(lo, lo + 1.0).unwrap())),
    ]) {
        let cfg = ClassifyConfig::default();
        let a = classify_phase(&pair, &cfg).unwrap();
        let b = classify_phase(&pair, &cfg.scaled(0.5)).unwrap();
        prop_assert_eq!(a.phase, b.phase, "{} / {}", a.rationale, b.rationale);
    }
}

#[test]
fn default_grid_holds_threshold_orientation() {
    let g = TailGrid::standard(0.5);
    for (t, x) in g.points() {
        assert!(tail_threshold(x, t, 0.5) > 0.0);
        assert!(t <= g.epsilon_prime);
    }
}
