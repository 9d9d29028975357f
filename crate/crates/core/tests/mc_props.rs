use mtlsim::exact::*;
use mtlsim::learner::{erm, pool_counts};
use mtlsim::mc::*;
use mtlsim::scenario::*;

fn within(mc: &RiskEstimate, exact: f64, k: f64) -> bool {
    // a zero-variance sample still gets the estimator's true spread
    let floor = (exact * (1.0 - exact) / mc.trials as f64).sqrt();
    (mc.mean - exact).abs() <= k * mc.stderr.max(floor)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn bit_identical_across_worker_counts() {
    let sc = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
    let ls = [Learner::Pool, Learner::Oracle(None), Learner::Ibb { c0: 1.0, delta: 0.05 }];
    let a = in_pool(1, || simulate_learners(&sc, &ls, 3000, 11).unwrap());
    let b = in_pool(4, || simulate_learners(&sc, &ls, 3000, 11).unwrap());
    assert_eq!(a, b);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.risk.mean.to_bits(), y.risk.mean.to_bits());
        assert_eq!(x.risk.stderr.to_bits(), y.risk.stderr.to_bits());
    }
    let ta = in_pool(1, || simulate_bayes_test_error(&sc, 2000, 5).unwrap());
    let tb = in_pool(3, || simulate_bayes_test_error(&sc, 2000, 5).unwrap());
    assert_eq!(ta, tb);
    let ka = in_pool(1, || estimate_mixture_kl_mc(&sc, 2000, 5).unwrap());
    let kb = in_pool(4, || estimate_mixture_kl_mc(&sc, 2000, 5).unwrap());
    assert_eq!(ka.mean.to_bits(), kb.mean.to_bits());
    let fa = in_pool(1, || estimate_construction_feasibility(100, 2000, 5).unwrap());
    let fb = in_pool(2, || estimate_construction_feasibility(100, 2000, 5).unwrap());
    assert_eq!(fa, fb);
}

#[test]
fn mc_agrees_with_exact_on_grid() {
    let g = Guards::default();
    let fnz = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
    let grid: Vec<(&str, MultitaskScenario, Learner, ExactLearner)> = vec![
        ("agn erm n=10", make_agnostic_scenario_eps(10, 3, 0.1).unwrap(), Learner::PerTaskErm(0), ExactLearner::Erm(0)),
        ("agn erm n=25", make_agnostic_scenario_eps(25, 4, 0.2).unwrap(), Learner::PerTaskErm(2), ExactLearner::Erm(2)),
        ("agn pool n=10", make_agnostic_scenario_eps(10, 5, 0.2).unwrap(), Learner::Pool, ExactLearner::Pool),
        ("agn pool n=50", make_agnostic_scenario_eps(50, 20, 0.25).unwrap(), Learner::Pool, ExactLearner::Pool),
        ("agn oracle", make_agnostic_scenario_eps(15, 3, 0.1).unwrap(), Learner::Oracle(None), ExactLearner::Oracle),
        ("fn pool", fnz.clone(), Learner::Pool, ExactLearner::Pool),
        ("fn oracle", fnz.clone(), Learner::Oracle(None), ExactLearner::Oracle),
        ("fn erm", fnz.clone(), Learner::PerTaskErm(3), ExactLearner::Erm(3)),
        ("fn fixed pool", fnz.clone().materialized().unwrap(), Learner::Pool, ExactLearner::Pool),
        ("fn fixed oracle", fnz.clone().materialized().unwrap(), Learner::Oracle(None), ExactLearner::Oracle),
        ("bg pool", make_background_scenario(4, 2, 6, 8, 0.5, 0.5, 0.5).unwrap(), Learner::Pool, ExactLearner::Pool),
        ("bg erm", make_background_scenario(3, 4, 12, 8, 0.5, 0.5, 0.5).unwrap(), Learner::PerTaskErm(4), ExactLearner::Erm(4)),
    ];
    assert_eq!(grid.len(), 12);
    for (i, (name, sc, l, el)) in grid.iter().enumerate() {
        let ex = exact_learner_risk(sc, *el, &g).unwrap();
        let mc = simulate_learner_risk(sc, l, 20_000, 1000 + i as u64).unwrap();
        assert!(
            within(&mc.error_rate, ex.error_prob, 3.0),
            "{name}: mc {} ± {} vs exact {}",
            mc.error_rate.mean,
            mc.error_rate.stderr,
            ex.error_prob
        );
        let worst = max_excess_risk(&sc.target, &sc.concept_class);
        assert!((mc.risk.mean - worst * mc.error_rate.mean).abs() < 1e-12);
    }
}

#[test]
fn agnostic_oracle_and_pool_risks() {
    let sc = make_agnostic_scenario(100, 10, 0.05).unwrap();
    let eps = sc.params.epsilon.unwrap();
    let o = simulate_learner_risk(&sc, &Learner::Oracle(None), 20_000, 3).unwrap();
    assert!(o.risk.mean <= 2.0 * 0.05 * eps + 3.0 * o.risk.stderr);
    let sc = make_agnostic_scenario_eps(50, 40, 0.25).unwrap();
    let p = simulate_learner_risk(&sc, &Learner::Pool, 10_000, 4).unwrap();
    let ex = 2.0 * 0.25 * pooling_error_exact_agnostic(50, 40, 0.25).unwrap();
    assert!((p.risk.mean - ex).abs() <= 3.0 * p.risk.stderr, "{} vs {ex}", p.risk.mean);
    let c = simulate_learner_risk(&sc, &Learner::Constant(1), 100, 4).unwrap();
    assert_eq!(c.risk.mean, 0.0);
}

#[test]
fn bayes_test_error_matches_bruteforce() {
    let sc = make_fair_noisy_custom(3, 2, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
    let j = joint_bruteforce_test(&sc, 2, &Guards::default()).unwrap();
    let mc = simulate_bayes_test_error(&sc, 40_000, 21).unwrap();
    assert!(within(&mc, j.bayes_error, 3.0), "{} ± {} vs {}", mc.mean, mc.stderr, j.bayes_error);
    // agnostic, brute force over all placements
    let sc = make_agnostic_scenario_eps(3, 3, 0.3).unwrap();
    let j = joint_bruteforce_test(&sc, 3, &Guards::default()).unwrap();
    let mc = simulate_bayes_test_error(&sc, 40_000, 22).unwrap();
    assert!(within(&mc, j.bayes_error, 3.0), "{} ± {} vs {}", mc.mean, mc.stderr, j.bayes_error);
}

#[test]
fn bayes_error_respects_fano() {
    for (i, &(n, tasks, beta)) in [(2u64, 64u64, 0.5), (3, 100, 0.5), (4, 256, 0.5), (4, 256, 0.3)].iter().enumerate() {
        let sc = make_fair_noisy_scenario(n, tasks, beta, 2.0).unwrap();
        let lb = adaptive_error_lower_bound(&sc).unwrap();
        let mc = simulate_bayes_test_error(&sc, 5_000, 70 + i as u64).unwrap();
        assert!(mc.mean >= lb.bh - 3.0 * mc.stderr, "n={n} N={tasks}: {} < {}", mc.mean, lb.bh);
    }
}

#[test]
fn mixture_kl_estimates() {
    let sc = make_fair_noisy_custom(3, 50, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
    let exact = mixture_task_kl(&sc).unwrap().total;
    let a = estimate_mixture_kl_mc(&sc, 20_000, 1).unwrap();
    let b = estimate_mixture_kl_mc(&sc, 20_000, 2).unwrap();
    assert!((a.mean - exact).abs() <= 3.0 * a.stderr, "{} ± {} vs {exact}", a.mean, a.stderr);
    assert!((a.mean - b.mean).abs() <= 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    // levels at zero leave nothing to distinguish
    let z = make_fair_noisy_custom(3, 50, 0.5, 2.0, 1e-12, 1e-13, 0.3).unwrap();
    assert!(estimate_mixture_kl_mc(&z, 2000, 1).unwrap().mean.abs() < 1e-6);
}

#[test]
fn stderr_scales_with_root_trials() {
    let sc = make_agnostic_scenario_eps(10, 5, 0.1).unwrap();
    let a = simulate_learner_risk(&sc, &Learner::Pool, 20_000, 9).unwrap().error_rate;
    let b = simulate_learner_risk(&sc, &Learner::Pool, 40_000, 9).unwrap().error_rate;
    let r = a.stderr / b.stderr;
    let s2 = std::f64::consts::SQRT_2;
    assert!(r > s2 * 0.9 && r < s2 * 1.1, "ratio {r}");
}

#[test]
fn sampled_marginal_clt() {
    let d = TwoPointDistribution::new(0.37, 0.8, 1).unwrap();
    let n = 12;
    let v: Vec<f64> = (0..100_000u64)
        .map(|t| {
            let mut rng = trial_rng(77, t);
            let ds = sample_task_dataset(&d, n, &mut rng);
            assert_eq!(ds.n(), n);
            ds.n_x1() as f64 / n as f64
        })
        .collect();
    let e = RiskEstimate::from_values("p_x1", &v, 77);
    assert!((e.mean - 0.37).abs() <= 4.0 * e.stderr);
    let ones = TwoPointDistribution::new(1.0, 1.0, 1).unwrap();
    let ds = sample_task_dataset(&ones, 9, &mut trial_rng(1, 1));
    assert_eq!(ds.counts, [[0, 0], [0, 9]]);
    let none = TwoPointDistribution::new(0.0, 0.7, 0).unwrap();
    assert_eq!(sample_task_dataset(&none, 9, &mut trial_rng(1, 2)).counts, [[0, 9], [0, 0]]);
}

#[test]
fn oracle_exact_fair_against_direct_simulation() {
    // t* = 2 fair tasks at (n=4, N=16, β=½, C_β=2), simulated directly
    let exact = oracle_error_exact_fair(4, 2, 0.5, 2.0, 16, &Guards::default()).unwrap();
    let sc = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
    let p = sc.components.informative;
    let v: Vec<f64> = (0..1_000_000u64)
        .map(|t| {
            let mut rng = trial_rng(2024, t);
            let a = sample_task_dataset(&p, 4, &mut rng);
            let b = sample_task_dataset(&p, 4, &mut rng);
            (erm(&pool_counts([&a, &b]), &sc.concept_class) != 1) as u8 as f64
        })
        .collect();
    let e = RiskEstimate::from_values("oracle_t2", &v, 2024);
    assert!((e.mean - exact).abs() <= 3.0 * e.stderr, "{} ± {} vs {exact}", e.mean, e.stderr);
    assert_eq!(
        oracle_error_exact_fair(4, 1, 0.5, 2.0, 16, &Guards::default()).unwrap(),
        exact_learner_risk(&sc.clone().materialized().unwrap(), ExactLearner::Erm(0), &Guards::default()).unwrap().error_prob
    );
}

#[test]
fn feasibility_reference_points() {
    assert_eq!(estimate_construction_feasibility(10, 500, 3).unwrap().mean, 1.0);
    assert!(estimate_construction_feasibility(9, 10, 3).is_err());
}
