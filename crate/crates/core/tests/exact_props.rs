use mtlsim::exact::*;
use mtlsim::prob::{binom_log_pmf, fano_bound, FanoVariant};
use mtlsim::scenario::{make_agnostic_scenario_eps, make_fair_noisy_custom, make_fair_noisy_scenario, TwoPointDistribution};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed_0005),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Probability of one labeled sequence, written out cell by cell with no
/// reference to the sufficient statistic.
fn sequence_prob(d: &TwoPointDistribution, seq: &[(usize, u8)]) -> f64 {
    let p1_x1 = if d.y_star == 1 { d.eta_star } else { 1.0 - d.eta_star };
    seq.iter()
        .map(|&(x, y)| {
            let (px, p1) = if x == 1 { (d.p_x1, p1_x1) } else { (1.0 - d.p_x1, d.p1_x0) };
            px * if y == 1 { p1 } else { 1.0 - p1 }
        })
        .product()
}

fn flip(d: &TwoPointDistribution) -> TwoPointDistribution {
    TwoPointDistribution { y_star: 1 - d.y_star, ..*d }
}

/// KL between per-task mixtures over all 4ⁿ raw sequences.
fn sequence_kl(p: &TwoPointDistribution, q: &TwoPointDistribution, alpha: f64, n: usize) -> f64 {
    let mut kl = 0.0;
    for code in 0..4usize.pow(n as u32) {
        let seq: Vec<(usize, u8)> = (0..n).map(|i| ((code >> (2 * i + 1)) & 1, ((code >> (2 * i)) & 1) as u8)).collect();
        let a = alpha * sequence_prob(p, &seq) + (1.0 - alpha) * sequence_prob(q, &seq);
        let b = alpha * sequence_prob(&flip(p), &seq) + (1.0 - alpha) * sequence_prob(&flip(q), &seq);
        if a > 0.0 {
            kl += a * (a / b).ln();
        }
    }
    kl
}

#[test]
fn mixture_kl_matches_sequence_enumeration() {
    let sc = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
    let k = mixture_task_kl(&sc).unwrap();
    let oracle = sequence_kl(&sc.components.informative, &sc.components.noisy, 0.3, 3);
    assert!((k.per_task - oracle).abs() < 1e-10, "{} vs {}", k.per_task, oracle);
    assert!((k.total - 10.0 * k.per_task).abs() < 1e-12);
    let direct = mixture_pair_kl(&sc.components.informative, &sc.components.noisy, 0.3, 3).unwrap();
    assert!((direct - k.per_task).abs() < 1e-15);
}

#[test]
fn kl_additivity_and_fano_consistency() {
    let g = Guards::default();
    for &(n, a, e, e0) in &[(3u64, 0.3, 0.2, 0.05), (2, 0.7, 0.15, 0.02), (4, 0.5, 0.1, 0.09), (1, 0.2, 0.24, 0.1)] {
        let sc = make_fair_noisy_custom(n, 5, 0.5, 2.0, e, e0, a).unwrap();
        let per = mixture_task_kl(&sc).unwrap().per_task;
        for ns in 1..=3 {
            let j = joint_bruteforce_test(&sc, ns, &g).unwrap();
            assert!((j.kl - ns as f64 * per).abs() < 1e-10, "n={n} N_small={ns}");
            assert!(j.bayes_error >= fano_bound(j.kl, FanoVariant::BretagnolleHuber).unwrap() - 1e-12);
            assert!(j.bayes_error >= fano_bound(j.kl, FanoVariant::Pinsker).unwrap() - 1e-12);
            assert!((j.bayes_error - 0.5 * (1.0 - j.tv)).abs() < 1e-15);
        }
    }
    // agnostic brute force is its own uniform-placement law
    let sc = make_agnostic_scenario_eps(3, 3, 0.2).unwrap();
    let j = joint_bruteforce_test(&sc, 3, &g).unwrap();
    assert!(j.bayes_error >= fano_bound(j.kl, FanoVariant::BretagnolleHuber).unwrap() - 1e-12);
    assert!(joint_bruteforce_test(&sc, 2, &g).is_err());
    let sc5 = make_fair_noisy_custom(5, 5, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
    assert!(joint_bruteforce_test(&sc5, 1, &g).unwrap_err().is_guard());
    assert!(joint_bruteforce_test(&sc5, 4, &g).unwrap_err().is_guard());
}

#[test]
fn erm_error_strictly_decreasing_in_eps() {
    for &n in &[1u64, 2, 7, 50, 100] {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let eps = 0.499 * i as f64 / 49.0;
            let v = erm_error_exact_agnostic(n, eps).unwrap();
            assert!(v < prev, "n={n} eps={eps}");
            prev = v;
        }
    }
}

#[test]
fn fair_oracle_rate_below_twice_eps() {
    for n in 1u64..=8 {
        for &tasks in &[1u64, 4, 16, 256, 4096] {
            for &beta in &[0.0, 0.1, 0.3, 0.5, 0.7, 0.9] {
                for &cb in &[2.0, 3.0, 10.0] {
                    let r = fair_oracle_rate(n, tasks, beta, cb).unwrap();
                    let eps = (n as f64 * (tasks as f64).sqrt()).powf(-1.0 / (2.0 - beta));
                    assert!(r < 2.0 * eps && r > 0.0);
                }
            }
        }
    }
}

#[test]
fn exact_risks_label_symmetric() {
    let g = Guards::default();
    let sc = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
    let f = sc.clone().with_y_star(0).unwrap();
    for l in [ExactLearner::Erm(0), ExactLearner::Pool, ExactLearner::Oracle] {
        let (a, b) = (exact_learner_risk(&sc, l, &g).unwrap(), exact_learner_risk(&f, l, &g).unwrap());
        assert!((a.error_prob - b.error_prob).abs() < 1e-14, "{l:?}");
    }
    let (m, mf) = (sc.clone().materialized().unwrap(), f.materialized().unwrap());
    for l in [ExactLearner::Pool, ExactLearner::Oracle] {
        let (a, b) = (exact_learner_risk(&m, l, &g).unwrap(), exact_learner_risk(&mf, l, &g).unwrap());
        assert!((a.error_prob - b.error_prob).abs() < 1e-14);
    }
    let j0 = joint_bruteforce_test(&make_fair_noisy_custom(3, 4, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap(), 2, &g).unwrap();
    let j1 = joint_bruteforce_test(&make_fair_noisy_custom(3, 4, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap().with_y_star(0).unwrap(), 2, &g).unwrap();
    assert!((j0.kl - j1.kl).abs() < 1e-14 && (j0.tv - j1.tv).abs() < 1e-14);
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn pooling_one_task_is_erm(n in 1u64..400, eps in 0.0f64..0.5) {
        prop_assert_eq!(pooling_error_exact_agnostic(n, 1, eps).unwrap(), erm_error_exact_agnostic(n, eps).unwrap());
    }

    #[test]
    fn pooled_groups_single_task_is_erm(n in 1u64..200, eps in 0.0f64..0.5) {
        let sc = make_agnostic_scenario_eps(n, 1, eps).unwrap();
        let v = pooled_groups_error(&[(sc.components.informative, n)], &Guards::default()).unwrap();
        prop_assert!((v - erm_error_exact_agnostic(n, eps).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn suffstat_marginal_is_binomial(n in 1u64..120, p in 0.0f64..=1.0, eta in 0.5f64..=1.0) {
        let d = TwoPointDistribution::new(p, eta, 1).unwrap();
        let t = suffstat_dist(&d, n).unwrap();
        prop_assert!((t.total() - 1.0).abs() < 1e-12);
        for (k, m) in t.marginal_k().iter().enumerate() {
            prop_assert!((m - binom_log_pmf(n, p, k as u64).unwrap().exp()).abs() < 1e-12);
        }
        prop_assert!(t.states().all(|(k, j, _)| j <= k && k <= n));
    }

    #[test]
    fn minimax_all_unit_exponents(beta in 0.0f64..=1.0, sizes in prop::collection::vec(1u64..1000, 1..20)) {
        let rhos = vec![1.0; sizes.len()];
        let r = minimax_rate(beta, &sizes, &rhos).unwrap();
        let total: u64 = sizes.iter().sum();
        prop_assert_eq!(r.value, (total as f64).powf(-1.0 / (2.0 - beta)));
        let best = r.per_prefix.iter().map(|p| p.rate_t).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.value, best);
    }

    #[test]
    fn minimax_prefix_means(beta in 0.0f64..=1.0, pairs in prop::collection::vec((1u64..100, 1.0f64..5.0), 1..15)) {
        let (sizes, rhos): (Vec<u64>, Vec<f64>) = pairs.iter().copied().unzip();
        let r = minimax_rate(beta, &sizes, &rhos).unwrap();
        let mut sorted = pairs.clone();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (mut cn, mut w) = (0u64, 0.0);
        for (i, (n, rho)) in sorted.iter().enumerate() {
            cn += n;
            w += *n as f64 * rho;
            let pre = &r.per_prefix[i];
            prop_assert_eq!(pre.cumulative_n, cn);
            prop_assert!((pre.rho_bar_t - w / cn as f64).abs() < 1e-12);
        }
        prop_assert_eq!(r.per_prefix[r.argmin_t - 1].rate_t, r.value);
    }

    #[test]
    fn pooling_bound_monotone_in_sample_size(n in 1u64..200, tasks in 1u64..200, k in 1u64..10, beta in 0.0f64..=1.0, rho in 1.0f64..4.0) {
        let base = PoolingRateParams { alpha: 0.5, beta, c_beta: 2.0, c0: 1.0, c_rho: 2.0, d: 1, n, tasks, delta: 0.1, rho_bar: rho };
        let a = pooling_rate_bound(&base).unwrap();
        let b = pooling_rate_bound(&PoolingRateParams { tasks: tasks * k, ..base }).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn adaptive_bound_at_most_half_eps(n in 1u64..6, tasks in 1u64..2000, beta in 0.1f64..0.9) {
        let sc = make_fair_noisy_scenario(n, tasks, beta, 2.0);
        prop_assume!(sc.is_ok());
        let sc = sc.unwrap();
        let b = adaptive_error_lower_bound(&sc).unwrap();
        prop_assert!(b.risk_bound <= sc.params.epsilon.unwrap() / 2.0 + 1e-15);
        prop_assert!(b.kl_total >= 0.0);
    }

    #[test]
    fn mixture_is_pointwise_convex(alpha in 0.0f64..=1.0) {
        let sc = make_fair_noisy_custom(4, 8, 0.5, 2.0, 0.2, 0.05, alpha).unwrap();
        let m = mixture_suffstat_dist(&sc, 1).unwrap();
        let p = suffstat_dist(&sc.components.informative, 4).unwrap();
        let q = suffstat_dist(&sc.components.noisy, 4).unwrap();
        for ((a, b), c) in m.probs().iter().zip(p.probs()).zip(q.probs()) {
            prop_assert!((a - (alpha * b + (1.0 - alpha) * c)).abs() < 1e-15);
        }
    }
}
