//! Exact error probabilities, sufficient-statistic tables, mixture KL,
//! small-instance brute force, and closed-form rate expressions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{self, binom_conv_sf, fano_bound, kl_raw, log_pmf_raw, sf_raw, FanoVariant};
use crate::scenario::{
    fair_noisy_levels, fair_noisy_source, materialized_fair_count, max_excess_risk, minimal_transfer_exponent, AssignmentModel,
    Family, MultitaskScenario, TaskTag, TwoPointDistribution,
};

/// Enumeration limits. These are configuration, not part of any formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    /// Pooled sample count for the oracle error sum.
    pub max_oracle_samples: u64,
    /// Pooled sample count for the multi-group difference convolution.
    pub max_pool_samples: u64,
    pub max_bruteforce_tasks: usize,
    pub max_bruteforce_n: u64,
    /// Outer mixture terms when pooling under the Bernoulli model.
    pub max_mixture_terms: u64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            max_oracle_samples: 100_000,
            max_pool_samples: 20_000,
            max_bruteforce_tasks: 3,
            max_bruteforce_n: 4,
            max_mixture_terms: 4096,
        }
    }
}

fn guard(what: &str, required: u128, limit: u128) -> Result<()> {
    if required > limit {
        return Err(Error::Guard {
            what: what.into(),
            required,
            limit,
        });
    }
    Ok(())
}

/// Triangular table over (k, j) with 0 ≤ j ≤ k ≤ n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffStatDist {
    pub n: u64,
    table: Vec<f64>,
}

fn tri(k: u64, j: u64) -> usize {
    (k * (k + 1) / 2 + j) as usize
}

impl SuffStatDist {
    fn zeros(n: u64) -> Self {
        SuffStatDist {
            n,
            table: vec![0.0; tri(n + 1, 0)],
        }
    }

    pub fn get(&self, k: u64, j: u64) -> f64 {
        if j > k || k > self.n {
            return 0.0;
        }
        self.table[tri(k, j)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.table
    }

    pub fn states(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        (0..=self.n).flat_map(move |k| (0..=k).map(move |j| (k, j, self.get(k, j))))
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Marginal pmf of k.
    pub fn marginal_k(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|k| (0..=k).map(|j| self.get(k, j)).sum())
            .collect()
    }

    fn mix(a: &SuffStatDist, b: &SuffStatDist, w: f64) -> SuffStatDist {
        SuffStatDist {
            n: a.n,
            table: a
                .table
                .iter()
                .zip(&b.table)
                .map(|(x, y)| w * x + (1.0 - w) * y)
                .collect(),
        }
    }
}

/// Law of (n̂_{x₁}, n̂_{x₁,label 1}) for n i.i.d. draws from `dist`.
pub fn suffstat_dist(dist: &TwoPointDistribution, n: u64) -> Result<SuffStatDist> {
    if n == 0 {
        return Err(Error::domain("n must be ≥ 1"));
    }
    dist.validate()?;
    let e1 = dist.eta1();
    let mut out = SuffStatDist::zeros(n);
    for k in 0..=n {
        let lk = log_pmf_raw(n, dist.p_x1, k);
        for j in 0..=k {
            out.table[tri(k, j)] = (lk + log_pmf_raw(k, e1, j)).exp();
        }
    }
    Ok(out)
}

/// Fair/noisy components relabeled to y* = σ.
fn components_for(sc: &MultitaskScenario, sigma: u8) -> Result<(TwoPointDistribution, TwoPointDistribution)> {
    if sigma > 1 {
        return Err(Error::domain(format!("sigma={sigma} not a label")));
    }
    let c = sc.components;
    Ok(if sigma == c.informative.y_star {
        (c.informative, c.noisy)
    } else {
        (c.informative.flipped(), c.noisy.flipped())
    })
}

fn alpha_f(sc: &MultitaskScenario) -> Result<f64> {
    sc.params
        .alpha_f
        .ok_or_else(|| Error::param("scenario has no alpha_f"))
}

/// α_F·law(P(σ)) + α_N·law(Q(σ)) for the per-task statistic.
pub fn mixture_suffstat_dist(sc: &MultitaskScenario, sigma: u8) -> Result<SuffStatDist> {
    sc.require_family(Family::FairNoisy)?;
    let (p, q) = components_for(sc, sigma)?;
    let n = sc.n_per_task;
    Ok(SuffStatDist::mix(&suffstat_dist(&p, n)?, &suffstat_dist(&q, n)?, alpha_f(sc)?))
}

/// KL between the per-task mixtures under y* and under the flipped label.
pub fn mixture_pair_kl(p: &TwoPointDistribution, q: &TwoPointDistribution, alpha: f64, n: u64) -> Result<f64> {
    let a = SuffStatDist::mix(&suffstat_dist(p, n)?, &suffstat_dist(q, n)?, alpha);
    let b = SuffStatDist::mix(
        &suffstat_dist(&p.flipped(), n)?,
        &suffstat_dist(&q.flipped(), n)?,
        alpha,
    );
    Ok(kl_raw(a.probs(), b.probs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskKl {
    pub per_task: f64,
    pub total: f64,
}

pub fn mixture_task_kl(sc: &MultitaskScenario) -> Result<TaskKl> {
    sc.require_family(Family::FairNoisy)?;
    let s = sc.y_star();
    let a = mixture_suffstat_dist(sc, s)?;
    let b = mixture_suffstat_dist(sc, 1 - s)?;
    let per_task = kl_raw(a.probs(), b.probs());
    Ok(TaskKl {
        per_task,
        total: sc.num_tasks() as f64 * per_task,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveLowerBound {
    pub kl_total: f64,
    pub pinsker: f64,
    pub bh: f64,
    pub risk_bound: f64,
}

/// Fano-type lower bound on the risk of any adaptive learner.
pub fn adaptive_error_lower_bound(sc: &MultitaskScenario) -> Result<AdaptiveLowerBound> {
    let kl = mixture_task_kl(sc)?;
    lower_bound_from_kl(kl.total, sc.epsilon()?)
}

pub fn lower_bound_from_kl(kl_total: f64, eps: f64) -> Result<AdaptiveLowerBound> {
    let pinsker = fano_bound(kl_total, FanoVariant::Pinsker)?;
    let bh = fano_bound(kl_total, FanoVariant::BretagnolleHuber)?;
    Ok(AdaptiveLowerBound {
        kl_total,
        pinsker,
        bh,
        risk_bound: eps * pinsker.max(bh),
    })
}

/// Per-task statistic law by enumerating all 4ⁿ labeled sequences.
fn sequence_law(dist: &TwoPointDistribution, n: u64) -> SuffStatDist {
    let cells = dist.cells();
    let mut out = SuffStatDist::zeros(n);
    for code in 0..4u64.pow(n as u32) {
        let (mut pr, mut k, mut j, mut c) = (1.0, 0, 0, code);
        for _ in 0..n {
            let (x, y) = (((c >> 1) & 1) as usize, (c & 1) as usize);
            pr *= cells[x][y];
            if x == 1 {
                k += 1;
                j += y as u64;
            }
            c >>= 2;
        }
        out.table[tri(k, j)] += pr;
    }
    out
}

/// Joint law of independent tasks with the given per-task laws.
fn product_law(laws: &[&[f64]]) -> Vec<f64> {
    let mut acc = vec![1.0];
    for law in laws {
        let mut next = Vec::with_capacity(acc.len() * law.len());
        for a in &acc {
            for b in law.iter() {
                next.push(a * b);
            }
        }
        acc = next;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointTest {
    pub tv: f64,
    pub bayes_error: f64,
    pub kl: f64,
    pub states: usize,
}

/// Exact σ vs 1−σ test over the joint statistic of `n_small` tasks.
/// For the agnostic family the joint law is the uniform-placement mixture,
/// which needs `n_small` equal to the scenario's task count.
pub fn joint_bruteforce_test(sc: &MultitaskScenario, n_small: usize, guards: &Guards) -> Result<JointTest> {
    if n_small == 0 {
        return Err(Error::domain("N_small must be ≥ 1"));
    }
    guard("brute-force tasks", n_small as u128, guards.max_bruteforce_tasks as u128)?;
    guard("brute-force samples per task", sc.n_per_task as u128, guards.max_bruteforce_n as u128)?;
    let n = sc.n_per_task;
    let s = sc.y_star();
    let (joint_a, joint_b) = match sc.family {
        Family::FairNoisy => {
            let alpha = alpha_f(sc)?;
            let law = |sigma: u8| -> Result<Vec<f64>> {
                let (p, q) = components_for(sc, sigma)?;
                Ok(SuffStatDist::mix(&sequence_law(&p, n), &sequence_law(&q, n), alpha).table)
            };
            let (a, b) = (law(s)?, law(1 - s)?);
            let ra: Vec<&[f64]> = vec![&a; n_small];
            let rb: Vec<&[f64]> = vec![&b; n_small];
            (product_law(&ra), product_law(&rb))
        }
        Family::Agnostic => {
            if n_small != sc.num_tasks() {
                return Err(Error::domain(format!(
                    "agnostic brute force needs N_small = N = {}",
                    sc.num_tasks()
                )));
            }
            let law = |sigma: u8| -> Result<Vec<f64>> {
                let (p, q) = components_for(sc, sigma)?;
                let (lp, lq) = (sequence_law(&p, n).table, sequence_law(&q, n).table);
                let mut mix: Vec<f64> = Vec::new();
                for t in 0..n_small {
                    let parts: Vec<&[f64]> = (0..n_small).map(|i| if i == t { &lp[..] } else { &lq[..] }).collect();
                    let joint = product_law(&parts);
                    if mix.is_empty() {
                        mix = vec![0.0; joint.len()];
                    }
                    for (m, v) in mix.iter_mut().zip(joint) {
                        *m += v / n_small as f64;
                    }
                }
                Ok(mix)
            };
            (law(s)?, law(1 - s)?)
        }
        Family::Background => {
            return Err(Error::Family {
                expected: "fair_noisy or agnostic".into(),
                found: sc.family.to_string(),
            })
        }
    };
    let tv = (0.5 * joint_a.iter().zip(&joint_b).map(|(a, b)| (a - b).abs()).sum::<f64>()).clamp(0.0, 1.0);
    Ok(JointTest {
        tv,
        bayes_error: 0.5 * (1.0 - tv),
        kl: kl_raw(&joint_a, &joint_b),
        states: joint_a.len(),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::domain(format!("eps={eps} outside [0, ½)")));
    }
    Ok(())
}

/// P(n̂₀ ≥ n̂₁) on one agnostic P-task: P(Bin(n, ½−ε) ≥ ⌈n/2⌉).
pub fn erm_error_exact_agnostic(n: u64, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be ≥ 1"));
    }
    check_eps(eps)?;
    Ok(sf_raw(n, 0.5 - eps, n.div_ceil(2)))
}

/// Pooled error with one P-task among N: P(A + B ≥ ⌈nN/2⌉).
pub fn pooling_error_exact_agnostic(n: u64, tasks: u64, eps: f64) -> Result<f64> {
    if n == 0 || tasks == 0 {
        return Err(Error::domain("n and N must be ≥ 1"));
    }
    check_eps(eps)?;
    binom_conv_sf(n, 0.5 - eps, (tasks - 1) * n, 0.5, (n * tasks).div_ceil(2))
}

/// Error probability of ERM on M pooled draws from one distribution:
/// Σ_m P(n̂_{x₁}=m)·P(wrong-label count ≥ ⌈m/2⌉).
fn single_group_error(dist: &TwoPointDistribution, m_total: u64) -> f64 {
    let wrong = 1.0 - dist.eta_star;
    let mut s = 0.0;
    for m in 0..=m_total {
        let w = log_pmf_raw(m_total, dist.p_x1, m).exp();
        if w == 0.0 {
            continue;
        }
        s += w * sf_raw(m, wrong, m.div_ceil(2));
    }
    s.clamp(0.0, 1.0)
}

/// pmf of D = (#wrong-label) − (#right-label) over M draws at x₁; index
/// is D + M.
fn difference_pmf(dist: &TwoPointDistribution, m_total: u64) -> Vec<f64> {
    let wrong = 1.0 - dist.eta_star;
    let mut out = vec![0.0; (2 * m_total + 1) as usize];
    for k in 0..=m_total {
        let lk = log_pmf_raw(m_total, dist.p_x1, k);
        if lk.exp() == 0.0 {
            continue;
        }
        for w in 0..=k {
            let d = 2 * w as i64 - k as i64;
            out[(d + m_total as i64) as usize] += (lk + log_pmf_raw(k, wrong, w)).exp();
        }
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact error of ERM on the pooled sample of several groups, each a
/// (distribution, sample count). All groups must share y*. Ties are errors.
pub fn pooled_groups_error(groups: &[(TwoPointDistribution, u64)], guards: &Guards) -> Result<f64> {
    let groups: Vec<_> = groups.iter().filter(|g| g.1 > 0).collect();
    if groups.is_empty() {
        return Ok(1.0);
    }
    if groups.iter().any(|g| g.0.y_star != groups[0].0.y_star) {
        return Err(Error::domain("pooled groups disagree on y*"));
    }
    if groups.len() == 1 {
        guard("oracle pooled samples", groups[0].1 as u128, guards.max_oracle_samples as u128)?;
        return Ok(single_group_error(&groups[0].0, groups[0].1));
    }
    let total: u64 = groups.iter().map(|g| g.1).sum();
    guard("pooled samples", total as u128, guards.max_pool_samples as u128)?;
    let mut acc = vec![1.0];
    for (d, m) in &groups {
        acc = convolve(&acc, &difference_pmf(d, *m));
    }
    // index total ↔ D = 0
    Ok(acc[total as usize..].iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Error of ERM pooled over t fair tasks of the fair/noisy family.
pub fn oracle_error_exact_fair(n: u64, t_star_int: u64, beta: f64, c_beta: f64, tasks: u64, guards: &Guards) -> Result<f64> {
    if n == 0 || t_star_int == 0 || tasks == 0 {
        return Err(Error::domain("n, t* and N must be ≥ 1"));
    }
    let m = n * t_star_int;
    guard("oracle pooled samples", m as u128, guards.max_oracle_samples as u128)?;
    let eps = (n as f64 * (tasks as f64).sqrt()).powf(-1.0 / (2.0 - beta));
    let p = fair_noisy_source(eps, beta, c_beta)?;
    Ok(single_group_error(&p, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactLearner {
    /// ERM on one task (0-based index).
    Erm(usize),
    Pool,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactRisk {
    /// P(learner outputs a non-optimal hypothesis).
    pub error_prob: f64,
    /// error_prob × excess risk of the non-optimal hypothesis on the target.
    pub excess_risk: f64,
}

fn bin_weights(tasks: u64, alpha: f64) -> Result<Vec<f64>> {
    prob::binom_pmf_vec(tasks, alpha)
}

/// Exact learner risk under the scenario's assignment model.
pub fn exact_learner_risk(sc: &MultitaskScenario, learner: ExactLearner, guards: &Guards) -> Result<ExactRisk> {
    sc.validate()?;
    let n = sc.n_per_task;
    let nt = sc.num_tasks() as u64;
    let (inf, noisy) = (sc.components.informative, sc.components.noisy);
    let err1 = |d: &TwoPointDistribution, m: u64| pooled_groups_error(&[(*d, m)], guards);
    let fixed_count = || -> Result<u64> {
        let tags = sc
            .assignment
            .as_ref()
            .ok_or_else(|| Error::param("fixed model needs an assignment"))?;
        Ok(tags.iter().filter(|t| t.is_informative()).count() as u64)
    };
    let error_prob = match (learner, sc.model) {
        (ExactLearner::Erm(t), model) => {
            if t >= nt as usize {
                return Err(Error::Index {
                    index: t,
                    len: nt as usize,
                });
            }
            let pi = match model {
                AssignmentModel::UniformPlacement => 1.0 / nt as f64,
                AssignmentModel::Bernoulli => alpha_f(sc)?,
                AssignmentModel::Fixed => {
                    let tag = sc.assignment.as_ref().map(|a| a[t]).unwrap_or(TaskTag::Noisy);
                    if tag.is_informative() { 1.0 } else { 0.0 }
                }
            };
            pi * err1(&inf, n)? + (1.0 - pi) * err1(&noisy, n)?
        }
        (ExactLearner::Pool, AssignmentModel::UniformPlacement) if sc.family == Family::Agnostic => {
            pooling_error_exact_agnostic(n, nt, sc.epsilon()?)?
        }
        (ExactLearner::Pool, AssignmentModel::UniformPlacement) => {
            pooled_groups_error(&[(inf, n), (noisy, n * (nt - 1))], guards)?
        }
        (ExactLearner::Pool, AssignmentModel::Fixed) => {
            let f = fixed_count()?;
            pooled_groups_error(&[(inf, n * f), (noisy, n * (nt - f))], guards)?
        }
        (ExactLearner::Pool, AssignmentModel::Bernoulli) => {
            guard("Bernoulli mixture terms", nt as u128 + 1, guards.max_mixture_terms as u128)?;
            let w = bin_weights(nt, alpha_f(sc)?)?;
            let mut s = 0.0;
            for (f, wf) in w.iter().enumerate() {
                if *wf == 0.0 {
                    continue;
                }
                let f = f as u64;
                s += wf * pooled_groups_error(&[(inf, n * f), (noisy, n * (nt - f))], guards)?;
            }
            s
        }
        (ExactLearner::Oracle, AssignmentModel::UniformPlacement) => err1(&inf, n)?,
        (ExactLearner::Oracle, AssignmentModel::Fixed) => {
            let f = fixed_count()?;
            if f == 0 {
                return Err(Error::domain("no informative task to pool"));
            }
            err1(&inf, n * f)?
        }
        (ExactLearner::Oracle, AssignmentModel::Bernoulli) => {
            guard("Bernoulli mixture terms", nt as u128 + 1, guards.max_mixture_terms as u128)?;
            let w = bin_weights(nt, alpha_f(sc)?)?;
            // no fair task realized: ERM on nothing ties, which is an error
            let mut s = w[0];
            for (f, wf) in w.iter().enumerate().skip(1) {
                if *wf > 0.0 {
                    s += wf * err1(&inf, n * f as u64)?;
                }
            }
            s
        }
    };
    let error_prob = error_prob.clamp(0.0, 1.0);
    Ok(ExactRisk {
        error_prob,
        excess_risk: error_prob * max_excess_risk(&sc.target, &sc.concept_class),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePrefix {
    pub t: usize,
    pub cumulative_n: u64,
    pub rho_bar_t: f64,
    pub rate_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBreakdown {
    pub per_prefix: Vec<RatePrefix>,
    /// 1-based prefix length attaining the minimum.
    pub argmin_t: usize,
    pub value: f64,
}

/// Sorts by ρ and returns (n, ρ) pairs plus the weighted prefix means.
fn sorted_prefixes(sizes: &[u64], rhos: &[f64]) -> Result<Vec<(u64, f64)>> {
    if sizes.is_empty() || sizes.len() != rhos.len() {
        return Err(Error::domain(format!(
            "need equal-length non-empty lists, got {} sizes and {} rhos",
            sizes.len(),
            rhos.len()
        )));
    }
    if let Some(r) = rhos.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
        return Err(Error::domain(format!("transfer exponent {r} must be finite and ≥ 1")));
    }
    if sizes.contains(&0) {
        return Err(Error::domain("sample sizes must be ≥ 1"));
    }
    let mut idx: Vec<usize> = (0..sizes.len()).collect();
    idx.sort_by(|&a, &b| rhos[a].total_cmp(&rhos[b]));
    let (mut cn, mut wr) = (0u64, 0.0);
    Ok(idx
        .into_iter()
        .map(|i| {
            cn += sizes[i];
            wr += sizes[i] as f64 * rhos[i];
            (cn, wr / cn as f64)
        })
        .collect())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta={beta} outside [0,1]")));
    }
    Ok(())
}

fn breakdown(per_prefix: Vec<RatePrefix>) -> RateBreakdown {
    let best = per_prefix
        .iter()
        .min_by(|a, b| a.rate_t.total_cmp(&b.rate_t))
        .expect("non-empty prefixes");
    RateBreakdown {
        argmin_t: best.t,
        value: best.rate_t,
        per_prefix: per_prefix.clone(),
    }
}

/// min_t (Σ_{s≤t} n_(s))^{−1/((2−β)ρ̄_t)} over ρ-sorted tasks.
pub fn minimax_rate(beta: f64, sizes: &[u64], rhos: &[f64]) -> Result<RateBreakdown> {
    check_beta(beta)?;
    let pre = sorted_prefixes(sizes, rhos)?;
    Ok(breakdown(
        pre.into_iter()
            .enumerate()
            .map(|(i, (cn, rb))| RatePrefix {
                t: i + 1,
                cumulative_n: cn,
                rho_bar_t: rb,
                rate_t: (cn as f64).powf(-1.0 / ((2.0 - beta) * rb)),
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingRateParams {
    pub alpha: f64,
    pub beta: f64,
    pub c_beta: f64,
    pub c0: f64,
    pub c_rho: f64,
    pub d: u64,
    pub n: u64,
    pub tasks: u64,
    pub delta: f64,
    pub rho_bar: f64,
}

/// (32C₀²/α)^{2−β}·C_β.
pub fn pooling_constant(alpha: f64, beta: f64, c0: f64, c_beta: f64) -> f64 {
    (32.0 * c0 * c0 / alpha).powf(2.0 - beta) * c_beta
}

fn check_pool_common(beta: f64, c_beta: f64, c0: f64, c_rho: f64, d: u64, n: u64, tasks: u64, delta: f64) -> Result<()> {
    check_beta(beta)?;
    if !(c_beta > 0.0 && c0 > 0.0 && c_rho > 0.0) {
        return Err(Error::domain("constants C_β, C₀, C_ρ must be positive"));
    }
    if d == 0 || n == 0 || tasks == 0 || d > n * tasks {
        return Err(Error::domain("need 1 ≤ d ≤ nN and n, N ≥ 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta={delta} outside (0,1)")));
    }
    Ok(())
}

/// High-probability pooled-ERM bound at the α-quantile of task quality.
pub fn pooling_rate_bound(p: &PoolingRateParams) -> Result<f64> {
    if !(p.alpha > 0.0 && p.alpha <= 1.0) {
        return Err(Error::domain(format!("alpha={} outside (0,1]", p.alpha)));
    }
    check_pool_common(p.beta, p.c_beta, p.c0, p.c_rho, p.d, p.n, p.tasks, p.delta)?;
    if !(p.rho_bar >= 1.0 && p.rho_bar.is_finite()) {
        return Err(Error::domain(format!("rho_bar={} must be finite and ≥ 1", p.rho_bar)));
    }
    let c = pooling_constant(p.alpha, p.beta, p.c0, p.c_beta);
    let nn = (p.n * p.tasks) as f64;
    let d = p.d as f64;
    let inner = c * (d * (nn / d).ln() + (1.0 / p.delta).ln()) / nn;
    Ok(p.c_rho * inner.powf(1.0 / ((2.0 - p.beta) * p.rho_bar)))
}

/// min over t of the pooled bound with per-prefix denominator
/// (nt)^{2−β}(nN)^{β−1}, equal n per task.
#[allow(clippy::too_many_arguments)]
pub fn pooling_rate_min_over_t(
    beta: f64,
    c_beta: f64,
    c0: f64,
    c_rho: f64,
    d: u64,
    n: u64,
    delta: f64,
    rhos: &[f64],
) -> Result<RateBreakdown> {
    let tasks = rhos.len() as u64;
    check_pool_common(beta, c_beta, c0, c_rho, d, n, tasks.max(1), delta)?;
    let pre = sorted_prefixes(&vec![n; rhos.len()], rhos)?;
    let c = pooling_constant(1.0, beta, c0, c_beta);
    let nn = (n * tasks) as f64;
    let num = c * (d as f64 * (nn / d as f64).ln() + (1.0 / delta).ln());
    Ok(breakdown(
        pre.into_iter()
            .enumerate()
            .map(|(i, (cn, rb))| {
                let den = (cn as f64).powf(2.0 - beta) * nn.powf(beta - 1.0);
                RatePrefix {
                    t: i + 1,
                    cumulative_n: cn,
                    rho_bar_t: rb,
                    rate_t: c_rho * (num / den).powf(1.0 / ((2.0 - beta) * rb)),
                }
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairNoisyPoolingRate {
    pub alpha: f64,
    pub t_alpha: usize,
    pub rho_fair: f64,
    pub rho_noisy: f64,
    pub rho_bar: f64,
    pub value: f64,
}

/// Pooled bound on a fair/noisy scenario at α = t*/N. Fair tasks take the
/// ρ = 1 convention (they are the target); noisy tasks take their minimal
/// exponent to the target, floored at 1.
pub fn fair_noisy_pooling_rate(sc: &MultitaskScenario, c0: f64, delta: f64) -> Result<FairNoisyPoolingRate> {
    sc.require_family(Family::FairNoisy)?;
    let p = &sc.params;
    let (beta, c_beta) = (
        p.beta.ok_or_else(|| Error::param("missing beta"))?,
        p.c_beta.ok_or_else(|| Error::param("missing c_beta"))?,
    );
    let c_rho = p.c_rho.unwrap_or(2.0);
    let rho_noisy = minimal_transfer_exponent(&sc.components.noisy, &sc.target, c_rho, &sc.concept_class)?.max(1.0);
    fair_noisy_rate_parts(
        alpha_f(sc)?,
        materialized_fair_count(sc)?,
        sc.num_tasks(),
        rho_noisy,
        PoolingRateParams {
            alpha: 0.0,
            beta,
            c_beta,
            c0,
            c_rho,
            d: sc.concept_class.vc_dim as u64,
            n: sc.n_per_task,
            tasks: sc.num_tasks() as u64,
            delta,
            rho_bar: 1.0,
        },
    )
}

/// Same bound computed from the level quantities alone (ε, ε₀, t*), so it is
/// defined even where the two-point distributions would leave [0,1]. The
/// noisy exponent is ln ε₀ / ln(ε/c_ρ), the only constraint on a two-point
/// class. d = 1.
pub fn fair_noisy_pooling_rate_at_levels(
    n: u64,
    tasks: u64,
    beta: f64,
    c_beta: f64,
    c0: f64,
    delta: f64,
) -> Result<FairNoisyPoolingRate> {
    let lv = fair_noisy_levels(n, tasks, beta)?;
    let c_rho = 2.0;
    let rho_noisy = (lv.epsilon0.ln() / (lv.epsilon / c_rho).ln()).max(1.0);
    let nt = tasks as usize;
    let fair = ((lv.t_star + 0.5).floor() as usize).min(nt);
    fair_noisy_rate_parts(
        lv.alpha_f,
        fair,
        nt,
        rho_noisy,
        PoolingRateParams { alpha: 0.0, beta, c_beta, c0, c_rho, d: 1, n, tasks, delta, rho_bar: 1.0 },
    )
}

fn fair_noisy_rate_parts(
    alpha: f64,
    fair: usize,
    nt: usize,
    rho_noisy: f64,
    base: PoolingRateParams,
) -> Result<FairNoisyPoolingRate> {
    let mut rhos: Vec<f64> = (0..nt).map(|i| if i < fair { 1.0 } else { rho_noisy }).collect();
    rhos.sort_by(f64::total_cmp);
    let t_alpha = ((alpha * nt as f64).ceil() as usize).clamp(1, nt);
    let rho_bar = rhos[..t_alpha].iter().sum::<f64>() / t_alpha as f64;
    let value = pooling_rate_bound(&PoolingRateParams {
        alpha: alpha.max(f64::MIN_POSITIVE),
        rho_bar,
        ..base
    })?;
    Ok(FairNoisyPoolingRate {
        alpha,
        t_alpha,
        rho_fair: 1.0,
        rho_noisy,
        rho_bar,
        value,
    })
}

/// ε·2·exp(−n^{nβ/(2(2−β))}/(8C_β)) with ε = (n√N)^{−1/(2−β)}.
pub fn fair_oracle_rate(n: u64, tasks: u64, beta: f64, c_beta: f64) -> Result<f64> {
    if n == 0 || tasks == 0 {
        return Err(Error::domain("n and N must be ≥ 1"));
    }
    if !(0.0..1.0).contains(&beta) || !(c_beta >= 2.0) {
        return Err(Error::domain("need beta ∈ [0,1) and c_beta ≥ 2"));
    }
    let nf = n as f64;
    let eps = (nf * (tasks as f64).sqrt()).powf(-1.0 / (2.0 - beta));
    let growth = (nf * beta / (2.0 * (2.0 - beta)) * nf.ln()).exp();
    Ok(eps * 2.0 * (-growth / (8.0 * c_beta)).exp())
}

/// 32·C₀²·(C_β·ε)^{1/(2−β)}.
pub fn confidence_set_excess_bound(c0: f64, c_beta: f64, beta: f64, eps_complexity: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(eps_complexity >= 0.0) {
        return Err(Error::domain("eps_complexity must be ≥ 0"));
    }
    Ok(32.0 * c0 * c0 * (c_beta * eps_complexity).powf(1.0 / (2.0 - beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{make_agnostic_scenario_eps, make_fair_noisy_custom, make_fair_noisy_scenario};

    #[test]
    fn erm_agnostic_examples() {
        assert!((erm_error_exact_agnostic(1, 0.5 - 1e-3).unwrap() - 1e-3).abs() < 1e-12);
        assert!(erm_error_exact_agnostic(1, 0.5 - 1e-15).unwrap() < 1e-12);
        assert!((erm_error_exact_agnostic(2, 0.0).unwrap() - 0.75).abs() < 1e-15);
        let eps = (20f64.ln() / 100.0).sqrt();
        assert!(erm_error_exact_agnostic(100, eps).unwrap() <= 0.05);
        assert!(erm_error_exact_agnostic(10, 0.5).is_err());
    }

    #[test]
    fn pool_agnostic_examples() {
        for n in [1, 5, 8] {
            assert_eq!(
                pooling_error_exact_agnostic(n, 1, 0.2).unwrap(),
                erm_error_exact_agnostic(n, 0.2).unwrap()
            );
        }
        let v = pooling_error_exact_agnostic(2, 2, 0.5 - 1e-16).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        assert!(pooling_error_exact_agnostic(50, 200, 0.25).unwrap() >= 0.1);
    }

    #[test]
    fn suffstat_examples() {
        let d = TwoPointDistribution::new(1.0, 1.0, 1).unwrap();
        let s = suffstat_dist(&d, 1).unwrap();
        assert_eq!(s.get(1, 1), 1.0);
        let d = TwoPointDistribution::new(0.5, 0.5, 1).unwrap();
        let s = suffstat_dist(&d, 2).unwrap();
        assert!((s.get(1, 1) - 0.25).abs() < 1e-15);
        assert!((s.total() - 1.0).abs() < 1e-12);
        assert!(suffstat_dist(&d, 0).is_err());
    }

    #[test]
    fn mixture_examples() {
        let sc = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 1.0).unwrap();
        let m = mixture_suffstat_dist(&sc, 1).unwrap();
        assert_eq!(m, suffstat_dist(&sc.components.informative, 3).unwrap());
        let sc0 = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 0.0).unwrap();
        assert_eq!(mixture_suffstat_dist(&sc0, 1).unwrap(), suffstat_dist(&sc0.components.noisy, 3).unwrap());
        let sc = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
        let m = mixture_suffstat_dist(&sc, 0).unwrap();
        let p = suffstat_dist(&sc.components.informative.flipped(), 3).unwrap();
        let q = suffstat_dist(&sc.components.noisy.flipped(), 3).unwrap();
        for (k, j, v) in m.states() {
            assert!((v - (0.3 * p.get(k, j) + 0.7 * q.get(k, j))).abs() < 1e-15);
        }
        let ag = make_agnostic_scenario_eps(3, 4, 0.1).unwrap();
        assert!(matches!(mixture_suffstat_dist(&ag, 1), Err(Error::Family { .. })));
    }

    #[test]
    fn kl_zero_when_levels_vanish() {
        let z = TwoPointDistribution::new(0.0, 0.5, 1).unwrap();
        assert_eq!(mixture_pair_kl(&z, &z, 0.3, 3).unwrap(), 0.0);
    }

    #[test]
    fn kl_is_label_symmetric() {
        let sc = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
        let a = mixture_task_kl(&sc).unwrap();
        let b = mixture_task_kl(&sc.clone().with_y_star(0).unwrap()).unwrap();
        assert!((a.per_task - b.per_task).abs() < 1e-15);
        assert!((a.total - 10.0 * a.per_task).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        let lb = lower_bound_from_kl(0.0, 0.2).unwrap();
        assert_eq!((lb.pinsker, lb.bh, lb.risk_bound), (0.5, 0.5, 0.1));
        let lb = lower_bound_from_kl(2.0, 0.2).unwrap();
        assert_eq!(lb.pinsker, 0.0);
        assert!((lb.risk_bound - 0.2 * lb.bh).abs() < 1e-18 && (lb.bh - 0.035063).abs() < 1e-6);
        let sc = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
        let lb = adaptive_error_lower_bound(&sc).unwrap();
        assert!(lb.risk_bound <= sc.params.epsilon.unwrap() / 2.0);
    }

    #[test]
    fn bruteforce_examples() {
        let g = Guards::default();
        let sc = make_fair_noisy_custom(3, 10, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
        let kl = mixture_task_kl(&sc).unwrap().per_task;
        assert!((joint_bruteforce_test(&sc, 1, &g).unwrap().kl - kl).abs() < 1e-12);
        assert!((joint_bruteforce_test(&sc, 2, &g).unwrap().kl - 2.0 * kl).abs() < 1e-10);
        assert!(joint_bruteforce_test(&sc, 4, &g).unwrap_err().is_guard());
        let big = make_fair_noisy_custom(5, 10, 0.5, 2.0, 0.2, 0.05, 0.3).unwrap();
        assert!(joint_bruteforce_test(&big, 1, &g).unwrap_err().is_guard());
        let same = make_agnostic_scenario_eps(3, 2, 0.0).unwrap();
        let j = joint_bruteforce_test(&same, 2, &g).unwrap();
        assert_eq!((j.tv, j.bayes_error), (0.0, 0.5));
    }

    #[test]
    fn oracle_fair_examples() {
        let g = Guards::default();
        // t*=1: single fair task, compared with the generic one-task route
        let sc = make_fair_noisy_scenario(4, 16, 0.5, 2.0).unwrap();
        let one = oracle_error_exact_fair(4, 1, 0.5, 2.0, 16, &g).unwrap();
        let direct = pooled_groups_error(&[(sc.components.informative, 4)], &g).unwrap();
        assert_eq!(one, direct);
        assert!(oracle_error_exact_fair(1000, 1000, 0.5, 2.0, 16, &g).unwrap_err().is_guard());
        let sure = TwoPointDistribution::new(1.0, 1.0, 1).unwrap();
        assert_eq!(single_group_error(&sure, 7), 0.0);
    }

    #[test]
    fn pooled_groups_matches_agnostic_convolution() {
        let g = Guards::default();
        let sc = make_agnostic_scenario_eps(7, 5, 0.15).unwrap();
        let a = pooled_groups_error(&[(sc.components.informative, 7), (sc.components.noisy, 28)], &g).unwrap();
        let b = pooling_error_exact_agnostic(7, 5, 0.15).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn minimax_examples() {
        let r = minimax_rate(0.0, &[16], &[1.0]).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
        let r = minimax_rate(0.0, &[16, 16], &[2.0, 1.0]).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15 && r.argmin_t == 1);
        assert!((r.per_prefix[1].rate_t - 32f64.powf(-1.0 / 3.0)).abs() < 1e-15);
        assert!((r.per_prefix[1].rho_bar_t - 1.5).abs() < 1e-15);
        let r = minimax_rate(1.0, &[40, 60], &[1.0, 1.0]).unwrap();
        assert!((r.value - 0.01).abs() < 1e-15);
        assert!(minimax_rate(0.5, &[], &[]).is_err());
        assert!(minimax_rate(0.5, &[1], &[0.5]).is_err());
    }

    #[test]
    fn pooling_bound_examples() {
        assert_eq!(pooling_constant(1.0, 1.0, 1.0, 2.0), 64.0);
        let v = pooling_rate_bound(&PoolingRateParams {
            alpha: 1.0,
            beta: 1.0,
            c_beta: 2.0,
            c0: 1.0,
            c_rho: 2.0,
            d: 1,
            n: 100,
            tasks: 10,
            delta: 0.1,
            rho_bar: 1.0,
        })
        .unwrap();
        assert!((v - 1.178924).abs() < 1e-6);
    }

    #[test]
    fn fair_oracle_rate_examples() {
        let v = fair_oracle_rate(4, 16, 0.5, 2.0).unwrap();
        let eps = 2f64.powf(-8.0 / 3.0);
        assert!((v - eps * 2.0 * (-(4f64.powf(2.0 / 3.0)) / 16.0).exp()).abs() < 1e-15);
        assert!((v - 0.269083).abs() < 1e-6);
        let v = fair_oracle_rate(1, 9, 0.0, 2.0).unwrap();
        assert!((v - (1.0 / 3.0f64).sqrt() * 2.0 * (-1.0f64 / 16.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn confidence_set_examples() {
        assert_eq!(confidence_set_excess_bound(1.0, 2.0, 0.5, 0.0).unwrap(), 0.0);
        assert!((confidence_set_excess_bound(1.0, 2.0, 0.0, 0.02).unwrap() - 6.4).abs() < 1e-12);
        assert!((confidence_set_excess_bound(1.0, 2.0, 1.0, 0.01).unwrap() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn fair_noisy_pooling_rate_is_finite() {
        let sc = make_fair_noisy_scenario(4, 256, 0.5, 2.0).unwrap();
        let r = fair_noisy_pooling_rate(&sc, 1.0, 0.1).unwrap();
        assert!(r.value.is_finite() && r.rho_noisy > 1.0 && r.rho_bar >= 1.0);
        let l = fair_noisy_pooling_rate_at_levels(4, 256, 0.5, 2.0, 1.0, 0.1).unwrap();
        assert!((l.value - r.value).abs() <= 1e-12 * r.value && l.t_alpha == r.t_alpha);
        assert!((l.rho_noisy - r.rho_noisy).abs() < 1e-12);
        // levels exist where the distributions do not
        assert!(make_fair_noisy_scenario(2, 256, 0.3, 2.0).is_err());
        assert!(fair_noisy_pooling_rate_at_levels(2, 256, 0.3, 2.0, 1.0, 0.1).unwrap().value.is_finite());
    }
}
