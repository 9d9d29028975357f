//! Seeded Monte Carlo: per-trial ChaCha substreams keyed by (seed, trial),
//! ordered collection, and a fixed pairwise reduction tree, so estimates are
//! bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{erm, intersection_of_bernstein_balls, pool_counts, DatasetCounts};
use crate::prob::{log_add_exp, logsumexp};
use crate::scenario::{
    excess_risk, max_excess_risk, random_construction_with, AssignmentModel, Family, MultitaskScenario,
    TwoPointDistribution,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub quantity: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl RiskEstimate {
    /// Mean and stderr (Bessel-corrected sd / √T) of per-trial values.
    pub fn from_values(quantity: impl Into<String>, values: &[f64], seed: u64) -> Self {
        let t = values.len();
        let mean = if t == 0 { f64::NAN } else { pairwise_sum(values) / t as f64 };
        let stderr = if t < 2 {
            0.0
        } else {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (t - 1) as f64 / t as f64).sqrt()
        };
        RiskEstimate {
            quantity: quantity.into(),
            mean,
            stderr,
            trials: t as u64,
            seed,
        }
    }
}

/// Summation over a fixed binary tree determined only by the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Independent stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("trials must be ≥ 1"));
    }
    Ok(())
}

fn run<T: Send, F: Fn(&mut ChaCha8Rng) -> T + Sync>(trials: u64, seed: u64, f: F) -> Vec<T> {
    (0..trials)
        .into_par_iter()
        .map(|t| f(&mut trial_rng(seed, t)))
        .collect()
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("validated probability").sample(rng)
}

/// One i.i.d. sample of size n, summarized by counts.
pub fn sample_task_dataset<R: Rng + ?Sized>(dist: &TwoPointDistribution, n: u64, rng: &mut R) -> DatasetCounts {
    let k = binomial(n, dist.p_x1, rng);
    let j = binomial(k, dist.eta1(), rng);
    let ones0 = binomial(n - k, dist.p1_x0, rng);
    DatasetCounts::new([[n - k - ones0, ones0], [k - j, j]])
}

/// Per-task informative flags for one trial under the scenario's model.
fn draw_assignment<R: Rng + ?Sized>(sc: &MultitaskScenario, rng: &mut R) -> Result<Vec<bool>> {
    let nt = sc.num_tasks();
    Ok(match sc.model {
        AssignmentModel::UniformPlacement => {
            let pos = rng.random_range(0..nt);
            (0..nt).map(|t| t == pos).collect()
        }
        AssignmentModel::Bernoulli => {
            let a = sc
                .params
                .alpha_f
                .ok_or_else(|| Error::param("Bernoulli model needs alpha_f"))?;
            (0..nt).map(|_| rng.random::<f64>() < a).collect()
        }
        AssignmentModel::Fixed => sc
            .assignment
            .as_ref()
            .ok_or_else(|| Error::param("fixed model needs an assignment"))?
            .iter()
            .map(|t| t.is_informative())
            .collect(),
    })
}

/// A full multisample; `comps` are (informative, noisy) with the desired y*.
fn draw_multisample<R: Rng + ?Sized>(
    sc: &MultitaskScenario,
    comps: (TwoPointDistribution, TwoPointDistribution),
    rng: &mut R,
) -> Result<(Vec<DatasetCounts>, Vec<bool>)> {
    let informative = draw_assignment(sc, rng)?;
    let n = sc.n_per_task;
    let data = informative
        .iter()
        .map(|&f| sample_task_dataset(if f { &comps.0 } else { &comps.1 }, n, rng))
        .collect();
    Ok((data, informative))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    /// ERM on one task (0-based).
    PerTaskErm(usize),
    Pool,
    /// Pool over an explicit subset, or over the realized informative tasks.
    Oracle(Option<Vec<usize>>),
    Ibb { c0: f64, delta: f64 },
    /// Always outputs the given class index.
    Constant(usize),
}

impl Learner {
    pub fn tag(&self) -> String {
        match self {
            Learner::PerTaskErm(t) => format!("erm{t}"),
            Learner::Pool => "pool".into(),
            Learner::Oracle(_) => "oracle".into(),
            Learner::Ibb { c0, .. } => format!("ibb_c0={c0}"),
            Learner::Constant(i) => format!("const{i}"),
        }
    }

    fn check(&self, sc: &MultitaskScenario) -> Result<()> {
        let nt = sc.num_tasks();
        match self {
            Learner::PerTaskErm(t) if *t >= nt => Err(Error::Index { index: *t, len: nt }),
            Learner::Oracle(Some(s)) => {
                if s.is_empty() {
                    return Err(Error::domain("oracle subset is empty"));
                }
                match s.iter().find(|&&i| i >= nt) {
                    Some(&i) => Err(Error::Index { index: i, len: nt }),
                    None => Ok(()),
                }
            }
            Learner::Constant(i) => sc.concept_class.get(*i).map(|_| ()),
            Learner::Ibb { c0, delta } if !(*c0 > 0.0 && *delta > 0.0 && *delta < 1.0) => {
                Err(Error::domain("ibb needs c0 > 0 and delta ∈ (0,1)"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialOutcome {
    risk: f64,
    wrong: bool,
    empty_intersection: bool,
    covered: bool,
    empty_oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerSimulation {
    pub learner: String,
    pub risk: RiskEstimate,
    /// Frequency of a non-optimal output.
    pub error_rate: RiskEstimate,
    pub empty_intersections: u64,
    /// Trials where the realized informative set was empty.
    pub empty_oracle: u64,
    /// Frequency of h* ∈ ∩ balls (IBB only).
    pub coverage: Option<RiskEstimate>,
}

fn optimal_index(sc: &MultitaskScenario) -> usize {
    (0..sc.concept_class.len())
        .find(|&i| excess_risk(&sc.target, i, &sc.concept_class).map(|v| v == 0.0).unwrap_or(false))
        .unwrap_or(0)
}

fn evaluate(
    sc: &MultitaskScenario,
    learner: &Learner,
    data: &[DatasetCounts],
    informative: &[bool],
    h_star: usize,
    worst: f64,
) -> Result<TrialOutcome> {
    let class = &sc.concept_class;
    let mut out = TrialOutcome::default();
    let h = match learner {
        Learner::PerTaskErm(t) => erm(&data[*t], class),
        Learner::Pool => erm(&pool_counts(data), class),
        Learner::Oracle(Some(s)) => erm(&pool_counts(s.iter().map(|&i| &data[i])), class),
        Learner::Oracle(None) => {
            let sel: Vec<&DatasetCounts> = data.iter().zip(informative).filter(|p| *p.1).map(|p| p.0).collect();
            out.empty_oracle = sel.is_empty();
            // empty pool ties every hypothesis → index 0
            erm(&pool_counts(sel), class)
        }
        Learner::Constant(i) => *i,
        Learner::Ibb { c0, delta } => match intersection_of_bernstein_balls(data, class, *c0, *delta) {
            Ok((h, rep)) => {
                out.covered = rep.intersection.contains(&h_star);
                h
            }
            Err(Error::EmptyIntersection(_)) => {
                out.empty_intersection = true;
                out.risk = worst;
                out.wrong = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        },
    };
    out.risk = excess_risk(&sc.target, h, class)?;
    out.wrong = out.risk > 0.0;
    Ok(out)
}

/// Evaluates several learners on the same simulated multisamples.
pub fn simulate_learners(sc: &MultitaskScenario, learners: &[Learner], trials: u64, seed: u64) -> Result<Vec<LearnerSimulation>> {
    check_trials(trials)?;
    sc.validate()?;
    for l in learners {
        l.check(sc)?;
    }
    let h_star = optimal_index(sc);
    let worst = max_excess_risk(&sc.target, &sc.concept_class);
    let comps = (sc.components.informative, sc.components.noisy);
    let rows: Vec<Result<Vec<TrialOutcome>>> = run(trials, seed, |rng| {
        let (data, inf) = draw_multisample(sc, comps, rng)?;
        learners
            .iter()
            .map(|l| evaluate(sc, l, &data, &inf, h_star, worst))
            .collect()
    });
    let rows: Vec<Vec<TrialOutcome>> = rows.into_iter().collect::<Result<_>>()?;
    let sid = sc.id();
    Ok(learners
        .iter()
        .enumerate()
        .map(|(li, l)| {
            let col: Vec<TrialOutcome> = rows.iter().map(|r| r[li]).collect();
            let f = |g: fn(&TrialOutcome) -> f64| col.iter().map(g).collect::<Vec<f64>>();
            let q = |what: &str| format!("{what}:{}:{sid}", l.tag());
            LearnerSimulation {
                learner: l.tag(),
                risk: RiskEstimate::from_values(q("excess_risk"), &f(|o| o.risk), seed),
                error_rate: RiskEstimate::from_values(q("error_rate"), &f(|o| o.wrong as u8 as f64), seed),
                empty_intersections: col.iter().filter(|o| o.empty_intersection).count() as u64,
                empty_oracle: col.iter().filter(|o| o.empty_oracle).count() as u64,
                coverage: matches!(l, Learner::Ibb { .. })
                    .then(|| RiskEstimate::from_values(q("coverage"), &f(|o| o.covered as u8 as f64), seed)),
            }
        })
        .collect())
}

pub fn simulate_learner_risk(sc: &MultitaskScenario, learner: &Learner, trials: u64, seed: u64) -> Result<LearnerSimulation> {
    Ok(simulate_learners(sc, std::slice::from_ref(learner), trials, seed)?.remove(0))
}

/// Sequence log-likelihood of counts, binomial coefficients dropped.
fn loglik(dist: &TwoPointDistribution, ds: &DatasetCounts) -> f64 {
    let c = dist.cells();
    let mut s = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let k = ds.counts[x][y];
            if k > 0 {
                s += k as f64 * c[x][y].ln();
            }
        }
    }
    s
}

fn comps_for(sc: &MultitaskScenario, sigma: u8) -> (TwoPointDistribution, TwoPointDistribution) {
    let c = sc.components;
    if sigma == c.informative.y_star {
        (c.informative, c.noisy)
    } else {
        (c.informative.flipped(), c.noisy.flipped())
    }
}

/// Log-likelihood of the whole multisample under label σ, marginalizing
/// the unknown task identities.
fn multisample_loglik(sc: &MultitaskScenario, sigma: u8, data: &[DatasetCounts]) -> Result<f64> {
    let (p, q) = comps_for(sc, sigma);
    Ok(match sc.model {
        AssignmentModel::UniformPlacement => {
            let lq: Vec<f64> = data.iter().map(|d| loglik(&q, d)).collect();
            // Σ_{i≠t} lq[i] via prefix/suffix sums, never subtracting −∞
            let nt = data.len();
            let mut suffix = vec![0.0; nt + 1];
            for i in (0..nt).rev() {
                suffix[i] = suffix[i + 1] + lq[i];
            }
            let mut prefix = 0.0;
            let mut terms = Vec::with_capacity(nt);
            for (t, d) in data.iter().enumerate() {
                terms.push(loglik(&p, d) + prefix + suffix[t + 1]);
                prefix += lq[t];
            }
            logsumexp(&terms) - (nt as f64).ln()
        }
        AssignmentModel::Bernoulli => {
            let a = sc.params.alpha_f.ok_or_else(|| Error::param("missing alpha_f"))?;
            let (la, lb) = (a.ln(), (1.0 - a).ln());
            data.iter()
                .map(|d| log_add_exp(la + loglik(&p, d), lb + loglik(&q, d)))
                .sum()
        }
        AssignmentModel::Fixed => {
            let tags = sc.assignment.as_ref().ok_or_else(|| Error::param("missing assignment"))?;
            data.iter()
                .zip(tags)
                .map(|(d, t)| loglik(if t.is_informative() { &p } else { &q }, d))
                .sum()
        }
    })
}

fn testing_family(sc: &MultitaskScenario) -> Result<()> {
    match sc.family {
        Family::Agnostic | Family::FairNoisy => Ok(()),
        f => Err(Error::Family {
            expected: "agnostic or fair_noisy".into(),
            found: f.to_string(),
        }),
    }
}

struct TestTrial {
    wrong: bool,
    informative: usize,
}

fn bayes_trials(sc: &MultitaskScenario, trials: u64, seed: u64) -> Result<Vec<TestTrial>> {
    check_trials(trials)?;
    sc.validate()?;
    testing_family(sc)?;
    run(trials, seed, |rng| {
        let sigma: u8 = rng.random_range(0..2);
        let (data, inf) = draw_multisample(sc, comps_for(sc, sigma), rng)?;
        let l0 = multisample_loglik(sc, 0, &data)?;
        let l1 = multisample_loglik(sc, 1, &data)?;
        let guess = if l1 > l0 { 1 } else { 0 };
        Ok(TestTrial {
            wrong: guess != sigma,
            informative: inf.iter().filter(|f| **f).count(),
        })
    })
    .into_iter()
    .collect()
}

/// Error frequency of the likelihood-ratio test for σ under a uniform prior.
pub fn simulate_bayes_test_error(sc: &MultitaskScenario, trials: u64, seed: u64) -> Result<RiskEstimate> {
    let v: Vec<f64> = bayes_trials(sc, trials, seed)?
        .iter()
        .map(|t| t.wrong as u8 as f64)
        .collect();
    Ok(RiskEstimate::from_values(format!("bayes_test_error:{}", sc.id()), &v, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTestError {
    pub informative_tasks: usize,
    pub estimate: RiskEstimate,
}

/// Same trials as `simulate_bayes_test_error`, bucketed by the realized
/// number of informative tasks.
pub fn simulate_bayes_test_error_conditional(sc: &MultitaskScenario, trials: u64, seed: u64) -> Result<Vec<ConditionalTestError>> {
    let rows = bayes_trials(sc, trials, seed)?;
    let mut buckets: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for r in rows {
        buckets.entry(r.informative).or_default().push(r.wrong as u8 as f64);
    }
    Ok(buckets
        .into_iter()
        .map(|(k, v)| ConditionalTestError {
            informative_tasks: k,
            estimate: RiskEstimate::from_values(format!("bayes_test_error|informative={k}"), &v, seed),
        })
        .collect())
}

/// Mean log-likelihood ratio (truth over flipped), unbiased for total KL.
pub fn estimate_mixture_kl_mc(sc: &MultitaskScenario, trials: u64, seed: u64) -> Result<RiskEstimate> {
    check_trials(trials)?;
    sc.validate()?;
    sc.require_family(Family::FairNoisy)?;
    let s = sc.y_star();
    let v: Vec<f64> = run(trials, seed, |rng| {
        let (data, _) = draw_multisample(sc, comps_for(sc, s), rng)?;
        Ok(multisample_loglik(sc, s, &data)? - multisample_loglik(sc, 1 - s, &data)?)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(RiskEstimate::from_values(format!("mixture_kl:{}", sc.id()), &v, seed))
}

/// Frequency with which the random construction admits the exponents.
pub fn estimate_construction_feasibility(n_plus_1: usize, trials: u64, seed: u64) -> Result<RiskEstimate> {
    check_trials(trials)?;
    if n_plus_1 < 10 {
        return Err(Error::param(format!("need N+1 ≥ 10, got {n_plus_1}")));
    }
    let rhos = vec![1.0; n_plus_1];
    let v: Vec<f64> = run(trials, seed, |rng| {
        random_construction_with(&rhos, rng).map(|o| o.feasible as u8 as f64)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(RiskEstimate::from_values(format!("construction_feasible:N+1={n_plus_1}"), &v, seed))
}
