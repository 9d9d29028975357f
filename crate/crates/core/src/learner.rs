//! Per-task ERM, pooled ERM, oracle-subset ERM and the Intersection of
//! Bernstein Balls learner, all over 2×2 count summaries.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ConceptClass, Hypothesis};

/// Counts indexed `[x][y]`; x ∈ {x₀, x₁}, y ∈ {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub counts: [[u64; 2]; 2],
}

impl DatasetCounts {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        DatasetCounts { counts }
    }

    /// Builder from the x₁ cells only, the usual shape in the constructions.
    pub fn at_x1(zeros: u64, ones: u64) -> Self {
        DatasetCounts::new([[0, 0], [zeros, ones]])
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of samples at x₁.
    pub fn n_x1(&self) -> u64 {
        self.counts[1][0] + self.counts[1][1]
    }

    pub fn add(&self, o: &DatasetCounts) -> DatasetCounts {
        let mut c = self.counts;
        for (x, row) in c.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                *v += o.counts[x][y];
            }
        }
        DatasetCounts::new(c)
    }

    fn mistakes(&self, h: Hypothesis) -> u64 {
        (0..2).map(|x| self.counts[x][1 - h.predict(x) as usize]).sum()
    }

    fn disagreement_mass(&self, h: Hypothesis, g: Hypothesis) -> u64 {
        (0..2)
            .filter(|&x| h.predict(x) != g.predict(x))
            .map(|x| self.counts[x][0] + self.counts[x][1])
            .sum()
    }
}

fn nonempty(ds: &DatasetCounts) -> Result<f64> {
    match ds.n() {
        0 => Err(Error::domain("dataset has n = 0")),
        n => Ok(n as f64),
    }
}

pub fn empirical_error(ds: &DatasetCounts, h: Hypothesis) -> Result<f64> {
    Ok(ds.mistakes(h) as f64 / nonempty(ds)?)
}

pub fn empirical_excess(ds: &DatasetCounts, h: Hypothesis, g: Hypothesis) -> Result<f64> {
    let n = nonempty(ds)?;
    Ok((ds.mistakes(h) as f64 - ds.mistakes(g) as f64) / n)
}

pub fn empirical_distance(ds: &DatasetCounts, h: Hypothesis, g: Hypothesis) -> Result<f64> {
    Ok(ds.disagreement_mass(h, g) as f64 / nonempty(ds)?)
}

/// Lowest-index minimizer of the mistake count. An empty dataset ties
/// every hypothesis and therefore yields index 0.
pub fn erm(ds: &DatasetCounts, class: &ConceptClass) -> usize {
    let mut best = (u64::MAX, 0);
    for (i, h) in class.hypotheses.iter().enumerate() {
        let m = ds.mistakes(*h);
        if m < best.0 {
            best = (m, i);
        }
    }
    best.1
}

pub fn pool_counts<'a>(dss: impl IntoIterator<Item = &'a DatasetCounts>) -> DatasetCounts {
    dss.into_iter()
        .fold(DatasetCounts::default(), |acc, d| acc.add(d))
}

pub fn pool_erm(dss: &[DatasetCounts], class: &ConceptClass) -> Result<usize> {
    if dss.is_empty() {
        return Err(Error::domain("pool_erm needs at least one dataset"));
    }
    Ok(erm(&pool_counts(dss), class))
}

pub fn oracle_subset_erm(dss: &[DatasetCounts], subset: &[usize], class: &ConceptClass) -> Result<usize> {
    if subset.is_empty() {
        return Err(Error::domain("oracle subset is empty"));
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= dss.len()) {
        return Err(Error::Index {
            index: i,
            len: dss.len(),
        });
    }
    Ok(erm(&pool_counts(subset.iter().map(|&i| &dss[i])), class))
}

/// ε(n, δ) = (d/n)·ln(n/d) + (1/n)·ln(1/δ).
pub fn epsilon_complexity(d: u64, n: u64, delta: f64) -> Result<f64> {
    if d == 0 || d > n {
        return Err(Error::domain(format!("need 1 ≤ d ≤ n, got d={d}, n={n}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta={delta} outside (0,1]")));
    }
    let (d, n) = (d as f64, n as f64);
    Ok(d / n * (n / d).ln() + (1.0 / delta).ln() / n)
}

/// δ_t = δ/(6t²) for 1-based t.
pub fn delta_t(delta: f64, t: usize) -> f64 {
    delta / (6.0 * (t * t) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallReport {
    pub per_task_balls: Vec<BTreeSet<usize>>,
    pub intersection: BTreeSet<usize>,
    pub delta_t: Vec<f64>,
    pub eps_t: Vec<f64>,
    pub erm_t: Vec<usize>,
    /// Datasets had unequal sizes; ε(n_t, δ_t) was used per task.
    pub heterogeneous_n: bool,
}

/// Hypotheses h with Ê(h, ĥ) ≤ C₀√(P̂(h≠ĥ)·ε) + C₀·ε on one dataset.
pub fn bernstein_ball(ds: &DatasetCounts, class: &ConceptClass, c0: f64, eps: f64) -> Result<(usize, BTreeSet<usize>)> {
    let hat = erm(ds, class);
    let g = class.hypotheses[hat];
    let mut ball = BTreeSet::new();
    for (i, h) in class.hypotheses.iter().enumerate() {
        let ex = empirical_excess(ds, *h, g)?;
        let dist = empirical_distance(ds, *h, g)?;
        if ex <= c0 * (dist * eps).sqrt() + c0 * eps {
            ball.insert(i);
        }
    }
    Ok((hat, ball))
}

/// Algorithm "Intersection of Bernstein Balls". Returns the lowest-index
/// survivor, or `EmptyIntersection` carrying the full report.
pub fn intersection_of_bernstein_balls(
    dss: &[DatasetCounts],
    class: &ConceptClass,
    c0: f64,
    delta: f64,
) -> Result<(usize, BallReport)> {
    if dss.is_empty() {
        return Err(Error::domain("need at least one dataset"));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::domain(format!("c0={c0} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta={delta} outside (0,1)")));
    }
    let d = class.vc_dim as u64;
    let n0 = dss[0].n();
    let mut rep = BallReport {
        per_task_balls: Vec::with_capacity(dss.len()),
        intersection: (0..class.len()).collect(),
        delta_t: Vec::with_capacity(dss.len()),
        eps_t: Vec::with_capacity(dss.len()),
        erm_t: Vec::with_capacity(dss.len()),
        heterogeneous_n: dss.iter().any(|ds| ds.n() != n0),
    };
    for (i, ds) in dss.iter().enumerate() {
        let dt = delta_t(delta, i + 1);
        let eps = epsilon_complexity(d, ds.n(), dt)?;
        let (hat, ball) = bernstein_ball(ds, class, c0, eps)?;
        rep.intersection = rep.intersection.intersection(&ball).copied().collect();
        rep.delta_t.push(dt);
        rep.eps_t.push(eps);
        rep.erm_t.push(hat);
        rep.per_task_balls.push(ball);
    }
    match rep.intersection.iter().next() {
        Some(&h) => Ok((h, rep)),
        None => Err(Error::EmptyIntersection(Box::new(rep))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IbbOutcome {
    pub hypothesis: usize,
    pub fell_back: bool,
}

/// IBB, falling back to pooled ERM when the intersection is empty.
pub fn ibb_or_pool(dss: &[DatasetCounts], class: &ConceptClass, c0: f64, delta: f64) -> Result<IbbOutcome> {
    match intersection_of_bernstein_balls(dss, class, c0, delta) {
        Ok((h, _)) => Ok(IbbOutcome {
            hypothesis: h,
            fell_back: false,
        }),
        Err(Error::EmptyIntersection(_)) => Ok(IbbOutcome {
            hypothesis: pool_erm(dss, class)?,
            fell_back: true,
        }),
        Err(e) => Err(e),
    }
}
