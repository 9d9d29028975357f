//! Finite discrete probability: TV, KL, binary Bayes error, Fano-type bounds
//! and a log-space binomial backbone. Natural log throughout.

use libm::{erfc, lgamma as ln_gamma};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A probability vector over an indexed finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("empty support"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::domain(format!("negative or non-finite mass {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("masses sum to {s}, not 1")));
        }
        Ok(FiniteDist { probs })
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0 && s.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::domain("weights must be non-negative with positive sum"));
        }
        Ok(FiniteDist {
            probs: weights.iter().map(|w| w / s).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn same_support(p: &FiniteDist, q: &FiniteDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

pub fn tv_distance(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    same_support(p, q)?;
    let s: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * s).clamp(0.0, 1.0))
}

/// KL(p‖q) with 0·ln(0/q)=0; `f64::INFINITY` when p charges a q-null atom.
pub fn kl_divergence(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    same_support(p, q)?;
    Ok(kl_raw(&p.probs, &q.probs))
}

/// KL over raw slices; callers guarantee equal lengths.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    s.max(0.0)
}

/// Error of the optimal test between p and q under a uniform prior.
pub fn bayes_error_binary(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    Ok(0.5 * (1.0 - tv_distance(p, q)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FanoVariant {
    Pinsker,
    BretagnolleHuber,
}

/// Lower bound on the binary Bayes error given the KL between the hypotheses.
pub fn fano_bound(kl: f64, variant: FanoVariant) -> Result<f64> {
    if kl.is_nan() || kl < 0.0 {
        return Err(Error::domain(format!("kl must be non-negative, got {kl}")));
    }
    if kl.is_infinite() {
        return Ok(0.0);
    }
    Ok(match variant {
        FanoVariant::Pinsker => (0.5 * (1.0 - (kl / 2.0).sqrt())).max(0.0),
        // 1 − e^{−kl} via expm1 keeps precision for small kl
        FanoVariant::BretagnolleHuber => 0.5 * (1.0 - (-(-kl).exp_m1()).sqrt()),
    })
}

/// Both sides of the log-sum inequality Σaᵢln(aᵢ/bᵢ) ≥ (Σa)ln(Σa/Σb).
pub fn log_sum_lhs_rhs(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::domain("empty vectors"));
    }
    if a.iter().chain(b).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::domain("log-sum inequality needs strictly positive entries"));
    }
    let lhs = a.iter().zip(b).map(|(x, y)| x * (x / y).ln()).sum();
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    Ok((lhs, sa * (sa / sb).ln()))
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// ln C(n, k); caller guarantees k ≤ n.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0,1]")));
    }
    Ok(())
}

/// k·ln p with the 0·ln 0 = 0 convention.
fn xlogy(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

pub(crate) fn log_pmf_raw(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let q_term = if n - k == 0 {
        0.0
    } else {
        (n - k) as f64 * (-p).ln_1p()
    };
    ln_choose(n, k) + xlogy(k, p) + q_term
}

pub fn binom_log_pmf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_p(p)?;
    if k > n {
        return Err(Error::domain(format!("k={k} exceeds n={n}")));
    }
    Ok(log_pmf_raw(n, p, k))
}

/// Relative size below which a monotone run of tail terms is abandoned.
const TRUNC: f64 = 1e-18;

/// Sums pmf terms walking away from `start` in direction `step` while they
/// shrink; returns the total. Terms are log-shifted by the first one.
fn tail_walk(n: u64, p: f64, start: u64, up: bool) -> f64 {
    let l0 = log_pmf_raw(n, p, start);
    if l0 == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut s = 0.0;
    let mut j = start;
    loop {
        let t = (log_pmf_raw(n, p, j) - l0).exp();
        s += t;
        if t < TRUNC * s {
            break;
        }
        if up {
            if j == n {
                break;
            }
            j += 1;
        } else {
            if j == 0 {
                break;
            }
            j -= 1;
        }
    }
    l0.exp() * s
}

/// P(X ≥ k) without range checks: k = 0 gives 1, k > n gives 0.
pub(crate) fn sf_raw(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let mode = ((((n + 1) as f64) * p).floor() as u64).min(n);
    if k > mode {
        tail_walk(n, p, k, true).min(1.0)
    } else {
        // P(X ≥ k) is large here, so the complement loses nothing material
        (1.0 - tail_walk(n, p, k - 1, false)).clamp(0.0, 1.0)
    }
}

/// P(X ≥ k) for X ~ Bin(n, p).
pub fn binom_sf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_p(p)?;
    if k > n {
        return Err(Error::domain(format!("k={k} exceeds n={n}")));
    }
    Ok(sf_raw(n, p, k))
}

/// P(X ≤ k) for X ~ Bin(n, p).
pub fn binom_cdf(n: u64, p: f64, k: u64) -> Result<f64> {
    check_p(p)?;
    if k > n {
        return Err(Error::domain(format!("k={k} exceeds n={n}")));
    }
    Ok(1.0 - sf_raw(n, p, k + 1))
}

/// Full pmf vector of Bin(n, p).
pub fn binom_pmf_vec(n: u64, p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    Ok((0..=n).map(|k| log_pmf_raw(n, p, k).exp()).collect())
}

/// P(A + B ≥ k) for independent A ~ Bin(n1, p1), B ~ Bin(n2, p2).
pub fn binom_conv_sf(n1: u64, p1: f64, n2: u64, p2: f64, k: u64) -> Result<f64> {
    check_p(p1)?;
    check_p(p2)?;
    if k > n1 + n2 {
        return Err(Error::domain(format!("k={k} exceeds n1+n2={}", n1 + n2)));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if n2 == 0 {
        return Ok(sf_raw(n1, p1, k));
    }
    if n1 == 0 {
        return Ok(sf_raw(n2, p2, k));
    }
    // suffix sums of B's pmf, accumulated from the top for small-tail accuracy
    let pmf2 = binom_pmf_vec(n2, p2)?;
    let mut tail2 = vec![0.0; pmf2.len() + 1];
    for j in (0..pmf2.len()).rev() {
        tail2[j] = tail2[j + 1] + pmf2[j];
    }
    let mut s = 0.0;
    for a in 0..=n1 {
        let need = k.saturating_sub(a);
        if need > n2 {
            continue;
        }
        s += log_pmf_raw(n1, p1, a).exp() * tail2[need as usize];
    }
    Ok(s.clamp(0.0, 1.0))
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
