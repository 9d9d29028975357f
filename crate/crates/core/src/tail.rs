//! Closed-form concentration and approximation inequalities. Values are
//! returned un-clamped; callers clamp when reading them as probabilities.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEval {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
}

fn unit(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{what}={p} outside [0,1]")));
    }
    Ok(())
}

fn count(m: u64, what: &str) -> Result<()> {
    if m == 0 {
        return Err(Error::domain(format!("{what} must be ≥ 1")));
    }
    Ok(())
}

/// Bound on P(X ≥ (1+δ)mp), X ~ Bin(m, p).
pub fn chernoff_upper(m: u64, p: f64, delta: f64) -> Result<f64> {
    count(m, "m")?;
    unit(p, "p")?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("delta={delta} must be > 0")));
    }
    Ok((-(m as f64) * p * delta * delta / (2.0 + delta)).exp())
}

/// Bound on P(X ≤ (1−δ)mp), X ~ Bin(m, p).
pub fn chernoff_lower(m: u64, p: f64, delta: f64) -> Result<f64> {
    count(m, "m")?;
    unit(p, "p")?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta={delta} outside (0,1)")));
    }
    Ok((-(m as f64) * p * delta * delta / 2.0).exp())
}

/// Lower bound on P(X ≥ mp + m0) for X ~ Bin(m, p), p ≤ ½.
pub fn slud_lower(m: u64, p: f64, m0: f64) -> Result<f64> {
    count(m, "m")?;
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::domain(format!("p={p} outside (0, 0.5]")));
    }
    let hi = m as f64 * (1.0 - 2.0 * p);
    if !(m0 >= 0.0 && m0 <= hi) {
        return Err(Error::Precondition(format!(
            "Slud requires 0 ≤ m0 ≤ m(1−2p) = {hi}, got {m0}"
        )));
    }
    let v = m as f64 * p * (1.0 - p);
    Ok(0.25 * (-m0 * m0 / v).exp())
}

/// Two-sided bound on P(|mean − E| ≥ t) for n i.i.d. variables in [lo, hi].
pub fn hoeffding_bound(n: u64, t: f64, lo: f64, hi: f64) -> Result<f64> {
    count(n, "n")?;
    if !(hi > lo) {
        return Err(Error::domain(format!("need hi > lo, got [{lo}, {hi}]")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t={t} must be ≥ 0")));
    }
    let w = hi - lo;
    Ok(2.0 * (-2.0 * n as f64 * t * t / (w * w)).exp())
}

/// Bound on P(X/m ≥ p + x), X ~ Bin(m, p).
pub fn chernoff_hoeffding(m: u64, p: f64, x: f64) -> Result<f64> {
    count(m, "m")?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p={p} outside (0,1)")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("x={x} must be ≥ 0")));
    }
    Ok((-x * x * m as f64 / (2.0 * p * (1.0 - p))).exp())
}

/// Uniform CDF gap bound for normalized sums with variance σ² and third
/// absolute moment ρ.
pub fn berry_esseen_bound(n: u64, sigma: f64, rho3: f64) -> Result<f64> {
    count(n, "n")?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma={sigma} must be > 0")));
    }
    let s3 = sigma.powi(3);
    // Jensen: E|X|³ ≥ σ³; a relative slack absorbs rounding in s3
    if !(rho3 >= s3 * (1.0 - 1e-12)) {
        return Err(Error::domain(format!("rho3={rho3} below sigma^3={s3}")));
    }
    Ok(3.0 * rho3 / (s3 * (n as f64).sqrt()))
}

/// ln of the pair (√(2π)·n^{n+½}e^{−n}, e·n^{n+½}e^{−n}).
pub fn stirling_log_bounds(n: u64) -> Result<(f64, f64)> {
    count(n, "n")?;
    let x = n as f64;
    let core = (x + 0.5) * x.ln() - x;
    Ok((0.5 * (2.0 * std::f64::consts::PI).ln() + core, 1.0 + core))
}

pub fn stirling_bounds(n: u64) -> Result<(f64, f64)> {
    let (l, u) = stirling_log_bounds(n)?;
    Ok((l.exp(), u.exp()))
}

fn get(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::param(format!("missing parameter '{key}'")))
}

fn get_count(params: &BTreeMap<String, f64>, key: &str) -> Result<u64> {
    let v = get(params, key)?;
    if !(v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53)) {
        return Err(Error::param(format!("'{key}' must be a non-negative integer, got {v}")));
    }
    Ok(v as u64)
}

pub const BOUND_NAMES: &[&str] = &[
    "chernoff-upper",
    "chernoff-lower",
    "slud",
    "hoeffding",
    "chernoff-hoeffding",
    "berry-esseen",
    "stirling",
];

/// Evaluates a named bound from a flat parameter map. Stirling yields two
/// rows (`stirling-lower`, `stirling-upper`); every other bound yields one.
pub fn evaluate(name: &str, params: &BTreeMap<String, f64>) -> Result<Vec<BoundEval>> {
    let one = |value: f64| {
        vec![BoundEval {
            name: name.to_string(),
            inputs: params.clone(),
            value,
        }]
    };
    Ok(match name {
        "chernoff-upper" => one(chernoff_upper(
            get_count(params, "m")?,
            get(params, "p")?,
            get(params, "delta")?,
        )?),
        "chernoff-lower" => one(chernoff_lower(
            get_count(params, "m")?,
            get(params, "p")?,
            get(params, "delta")?,
        )?),
        "slud" => one(slud_lower(
            get_count(params, "m")?,
            get(params, "p")?,
            get(params, "m0")?,
        )?),
        "hoeffding" => one(hoeffding_bound(
            get_count(params, "n")?,
            get(params, "t")?,
            params.get("lo").copied().unwrap_or(0.0),
            params.get("hi").copied().unwrap_or(1.0),
        )?),
        "chernoff-hoeffding" => one(chernoff_hoeffding(
            get_count(params, "m")?,
            get(params, "p")?,
            get(params, "x")?,
        )?),
        "berry-esseen" => one(berry_esseen_bound(
            get_count(params, "n")?,
            get(params, "sigma")?,
            get(params, "rho3")?,
        )?),
        "stirling" => {
            let (lo, hi) = stirling_bounds(get_count(params, "n")?)?;
            ["stirling-lower", "stirling-upper"]
                .iter()
                .zip([lo, hi])
                .map(|(nm, value)| BoundEval {
                    name: nm.to_string(),
                    inputs: params.clone(),
                    value,
                })
                .collect()
        }
        other => {
            return Err(Error::param(format!(
                "unknown bound '{other}'; expected one of {}",
                BOUND_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binom_cdf, binom_sf};

    #[test]
    fn chernoff_values() {
        assert!((chernoff_upper(100, 0.5, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let v = chernoff_upper(100, 0.5, 0.2).unwrap();
        assert!((v - (-2.0f64 / 2.2).exp()).abs() < 1e-15);
        assert!((v - 0.402890).abs() < 1e-6);
        assert!(v >= binom_sf(100, 0.5, 60).unwrap());

        assert!((chernoff_lower(100, 0.5, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let v = chernoff_lower(100, 0.5, 0.5).unwrap();
        assert!((v - 0.0019305).abs() < 1e-7);
        assert!(v >= binom_cdf(100, 0.5, 25).unwrap());
        assert!(chernoff_lower(100, 0.5, 1.0).is_err());
        assert!(chernoff_upper(0, 0.5, 0.1).is_err());
    }

    #[test]
    fn slud_values() {
        assert_eq!(slud_lower(10, 0.3, 0.0).unwrap(), 0.25);
        let v = slud_lower(100, 0.25, 10.0).unwrap();
        assert!((v - 0.25 * (-100.0f64 / 18.75).exp()).abs() < 1e-15);
        assert!((v - 0.0012075).abs() < 1e-6);
        assert!(v <= binom_sf(100, 0.25, 35).unwrap());
        assert!(matches!(slud_lower(100, 0.25, 51.0), Err(Error::Precondition(_))));
        assert!(matches!(slud_lower(100, 0.25, -1.0), Err(Error::Precondition(_))));
        assert!(slud_lower(100, 0.6, 1.0).is_err());
    }

    #[test]
    fn hoeffding_values() {
        assert_eq!(hoeffding_bound(10, 0.0, 0.0, 1.0).unwrap(), 2.0);
        assert!((hoeffding_bound(100, 0.1, 0.0, 1.0).unwrap() - 0.270671).abs() < 1e-6);
        assert!((hoeffding_bound(50, 0.2, 0.0, 1.0).unwrap() - 0.036631).abs() < 1e-6);
        assert!(hoeffding_bound(50, 0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn chernoff_hoeffding_values() {
        assert_eq!(chernoff_hoeffding(100, 0.3, 0.0).unwrap(), 1.0);
        let v = chernoff_hoeffding(100, 0.5, 0.1).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!(v >= binom_sf(100, 0.5, 60).unwrap());
        assert!(chernoff_hoeffding(100, 1.0, 0.1).is_err());
    }

    #[test]
    fn berry_esseen_values() {
        assert!((berry_esseen_bound(9, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((berry_esseen_bound(900, 1.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(berry_esseen_bound(9, 1.0, 0.5).is_err());
        assert!(berry_esseen_bound(9, 0.0, 1.0).is_err());
    }

    #[test]
    fn stirling_values() {
        let (l, u) = stirling_bounds(1).unwrap();
        assert!((l - 0.922137).abs() < 1e-6 && (u - 1.0).abs() < 1e-15);
        let (l, u) = stirling_bounds(2).unwrap();
        assert!((l - 1.919).abs() < 1e-3 && (u - 2.081).abs() < 1e-3);
        let (l, u) = stirling_bounds(5).unwrap();
        assert!((l - 118.02).abs() < 1e-2 && (u - 127.99).abs() < 1e-2);
        assert!(stirling_bounds(0).is_err());
    }

    #[test]
    fn evaluate_by_name() {
        let mut p = BTreeMap::new();
        p.insert("n".to_string(), 5.0);
        let rows = evaluate("stirling", &p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name, "stirling-lower");
        assert!(evaluate("chernoff-upper", &p).is_err());
        assert!(evaluate("nope", &p).is_err());
        p.insert("n".to_string(), 2.5);
        assert!(evaluate("stirling", &p).is_err());
    }
}
