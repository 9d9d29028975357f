//! Flat `key = value` sweep configs.
//!
//! ```text
//! # comment
//! command = risk mc
//! family = agnostic
//! N = 200
//! learner = pool
//! trials = 1000
//! seed = 7
//! select = quantity=error_rate
//! grid.n = 10:50:20
//! grid.eps = 0.1:0.3:0.1
//! ```
//!
//! `command` names the subcommand; `select = col=value` picks the reported
//! row when the command emits several (default: the first); `params.k` keys
//! are joined into `--params`; every other key becomes `--key value`, with
//! `true`/`false` toggling a flag. Each `grid.<key> = start:stop:step` entry
//! adds an axis; cells run in row-major order, last axis fastest.

use std::collections::BTreeMap;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub command: Vec<String>,
    /// Fixed keys in file order.
    pub fixed: Vec<(String, String)>,
    pub axes: Vec<(String, Vec<String>)>,
    pub select: Option<(String, String)>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("sweep config line {line}: {msg}"))
}

/// start, start+step, … ≤ stop (with a relative slack for rounding), each
/// value trimmed to 12 significant digits.
pub fn expand_range(spec: &str) -> Result<Vec<String>, String> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
    let (start, stop, step) = match parts.as_slice() {
        [a] => (num(a)?, num(a)?, 1.0),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(format!("expected start:stop:step, got '{spec}'")),
    };
    if !(step > 0.0 && step.is_finite()) || !(stop >= start) {
        return Err(format!("need step > 0 and stop ≥ start in '{spec}'"));
    }
    let count = ((stop - start) / step * (1.0 + 1e-12) + 1e-9).floor() as u64 + 1;
    if count > 100_000 {
        return Err(format!("'{spec}' expands to {count} values"));
    }
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            let r: f64 = format!("{v:.12e}").parse().unwrap();
            format!("{r}")
        })
        .collect())
}

pub fn parse(text: &str) -> Result<SweepConfig, CliError> {
    let mut command = None;
    let mut fixed = Vec::new();
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    let mut select = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(ln, "expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(bad(ln, "empty key"));
        }
        match k {
            "command" => command = Some(v.split_whitespace().map(String::from).collect::<Vec<_>>()),
            "select" => {
                let (c, want) = v.split_once('=').ok_or_else(|| bad(ln, "select needs column=value"))?;
                select = Some((c.trim().to_string(), want.trim().to_string()));
            }
            _ => match k.strip_prefix("grid.") {
                Some(p) => {
                    if axes.iter().any(|(q, _)| q == p) {
                        return Err(bad(ln, format!("duplicate grid axis '{p}'")));
                    }
                    axes.push((p.to_string(), expand_range(v).map_err(|e| bad(ln, e))?));
                }
                None => fixed.push((k.to_string(), v.to_string())),
            },
        }
    }
    let command = command.filter(|c| !c.is_empty()).ok_or_else(|| CliError::Usage("sweep config needs a `command` key".into()))?;
    if matches!(command.first().map(String::as_str), Some("sweep" | "scenario")) {
        return Err(CliError::Usage(format!("`{}` cannot be swept", command.join(" "))));
    }
    Ok(SweepConfig { command, fixed, axes, select })
}

impl SweepConfig {
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut out = vec![Vec::new()];
        for (k, vals) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|c: Vec<(String, String)>| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }

    /// argv for one cell; grid values override fixed ones of the same key.
    pub fn argv(&self, cell: &[(String, String)]) -> Vec<String> {
        let mut merged: Vec<(String, String)> = Vec::new();
        for (k, v) in self.fixed.iter().chain(cell) {
            match merged.iter_mut().find(|(q, _)| q == k) {
                Some(slot) => slot.1 = v.clone(),
                None => merged.push((k.clone(), v.clone())),
            }
        }
        let mut params: BTreeMap<String, String> = BTreeMap::new();
        let mut argv = vec!["mtlsim".to_string()];
        argv.extend(self.command.iter().cloned());
        for (k, v) in merged {
            if let Some(p) = k.strip_prefix("params.") {
                params.insert(p.to_string(), v);
                continue;
            }
            match v.as_str() {
                "true" => argv.push(format!("--{k}")),
                "false" => {}
                _ => {
                    argv.push(format!("--{k}"));
                    argv.push(v);
                }
            }
        }
        if !params.is_empty() {
            argv.push("--params".into());
            argv.push(params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(","));
        }
        argv
    }
}
