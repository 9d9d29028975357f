//! Command-line front end. Every command produces a [`report::Table`] that
//! is rendered as CSV (with `#` header lines) or as a JSON report document.

pub mod args;
pub mod report;
pub mod sweep;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use mtlsim::exact::{self as ex, ExactLearner, Guards};
use mtlsim::mc::{self, Learner};
use mtlsim::scenario::{self as scn, MultitaskScenario};
use serde_json::{json, Value};
use thiserror::Error;

use args::*;
use report::{Cell, Table, MC_COLUMNS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] mtlsim::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_guard() => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 2 on parameter errors, 3 on guard
/// refusals.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let guards = parse_guards(&cli.guard)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(usage("--threads must be ≥ 1"));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| usage(format!("thread pool: {e}")))?
    };
    pool.install(|| {
        if let Cmd::Scenario(ScenarioCmd::Make(spec)) = &cli.cmd {
            return scenario_make(cli, spec);
        }
        let mut resolved = BTreeMap::new();
        let table = match &cli.cmd {
            Cmd::Sweep(a) => run_sweep(&a.config, &guards, &mut resolved)?,
            cmd => exec(cmd, &guards, &mut resolved)?,
        };
        let config = json!({
            "args": serde_json::to_value(cli).map_err(|e| usage(e.to_string()))?,
            "guards": guards,
            "resolved": resolved,
        });
        let ts = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        let bytes = report::render(&table, cli.format, cli.cmd.name(), &config, &ts)?;
        emit(cli.out.as_deref(), &bytes)
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|source| CliError::Io {
            path: "stdout".into(),
            source,
        }),
    }
}

fn parse_guards(items: &[String]) -> Result<Guards> {
    let mut g = Guards::default();
    for it in items.iter().filter(|s| !s.is_empty()) {
        let (k, v) = it.split_once('=').ok_or_else(|| usage(format!("--guard expects key=value, got '{it}'")))?;
        let n: u64 = v.trim().parse().map_err(|_| usage(format!("guard {k}: '{v}' is not a count")))?;
        match k.trim() {
            "max_oracle_samples" => g.max_oracle_samples = n,
            "max_pool_samples" => g.max_pool_samples = n,
            "max_bruteforce_tasks" => g.max_bruteforce_tasks = n as usize,
            "max_bruteforce_n" => g.max_bruteforce_n = n,
            "max_mixture_terms" => g.max_mixture_terms = n,
            other => return Err(usage(format!("unknown guard '{other}'"))),
        }
    }
    Ok(g)
}

/// `k=v,k=v` into a map; values stay strings.
fn parse_params(s: &str) -> Result<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    for it in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = it.split_once('=').ok_or_else(|| usage(format!("--params expects k=v, got '{it}'")))?;
        if m.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(usage(format!("parameter '{}' given twice", k.trim())));
        }
    }
    Ok(m)
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn raw(&self, k: &str) -> Result<&str> {
        self.0.get(k).map(String::as_str).ok_or_else(|| usage(format!("missing parameter '{k}'")))
    }

    fn f64(&self, k: &str) -> Result<f64> {
        let v = self.raw(k)?;
        v.parse().map_err(|_| usage(format!("parameter {k}='{v}' is not a number")))
    }

    fn count(&self, k: &str) -> Result<u64> {
        let v = self.raw(k)?;
        v.parse().map_err(|_| usage(format!("parameter {k}='{v}' is not a count")))
    }

    fn list<T: std::str::FromStr>(&self, k: &str) -> Result<Vec<T>> {
        self.raw(k)?
            .split(':')
            .map(|x| x.trim().parse().map_err(|_| usage(format!("parameter {k}: bad entry '{x}'"))))
            .collect()
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(usage(format!("unknown parameter '{k}' (expected {})", allowed.join(", ")))),
            None => Ok(()),
        }
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required for family {family}")))
}

pub fn build_scenario(spec: &ScenarioSpec) -> Result<MultitaskScenario> {
    let family = spec.family.ok_or_else(|| usage("either --scenario or --family is required"))?;
    let mut sc = match family {
        FamilyArg::Agnostic => {
            let (n, nt) = (need(spec.n, "n", "agnostic")?, need(spec.tasks, "N", "agnostic")?);
            match (spec.eps, spec.delta) {
                (Some(e), None) => scn::make_agnostic_scenario_eps(n, nt, e)?,
                (None, Some(d)) => scn::make_agnostic_scenario(n, nt, d)?,
                _ => return Err(usage("agnostic needs exactly one of --eps or --delta")),
            }
        }
        FamilyArg::FairNoisy => {
            let f = "fair-noisy";
            let (n, nt, beta) = (need(spec.n, "n", f)?, need(spec.tasks, "N", f)?, need(spec.beta, "beta", f)?);
            let cb = spec.c_beta.unwrap_or(2.0);
            match (spec.eps, spec.eps0, spec.alpha) {
                (None, None, None) => scn::make_fair_noisy_scenario(n, nt, beta, cb)?,
                (Some(e), Some(e0), Some(a)) => scn::make_fair_noisy_custom(n, nt, beta, cb, e, e0, a)?,
                _ => return Err(usage("fair-noisy takes all or none of --eps, --eps0, --alpha")),
            }
        }
        FamilyArg::Background => {
            let f = "background";
            scn::make_background_scenario(
                need(spec.n, "n", f)?,
                need(spec.n_p, "n-p", f)?,
                need(spec.n_q, "n-q", f)?,
                need(spec.n_target, "n-target", f)?,
                need(spec.beta, "beta", f)?,
                need(spec.c0_const, "c0-const", f)?,
                need(spec.c1_const, "c1-const", f)?,
            )?
        }
    };
    if let Some(y) = spec.y_star {
        sc = sc.with_y_star(y)?;
    }
    if spec.materialize {
        sc = sc.materialized()?;
    }
    Ok(sc)
}

fn load_scenario(src: &ScenarioSource, resolved: &mut BTreeMap<String, Value>) -> Result<MultitaskScenario> {
    let sc = match &src.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?;
            MultitaskScenario::from_json(&text)?
        }
        None => build_scenario(&src.spec)?,
    };
    resolved.insert("scenario_id".into(), Value::String(sc.id()));
    Ok(sc)
}

fn scenario_make(cli: &Cli, spec: &ScenarioSpec) -> Result<()> {
    let sc = build_scenario(spec)?;
    let doc = sc.to_json()? + "\n";
    let Some(out) = cli.out.as_deref() else {
        return emit(None, doc.as_bytes());
    };
    emit(Some(out), doc.as_bytes())?;
    let p = &sc.params;
    let num = |x: Option<f64>| x.map(Cell::Num).unwrap_or(Cell::Str(String::new()));
    let mut t = Table::new(&["scenario_id", "family", "n", "N", "epsilon", "epsilon0", "t_star", "alpha_f", "beta", "c_beta", "flags"]);
    let flags: Vec<String> = sc.flags.iter().map(|f| format!("{}={}", f.name, f.holds)).collect();
    t.push(vec![
        sc.id().into(),
        sc.family.to_string().into(),
        sc.n_per_task.into(),
        sc.num_tasks().into(),
        num(p.epsilon),
        num(p.epsilon0),
        num(p.t_star),
        num(p.alpha_f),
        num(p.beta),
        num(p.c_beta),
        flags.join(";").into(),
    ]);
    let config = json!({
        "args": serde_json::to_value(cli).map_err(|e| usage(e.to_string()))?,
        "resolved": { "scenario_id": sc.id() },
    });
    let ts = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let bytes = report::render(&t, cli.format, cli.cmd.name(), &config, &ts)?;
    emit(None, &bytes)
}

fn exact_learner(l: LearnerArg, task: usize) -> Result<ExactLearner> {
    Ok(match l {
        LearnerArg::Erm => ExactLearner::Erm(task),
        LearnerArg::Pool => ExactLearner::Pool,
        LearnerArg::Oracle => ExactLearner::Oracle,
        LearnerArg::Ibb => return Err(usage("ibb has no exact risk; use `risk mc`")),
    })
}

fn exact_tag(l: ExactLearner) -> String {
    match l {
        ExactLearner::Erm(t) => format!("erm{t}"),
        ExactLearner::Pool => "pool".into(),
        ExactLearner::Oracle => "oracle".into(),
    }
}

/// Runs one non-sweep command into a table.
pub fn exec(cmd: &Cmd, guards: &Guards, resolved: &mut BTreeMap<String, Value>) -> Result<Table> {
    match cmd {
        Cmd::Scenario(_) | Cmd::Sweep(_) => Err(usage(format!("`{}` cannot run here", cmd.name()))),
        Cmd::Risk(RiskCmd::Exact(a)) => {
            let sc = load_scenario(&a.source, resolved)?;
            let mut t = Table::new(&["scenario_id", "learner", "error_prob", "excess_risk"]);
            for &l in &a.learner {
                let el = exact_learner(l, a.task)?;
                let r = ex::exact_learner_risk(&sc, el, guards)?;
                t.push(vec![sc.id().into(), exact_tag(el).into(), r.error_prob.into(), r.excess_risk.into()]);
            }
            Ok(t)
        }
        Cmd::Risk(RiskCmd::Mc(a)) => {
            let sc = load_scenario(&a.source, resolved)?;
            let mut ls = Vec::new();
            for &l in &a.learner {
                match l {
                    LearnerArg::Erm => ls.push(Learner::PerTaskErm(a.task)),
                    LearnerArg::Pool => ls.push(Learner::Pool),
                    LearnerArg::Oracle => ls.push(Learner::Oracle(None)),
                    LearnerArg::Ibb => ls.extend(a.c0.iter().map(|&c0| Learner::Ibb { c0, delta: a.ibb_delta })),
                }
            }
            let sims = mc::simulate_learners(&sc, &ls, a.mc.trials, a.mc.seed)?;
            let sid = sc.id();
            let mut t = Table::new(&MC_COLUMNS);
            for s in &sims {
                t.mc_row("excess_risk", &sid, &s.learner, &s.risk);
                t.mc_row("error_rate", &sid, &s.learner, &s.error_rate);
                if let Some(c) = &s.coverage {
                    t.mc_row("coverage", &sid, &s.learner, c);
                }
            }
            Ok(t)
        }
        Cmd::Kl(KlCmd::Exact(a)) => {
            let sc = load_scenario(&a.source, resolved)?;
            let k = ex::mixture_task_kl(&sc)?;
            let lb = ex::lower_bound_from_kl(k.total, sc.epsilon()?)?;
            let mut t = Table::new(&["scenario_id", "kl_per_task", "kl_total", "pinsker", "bretagnolle_huber", "risk_lower_bound"]);
            t.push(vec![sc.id().into(), k.per_task.into(), k.total.into(), lb.pinsker.into(), lb.bh.into(), lb.risk_bound.into()]);
            Ok(t)
        }
        Cmd::Kl(KlCmd::Mc(a)) => {
            let sc = load_scenario(&a.source, resolved)?;
            let e = mc::estimate_mixture_kl_mc(&sc, a.mc.trials, a.mc.seed)?;
            let mut t = Table::new(&MC_COLUMNS);
            t.mc_row("mixture_kl_total", &sc.id(), "", &e);
            Ok(t)
        }
        Cmd::Testerror(TestErrorCmd::Mc(a)) => {
            let sc = load_scenario(&a.source, resolved)?;
            let sid = sc.id();
            let mut t = Table::new(&MC_COLUMNS);
            t.mc_row("bayes_test_error", &sid, "", &mc::simulate_bayes_test_error(&sc, a.mc.trials, a.mc.seed)?);
            if a.conditional {
                for c in mc::simulate_bayes_test_error_conditional(&sc, a.mc.trials, a.mc.seed)? {
                    t.mc_row(&format!("bayes_test_error|informative={}", c.informative_tasks), &sid, "", &c.estimate);
                }
            }
            Ok(t)
        }
        Cmd::Bruteforce(a) => {
            let sc = load_scenario(&a.source, resolved)?;
            let j = ex::joint_bruteforce_test(&sc, a.n_small, guards)?;
            let mut t = Table::new(&["scenario_id", "n_small", "states", "kl", "tv", "bayes_error"]);
            t.push(vec![sc.id().into(), a.n_small.into(), j.states.into(), j.kl.into(), j.tv.into(), j.bayes_error.into()]);
            Ok(t)
        }
        Cmd::Bounds(BoundsCmd::Eval(a)) => bounds(a),
        Cmd::Rates(a) => rates(a),
        Cmd::Construction(ConstructionCmd::Mc(a)) => {
            let e = mc::estimate_construction_feasibility(a.n_plus_1, a.mc.trials, a.mc.seed)?;
            let mut t = Table::new(&MC_COLUMNS);
            t.mc_row("construction_feasible", "", "", &e);
            Ok(t)
        }
    }
}

fn bounds(a: &BoundsArgs) -> Result<Table> {
    let name = serde_json::to_value(a.name).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let raw = parse_params(&a.params)?;
    let mut nums = BTreeMap::new();
    for (k, v) in &raw {
        let x: f64 = v.parse().map_err(|_| usage(format!("parameter {k}='{v}' is not a number")))?;
        nums.insert(k.clone(), x);
    }
    let evals = mtlsim::tail::evaluate(&name, &nums)?;
    let shown = raw.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    let mut t = Table::new(&["name", "params", "output", "value"]);
    for e in evals {
        let output = e.name.strip_prefix(&format!("{name}-")).unwrap_or("value").to_string();
        t.push(vec![name.clone().into(), shown.clone().into(), output.into(), e.value.into()]);
    }
    Ok(t)
}

fn rates(a: &RatesArgs) -> Result<Table> {
    let p = Params(parse_params(&a.params)?);
    let mut t = Table::new(&["rate", "t", "cumulative_n", "rho_bar", "value", "is_min"]);
    if a.minimax {
        p.only(&["beta", "sizes", "rhos"])?;
        let r = ex::minimax_rate(p.f64("beta")?, &p.list::<u64>("sizes")?, &p.list::<f64>("rhos")?)?;
        for pre in &r.per_prefix {
            t.push(vec![
                "minimax".into(),
                pre.t.into(),
                pre.cumulative_n.into(),
                pre.rho_bar_t.into(),
                pre.rate_t.into(),
                (pre.t == r.argmin_t).into(),
            ]);
        }
    } else if a.pooling {
        p.only(&["alpha", "beta", "c_beta", "c0", "c_rho", "d", "n", "N", "delta", "rho_bar"])?;
        let q = ex::PoolingRateParams {
            alpha: p.f64("alpha")?,
            beta: p.f64("beta")?,
            c_beta: p.f64("c_beta")?,
            c0: p.f64("c0")?,
            c_rho: p.f64("c_rho")?,
            d: p.count("d")?,
            n: p.count("n")?,
            tasks: p.count("N")?,
            delta: p.f64("delta")?,
            rho_bar: p.f64("rho_bar")?,
        };
        let v = ex::pooling_rate_bound(&q)?;
        let t_alpha = (q.alpha * q.tasks as f64).ceil() as u64;
        t.push(vec!["pooling".into(), t_alpha.into(), (q.n * q.tasks).into(), q.rho_bar.into(), v.into(), true.into()]);
    } else {
        p.only(&["n", "N", "beta", "c_beta", "c0", "delta"])?;
        let (n, nt) = (p.count("n")?, p.count("N")?);
        let r = ex::fair_noisy_pooling_rate_at_levels(n, nt, p.f64("beta")?, p.f64("c_beta")?, p.f64("c0")?, p.f64("delta")?)?;
        t.push(vec!["fair_noisy_pooling".into(), r.t_alpha.into(), (n * nt).into(), r.rho_bar.into(), r.value.into(), true.into()]);
    }
    Ok(t)
}

fn run_sweep(path: &Path, guards: &Guards, resolved: &mut BTreeMap<String, Value>) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg = sweep::parse(&text)?;
    resolved.insert("command".into(), json!(cfg.command.join(" ")));
    resolved.insert("fixed".into(), json!(cfg.fixed));
    resolved.insert("axes".into(), json!(cfg.axes));
    resolved.insert("select".into(), json!(cfg.select));
    let cells = cfg.cells();
    let mut out: Option<Table> = None;
    let mut ids = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let argv = cfg.argv(cell);
        let sub = Cli::try_parse_from(&argv).map_err(|e| usage(format!("cell {i}: {}", e.render().to_string().trim())))?;
        let mut r = BTreeMap::new();
        let t = exec(&sub.cmd, guards, &mut r).map_err(|e| match e {
            CliError::Lib(l) => CliError::Lib(l),
            other => usage(format!("cell {i}: {other}")),
        })?;
        ids.push(r.remove("scenario_id").unwrap_or(Value::Null));
        let row = match &cfg.select {
            None => t.rows.first(),
            Some((col, want)) => {
                let c = t.column(col).ok_or_else(|| usage(format!("select: no column '{col}' in {:?}", t.columns)))?;
                t.rows.iter().find(|r| matches!(&r[c], Cell::Str(s) if s == want))
            }
        }
        .ok_or_else(|| usage(format!("cell {i}: no row selected")))?
        .clone();
        let table = out.get_or_insert_with(|| {
            let mut cols = vec!["cell".to_string()];
            cols.extend(cfg.axes.iter().map(|(k, _)| k.clone()));
            cols.extend(t.columns.iter().cloned());
            Table { columns: cols, rows: Vec::new() }
        });
        let mut full: Vec<Cell> = vec![i.into()];
        full.extend(cell.iter().map(|(_, v)| Cell::Str(v.clone())));
        full.extend(row);
        table.rows.push(full);
    }
    resolved.insert("cell_scenario_ids".into(), Value::Array(ids));
    out.ok_or_else(|| usage("sweep has no cells"))
}
