//! Two-point distributions on {x₀,x₁}×{0,1}, the two-hypothesis class, the
//! three multitask families, Bernstein class checks and transfer exponents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCENARIO_VERSION: &str = "scenario_v1";

/// Slack when comparing P(Y=y*|x₁) against the Bernstein threshold; the
/// constructions sit exactly on the threshold and ties must pass.
pub const BCC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointDistribution {
    pub p_x1: f64,
    pub eta_star: f64,
    pub y_star: u8,
    pub p1_x0: f64,
}

impl TwoPointDistribution {
    /// A distribution with P(Y=1|x₀)=1, as in every construction here.
    pub fn new(p_x1: f64, eta_star: f64, y_star: u8) -> Result<Self> {
        let d = TwoPointDistribution {
            p_x1,
            eta_star,
            y_star,
            p1_x0: 1.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_x1", self.p_x1),
            ("eta_star", self.eta_star),
            ("p1_x0", self.p1_x0),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name}={v} outside [0,1]")));
            }
        }
        if self.y_star > 1 {
            return Err(Error::param(format!("y_star={} not a label", self.y_star)));
        }
        Ok(())
    }

    /// P(Y=1 | X=x₁).
    pub fn eta1(&self) -> f64 {
        if self.y_star == 1 {
            self.eta_star
        } else {
            1.0 - self.eta_star
        }
    }

    /// Same marginals, labels at x₁ flipped (y* → 1−y*).
    pub fn flipped(&self) -> Self {
        TwoPointDistribution {
            y_star: 1 - self.y_star,
            ..*self
        }
    }

    /// Joint cell masses indexed [x][y].
    pub fn cells(&self) -> [[f64; 2]; 2] {
        let (p0, p1) = (1.0 - self.p_x1, self.p_x1);
        let e = self.eta1();
        [
            [p0 * (1.0 - self.p1_x0), p0 * self.p1_x0],
            [p1 * (1.0 - e), p1 * e],
        ]
    }

    /// Misclassification probability of h.
    pub fn error_of(&self, h: Hypothesis) -> f64 {
        let c = self.cells();
        (0..2)
            .map(|x| c[x][1 - h.predict(x) as usize])
            .sum()
    }
}

/// A map {x₀,x₁} → {0,1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    pub x0: u8,
    pub x1: u8,
}

impl Hypothesis {
    pub fn predict(&self, x: usize) -> u8 {
        if x == 0 {
            self.x0
        } else {
            self.x1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptClass {
    pub hypotheses: Vec<Hypothesis>,
    pub vc_dim: u32,
}

impl ConceptClass {
    pub fn new(hypotheses: Vec<Hypothesis>, vc_dim: u32) -> Result<Self> {
        let c = ConceptClass { hypotheses, vc_dim };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hypotheses.is_empty() {
            return Err(Error::param("concept class is empty"));
        }
        for (i, a) in self.hypotheses.iter().enumerate() {
            if a.x0 > 1 || a.x1 > 1 {
                return Err(Error::param(format!("hypothesis {i} outputs a non-label")));
            }
            if self.hypotheses[..i].contains(a) {
                return Err(Error::param(format!("hypothesis {i} is a duplicate")));
            }
        }
        if self.vc_dim == 0 {
            return Err(Error::param("vc_dim must be ≥ 1"));
        }
        Ok(())
    }

    /// `[wrong, h*]`, both predicting 1 at x₀. ERM's lowest-index tie-break
    /// then counts ties as errors.
    pub fn two_point(y_star: u8) -> Self {
        ConceptClass {
            hypotheses: vec![
                Hypothesis { x0: 1, x1: 1 - y_star },
                Hypothesis { x0: 1, x1: y_star },
            ],
            vc_dim: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<Hypothesis> {
        self.hypotheses.get(i).copied().ok_or(Error::Index {
            index: i,
            len: self.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Agnostic,
    FairNoisy,
    Background,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Agnostic => "agnostic",
            Family::FairNoisy => "fair_noisy",
            Family::Background => "background",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    Fair,
    Noisy,
    Benign,
    TargetLike,
}

impl TaskTag {
    /// Tags an oracle learner would keep.
    pub fn is_informative(self) -> bool {
        !matches!(self, TaskTag::Noisy)
    }
}

/// How per-trial task identities are drawn in simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentModel {
    /// One informative task at a uniformly random index, the rest noisy.
    UniformPlacement,
    /// Each task informative independently with probability `alpha_f`.
    Bernoulli,
    /// Use `assignment` as stored.
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub beta: Option<f64>,
    pub c_beta: Option<f64>,
    pub c_rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon0: Option<f64>,
    pub t_star: Option<f64>,
    pub alpha_f: Option<f64>,
    pub n_target: Option<u64>,
    pub n_p: Option<u64>,
    pub n_q: Option<u64>,
    pub c0_const: Option<f64>,
    pub c1_const: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintFlag {
    pub name: String,
    pub holds: bool,
}

/// The two source types a scenario mixes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub informative: TwoPointDistribution,
    pub noisy: TwoPointDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitaskScenario {
    pub version: String,
    pub family: Family,
    pub n_per_task: u64,
    pub sources: Vec<TwoPointDistribution>,
    pub target: TwoPointDistribution,
    pub params: ScenarioParams,
    pub concept_class: ConceptClass,
    pub assignment: Option<Vec<TaskTag>>,
    pub components: Components,
    pub model: AssignmentModel,
    pub flags: Vec<ConstraintFlag>,
}

impl MultitaskScenario {
    pub fn num_tasks(&self) -> usize {
        self.sources.len()
    }

    pub fn y_star(&self) -> u8 {
        self.target.y_star
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.params
            .epsilon
            .ok_or_else(|| Error::param("scenario has no epsilon"))
    }

    pub fn require_family(&self, f: Family) -> Result<()> {
        if self.family != f {
            return Err(Error::Family {
                expected: f.to_string(),
                found: self.family.to_string(),
            });
        }
        Ok(())
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.flags.iter().find(|f| f.name == name).map(|f| f.holds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::param(format!("unsupported scenario version '{}'", self.version)));
        }
        if self.sources.is_empty() {
            return Err(Error::param("scenario needs at least one source"));
        }
        if self.n_per_task == 0 {
            return Err(Error::param("n_per_task must be ≥ 1"));
        }
        for d in self.sources.iter().chain([
            &self.target,
            &self.components.informative,
            &self.components.noisy,
        ]) {
            d.validate()?;
        }
        self.concept_class.validate()?;
        if let Some(a) = &self.assignment {
            if a.len() != self.sources.len() {
                return Err(Error::param("assignment length differs from number of sources"));
            }
        } else if self.model == AssignmentModel::Fixed {
            return Err(Error::param("fixed assignment model needs an assignment"));
        }
        let p = &self.params;
        if self.family == Family::FairNoisy {
            match (p.t_star, p.alpha_f) {
                (Some(t), Some(a)) => {
                    let want = t / self.sources.len() as f64;
                    if (a - want).abs() > 1e-12 * want.abs().max(1.0) {
                        return Err(Error::param(format!("alpha_f={a} differs from t*/N={want}")));
                    }
                }
                (None, Some(_)) => {}
                _ => return Err(Error::param("fair_noisy scenario needs alpha_f")),
            }
        }
        if let Some(a) = p.alpha_f {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::param(format!("alpha_f={a} outside [0,1]")));
            }
        }
        // the background family's target level ε₀ may exceed the noisy level ε
        if let (Family::FairNoisy, Some(e), Some(e0)) = (self.family, p.epsilon, p.epsilon0) {
            if !(e0 < e) {
                return Err(Error::param(format!("need epsilon0 < epsilon, got {e0} ≥ {e}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: MultitaskScenario =
            serde_json::from_str(s).map_err(|e| Error::Serde(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Family name plus a short content hash of the canonical JSON.
    pub fn id(&self) -> String {
        let canon = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(canon.as_bytes());
        let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.family)
    }

    /// Relabels everything so that y* becomes `y`.
    pub fn with_y_star(mut self, y: u8) -> Result<Self> {
        if y > 1 {
            return Err(Error::param(format!("y_star={y} not a label")));
        }
        if y != self.y_star() {
            let flip = |d: &mut TwoPointDistribution| *d = d.flipped();
            self.sources.iter_mut().for_each(flip);
            flip(&mut self.target);
            flip(&mut self.components.informative);
            flip(&mut self.components.noisy);
            self.concept_class = ConceptClass::two_point(y);
        }
        Ok(self)
    }

    /// Fixes the informative subset: ⌊t* + ½⌋ fair tasks first, then
    /// noisy ones. Only meaningful for the fair/noisy family.
    pub fn materialized(mut self) -> Result<Self> {
        self.require_family(Family::FairNoisy)?;
        let n = self.num_tasks();
        let k = materialized_fair_count(&self)?;
        let tags: Vec<TaskTag> = (0..n)
            .map(|i| if i < k { TaskTag::Fair } else { TaskTag::Noisy })
            .collect();
        self.sources = tags
            .iter()
            .map(|t| match t {
                TaskTag::Fair => self.components.informative,
                _ => self.components.noisy,
            })
            .collect();
        self.assignment = Some(tags);
        self.model = AssignmentModel::Fixed;
        Ok(self)
    }
}

/// Round-half-up of t*, capped at N.
pub fn materialized_fair_count(sc: &MultitaskScenario) -> Result<usize> {
    let t = sc
        .params
        .t_star
        .or_else(|| sc.params.alpha_f.map(|a| a * sc.num_tasks() as f64))
        .ok_or_else(|| Error::param("scenario has neither t_star nor alpha_f"))?;
    Ok(((t + 0.5).floor() as usize).min(sc.num_tasks()))
}

/// Minimum admissible P(Y=y*|x₁) for the Bernstein class condition.
pub fn bcc_threshold(beta: f64, c_beta: f64, p_x1: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!("beta={beta} outside (0,1]")));
    }
    if !(c_beta >= 2.0) {
        return Err(Error::domain(format!("c_beta={c_beta} must be ≥ 2")));
    }
    if !(p_x1 > 0.0 && p_x1 <= 1.0) {
        return Err(Error::domain(format!("p_x1={p_x1} outside (0,1]")));
    }
    Ok(0.5 * (1.0 + c_beta.powf(-1.0 / beta) * p_x1.powf(1.0 / beta - 1.0)))
}

pub fn satisfies_bcc(dist: &TwoPointDistribution, beta: f64, c_beta: f64) -> Result<bool> {
    if dist.eta_star < 0.5 {
        return Err(Error::Precondition(format!(
            "eta_star={} < ½ means h* is not optimal",
            dist.eta_star
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta={beta} outside [0,1]")));
    }
    if !(c_beta >= 2.0) {
        return Err(Error::domain(format!("c_beta={c_beta} must be ≥ 2")));
    }
    if beta == 0.0 {
        return Ok(true);
    }
    if dist.p_x1 == 0.0 {
        // every hypothesis agrees P-a.s.; the condition is vacuous
        return Ok(true);
    }
    Ok(dist.eta_star >= bcc_threshold(beta, c_beta, dist.p_x1)? - BCC_TOL)
}

/// er(h) − min over the class.
pub fn excess_risk(dist: &TwoPointDistribution, h_index: usize, class: &ConceptClass) -> Result<f64> {
    let h = class.get(h_index)?;
    let best = class
        .hypotheses
        .iter()
        .map(|g| dist.error_of(*g))
        .fold(f64::INFINITY, f64::min);
    Ok((dist.error_of(h) - best).max(0.0))
}

/// Largest excess risk any class member incurs on `dist`.
pub fn max_excess_risk(dist: &TwoPointDistribution, class: &ConceptClass) -> f64 {
    (0..class.len())
        .map(|i| excess_risk(dist, i, class).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// Least ρ with 𝓔_tgt(h) ≤ c_ρ·𝓔_src(h)^{1/ρ} for all h in the class.
pub fn minimal_transfer_exponent(
    src: &TwoPointDistribution,
    tgt: &TwoPointDistribution,
    c_rho: f64,
    class: &ConceptClass,
) -> Result<f64> {
    if !(c_rho >= 2.0) {
        return Err(Error::domain(format!("c_rho={c_rho} must be ≥ 2")));
    }
    let mut rho = f64::MIN_POSITIVE;
    let mut any = false;
    for i in 0..class.len() {
        let et = excess_risk(tgt, i, class)?;
        if et == 0.0 {
            continue;
        }
        any = true;
        let es = excess_risk(src, i, class)?;
        if et >= 1.0 || es >= 1.0 {
            return Err(Error::domain(format!(
                "excess risks must lie in (0,1): src={es}, tgt={et}"
            )));
        }
        if es == 0.0 {
            return Ok(f64::INFINITY);
        }
        rho = rho.max(es.ln() / (et / c_rho).ln());
    }
    if !any {
        return Err(Error::domain("target excess risk is 0 for every hypothesis"));
    }
    Ok(rho.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferExponentReport {
    pub minimal: f64,
    /// 1.0 when the source is the target itself (ρ_𝒟 = 1 by convention).
    pub convention: Option<f64>,
}

pub fn transfer_exponent_report(
    src: &TwoPointDistribution,
    tgt: &TwoPointDistribution,
    c_rho: f64,
    class: &ConceptClass,
) -> Result<TransferExponentReport> {
    Ok(TransferExponentReport {
        minimal: minimal_transfer_exponent(src, tgt, c_rho, class)?,
        convention: (src == tgt).then_some(1.0),
    })
}

fn check_counts(n: u64, tasks: u64) -> Result<()> {
    if n == 0 || tasks == 0 {
        return Err(Error::param("n and N must be ≥ 1"));
    }
    Ok(())
}

/// Agnostic scenario with ε = √(ln(1/δ)/n).
pub fn make_agnostic_scenario(n: u64, tasks: u64, delta: f64) -> Result<MultitaskScenario> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta={delta} outside (0,1]")));
    }
    check_counts(n, tasks)?;
    let eps = ((1.0 / delta).ln() / n as f64).sqrt();
    let mut sc = make_agnostic_scenario_eps(n, tasks, eps)?;
    sc.params.delta = Some(delta);
    Ok(sc)
}

/// The agnostic construction at an explicit gap ε ∈ [0, ½).
pub fn make_agnostic_scenario_eps(n: u64, tasks: u64, eps: f64) -> Result<MultitaskScenario> {
    check_counts(n, tasks)?;
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::param(format!(
            "epsilon={eps} must lie in [0, ½) so that eta_star ≤ 1"
        )));
    }
    let p = TwoPointDistribution::new(1.0, 0.5 + eps, 1)?;
    let q = TwoPointDistribution::new(1.0, 0.5, 1)?;
    let tags: Vec<TaskTag> = (0..tasks)
        .map(|i| if i == 0 { TaskTag::TargetLike } else { TaskTag::Noisy })
        .collect();
    Ok(MultitaskScenario {
        version: SCENARIO_VERSION.into(),
        family: Family::Agnostic,
        n_per_task: n,
        sources: tags
            .iter()
            .map(|t| if t.is_informative() { p } else { q })
            .collect(),
        target: p,
        params: ScenarioParams {
            beta: Some(0.0),
            epsilon: Some(eps),
            ..Default::default()
        },
        concept_class: ConceptClass::two_point(1),
        assignment: Some(tags),
        components: Components {
            informative: p,
            noisy: q,
        },
        model: AssignmentModel::UniformPlacement,
        flags: vec![],
    })
}

/// Source of the fair/noisy family at level e: p_x1 = C_β e^β,
/// P(Y=y*|x₁) = ½ + ½C_β⁻¹e^{1−β}.
pub fn fair_noisy_source(e: f64, beta: f64, c_beta: f64) -> Result<TwoPointDistribution> {
    let p_x1 = c_beta * e.powf(beta);
    if p_x1 > 1.0 {
        return Err(Error::param(format!(
            "c_beta·eps^beta = {p_x1} > 1 (marginal at x1 exceeds 1) for eps={e}, beta={beta}, c_beta={c_beta}"
        )));
    }
    let eta = 0.5 + 0.5 / c_beta * e.powf(1.0 - beta);
    TwoPointDistribution::new(p_x1, eta, 1)
}

fn check_beta_cbeta(beta: f64, c_beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta={beta} outside (0,1)")));
    }
    if !(c_beta >= 2.0) {
        return Err(Error::param(format!("c_beta={c_beta} must be ≥ 2")));
    }
    Ok(())
}

/// Level quantities of the fair/noisy construction before any validity check
/// on the resulting distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairNoisyLevels {
    pub epsilon: f64,
    pub epsilon0: f64,
    pub t_star: f64,
    pub alpha_f: f64,
    /// N ≥ n^{nβ/(1−β)}
    pub n_tasks_at_least_n_pow: bool,
}

pub fn fair_noisy_levels(n: u64, tasks: u64, beta: f64) -> Result<FairNoisyLevels> {
    check_counts(n, tasks)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta={beta} outside (0,1)")));
    }
    let (nf, tf) = (n as f64, tasks as f64);
    let k = -1.0 / (2.0 - beta);
    // t* in log space: ½(ln N + (nβ/(2−β))·ln n)
    let t_star = (0.5 * (tf.ln() + nf * beta / (2.0 - beta) * nf.ln())).exp();
    Ok(FairNoisyLevels {
        epsilon: (nf * tf.sqrt()).powf(k),
        epsilon0: (nf * tf).powf(k),
        t_star,
        alpha_f: t_star / tf,
        n_tasks_at_least_n_pow: tf.ln() >= nf * beta / (1.0 - beta) * nf.ln(),
    })
}

/// Fair/noisy family at the canonical levels ε=(n√N)^{−1/(2−β)},
/// ε₀=(nN)^{−1/(2−β)}, t*=√(N·n^{nβ/(2−β)}).
pub fn make_fair_noisy_scenario(n: u64, tasks: u64, beta: f64, c_beta: f64) -> Result<MultitaskScenario> {
    check_beta_cbeta(beta, c_beta)?;
    let lv = fair_noisy_levels(n, tasks, beta)?;
    let mut sc = make_fair_noisy_custom(n, tasks, beta, c_beta, lv.epsilon, lv.epsilon0, lv.alpha_f)?;
    sc.params.t_star = Some(lv.t_star);
    sc.flags.push(ConstraintFlag {
        name: "n_tasks_at_least_n_pow".into(),
        holds: lv.n_tasks_at_least_n_pow,
    });
    Ok(sc)
}

/// Fair/noisy family at explicit (ε, ε₀, α_F).
pub fn make_fair_noisy_custom(
    n: u64,
    tasks: u64,
    beta: f64,
    c_beta: f64,
    eps: f64,
    eps0: f64,
    alpha_f: f64,
) -> Result<MultitaskScenario> {
    check_counts(n, tasks)?;
    check_beta_cbeta(beta, c_beta)?;
    if !(eps0 > 0.0 && eps0 < eps) {
        return Err(Error::param(format!("need 0 < epsilon0 < epsilon, got {eps0}, {eps}")));
    }
    if !(0.0..=1.0).contains(&alpha_f) {
        return Err(Error::param(format!(
            "alpha_f={alpha_f} outside [0,1] (t* exceeds N)"
        )));
    }
    let p = fair_noisy_source(eps, beta, c_beta)?;
    let q = fair_noisy_source(eps0, beta, c_beta)?;
    let sc = MultitaskScenario {
        version: SCENARIO_VERSION.into(),
        family: Family::FairNoisy,
        n_per_task: n,
        sources: vec![p; tasks as usize],
        target: p,
        params: ScenarioParams {
            beta: Some(beta),
            c_beta: Some(c_beta),
            c_rho: Some(2.0),
            epsilon: Some(eps),
            epsilon0: Some(eps0),
            t_star: Some(alpha_f * tasks as f64),
            alpha_f: Some(alpha_f),
            ..Default::default()
        },
        concept_class: ConceptClass::two_point(1),
        assignment: None,
        components: Components {
            informative: p,
            noisy: q,
        },
        model: AssignmentModel::Bernoulli,
        flags: vec![],
    };
    // sources/assignment mirror the materialized subset; simulation still
    // draws the Bernoulli(α_F) model unless the caller materializes
    let mut m = sc.materialized()?;
    m.model = AssignmentModel::Bernoulli;
    Ok(m)
}

/// Target / benign / noisy background construction.
#[allow(clippy::too_many_arguments)]
pub fn make_background_scenario(
    n: u64,
    n_p: u64,
    n_q: u64,
    n_target: u64,
    beta: f64,
    c0: f64,
    c1: f64,
) -> Result<MultitaskScenario> {
    if n == 0 || n_p == 0 || n_q == 0 || n_target == 0 {
        return Err(Error::param("all counts must be ≥ 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta={beta} outside (0,1)")));
    }
    if !(c0 > 0.0 && c1 > 0.0) {
        return Err(Error::param("c0 and c1 must be positive"));
    }
    let k = -1.0 / (2.0 - beta);
    let eps0 = (n_target as f64).powf(k).min(1.0);
    let eps = ((n * n_p) as f64).powf(k);
    let target = TwoPointDistribution::new(0.5 * eps0.powf(beta), 0.5 + c0 * eps0.powf(1.0 - beta), 1)?;
    let benign = TwoPointDistribution::new(1.0, 1.0, 1)?;
    let noisy = TwoPointDistribution::new(c1 * eps.powf(beta), 0.5 + eps.powf(1.0 - beta), 1)?;
    let c_beta = (0.5 * c0.powf(-beta)).max(2.0);
    let (nq, np) = (n_q as f64, n_p as f64);
    let big = (2.0 - (n as f64 + 1.0) * beta) / (2.0 - beta) * nq.ln()
        >= 15.0 * n as f64 * std::f64::consts::LN_2 + 2.0 * np.ln();
    let tags: Vec<TaskTag> = (0..n_p + n_q)
        .map(|i| if i < n_p { TaskTag::Benign } else { TaskTag::Noisy })
        .collect();
    Ok(MultitaskScenario {
        version: SCENARIO_VERSION.into(),
        family: Family::Background,
        n_per_task: n,
        sources: tags
            .iter()
            .map(|t| if t.is_informative() { benign } else { noisy })
            .collect(),
        target,
        params: ScenarioParams {
            beta: Some(beta),
            c_beta: Some(c_beta),
            epsilon: Some(eps),
            epsilon0: Some(eps0),
            n_target: Some(n_target),
            n_p: Some(n_p),
            n_q: Some(n_q),
            c0_const: Some(c0),
            c1_const: Some(c1),
            ..Default::default()
        },
        concept_class: ConceptClass::two_point(1),
        assignment: Some(tags),
        components: Components {
            informative: benign,
            noisy,
        },
        model: AssignmentModel::Fixed,
        flags: vec![
            ConstraintFlag {
                name: "n_q_at_least_3n_p".into(),
                holds: n_q >= 3 * n_p,
            },
            ConstraintFlag {
                name: "n_q_power_dominates".into(),
                holds: big,
            },
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionOutcome {
    pub m: usize,
    /// 1-based indices into the sorted exponent list.
    pub draws: Vec<usize>,
    pub assigned_rhos: Vec<f64>,
    pub feasible: bool,
}

/// S_i ≥ i for every i ∈ [m], where S_i counts draws ≤ i.
pub fn construction_feasible(draws: &[usize], m: usize) -> bool {
    let mut hist = vec![0usize; m + 1];
    for &d in draws {
        if (1..=m).contains(&d) {
            hist[d] += 1;
        }
    }
    let mut s = 0;
    for (i, h) in hist.iter().enumerate().skip(1) {
        s += h;
        if s < i {
            return false;
        }
    }
    true
}

pub fn random_construction(rho_list: &[f64], seed: u64) -> Result<ConstructionOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_construction_with(rho_list, &mut rng)
}

pub fn random_construction_with<R: Rng + ?Sized>(rho_list: &[f64], rng: &mut R) -> Result<ConstructionOutcome> {
    if rho_list.len() < 10 {
        return Err(Error::param(format!(
            "need N+1 ≥ 10 exponents, got {}",
            rho_list.len()
        )));
    }
    if let Some(r) = rho_list.iter().find(|r| !(**r >= 1.0)) {
        return Err(Error::param(format!("transfer exponent {r} < 1")));
    }
    let mut sorted = rho_list.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = rho_list.len() / 10;
    let draws: Vec<usize> = (0..rho_list.len()).map(|_| rng.random_range(1..=m)).collect();
    Ok(ConstructionOutcome {
        m,
        assigned_rhos: draws.iter().map(|&i| sorted[i - 1]).collect(),
        feasible: construction_feasible(&draws, m),
        draws,
    })
}
