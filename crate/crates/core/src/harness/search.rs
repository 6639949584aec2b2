//! Hyperparameter search spaces and seeded random search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::R2_SENTINEL;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ParamValue, TrialParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSpec {
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    IntUniform { lo: i64, hi: i64 },
    Categorical(Vec<ParamValue>),
    Fixed(ParamValue),
    /// `"auto"` with probability ½, otherwise a draw from the inner spec.
    AutoOr(Box<ParamSpec>),
}

impl ParamSpec {
    pub fn sample(&self, rng: &mut impl Rng) -> ParamValue {
        match self {
            ParamSpec::LogUniform { lo, hi } => ParamValue::Float(rng.random_range(lo.ln()..=hi.ln()).exp()),
            ParamSpec::Uniform { lo, hi } => ParamValue::Float(rng.random_range(*lo..=*hi)),
            ParamSpec::IntUniform { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            ParamSpec::Categorical(choices) => choices[rng.random_range(0..choices.len())].clone(),
            ParamSpec::Fixed(v) => v.clone(),
            ParamSpec::AutoOr(inner) => {
                if rng.random_bool(0.5) {
                    ParamValue::Str("auto".into())
                } else {
                    inner.sample(rng)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParam {
    pub name: String,
    pub spec: ParamSpec,
    /// Sampled only when the named parameter already drew this value.
    pub active_when: Option<(String, ParamValue)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<SearchParam>,
    pub trial_budget: usize,
}

fn param(name: &str, spec: ParamSpec) -> SearchParam {
    SearchParam { name: name.into(), spec, active_when: None }
}

fn strs(values: &[&str]) -> ParamSpec {
    ParamSpec::Categorical(values.iter().map(|s| ParamValue::Str(s.to_string())).collect())
}

const ALPHA: ParamSpec = ParamSpec::LogUniform { lo: 1e-3, hi: 1e3 };

impl SearchSpace {
    /// Search spaces and trial budgets of the benchmark protocol.
    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Ridge => Self { params: vec![param("alpha", ALPHA)], trial_budget: 20 },
            ModelKind::Dt => Self {
                params: vec![
                    param("max_depth", ParamSpec::IntUniform { lo: 1, hi: 20 }),
                    param("min_samples_leaf", ParamSpec::Uniform { lo: 0.005, hi: 0.1 }),
                    param("min_samples_split", ParamSpec::Uniform { lo: 0.01, hi: 0.1 }),
                ],
                trial_budget: 25,
            },
            ModelKind::Erbf => Self {
                params: vec![
                    param("n_rbf", ParamSpec::AutoOr(Box::new(ParamSpec::IntUniform { lo: 10, hi: 80 }))),
                    param("alpha", ALPHA),
                    param("center_init", strs(&["lipschitz", "kmeans"])),
                    param("width_init", strs(&["local_ridge", "local_variance"])),
                    param("width_optim_iters", ParamSpec::Fixed(ParamValue::Int(30))),
                ],
                trial_budget: 30,
            },
            ModelKind::ChebyPoly => Self {
                params: vec![
                    param("complexity", ParamSpec::IntUniform { lo: 1, hi: 14 }),
                    param("alpha", ALPHA),
                    param("include_interactions", ParamSpec::Categorical(vec![ParamValue::Bool(true), ParamValue::Bool(false)])),
                    SearchParam {
                        name: "max_interaction_complexity".into(),
                        spec: ParamSpec::IntUniform { lo: 1, hi: 2 },
                        active_when: Some(("include_interactions".into(), ParamValue::Bool(true))),
                    },
                ],
                trial_budget: 30,
            },
            ModelKind::ChebyTree => Self {
                params: vec![
                    param("complexity", ParamSpec::IntUniform { lo: 1, hi: 6 }),
                    param("alpha", ALPHA),
                    param("max_depth", ParamSpec::IntUniform { lo: 1, hi: 12 }),
                    param("min_samples_leaf", ParamSpec::Uniform { lo: 0.01, hi: 0.1 }),
                ],
                trial_budget: 30,
            },
        }
    }

    /// Draws one configuration; parameters are visited in declaration order.
    pub fn sample(&self, rng: &mut impl Rng) -> TrialParams {
        let mut out = TrialParams::new();
        for p in &self.params {
            if let Some((parent, value)) = &p.active_when {
                if out.get(parent) != Some(value) {
                    continue;
                }
            }
            out.insert(p.name.clone(), p.spec.sample(rng));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub params: TrialParams,
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: TrialParams,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

/// Proposes the next configuration given the trials so far.
pub trait SearchStrategy {
    fn propose(&mut self, space: &SearchSpace, history: &[Trial]) -> TrialParams;
}

/// I.i.d. sampling from the space.
pub struct RandomSearch {
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl SearchStrategy for RandomSearch {
    fn propose(&mut self, space: &SearchSpace, _history: &[Trial]) -> TrialParams {
        space.sample(&mut self.rng)
    }
}

/// Runs `budget` trials, maximising `objective`. A failed trial scores
/// [`R2_SENTINEL`]; ties keep the earlier trial.
pub fn search_with<S, F>(strategy: &mut S, space: &SearchSpace, mut objective: F, budget: usize) -> Result<SearchOutcome>
where
    S: SearchStrategy + ?Sized,
    F: FnMut(&TrialParams) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::InvalidInput("search budget must be >= 1".into()));
    }
    let mut trials: Vec<Trial> = Vec::with_capacity(budget);
    let mut best = 0;
    for t in 0..budget {
        let params = strategy.propose(space, &trials);
        let (score, error) = match objective(&params) {
            Ok(s) if s.is_finite() => (s, None),
            Ok(s) => (R2_SENTINEL, Some(format!("non-finite score {s}"))),
            Err(e) => (R2_SENTINEL, Some(e.to_string())),
        };
        if score > trials.get(best).map_or(f64::NEG_INFINITY, |b: &Trial| b.score) {
            best = t;
        }
        trials.push(Trial { params, score, error });
    }
    Ok(SearchOutcome { best: trials[best].params.clone(), best_score: trials[best].score, trials })
}

pub fn random_search<F>(space: &SearchSpace, objective: F, budget: usize, seed: u64) -> Result<SearchOutcome>
where
    F: FnMut(&TrialParams) -> Result<f64>,
{
    search_with(&mut RandomSearch::new(seed), space, objective, budget)
}
