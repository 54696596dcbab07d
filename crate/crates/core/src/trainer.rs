//! A least-squares toy model trained with Adam under a gradient-reuse
//! schedule. Small enough to check the reuse mechanics bit for bit.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HullftError, Result};
use crate::schedule::{StepAction, TrainingSchedule};

pub const DEFAULT_TOY_LEARNING_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::with_learning_rate(DEFAULT_TOY_LEARNING_RATE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        Self { config, m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }
}

/// One bias-corrected Adam update of `params` with gradient `grad`.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64]) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(HullftError::DimensionMismatch { expected: state.m.len(), found: params.len() });
    }
    if grad.len() != params.len() {
        return Err(HullftError::DimensionMismatch { expected: params.len(), found: grad.len() });
    }
    if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
        return Err(HullftError::NonFinite(format!("gradient coordinate {pos} is {}", grad[pos])));
    }
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grad).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

/// Per-example loss `½‖θ − target(s)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub initial: Vec<f64>,
    pub targets: BTreeMap<String, Vec<f64>>,
}

impl ToyModel {
    pub fn new(initial: Vec<f64>, targets: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if initial.is_empty() {
            return Err(HullftError::contract("toy model needs at least one parameter"));
        }
        for (id, t) in &targets {
            if t.len() != initial.len() {
                return Err(HullftError::contract(format!(
                    "target {id:?} has dimension {} but parameters have {}",
                    t.len(),
                    initial.len()
                )));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(HullftError::NonFinite(format!("target {id:?}")));
            }
        }
        Ok(Self { initial, targets })
    }

    /// Initial parameters drawn uniformly from `[-1, 1)` with a seeded ChaCha8 stream.
    pub fn with_seeded_init(targets: BTreeMap<String, Vec<f64>>, seed: u64) -> Result<Self> {
        let dim = targets
            .values()
            .next()
            .map(Vec::len)
            .ok_or_else(|| HullftError::contract("toy model needs at least one target"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::new(initial, targets)
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    fn target(&self, id: &str) -> Result<&[f64]> {
        self.targets.get(id).map(Vec::as_slice).ok_or_else(|| HullftError::UnknownExample(id.to_string()))
    }

    pub fn loss(&self, params: &[f64], id: &str) -> Result<f64> {
        let t = self.target(id)?;
        Ok(0.5 * params.iter().zip(t).map(|(p, y)| (p - y) * (p - y)).sum::<f64>())
    }

    /// `∇L = θ − target(s)`.
    pub fn gradient(&self, params: &[f64], id: &str) -> Result<Vec<f64>> {
        let t = self.target(id)?;
        Ok(params.iter().zip(t).map(|(p, y)| p - y).collect())
    }

    /// Mean loss over `ids` (the scheduled multiset), or over every target
    /// when `ids` is empty.
    pub fn objective<'a>(&self, params: &[f64], ids: impl IntoIterator<Item = &'a str>) -> Result<f64> {
        let mut total = 0.0;
        let mut n = 0usize;
        for id in ids {
            total += self.loss(params, id)?;
            n += 1;
        }
        if n == 0 {
            for id in self.targets.keys() {
                total += self.loss(params, id)?;
                n += 1;
            }
        }
        Ok(if n == 0 { 0.0 } else { total / n as f64 })
    }

    fn check_ids<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for id in ids {
            self.target(id)?;
        }
        Ok(())
    }
}

/// The gradient applied on reuse steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedGradient {
    pub gradient: Vec<f64>,
    pub source: String,
    /// Steps since the gradient was computed.
    pub age: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    /// Objective before training, then after every step.
    pub loss_trace: Vec<f64>,
    /// Gradient evaluations actually performed.
    pub fb_passes: usize,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace holds the initial loss")
    }
}

/// Trains `model` through `schedule`, computing a gradient only on refresh
/// steps. Adam state carries across blocks and its step counter advances on
/// every applied update.
pub fn grad_reuse_train(model: &ToyModel, schedule: &TrainingSchedule, learning_rate: f64) -> Result<TrainOutcome> {
    schedule.validate()?;
    model.check_ids(schedule.ids())?;
    let r = schedule.refresh_interval;

    let mut params = model.initial.clone();
    let mut adam = AdamState::new(model.dim(), AdamConfig::with_learning_rate(learning_rate));
    let mut cache: Option<CachedGradient> = None;
    let mut fb_passes = 0usize;
    let mut loss_trace = Vec::with_capacity(schedule.steps.len() + 1);
    loss_trace.push(model.objective(&params, schedule.ids())?);

    for (i, step) in schedule.steps.iter().enumerate() {
        match step.action {
            StepAction::Refresh => {
                let gradient = model.gradient(&params, &step.id)?;
                fb_passes += 1;
                cache = Some(CachedGradient { gradient, source: step.id.clone(), age: 0 });
            }
            StepAction::Reuse => {
                let cached = cache
                    .as_mut()
                    .ok_or_else(|| HullftError::contract(format!("step {i} reuses before any refresh")))?;
                if cached.source != step.id {
                    return Err(HullftError::contract(format!(
                        "step {i} reuses the gradient of {:?} for {:?}",
                        cached.source, step.id
                    )));
                }
                cached.age += 1;
                if cached.age >= r {
                    return Err(HullftError::contract(format!(
                        "step {i} reuses a gradient of age {} with refresh interval {r}",
                        cached.age
                    )));
                }
            }
        }
        let grad = &cache.as_ref().expect("refreshed above").gradient;
        adam_step(&mut adam, &mut params, grad)?;
        loss_trace.push(model.objective(&params, schedule.ids())?);
    }
    Ok(TrainOutcome { params, loss_trace, fb_passes })
}

/// Reference loop: recompute the gradient on every step, ignoring reuse flags.
pub fn plain_train(model: &ToyModel, schedule: &TrainingSchedule, learning_rate: f64) -> Result<TrainOutcome> {
    model.check_ids(schedule.ids())?;
    let mut params = model.initial.clone();
    let mut adam = AdamState::new(model.dim(), AdamConfig::with_learning_rate(learning_rate));
    let mut loss_trace = vec![model.objective(&params, schedule.ids())?];
    for step in &schedule.steps {
        let grad = model.gradient(&params, &step.id)?;
        adam_step(&mut adam, &mut params, &grad)?;
        loss_trace.push(model.objective(&params, schedule.ids())?);
    }
    Ok(TrainOutcome { params, loss_trace, fb_passes: schedule.steps.len() })
}
