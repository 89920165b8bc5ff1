use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{backward, forward, forward_cached};
use super::params::PredictorParams;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeFeatures};
use crate::sir::InfluenceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pretrain,
    Finetune,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub stage: Stage,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl TrainConfig {
    pub fn pretrain() -> Self {
        TrainConfig {
            stage: Stage::Pretrain,
            learning_rate: 1e-3,
            epochs: 200,
            seed: 7,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn finetune() -> Self {
        TrainConfig {
            stage: Stage::Finetune,
            learning_rate: 1e-4,
            epochs: 100,
            ..TrainConfig::pretrain()
        }
    }

    pub fn validate(&self) -> Result<()> {
        // a zero rate is allowed for fine-tuning, where it is the identity
        let lr_ok = match self.stage {
            Stage::Pretrain => self.learning_rate > 0.0,
            Stage::Finetune => self.learning_rate >= 0.0,
        };
        if !lr_ok || !self.learning_rate.is_finite() {
            return Err(Error::param(format!("learning rate {} not allowed", self.learning_rate)));
        }
        if self.stage == Stage::Pretrain && self.epochs == 0 {
            return Err(Error::param("pretraining needs at least one epoch"));
        }
        Ok(())
    }
}

/// A graph, its features and the labeled nodes used for the loss. Targets
/// are influence fractions (influence / n) in `(0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct LabeledGraph<'a> {
    pub graph: &'a Graph,
    pub features: &'a NodeFeatures,
    pub labels: &'a [(usize, f64)],
}

/// Converts an influence table to fractional targets.
pub fn fraction_labels(table: &InfluenceTable, n: usize) -> Vec<(usize, f64)> {
    table
        .nodes
        .iter()
        .zip(&table.values)
        .map(|(&v, &x)| (v, x / n as f64))
        .collect()
}

fn check_labels(sample: &LabeledGraph<'_>) -> Result<()> {
    let n = sample.graph.node_count();
    for &(v, t) in sample.labels {
        if v >= n {
            return Err(Error::param(format!("label for node {v} outside graph of {n} nodes")));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::param(format!("target {t} for node {v} outside (0, 1]")));
        }
    }
    Ok(())
}

/// Mean squared error over every label in `batch` and its exact gradient.
pub fn loss_and_gradients(params: &PredictorParams, batch: &[LabeledGraph<'_>]) -> Result<(f64, PredictorParams)> {
    let total: usize = batch.iter().map(|s| s.labels.len()).sum();
    if total == 0 {
        return Err(Error::param("empty training batch"));
    }
    let mut grads = params.zeros_like();
    let mut sum_sq = 0.0;
    for sample in batch {
        if sample.labels.is_empty() {
            continue;
        }
        check_labels(sample)?;
        let cache = forward_cached(params, sample.graph, sample.features)?;
        let mut out_grad = vec![0.0; sample.graph.node_count()];
        for &(v, t) in sample.labels {
            let err = cache.output[v] - t;
            sum_sq += err * err;
            out_grad[v] += 2.0 * err / total as f64;
        }
        backward(params, &cache, &out_grad, &mut grads);
    }
    Ok((sum_sq / total as f64, grads))
}

/// Mean squared error only.
pub fn loss(params: &PredictorParams, batch: &[LabeledGraph<'_>]) -> Result<f64> {
    let mut sum_sq = 0.0;
    let mut total = 0usize;
    for sample in batch {
        if sample.labels.is_empty() {
            continue;
        }
        let y = forward(params, sample.graph, sample.features)?;
        for &(v, t) in sample.labels {
            sum_sq += (y[v] - t) * (y[v] - t);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::param("empty training batch"));
    }
    Ok(sum_sq / total as f64)
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(params: &PredictorParams) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, cfg: &TrainConfig, params: &mut PredictorParams, grads: &PredictorParams) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for (((w, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for k in 0..w.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                w[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Trained parameters plus the corpus loss before and after training.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: PredictorParams,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Corpus loss after each epoch.
    pub trace: Vec<f64>,
}

/// Full-batch Adam, one step per graph per epoch; graph order is reshuffled
/// every epoch from `cfg.seed`.
fn train(mut params: PredictorParams, corpus: &[LabeledGraph<'_>], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let usable: Vec<&LabeledGraph<'_>> = corpus.iter().filter(|s| !s.labels.is_empty()).collect();
    if usable.is_empty() {
        return Err(Error::param("training corpus has no labels"));
    }
    for s in &usable {
        check_labels(s)?;
    }
    let initial_loss = loss(&params, corpus)?;
    finite(initial_loss, 0)?;
    let mut adam = Adam::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (batch_loss, grads) = loss_and_gradients(&params, std::slice::from_ref(usable[k]))?;
            finite(batch_loss, epoch)?;
            adam.update(cfg, &mut params, &grads);
        }
        let epoch_loss = loss(&params, corpus)?;
        finite(epoch_loss, epoch)?;
        log::debug!("{:?} epoch {epoch}: loss {epoch_loss:.3e}", cfg.stage);
        trace.push(epoch_loss);
    }
    let final_loss = trace.last().copied().unwrap_or(initial_loss);
    Ok(TrainReport {
        params,
        initial_loss,
        final_loss,
        trace,
    })
}

fn finite(loss: f64, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("training loss became {loss} at epoch {epoch}")))
    }
}

/// Trains a fresh model on labeled synthetic graphs (the basic predictor).
pub fn pretrain(init: PredictorParams, corpus: &[LabeledGraph<'_>], cfg: &TrainConfig) -> Result<TrainReport> {
    if corpus.is_empty() {
        return Err(Error::param("pretraining corpus is empty"));
    }
    train(init, corpus, &TrainConfig { stage: Stage::Pretrain, ..*cfg })
}

/// Continues training from `params` on the labeled nodes of one target graph.
pub fn finetune(params: &PredictorParams, target: LabeledGraph<'_>, cfg: &TrainConfig) -> Result<TrainReport> {
    train(params.clone(), &[target], &TrainConfig { stage: Stage::Finetune, ..*cfg })
}

/// Predicted influence (fraction times `n`, clamped to `[1, n]`).
pub fn predict_influence(params: &PredictorParams, g: &Graph, x: &NodeFeatures, beta: f64) -> Result<InfluenceTable> {
    let n = g.node_count() as f64;
    let values = forward(params, g, x)?
        .into_iter()
        .map(|y| (y * n).clamp(1.0, n))
        .collect();
    Ok(InfluenceTable::predicted(values, beta))
}
