use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AblationMode, DatasetSplit, FeatureMask, FeatureSchema, MovementLabel, WindowedSample};
use crate::error::{Error, Result};
use crate::model::{AlertaNet, ModelConfig, ModelKind};
use crate::numerics::{Matrix, ParamId, Tape};
use crate::train::adam::{clip_grad_norm, Adam};
use crate::train::loss::{batch_loss, LossWeights};

/// Hyperparameters for one training run. Every field has a default so
/// partial JSON config files work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Expected window length; `None` accepts whatever the dataset holds.
    pub window: Option<usize>,
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Weight of the volatility term.
    pub lambda: f64,
    pub ablation: AblationMode,
    pub model: ModelKind,
    pub tda_normalize: bool,
    pub separate_context_cell: bool,
    pub two_stage: bool,
    pub patience: usize,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Weight positive volatility samples by `N_neg / N_pos` of the training split.
    pub vol_pos_weight: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: None,
            hidden: 32,
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
            lambda: 1.0,
            ablation: AblationMode::Full,
            model: ModelKind::Alerta,
            tda_normalize: false,
            separate_context_cell: false,
            two_stage: false,
            patience: 20,
            clip_norm: Some(5.0),
            vol_pos_weight: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return bad("epochs, batch_size and hidden must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.adam_eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps must be positive".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be positive, got {c}"));
            }
        }
        if self.window == Some(0) {
            return bad("window must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub movement: f64,
    pub volatility: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Joint,
    Movement,
    Volatility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: Stage,
    pub epoch: usize,
    pub train: LossBreakdown,
    pub validation: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub model: ModelConfig,
    pub vol_pos_weight: f64,
    pub epochs: Vec<EpochRecord>,
    /// Best epoch (1-based) of the final stage.
    pub best_epoch: usize,
    pub stages: Vec<StageSummary>,
    pub optimizer_steps: u64,
    pub checkpoint: Option<String>,
    pub manifest: Option<String>,
    pub threads: usize,
}

/// Train samples with rows already selected for the model.
struct Prepared {
    x: Vec<Matrix>,
    labels: Vec<(MovementLabel, bool)>,
}

impl Prepared {
    fn new(samples: &[WindowedSample], mask: &FeatureMask) -> Result<Self> {
        Ok(Self {
            x: samples
                .iter()
                .map(|s| s.x.select_rows(&mask.indices))
                .collect::<Result<_>>()?,
            labels: samples.iter().map(|s| (s.y_m, s.y_v)).collect(),
        })
    }
}

const EVAL_CHUNK: usize = 256;

/// Full-pass objective, averaged over all samples.
fn dataset_loss(net: &AlertaNet, data: &Prepared, weights: LossWeights) -> Result<LossBreakdown> {
    let n = data.x.len();
    let (mut m, mut v) = (0.0, 0.0);
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let refs: Vec<&Matrix> = data.x[start..end].iter().collect();
        let mut tape = Tape::new();
        let out = net.build_graph(&mut tape, &refs)?;
        let loss = batch_loss(&mut tape, &out, &data.labels[start..end], weights)?;
        let share = (end - start) as f64;
        m += tape.value(loss.movement).get(0, 0) * share;
        v += tape.value(loss.volatility).get(0, 0) * share;
    }
    let (m, v) = (m / n as f64, v / n as f64);
    Ok(LossBreakdown {
        movement: m,
        volatility: v,
        total: weights.movement * m + weights.lambda * v,
    })
}

/// Model configuration implied by `cfg` for samples described by `schema`.
pub fn model_config(schema: &FeatureSchema, window: usize, cfg: &TrainConfig) -> Result<(ModelConfig, FeatureMask)> {
    let mask = schema.mask(cfg.ablation)?;
    let names = mask.indices.iter().map(|&i| schema.columns[i].name.clone()).collect();
    let model = ModelConfig {
        input_dim: mask.len(),
        hidden_dim: cfg.hidden,
        window,
        kind: cfg.model,
        separate_context_cell: cfg.separate_context_cell,
        tda_normalize: cfg.tda_normalize,
        ablation: cfg.ablation,
        feature_names: names,
    };
    model.validate()?;
    Ok((model, mask))
}

/// Train from a seeded initialization.
pub fn train(split: &DatasetSplit, schema: &FeatureSchema, cfg: &TrainConfig) -> Result<(AlertaNet, TrainReport)> {
    cfg.validate()?;
    let window = split
        .train
        .first()
        .ok_or_else(|| Error::Config("training split is empty".into()))?
        .x
        .cols();
    let (model_cfg, _) = model_config(schema, window, cfg)?;
    let net = AlertaNet::init(model_cfg, cfg.seed)?;
    train_from(net, split, schema, cfg)
}

/// Train starting from `net`, whose feature names select rows of `schema`.
pub fn train_from(
    mut net: AlertaNet,
    split: &DatasetSplit,
    schema: &FeatureSchema,
    cfg: &TrainConfig,
) -> Result<(AlertaNet, TrainReport)> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if split.validation.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let window = split.train[0].x.cols();
    if let Some(w) = cfg.window {
        if w != window {
            return Err(Error::Config(format!(
                "configured window {w} does not match the dataset window {window}"
            )));
        }
    }
    if net.config.window != window {
        return Err(Error::Config(format!(
            "model window {} does not match the dataset window {window}",
            net.config.window
        )));
    }
    let mask = schema.mask_for_names(&net.config.feature_names)?;
    let train_set = Prepared::new(&split.train, &mask)?;
    let valid_set = Prepared::new(&split.validation, &mask)?;

    let positives = train_set.labels.iter().filter(|l| l.1).count();
    let negatives = train_set.labels.len() - positives;
    let pos_weight = if cfg.vol_pos_weight && positives > 0 {
        negatives as f64 / positives as f64
    } else {
        1.0
    };

    let all: Vec<ParamId> = net.params.ids().collect();
    let vol_head: Vec<ParamId> = AlertaNet::volatility_head_names()
        .iter()
        .map(|n| net.params.id(n))
        .collect::<Result<_>>()?;
    let encoder_and_movement: Vec<ParamId> = all.iter().copied().filter(|id| !vol_head.contains(id)).collect();

    let mut plan = Vec::new();
    if cfg.two_stage {
        plan.push((
            Stage::Movement,
            encoder_and_movement,
            LossWeights {
                movement: 1.0,
                lambda: 0.0,
                vol_pos_weight: pos_weight,
            },
        ));
        plan.push((
            Stage::Volatility,
            vol_head,
            LossWeights {
                movement: 0.0,
                lambda: cfg.lambda,
                vol_pos_weight: pos_weight,
            },
        ));
    } else {
        plan.push((
            Stage::Joint,
            all,
            LossWeights {
                movement: 1.0,
                lambda: cfg.lambda,
                vol_pos_weight: pos_weight,
            },
        ));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut records = Vec::new();
    let mut stages = Vec::new();
    let mut steps = 0;

    for (stage, trainable, weights) in plan {
        let mut adam = Adam::new(&net.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
        let mut best = (f64::INFINITY, 0usize, net.params.clone());
        let mut since_best = 0;
        let mut order: Vec<usize> = (0..train_set.x.len()).collect();
        let mut epochs_run = 0;
        let mut stopped_early = false;

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
                let refs: Vec<&Matrix> = batch.iter().map(|&i| &train_set.x[i]).collect();
                let labels: Vec<_> = batch.iter().map(|&i| train_set.labels[i]).collect();
                let mut tape = Tape::new();
                let out = net.build_graph(&mut tape, &refs)?;
                let loss = batch_loss(&mut tape, &out, &labels, weights)?;
                tape.backward(loss.total, &mut net.params)?;
                let value = tape.value(loss.total).get(0, 0);
                if !value.is_finite() || net.params.first_non_finite().is_some() {
                    let param = net.params.first_non_finite().unwrap_or("<loss only>").to_string();
                    return Err(Error::NonFinite {
                        epoch,
                        batch: batch_no,
                        param,
                    });
                }
                if let Some(max) = cfg.clip_norm {
                    clip_grad_norm(&mut net.params, &trainable, max);
                }
                adam.step(&mut net.params, &trainable);
            }
            epochs_run = epoch;

            let train_loss = dataset_loss(&net, &train_set, weights)?;
            let valid_loss = dataset_loss(&net, &valid_set, weights)?;
            log::debug!(
                "{stage:?} epoch {epoch}: train {:.5} valid {:.5}",
                train_loss.total,
                valid_loss.total
            );
            records.push(EpochRecord {
                stage,
                epoch,
                train: train_loss,
                validation: valid_loss,
            });
            if valid_loss.total < best.0 {
                best = (valid_loss.total, epoch, net.params.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
        steps += adam.steps();
        net.params = best.2;
        net.params.zero_grads();
        stages.push(StageSummary {
            stage,
            best_epoch: best.1,
            epochs_run,
            stopped_early,
        });
    }

    let report = TrainReport {
        config: cfg.clone(),
        model: net.config.clone(),
        vol_pos_weight: pos_weight,
        epochs: records,
        best_epoch: stages.last().map_or(0, |s| s.best_epoch),
        stages,
        optimizer_steps: steps,
        checkpoint: None,
        manifest: None,
        threads: 1,
    };
    Ok((net, report))
}
