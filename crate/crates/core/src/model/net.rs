use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AblationMode, FeatureMask};
use crate::error::{Error, Result};
use crate::model::gru::{CellVars, GruCellParams, CELL_SLOTS};
use crate::model::tda::context_on_tape;
use crate::numerics::{Matrix, ParamStore, Tape, Var};

const ENCODER: &str = "gru";
const CONTEXT: &str = "ctx";
pub const MOVEMENT_W: &str = "movement.w";
pub const MOVEMENT_B: &str = "movement.b";
pub const VOLATILITY_W: &str = "volatility.w";
pub const VOLATILITY_B: &str = "volatility.b";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Encoder + temporal-distance context + fused heads.
    #[default]
    Alerta,
    /// Encoder only: movement head over `h^t`, volatility head over `[h^t; ŷ_m]`.
    Gru,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alerta" => Ok(ModelKind::Alerta),
            "gru" => Ok(ModelKind::Gru),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Alerta => "alerta",
            ModelKind::Gru => "gru",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub window: usize,
    pub kind: ModelKind,
    /// Give the context update its own GRU weights instead of reusing the encoder's.
    pub separate_context_cell: bool,
    /// Divide the weighted hidden-state sum by `H_t`.
    pub tda_normalize: bool,
    pub ablation: AblationMode,
    /// Names of the input rows, in order. Length equals `input_dim`.
    pub feature_names: Vec<String>,
}

impl ModelConfig {
    pub fn new(input_dim: usize, hidden_dim: usize, window: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            window,
            kind: ModelKind::Alerta,
            separate_context_cell: false,
            tda_normalize: false,
            ablation: AblationMode::Full,
            feature_names: (0..input_dim).map(|i| format!("f{i}")).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.window == 0 {
            return Err(Error::Config(format!(
                "model dimensions must be positive (D={}, U={}, T={})",
                self.input_dim, self.hidden_dim, self.window
            )));
        }
        if self.feature_names.len() != self.input_dim {
            return Err(Error::Config(format!(
                "{} feature names for input dimension {}",
                self.feature_names.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn fused_dim(&self) -> usize {
        match self.kind {
            ModelKind::Alerta => 2 * self.hidden_dim,
            ModelKind::Gru => self.hidden_dim,
        }
    }

    fn uses_context_cell(&self) -> bool {
        self.kind == ModelKind::Alerta && self.separate_context_cell
    }

    /// Short human-readable description, used in error messages.
    pub fn describe(&self) -> String {
        format!(
            "{} model D={} U={} T={} features=[{}]",
            self.kind,
            self.input_dim,
            self.hidden_dim,
            self.window,
            self.feature_names.join(", ")
        )
    }
}

/// Everything one forward pass produces for a single window.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `U x T`, column `i` is `h^{i+1}`.
    pub hidden: Matrix,
    /// `c^t`; absent for the plain-GRU baseline.
    pub context: Option<Matrix>,
    pub movement_logit: f64,
    pub movement_prob: f64,
    pub volatility_logit: f64,
    pub volatility_prob: f64,
}

/// Output nodes of a batched forward pass; every matrix has one column per sample.
#[derive(Debug, Clone)]
pub struct GraphOutputs {
    pub hidden: Vec<Var>,
    pub context: Option<Var>,
    pub movement_logit: Var,
    pub movement_prob: Var,
    pub volatility_logit: Var,
    pub volatility_prob: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlertaNet {
    pub config: ModelConfig,
    pub params: ParamStore,
}

impl AlertaNet {
    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        let (d, u) = (config.input_dim, config.hidden_dim);
        let cell = |params: &mut ParamStore, prefix: &str| -> Result<()> {
            for slot in CELL_SLOTS {
                let shape = match &slot[..1] {
                    "w" => (u, d),
                    "r" => (u, u),
                    _ => (u, 1),
                };
                params.insert(format!("{prefix}.{slot}"), Matrix::zeros(shape.0, shape.1))?;
            }
            Ok(())
        };
        cell(&mut params, ENCODER)?;
        if config.uses_context_cell() {
            cell(&mut params, CONTEXT)?;
        }
        let fused = config.fused_dim();
        params.insert(MOVEMENT_W, Matrix::zeros(1, fused))?;
        params.insert(MOVEMENT_B, Matrix::zeros(1, 1))?;
        params.insert(VOLATILITY_W, Matrix::zeros(1, fused + 1))?;
        params.insert(VOLATILITY_B, Matrix::zeros(1, 1))?;
        Ok(Self { config, params })
    }

    /// Weight matrices uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<_> = net.params.ids().collect();
        for id in ids {
            if is_bias(net.params.name(id)) {
                continue;
            }
            let m = net.params.value_mut(id);
            let limit = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
            m.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn encoder_params(&self) -> Result<GruCellParams> {
        GruCellParams::from_store(&self.params, ENCODER)
    }

    pub fn context_params(&self) -> Result<GruCellParams> {
        let prefix = if self.config.uses_context_cell() { CONTEXT } else { ENCODER };
        GruCellParams::from_store(&self.params, prefix)
    }

    /// Names of the parameters that only feed the volatility head.
    pub fn volatility_head_names() -> [&'static str; 2] {
        [VOLATILITY_W, VOLATILITY_B]
    }

    /// Record a batched forward pass. Each window is `D x T`.
    pub fn build_graph(&self, tape: &mut Tape, windows: &[&Matrix]) -> Result<GraphOutputs> {
        let cfg = &self.config;
        if windows.is_empty() {
            return Err(Error::Usage("forward pass over an empty batch".into()));
        }
        let (d, t_len) = (cfg.input_dim, cfg.window);
        for w in windows {
            if w.shape() != (d, t_len) {
                return Err(Error::dims("forward", (d, t_len), w.shape()));
            }
        }
        let batch = windows.len();
        let encoder = CellVars::params(tape, &self.params, ENCODER)?;
        let context_cell = if cfg.uses_context_cell() {
            CellVars::params(tape, &self.params, CONTEXT)?
        } else {
            encoder
        };

        let mut inputs = Vec::with_capacity(t_len);
        for step in 0..t_len {
            let x = Matrix::from_fn(d, batch, |i, b| windows[b].get(i, step));
            inputs.push(tape.constant(x));
        }

        let mut h = tape.constant(Matrix::zeros(cfg.hidden_dim, batch));
        let mut hidden = Vec::with_capacity(t_len);
        for &x in &inputs {
            h = encoder.step(tape, x, h)?;
            hidden.push(h);
        }
        let last = *hidden.last().expect("window >= 1");

        let (fused, context) = match cfg.kind {
            ModelKind::Alerta => {
                let c = context_on_tape(tape, &context_cell, inputs[t_len - 1], &hidden, cfg.tda_normalize)?;
                (tape.vstack(&[last, c])?, Some(c))
            }
            ModelKind::Gru => (last, None),
        };

        let mw = tape.param(&self.params, self.params.id(MOVEMENT_W)?);
        let mb = tape.param(&self.params, self.params.id(MOVEMENT_B)?);
        let m_lin = tape.matmul(mw, fused)?;
        let movement_logit = tape.add_column(m_lin, mb)?;
        let movement_prob = tape.sigmoid(movement_logit)?;

        let vol_in = tape.vstack(&[fused, movement_prob])?;
        let vw = tape.param(&self.params, self.params.id(VOLATILITY_W)?);
        let vb = tape.param(&self.params, self.params.id(VOLATILITY_B)?);
        let v_lin = tape.matmul(vw, vol_in)?;
        let volatility_logit = tape.add_column(v_lin, vb)?;
        let volatility_prob = tape.sigmoid(volatility_logit)?;

        Ok(GraphOutputs {
            hidden,
            context,
            movement_logit,
            movement_prob,
            volatility_logit,
            volatility_prob,
        })
    }

    /// Forward pass for one window whose rows already match this model's features.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        let mut tape = Tape::new();
        let out = self.build_graph(&mut tape, &[x])?;
        let mut hidden = Matrix::zeros(self.config.hidden_dim, self.config.window);
        for (j, &h) in out.hidden.iter().enumerate() {
            for i in 0..self.config.hidden_dim {
                hidden.set(i, j, tape.value(h).get(i, 0));
            }
        }
        let scalar = |v: Var| tape.value(v).get(0, 0);
        Ok(ForwardTrace {
            hidden,
            context: out.context.map(|c| tape.value(c).clone()),
            movement_logit: scalar(out.movement_logit),
            movement_prob: scalar(out.movement_prob),
            volatility_logit: scalar(out.volatility_logit),
            volatility_prob: scalar(out.volatility_prob),
        })
    }

    /// Forward pass on a full-schema window: the rows in `mask` are kept and
    /// the rest dropped before the model sees them.
    pub fn forward_masked(&self, x: &Matrix, mask: &FeatureMask) -> Result<ForwardTrace> {
        self.forward(&x.select_rows(&mask.indices)?)
    }

    /// `(movement_prob, volatility_prob)` per window, evaluated in chunks.
    pub fn predict(&self, windows: &[&Matrix], chunk: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(windows.len());
        for part in windows.chunks(chunk.max(1)) {
            let mut tape = Tape::new();
            let g = self.build_graph(&mut tape, part)?;
            let pm = tape.value(g.movement_prob).data();
            let pv = tape.value(g.volatility_prob).data();
            out.extend(pm.iter().copied().zip(pv.iter().copied()));
        }
        Ok(out)
    }
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".b") || name.rsplit('.').next().is_some_and(|s| s.starts_with("b_"))
}
