use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamStore, Tape, Var};

/// Weights of one GRU cell with input size `D` and hidden size `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCellParams {
    /// Input-to-hidden, `U x D`.
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    /// Hidden-to-hidden, `U x U`.
    pub r_z: Matrix,
    pub r_r: Matrix,
    pub r_h: Matrix,
    /// Biases, `U x 1`.
    pub b_z: Matrix,
    pub b_r: Matrix,
    pub b_h: Matrix,
}

pub(crate) const CELL_SLOTS: [&str; 9] = ["w_z", "w_r", "w_h", "r_z", "r_r", "r_h", "b_z", "b_r", "b_h"];

impl GruCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Matrix::zeros(hidden_dim, input_dim);
        let r = || Matrix::zeros(hidden_dim, hidden_dim);
        let b = || Matrix::zeros(hidden_dim, 1);
        Self {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            r_z: r(),
            r_r: r(),
            r_h: r(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_z.rows()
    }

    fn slots(&self) -> [&Matrix; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.r_z, &self.r_r, &self.r_h, &self.b_z, &self.b_r, &self.b_h,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let (u, d) = (self.hidden_dim(), self.input_dim());
        for (i, m) in self.slots().iter().enumerate() {
            let want = match i {
                0..=2 => (u, d),
                3..=5 => (u, u),
                _ => (u, 1),
            };
            if m.shape() != want {
                return Err(Error::dims("gru_params", want, m.shape()));
            }
        }
        Ok(())
    }

    /// Read `<prefix>.w_z` ... `<prefix>.b_h` out of `store`.
    pub fn from_store(store: &ParamStore, prefix: &str) -> Result<Self> {
        let g = |slot: &str| store.get(&format!("{prefix}.{slot}")).cloned();
        let p = Self {
            w_z: g("w_z")?,
            w_r: g("w_r")?,
            w_h: g("w_h")?,
            r_z: g("r_z")?,
            r_r: g("r_r")?,
            r_h: g("r_h")?,
            b_z: g("b_z")?,
            b_r: g("b_r")?,
            b_h: g("b_h")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn write_to_store(&self, store: &mut ParamStore, prefix: &str) -> Result<()> {
        for (slot, m) in CELL_SLOTS.iter().zip(self.slots()) {
            let id = store.id(&format!("{prefix}.{slot}"))?;
            if store.value(id).shape() != m.shape() {
                return Err(Error::dims("write_to_store", store.value(id).shape(), m.shape()));
            }
            *store.value_mut(id) = m.clone();
        }
        Ok(())
    }
}

/// A GRU cell's weights recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellVars {
    w: [Var; 3],
    r: [Var; 3],
    b: [Var; 3],
}

impl CellVars {
    pub(crate) fn params(tape: &mut Tape, store: &ParamStore, prefix: &str) -> Result<Self> {
        let mut v = Vec::with_capacity(9);
        for slot in CELL_SLOTS {
            v.push(tape.param(store, store.id(&format!("{prefix}.{slot}"))?));
        }
        Ok(Self {
            w: [v[0], v[1], v[2]],
            r: [v[3], v[4], v[5]],
            b: [v[6], v[7], v[8]],
        })
    }

    pub(crate) fn constants(tape: &mut Tape, p: &GruCellParams) -> Self {
        let mut c = |m: &Matrix| tape.constant(m.clone());
        Self {
            w: [c(&p.w_z), c(&p.w_r), c(&p.w_h)],
            r: [c(&p.r_z), c(&p.r_r), c(&p.r_h)],
            b: [c(&p.b_z), c(&p.b_r), c(&p.b_h)],
        }
    }

    /// One update. `x` is `D x B`, `h_prev` is `U x B`, one column per sample.
    ///
    /// ```text
    /// z  = σ(W_z x + R_z h_prev + b_z)
    /// r  = σ(W_r x + R_r h_prev + b_r)
    /// h̃  = tanh(W_h x + R_h (r ⊙ h_prev) + b_h)
    /// h  = (1 - z) ⊙ h_prev + z ⊙ h̃
    /// ```
    pub(crate) fn step(&self, tape: &mut Tape, x: Var, h_prev: Var) -> Result<Var> {
        let gate = |tape: &mut Tape, k: usize, h: Var| -> Result<Var> {
            let wx = tape.matmul(self.w[k], x)?;
            let rh = tape.matmul(self.r[k], h)?;
            let s = tape.add(wx, rh)?;
            tape.add_column(s, self.b[k])
        };
        let z_pre = gate(tape, 0, h_prev)?;
        let z = tape.sigmoid(z_pre)?;
        let r_pre = gate(tape, 1, h_prev)?;
        let r = tape.sigmoid(r_pre)?;
        let reset = tape.mul(r, h_prev)?;
        let cand_pre = gate(tape, 2, reset)?;
        let cand = tape.tanh(cand_pre)?;
        let keep = tape.one_minus(z)?;
        let kept = tape.mul(keep, h_prev)?;
        let fresh = tape.mul(z, cand)?;
        tape.add(kept, fresh)
    }
}

/// One GRU update on plain matrices (`x`: `D x B`, `h_prev`: `U x B`).
pub fn gru_step(x: &Matrix, h_prev: &Matrix, params: &GruCellParams) -> Result<Matrix> {
    params.validate()?;
    let mut tape = Tape::new();
    let cell = CellVars::constants(&mut tape, params);
    let xv = tape.constant(x.clone());
    let hv = tape.constant(h_prev.clone());
    let h = cell.step(&mut tape, xv, hv)?;
    Ok(tape.value(h).clone())
}
