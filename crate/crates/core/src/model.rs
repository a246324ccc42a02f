//! The DRAMN cell: temporal compression, trainable mixing of adjacency layers,
//! graph-convolved LSTM gating and a node-pooled probability readout.
//!
//! The compressor applies one pointwise scale and bias to every sample, pools
//! over time and projects the pooled scalar to `F` features. Because the first
//! two steps are affine, the pooled value is an affine function of the channel
//! mean, so inputs are carried as per-window channel means.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adjacency::{AdjacencyTensor, N_LAYERS};
use crate::error::{DramnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    /// Nodes (measurement channels).
    pub n: usize,
    /// Samples per window.
    pub t: usize,
    /// Embedding width.
    pub f: usize,
    /// Hidden width.
    pub h: usize,
    /// Adjacency layers.
    pub d: usize,
    /// Recurrent steps.
    pub l_seq: usize,
}

impl Dims {
    pub fn new(n: usize, t: usize) -> Self {
        Dims {
            n,
            t,
            f: 64,
            h: 64,
            d: N_LAYERS,
            l_seq: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t == 0 || self.f == 0 || self.h == 0 || self.d == 0 || self.l_seq == 0 {
            return Err(DramnError::Config(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Graph-convolved LSTM over `l_seq` windows.
    Dramn,
    /// The same recurrence with the identity as graph and frozen mixing weights.
    IdentityLstm,
    /// One graph convolution of the last window, a tanh layer, and the readout.
    SingleStepGcn,
}

impl Variant {
    fn code(self) -> u8 {
        match self {
            Variant::Dramn => 0,
            Variant::IdentityLstm => 1,
            Variant::SingleStepGcn => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Variant::Dramn),
            1 => Some(Variant::IdentityLstm),
            2 => Some(Variant::SingleStepGcn),
            _ => None,
        }
    }

    pub fn is_recurrent(self) -> bool {
        !matches!(self, Variant::SingleStepGcn)
    }
}

/// Trainable arrays. Gate blocks are stored side by side in the order
/// input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    pub variant: Variant,
    pub seed: u64,
    /// Pointwise temporal scale `a` (length 1).
    pub comp_scale: DVector<f64>,
    /// Pointwise temporal bias `b` (length 1).
    pub comp_bias: DVector<f64>,
    /// Projection of the pooled scalar to `F` features.
    pub proj_w: DVector<f64>,
    pub proj_b: DVector<f64>,
    pub alpha: DVector<f64>,
    /// `F x 4H` (`F x H` for the single-step variant).
    pub w_x: DMatrix<f64>,
    /// `H x 4H` (empty for the single-step variant).
    pub w_h: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub w_r: DVector<f64>,
    /// Readout bias (length 1).
    pub b_r: DVector<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

pub const GROUP_NAMES: [&str; 10] = [
    "comp_scale",
    "comp_bias",
    "proj_w",
    "proj_b",
    "alpha",
    "w_x",
    "w_h",
    "bias",
    "w_r",
    "b_r",
];

impl ModelParams {
    /// Parameter arrays in checkpoint order, paired with their names.
    pub fn groups(&self) -> [(&'static str, &[f64]); 10] {
        [
            (GROUP_NAMES[0], self.comp_scale.as_slice()),
            (GROUP_NAMES[1], self.comp_bias.as_slice()),
            (GROUP_NAMES[2], self.proj_w.as_slice()),
            (GROUP_NAMES[3], self.proj_b.as_slice()),
            (GROUP_NAMES[4], self.alpha.as_slice()),
            (GROUP_NAMES[5], self.w_x.as_slice()),
            (GROUP_NAMES[6], self.w_h.as_slice()),
            (GROUP_NAMES[7], self.bias.as_slice()),
            (GROUP_NAMES[8], self.w_r.as_slice()),
            (GROUP_NAMES[9], self.b_r.as_slice()),
        ]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut [f64]); 10] {
        [
            (GROUP_NAMES[0], self.comp_scale.as_mut_slice()),
            (GROUP_NAMES[1], self.comp_bias.as_mut_slice()),
            (GROUP_NAMES[2], self.proj_w.as_mut_slice()),
            (GROUP_NAMES[3], self.proj_b.as_mut_slice()),
            (GROUP_NAMES[4], self.alpha.as_mut_slice()),
            (GROUP_NAMES[5], self.w_x.as_mut_slice()),
            (GROUP_NAMES[6], self.w_h.as_mut_slice()),
            (GROUP_NAMES[7], self.bias.as_mut_slice()),
            (GROUP_NAMES[8], self.w_r.as_mut_slice()),
            (GROUP_NAMES[9], self.b_r.as_mut_slice()),
        ]
    }

    /// A parameter set of the same shape with every entry zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, g) in z.groups_mut() {
            g.fill(0.0);
        }
        z
    }

    pub fn n_params(&self) -> usize {
        self.groups().iter().map(|(_, g)| g.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }

    /// Gate width: `4H` for recurrent variants, `H` for the single-step one.
    pub fn gate_width(&self) -> usize {
        if self.variant.is_recurrent() {
            4 * self.dims.h
        } else {
            self.dims.h
        }
    }

    /// Adds `scale * other` entrywise.
    pub fn axpy(&mut self, scale: f64, other: &ModelParams) {
        for ((_, dst), (_, src)) in self.groups_mut().into_iter().zip(other.groups()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

/// Deterministic initialization: weights uniform in `±1/√fan_in`, gate biases
/// zero except the forget gate at 1, mixing weights `1/d`.
pub fn init_params(dims: Dims, variant: Variant, seed: u64) -> Result<ModelParams> {
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f, h, d) = (dims.f, dims.h, dims.d);
    let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
        let b = 1.0 / (fan_in as f64).sqrt();
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-b..b))
    };
    let proj_w = uniform(f, 1, 1).column(0).into_owned();
    let (w_x, w_h, mut bias) = if variant.is_recurrent() {
        (uniform(f, 4 * h, f), uniform(h, 4 * h, h), DVector::zeros(4 * h))
    } else {
        (uniform(f, h, f), DMatrix::zeros(h, 0), DVector::zeros(h))
    };
    if variant.is_recurrent() {
        bias.rows_mut(h, h).fill(1.0);
    }
    let w_r = uniform(h, 1, h).column(0).into_owned();
    Ok(ModelParams {
        dims,
        variant,
        seed,
        comp_scale: DVector::from_element(1, 1.0),
        comp_bias: DVector::zeros(1),
        proj_w,
        proj_b: DVector::zeros(f),
        alpha: DVector::from_element(d, 1.0 / d as f64),
        w_x,
        w_h,
        bias,
        w_r,
        b_r: DVector::zeros(1),
    })
}

/// Model input for one sequence: standardized channel means of each window and
/// the matching adjacency tensors, oldest first.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub means: Vec<DVector<f64>>,
    pub graphs: Vec<AdjacencyTensor>,
}

impl ModelInput {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// The last `l` steps.
    pub fn tail(&self, l: usize) -> (&[DVector<f64>], &[AdjacencyTensor]) {
        let s = self.means.len().saturating_sub(l);
        (&self.means[s..], &self.graphs[s..])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl CellState {
    pub fn zeros(n: usize, h: usize) -> Self {
        CellState {
            h: DMatrix::zeros(n, h),
            c: DMatrix::zeros(n, h),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Compresses a `T x n` window: scale and shift every sample, average over
/// time, then project each channel's pooled value to `F` features.
pub fn temporal_compress(x: &DMatrix<f64>, params: &ModelParams) -> Result<DMatrix<f64>> {
    if x.ncols() != params.dims.n || x.nrows() == 0 {
        return Err(DramnError::ShapeMismatch(format!(
            "window is {}x{}, model expects T x {}",
            x.nrows(),
            x.ncols(),
            params.dims.n
        )));
    }
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
    Ok(compress_means(&means, params))
}

/// Compressor applied to per-channel window means.
pub fn compress_means(means: &DVector<f64>, params: &ModelParams) -> DMatrix<f64> {
    let (a, b) = (params.comp_scale[0], params.comp_bias[0]);
    let pooled = means.map(|m| a * m + b);
    let mut x = &pooled * params.proj_w.transpose();
    for mut row in x.row_iter_mut() {
        row += params.proj_b.transpose();
    }
    x
}

/// `Σ_k α_k · layer_k`.
pub fn mix_layers(g: &AdjacencyTensor, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    if g.d() != alpha.len() {
        return Err(DramnError::ShapeMismatch(format!("{} layers but {} mixing weights", g.d(), alpha.len())));
    }
    let mut out = DMatrix::zeros(g.n, g.n);
    for (l, &a) in g.layers.iter().zip(alpha.iter()) {
        out += l * a;
    }
    Ok(out)
}

/// Intermediates of one recurrent step, kept for back-propagation.
#[derive(Debug, Clone)]
pub(crate) struct StepTrace {
    pub pooled: DVector<f64>,
    pub means: DVector<f64>,
    pub x_hat: DMatrix<f64>,
    pub g: DMatrix<f64>,
    /// Adjacency layers of this step, when the mixing weights are trainable.
    pub layers: Option<Vec<DMatrix<f64>>>,
    pub x_til: DMatrix<f64>,
    pub h_til: DMatrix<f64>,
    pub h_prev: DMatrix<f64>,
    pub c_prev: DMatrix<f64>,
    /// Activated gates, `n x 4H` (or `n x H` tanh output for the single-step variant).
    pub gates: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub steps: Vec<StepTrace>,
    pub p: f64,
}

fn gate_pre(x_til: &DMatrix<f64>, h_til: &DMatrix<f64>, params: &ModelParams) -> DMatrix<f64> {
    let mut z = x_til * &params.w_x;
    if params.w_h.ncols() > 0 {
        z.gemm(1.0, h_til, &params.w_h, 1.0);
    }
    for mut row in z.row_iter_mut() {
        row += params.bias.transpose();
    }
    z
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DramnError::numerical("forward", format!("non-finite {what}")))
    }
}

fn lstm_update(z: &DMatrix<f64>, c_prev: &DMatrix<f64>, hdim: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = z.nrows();
    let mut gates = z.clone();
    for r in 0..n {
        for k in 0..3 * hdim {
            gates[(r, k)] = sigmoid(z[(r, k)]);
        }
        for k in 3 * hdim..4 * hdim {
            gates[(r, k)] = z[(r, k)].tanh();
        }
    }
    let mut c = DMatrix::zeros(n, hdim);
    let mut h = DMatrix::zeros(n, hdim);
    for r in 0..n {
        for k in 0..hdim {
            let (i, f, o, g) = (
                gates[(r, k)],
                gates[(r, hdim + k)],
                gates[(r, 2 * hdim + k)],
                gates[(r, 3 * hdim + k)],
            );
            let cv = f * c_prev[(r, k)] + i * g;
            c[(r, k)] = cv;
            h[(r, k)] = o * cv.tanh();
        }
    }
    (gates, c, h)
}

/// One graph-convolved LSTM step.
pub fn cell_step(x_hat: &DMatrix<f64>, state: &CellState, g_eff: &DMatrix<f64>, params: &ModelParams) -> Result<CellState> {
    if !params.variant.is_recurrent() {
        return Err(DramnError::Config("cell_step needs a recurrent variant".into()));
    }
    let x_til = g_eff * x_hat;
    let h_til = g_eff * &state.h;
    let z = gate_pre(&x_til, &h_til, params);
    check_finite(&z, "gate pre-activation")?;
    let (_, c, h) = lstm_update(&z, &state.c, params.dims.h);
    Ok(CellState { h, c })
}

fn effective_graph(g: &AdjacencyTensor, params: &ModelParams) -> Result<DMatrix<f64>> {
    match params.variant {
        Variant::IdentityLstm => Ok(DMatrix::identity(params.dims.n, params.dims.n)),
        _ => mix_layers(g, &params.alpha),
    }
}

fn readout(h: &DMatrix<f64>, params: &ModelParams) -> f64 {
    let s = h * &params.w_r;
    sigmoid(s.mean() + params.b_r[0])
}

pub(crate) fn forward_trace(input: &ModelInput, params: &ModelParams) -> Result<Trace> {
    let dims = params.dims;
    let steps_wanted = if params.variant.is_recurrent() { dims.l_seq } else { 1 };
    if input.len() < steps_wanted || input.graphs.len() != input.means.len() {
        return Err(DramnError::ShapeMismatch(format!(
            "input has {} windows and {} tensors, model needs {steps_wanted}",
            input.means.len(),
            input.graphs.len()
        )));
    }
    let (means, graphs) = input.tail(steps_wanted);
    let mut state = CellState::zeros(dims.n, dims.h);
    let mut steps = Vec::with_capacity(steps_wanted);
    for (m, gt) in means.iter().zip(graphs) {
        if m.len() != dims.n || gt.n != dims.n {
            return Err(DramnError::ShapeMismatch(format!(
                "step has {} channels / {} nodes, model expects {}",
                m.len(),
                gt.n,
                dims.n
            )));
        }
        let (a, b) = (params.comp_scale[0], params.comp_bias[0]);
        let pooled = m.map(|v| a * v + b);
        let x_hat = compress_means(m, params);
        let g = effective_graph(gt, params)?;
        let x_til = &g * &x_hat;
        let h_til = &g * &state.h;
        let z = gate_pre(&x_til, &h_til, params);
        check_finite(&z, "gate pre-activation")?;
        let (gates, c, h) = if params.variant.is_recurrent() {
            lstm_update(&z, &state.c, dims.h)
        } else {
            let act = z.map(f64::tanh);
            (act.clone(), DMatrix::zeros(dims.n, dims.h), act)
        };
        steps.push(StepTrace {
            pooled,
            means: m.clone(),
            x_hat,
            g,
            layers: (params.variant != Variant::IdentityLstm).then(|| gt.layers.clone()),
            x_til,
            h_til,
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gates,
            c: c.clone(),
            h: h.clone(),
        });
        state = CellState { h, c };
    }
    let p = readout(&state.h, params);
    if !p.is_finite() {
        return Err(DramnError::numerical("forward", "non-finite probability"));
    }
    Ok(Trace { steps, p })
}

/// Instability probability for one sequence.
pub fn forward(input: &ModelInput, params: &ModelParams) -> Result<f64> {
    forward_trace(input, params).map(|t| t.p)
}

const MAGIC: &[u8; 4] = b"DRMN";
const VERSION: u32 = 1;

/// Writes header (magic, version, variant, dims, seed) then each parameter
/// group as a length-prefixed little-endian `f64` array, in [`GROUP_NAMES`] order.
pub fn write_checkpoint(params: &ModelParams, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[params.variant.code()])?;
    let d = params.dims;
    for v in [d.n, d.t, d.f, d.h, d.d, d.l_seq] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&params.seed.to_le_bytes())?;
    for (_, g) in params.groups() {
        w.write_all(&(g.len() as u64).to_le_bytes())?;
        for v in g {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> std::io::Result<ModelParams> {
    let bad = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a model checkpoint".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(bad("unsupported checkpoint version".into()));
    }
    let mut code = [0u8; 1];
    r.read_exact(&mut code)?;
    let variant = Variant::from_code(code[0]).ok_or_else(|| bad(format!("unknown variant {}", code[0])))?;
    let mut dv = [0usize; 6];
    for v in dv.iter_mut() {
        r.read_exact(&mut b4)?;
        *v = u32::from_le_bytes(b4) as usize;
    }
    let dims = Dims {
        n: dv[0],
        t: dv[1],
        f: dv[2],
        h: dv[3],
        d: dv[4],
        l_seq: dv[5],
    };
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let mut params = init_params(dims, variant, 0).map_err(|e| bad(e.to_string()))?;
    params.seed = seed;
    for (name, g) in params.groups_mut() {
        r.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        if len != g.len() {
            return Err(bad(format!("group {name} has {len} values, expected {}", g.len())));
        }
        for v in g.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
    }
    Ok(params)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    pub(crate) fn random_input(n: usize, steps: usize, seed: u64) -> ModelInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let means = (0..steps).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0))).collect();
        let graphs = (0..steps)
            .map(|s| {
                let layers = (0..N_LAYERS)
                    .map(|_| {
                        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                        (&a + a.transpose()) * 0.5
                    })
                    .collect();
                AdjacencyTensor {
                    layers,
                    n,
                    source_window: s as i64,
                }
            })
            .collect();
        ModelInput { means, graphs }
    }

    fn tiny(variant: Variant, seed: u64) -> ModelParams {
        let dims = Dims {
            n: 4,
            t: 20,
            f: 8,
            h: 8,
            d: 5,
            l_seq: 2,
        };
        init_params(dims, variant, seed).unwrap()
    }

    #[test]
    fn compressor_examples() {
        let mut p = tiny(Variant::Dramn, 1);
        p.comp_bias[0] = 0.0;
        p.proj_b.fill(0.0);
        let z = temporal_compress(&DMatrix::zeros(20, 4), &p).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));

        p.comp_scale[0] = 1.0;
        p.proj_w.fill(0.0);
        p.proj_w[0] = 1.0;
        let z = temporal_compress(&DMatrix::from_element(20, 4, 3.5), &p).unwrap();
        assert!(z.row_iter().all(|r| r == z.row(0)));
        assert_eq!(z[(2, 0)], 3.5);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let p = {
            let mut p = tiny(Variant::Dramn, 2);
            p.comp_scale[0] = 0.7;
            p.comp_bias[0] = -0.2;
            p.proj_b.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * i as f64);
            p
        };
        let got = temporal_compress(&x, &p).unwrap();
        for c in 0..4 {
            let pooled: f64 = x.column(c).iter().map(|v| 0.7 * v - 0.2).sum::<f64>() / 20.0;
            for k in 0..8 {
                let want = pooled * p.proj_w[k] + p.proj_b[k];
                assert!((got[(c, k)] - want).abs() < 1e-12);
            }
        }
        assert!(temporal_compress(&DMatrix::zeros(20, 3), &p).is_err());
    }

    #[test]
    fn mix_examples() {
        let inp = random_input(3, 1, 4);
        let g = &inp.graphs[0];
        let mut one_hot = DVector::zeros(5);
        one_hot[2] = 1.0;
        assert_eq!(mix_layers(g, &one_hot).unwrap(), g.layers[2]);
        assert_eq!(mix_layers(g, &DVector::zeros(5)).unwrap(), DMatrix::zeros(3, 3));
        let sum = mix_layers(g, &DVector::from_element(5, 1.0)).unwrap();
        let want = g.layers.iter().fold(DMatrix::zeros(3, 3), |acc, l| acc + l);
        assert!((sum - want).amax() < 1e-15);
        assert!(mix_layers(g, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn cell_step_examples() {
        let mut p = tiny(Variant::Dramn, 3);
        for (_, g) in p.groups_mut() {
            g.fill(0.0);
        }
        let x = DMatrix::from_element(4, 8, 1.0);
        let g = DMatrix::identity(4, 4);
        let s = cell_step(&x, &CellState::zeros(4, 8), &g, &p).unwrap();
        assert!(s.c.iter().all(|&v| v == 0.0) && s.h.iter().all(|&v| v == 0.0));

        let state = CellState {
            h: DMatrix::zeros(4, 8),
            c: DMatrix::from_element(4, 8, 1.0),
        };
        let s = cell_step(&x, &state, &g, &p).unwrap();
        assert!(s.c.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(s.h.iter().all(|&v| (v - 0.5 * 0.5f64.tanh()).abs() < 1e-15));

        let p = tiny(Variant::Dramn, 3);
        let zero_g = DMatrix::zeros(4, 4);
        let a = cell_step(&x, &CellState::zeros(4, 8), &zero_g, &p).unwrap();
        let b = cell_step(&(x * 100.0), &CellState::zeros(4, 8), &zero_g, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_examples() {
        let inp = random_input(4, 2, 5);
        let mut p = tiny(Variant::Dramn, 6);
        let zeros = p.zeros_like();
        assert_eq!(forward(&inp, &zeros).unwrap(), 0.5);
        p.b_r[0] = 50.0;
        let hi = forward(&inp, &p).unwrap();
        assert!((1.0 - hi) < 1e-15);
        let p = tiny(Variant::Dramn, 6);
        assert_eq!(forward(&inp, &p).unwrap().to_bits(), forward(&inp, &p).unwrap().to_bits());
        let short = random_input(4, 1, 5);
        assert!(forward(&short, &p).is_err());
    }

    #[test]
    fn zero_sequence_with_zero_biases_gives_half() {
        let mut p = tiny(Variant::Dramn, 7);
        p.comp_bias.fill(0.0);
        p.proj_b.fill(0.0);
        p.bias.fill(0.0);
        p.b_r.fill(0.0);
        let mut inp = random_input(4, 2, 8);
        inp.means.iter_mut().for_each(|m| m.fill(0.0));
        assert_eq!(forward(&inp, &p).unwrap(), 0.5);
    }

    #[test]
    fn init_examples() {
        let dims = Dims::new(6, 100);
        let a = init_params(dims, Variant::Dramn, 11).unwrap();
        let b = init_params(dims, Variant::Dramn, 11).unwrap();
        assert_eq!(a, b);
        let c = init_params(dims, Variant::Dramn, 12).unwrap();
        assert_ne!(a.w_x, c.w_x);
        assert!(a.w_x.iter().all(|v| v.abs() <= 0.125));
        assert!(a.w_h.iter().all(|v| v.abs() <= 0.125));
        assert!(a.w_r.iter().all(|v| v.abs() <= 0.125));
        assert!(a.bias.rows(64, 64).iter().all(|&v| v == 1.0));
        assert!(a.alpha.iter().all(|&v| v == 0.2));
        assert_eq!(a.w_x.shape(), (64, 256));
        let g = init_params(dims, Variant::SingleStepGcn, 11).unwrap();
        assert_eq!((g.w_x.shape(), g.w_h.shape(), g.bias.len()), ((64, 64), (64, 0), 64));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        for v in [Variant::Dramn, Variant::IdentityLstm, Variant::SingleStepGcn] {
            let mut p = tiny(v, 21);
            p.alpha[1] = -0.0;
            p.w_r[0] = f64::MIN_POSITIVE;
            let mut buf = Vec::new();
            write_checkpoint(&p, &mut buf).unwrap();
            let back = read_checkpoint(&mut buf.as_slice()).unwrap();
            let mut again = Vec::new();
            write_checkpoint(&back, &mut again).unwrap();
            assert_eq!(buf, again);
            assert_eq!(back.seed, 21);
            assert_eq!(back.variant, v);
        }
        assert!(read_checkpoint(&mut &b"DRMX"[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hidden_state_and_gates_are_bounded(seed in 0u64..10_000, scale in 0.1f64..50.0) {
            let mut inp = random_input(4, 2, seed);
            inp.means.iter_mut().for_each(|m| *m *= scale);
            let p = tiny(Variant::Dramn, seed);
            let tr = forward_trace(&inp, &p).unwrap();
            for s in &tr.steps {
                prop_assert!(s.h.iter().all(|v| v.abs() < 1.0));
                prop_assert!(s.gates.columns(0, 24).iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
            prop_assert!((0.0..=1.0).contains(&tr.p));
        }

        #[test]
        fn node_permutation_leaves_probability(seed in 0u64..10_000) {
            let inp = random_input(4, 2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..4).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let permuted = ModelInput {
                means: inp.means.iter().map(|m| DVector::from_fn(4, |i, _| m[perm[i]])).collect(),
                graphs: inp.graphs.iter().map(|g| g.permuted(&perm)).collect(),
            };
            for v in [Variant::Dramn, Variant::SingleStepGcn] {
                let p = tiny(v, seed + 1);
                let a = forward(&inp, &p).unwrap();
                let b = forward(&permuted, &p).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
