//! Five-layer dynamic adjacency tensors built from DMD modes.
//!
//! | layer | meaning |
//! |-------|---------|
//! | 0 | modal participation, `Σ_k |φ_ik||φ_jk|` |
//! | 1 | coupling, cosine similarity of centred mode-magnitude profiles |
//! | 2 | phase coherence, `κ_i κ_j cos(θ_i − θ_j)` from circular means |
//! | 3 | growth, `Re(Φ diag(log ρ_k) Φᴴ)` |
//! | 4 | windowed energy, `Re(Φ diag(e_k(L)) Φᴴ)` |

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dmd::{dmd, DmdConfig, DmdResult, C64};
use crate::error::{DramnError, Result};
use crate::window::TimeSeriesWindow;

/// Number of spectral layers.
pub const N_LAYERS: usize = 5;
/// Regularizer in the coupling-layer denominators.
pub const COUPLING_EPS: f64 = 1e-8;
/// Floor on `|λ|` before taking its logarithm.
pub const RHO_FLOOR: f64 = 1e-12;
/// Per-step log-moduli smaller than this are treated as exactly on the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyTensor {
    pub layers: Vec<DMatrix<f64>>,
    pub n: usize,
    /// Start of the source window, in milliseconds.
    pub source_window: i64,
}

impl AdjacencyTensor {
    pub fn d(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, k: usize) -> &DMatrix<f64> {
        &self.layers[k]
    }

    /// Applies the same permutation to the rows and columns of every layer:
    /// node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| DMatrix::from_fn(self.n, self.n, |i, j| l[(perm[i], perm[j])]))
            .collect();
        AdjacencyTensor {
            layers,
            n: self.n,
            source_window: self.source_window,
        }
    }

    /// Restriction to a subset of nodes, in the given order.
    pub fn select_nodes(&self, nodes: &[usize]) -> Self {
        let m = nodes.len();
        let layers = self
            .layers
            .iter()
            .map(|l| DMatrix::from_fn(m, m, |i, j| l[(nodes[i], nodes[j])]))
            .collect();
        AdjacencyTensor {
            layers,
            n: m,
            source_window: self.source_window,
        }
    }

    const MAGIC: &'static [u8; 4] = b"DADJ";
    const VERSION: u32 = 1;

    /// Header (magic, version, n, d, t_start) followed by little-endian `f64`
    /// values, layer-major and row-major within a layer.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&(self.d() as u32).to_le_bytes())?;
        w.write_all(&self.source_window.to_le_bytes())?;
        for l in &self.layers {
            for i in 0..self.n {
                for j in 0..self.n {
                    w.write_all(&l[(i, j)].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> std::io::Result<Self> {
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(bad("not an adjacency tensor"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != Self::VERSION {
            return Err(bad("unsupported adjacency tensor version"));
        }
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let source_window = i64::from_le_bytes(b8);
        let mut layers = Vec::with_capacity(d);
        for _ in 0..d {
            let mut vals = Vec::with_capacity(n * n);
            for _ in 0..n * n {
                r.read_exact(&mut b8)?;
                vals.push(f64::from_le_bytes(b8));
            }
            layers.push(DMatrix::from_row_slice(n, n, &vals));
        }
        Ok(AdjacencyTensor {
            layers,
            n,
            source_window,
        })
    }
}

fn magnitudes(phi: &DMatrix<C64>) -> DMatrix<f64> {
    phi.map(|z| z.norm())
}

/// `M[i,j] = Σ_k |φ_ik| |φ_jk|`.
pub fn layer_participation(phi: &DMatrix<C64>) -> DMatrix<f64> {
    let m = magnitudes(phi);
    &m * m.transpose()
}

/// Cosine similarity of the zero-mean magnitude rows, with `eps` added to each norm.
pub fn layer_coupling(phi: &DMatrix<C64>, eps: f64) -> DMatrix<f64> {
    let mut m = magnitudes(phi);
    let r = m.ncols() as f64;
    for mut row in m.row_iter_mut() {
        let mean = row.sum() / r;
        row.add_scalar_mut(-mean);
    }
    let norms: Vec<f64> = m.row_iter().map(|row| row.norm() + eps).collect();
    let gram = &m * m.transpose();
    DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| gram[(i, j)] / (norms[i] * norms[j]))
}

/// Circular-mean phase coherence, `κ_i κ_j cos(θ_i − θ_j)`.
pub fn layer_phase(phi: &DMatrix<C64>) -> DMatrix<f64> {
    let (n, r) = phi.shape();
    let mut theta = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for i in 0..n {
        let (mut c, mut s) = (0.0, 0.0);
        for k in 0..r {
            let z = phi[(i, k)];
            let ang = if z.re == 0.0 && z.im == 0.0 { 0.0 } else { z.arg() };
            c += ang.cos();
            s += ang.sin();
        }
        c /= r as f64;
        s /= r as f64;
        theta.push(if c == 0.0 && s == 0.0 { 0.0 } else { s.atan2(c) });
        kappa.push(c.hypot(s));
    }
    DMatrix::from_fn(n, n, |i, j| kappa[i] * kappa[j] * (theta[i] - theta[j]).cos())
}

/// `Re(Φ diag(w) Φᴴ)`, symmetrized entrywise so the result is exactly symmetric.
fn weighted_outer(phi: &DMatrix<C64>, w: &[f64]) -> DMatrix<f64> {
    let mut scaled = phi.clone();
    for (k, &wk) in w.iter().enumerate() {
        scaled.column_mut(k).scale_mut(wk);
    }
    let full = scaled * phi.adjoint();
    let n = full.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (full[(i, j)].re + full[(j, i)].re))
}

/// Per-step growth rates `log max(|λ|, floor)`, snapped to zero on the unit circle.
pub fn growth_rates(lambda: &DVector<C64>, rho_floor: f64) -> Vec<f64> {
    lambda
        .iter()
        .map(|z| {
            let g = z.norm().max(rho_floor).ln();
            if g.abs() < UNIT_CIRCLE_TOL {
                0.0
            } else {
                g
            }
        })
        .collect()
}

/// `Re(Φ diag(log max(|λ_k|, floor)) Φᴴ)`.
pub fn layer_growth(phi: &DMatrix<C64>, lambda: &DVector<C64>, rho_floor: f64) -> DMatrix<f64> {
    weighted_outer(phi, &growth_rates(lambda, rho_floor))
}

/// `Σ_{l=0}^{L-1} ρ^{2l}`, evaluated in closed form.
pub fn energy_factor(rho: f64, l: usize) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(DramnError::Domain(format!("energy factor needs ρ ≥ 0, got {rho}")));
    }
    if l == 0 {
        return Err(DramnError::Domain("energy factor needs L ≥ 1".into()));
    }
    if rho == 1.0 {
        return Ok(l as f64);
    }
    let lr = rho.ln();
    Ok((2.0 * l as f64 * lr).exp_m1() / (2.0 * lr).exp_m1())
}

/// `ln Σ_{l=0}^{L-1} ρ^{2l}`, finite wherever the factor itself overflows.
pub fn ln_energy_factor(rho: f64, l: usize) -> Result<f64> {
    let e = energy_factor(rho, l)?;
    if e.is_finite() {
        return Ok(e.ln());
    }
    // ρ > 1 here: ln(e^{x} - 1) = x + ln(1 - e^{-x}).
    let ln_expm1 = |x: f64| x + (-(-x).exp()).ln_1p();
    let lr = rho.ln();
    Ok(ln_expm1(2.0 * l as f64 * lr) - ln_expm1(2.0 * lr))
}

/// `Re(Φ diag(e_k(L)) Φᴴ)` with `e_k` the energy factor of `|λ_k|`. When some
/// factor would overflow, all of them are divided by the largest, which only
/// rescales the layer.
pub fn layer_energy(phi: &DMatrix<C64>, lambda: &DVector<C64>, l: usize) -> Result<DMatrix<f64>> {
    let e = lambda
        .iter()
        .map(|z| energy_factor(z.norm(), l))
        .collect::<Result<Vec<_>>>()?;
    if e.iter().all(|v| v.is_finite()) && e.iter().fold(0.0f64, |m, v| m.max(*v)) < 1e150 {
        return Ok(weighted_outer(phi, &e));
    }
    let ln_e = lambda
        .iter()
        .map(|z| ln_energy_factor(z.norm(), l))
        .collect::<Result<Vec<_>>>()?;
    let top = ln_e.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let scaled: Vec<f64> = ln_e.iter().map(|v| (v - top).exp()).collect();
    Ok(weighted_outer(phi, &scaled))
}

/// Divides each layer by its largest absolute entry; all-zero layers are kept as is.
pub fn normalize_layers(raw: Vec<DMatrix<f64>>, source_window: i64) -> Result<AdjacencyTensor> {
    let n = raw.first().map_or(0, |l| l.nrows());
    let mut layers = Vec::with_capacity(raw.len());
    for (k, mut l) in raw.into_iter().enumerate() {
        if l.shape() != (n, n) {
            return Err(DramnError::ShapeMismatch(format!("layer {k} is {:?}, expected {n}x{n}", l.shape())));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(DramnError::numerical("normalize_layers", format!("layer {k} has non-finite entries")));
        }
        let m = l.amax();
        if m > 0.0 {
            l /= m;
        }
        layers.push(l);
    }
    Ok(AdjacencyTensor {
        layers,
        n,
        source_window,
    })
}

/// The five raw (unnormalized) layers of a decomposition.
pub fn raw_layers(res: &DmdResult) -> Result<Vec<DMatrix<f64>>> {
    let phi = &res.modes;
    Ok(vec![
        layer_participation(phi),
        layer_coupling(phi, COUPLING_EPS),
        layer_phase(phi),
        layer_growth(phi, &res.eigenvalues, RHO_FLOOR),
        layer_energy(phi, &res.eigenvalues, res.window_len)?,
    ])
}

/// Runs DMD on the window and assembles its normalized adjacency tensor.
pub fn build_adjacency(window: &TimeSeriesWindow, cfg: &DmdConfig) -> Result<AdjacencyTensor> {
    let res = dmd(window, cfg)?;
    normalize_layers(raw_layers(&res)?, window.t_start())
}

/// Geometry of a sequence of overlapping windows, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    pub window_ms: i64,
    pub stride_ms: i64,
    pub l_seq: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            window_ms: 1000,
            stride_ms: 100,
            l_seq: 5,
        }
    }
}

impl SequenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_ms < 2 || self.stride_ms < 0 || self.l_seq == 0 {
            return Err(DramnError::Config(format!("invalid sequence geometry {self:?}")));
        }
        Ok(())
    }

    /// Inclusive `(start, end)` of each window of the sequence ending at `t_end`.
    pub fn window_spans(&self, t_end: i64) -> Vec<(i64, i64)> {
        (0..self.l_seq)
            .map(|k| {
                let end = t_end - (self.l_seq - 1 - k) as i64 * self.stride_ms;
                (end - self.window_ms + 1, end)
            })
            .collect()
    }

    /// Time covered by a whole sequence, from the first sample of its first window.
    pub fn history_ms(&self) -> i64 {
        self.window_ms + (self.l_seq as i64 - 1) * self.stride_ms
    }
}

#[derive(Debug, Clone)]
pub struct AdjacencySequence {
    pub tensors: Vec<AdjacencyTensor>,
    pub windows: Vec<TimeSeriesWindow>,
}

/// Cuts the `l_seq` windows of a sequence ending at `t_end` (ms) out of a
/// row-major trajectory whose row `k` sits at `k·dt`.
pub fn sequence_windows(
    trajectory: &Arc<[f64]>,
    n: usize,
    dt: f64,
    names: &Arc<[String]>,
    t_end: i64,
    seq: &SequenceConfig,
) -> Result<Vec<TimeSeriesWindow>> {
    seq.validate()?;
    let rows = trajectory.len() / n.max(1);
    let ms_per_row = dt * 1000.0;
    let to_row = |ms: i64| (ms as f64 / ms_per_row).round() as i64;
    let first = t_end - seq.history_ms() + 1;
    if first < 0 || to_row(t_end) >= rows as i64 {
        return Err(DramnError::InsufficientHistory {
            needed: (seq.history_ms() as f64 / ms_per_row).round() as usize,
            available: (to_row(t_end) + 1).clamp(0, rows as i64) as usize,
        });
    }
    seq.window_spans(t_end)
        .into_iter()
        .map(|(s, e)| {
            let (rs, re) = (to_row(s), to_row(e));
            TimeSeriesWindow::view(
                Arc::clone(trajectory),
                n,
                rs as usize,
                (re - rs + 1) as usize,
                dt,
                Arc::clone(names),
                s,
            )
        })
        .collect()
}

/// Windows and adjacency tensors of one sequence.
pub fn build_sequence_from_windows(windows: Vec<TimeSeriesWindow>, cfg: &DmdConfig) -> Result<AdjacencySequence> {
    let tensors = windows
        .iter()
        .map(|w| build_adjacency(w, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdjacencySequence { tensors, windows })
}
