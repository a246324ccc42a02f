//! Channel ranking by cumulative multi-layer node strength.
//!
//! Strength is the sum of absolute incident edge weights over every tensor in
//! a time range; each layer is min-max normalized before the layers are summed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adjacency::{build_adjacency, AdjacencyTensor};
use crate::dmd::DmdConfig;
use crate::error::{DramnError, Result};
use crate::window::TimeSeriesWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStrengthReport {
    /// `d x n` raw strengths.
    pub per_layer: DMatrix<f64>,
    /// `d x n`, every row scaled to [0, 1].
    pub per_layer_norm: DMatrix<f64>,
    pub composite: DVector<f64>,
    /// Channel indices, strongest first, ties by ascending index.
    pub ranking: Vec<usize>,
    pub time_range: (i64, i64),
}

/// Tensors whose source window starts within `[t_from, t_to]`.
fn in_range(series: &[AdjacencyTensor], t_from: i64, t_to: i64) -> impl Iterator<Item = &AdjacencyTensor> {
    series.iter().filter(move |a| a.source_window >= t_from && a.source_window <= t_to)
}

/// Per-layer absolute row sums accumulated over the tensors in range.
pub fn node_strength(series: &[AdjacencyTensor], t_from: i64, t_to: i64) -> Result<DMatrix<f64>> {
    let first = series
        .first()
        .ok_or_else(|| DramnError::EmptyRange("no adjacency tensors".into()))?;
    let (d, n) = (first.d(), first.n);
    let mut w = DMatrix::zeros(d, n);
    let mut any = false;
    for a in in_range(series, t_from, t_to) {
        if a.n != n || a.d() != d {
            return Err(DramnError::ShapeMismatch(format!(
                "tensor with {} layers over {} nodes in a series of {d} x {n}",
                a.d(),
                a.n
            )));
        }
        any = true;
        for (l, layer) in a.layers.iter().enumerate() {
            for i in 0..n {
                w[(l, i)] += layer.row(i).iter().map(|v| v.abs()).sum::<f64>();
            }
        }
    }
    if !any {
        return Err(DramnError::EmptyRange(format!("no tensors start within [{t_from}, {t_to}] ms")));
    }
    Ok(w)
}

/// Row-wise `(W - min) / (max - min)`; constant rows become zeros.
pub fn minmax_normalize(raw: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = raw.clone();
    for mut row in out.row_iter_mut() {
        let lo = row.min();
        let hi = row.max();
        if hi > lo {
            row.apply(|v| *v = (*v - lo) / (hi - lo));
        } else {
            row.fill(0.0);
        }
    }
    out
}

pub fn composite_strength(norm: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(norm.ncols(), |j, _| norm.column(j).sum())
}

pub fn rank_channels(composite: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..composite.len()).collect();
    idx.sort_by(|&a, &b| composite[b].total_cmp(&composite[a]).then(a.cmp(&b)));
    idx
}

pub fn strength_report(series: &[AdjacencyTensor], t_from: i64, t_to: i64) -> Result<NodeStrengthReport> {
    let per_layer = node_strength(series, t_from, t_to)?;
    let per_layer_norm = minmax_normalize(&per_layer);
    let composite = composite_strength(&per_layer_norm);
    let ranking = rank_channels(&composite);
    Ok(NodeStrengthReport {
        per_layer,
        per_layer_norm,
        composite,
        ranking,
        time_range: (t_from, t_to),
    })
}

pub fn top_k(report: &NodeStrengthReport, k: usize) -> Result<Vec<usize>> {
    let n = report.ranking.len();
    if k == 0 || k > n {
        return Err(DramnError::OutOfRange(format!("k = {k} with {n} channels")));
    }
    Ok(report.ranking[..k].to_vec())
}

/// Intersection size and Jaccard index of two channel sets.
pub fn overlap(a: &[usize], b: &[usize]) -> (usize, f64) {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    (inter, if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Tab-separated table: channel, raw strength per layer, composite, rank (1 = strongest).
pub fn report_tsv(report: &NodeStrengthReport, names: &[String]) -> String {
    let d = report.per_layer.nrows();
    let mut out = String::from("channel");
    for l in 1..=d {
        let _ = write!(out, "\tlayer{l}");
    }
    out.push_str("\tcomposite\trank\n");
    let mut rank = vec![0; report.ranking.len()];
    for (r, &c) in report.ranking.iter().enumerate() {
        rank[c] = r + 1;
    }
    for (c, name) in names.iter().enumerate().take(report.composite.len()) {
        out.push_str(name);
        for l in 0..d {
            let _ = write!(out, "\t{:.6e}", report.per_layer[(l, c)]);
        }
        let _ = writeln!(out, "\t{:.6}\t{}", report.composite[c], rank[c]);
    }
    out
}

/// Edges of the range-summed graph (absolute weights summed over layers and
/// tensors) at or above the given percentile of off-diagonal weights.
pub fn aggregated_edges(series: &[AdjacencyTensor], t_from: i64, t_to: i64, keep_top_percent: f64) -> Result<Vec<(usize, usize, f64)>> {
    let n = series.first().map(|a| a.n).unwrap_or(0);
    let mut agg = DMatrix::<f64>::zeros(n, n);
    let mut any = false;
    for a in in_range(series, t_from, t_to) {
        any = true;
        for layer in &a.layers {
            agg += layer.abs();
        }
    }
    if !any {
        return Err(DramnError::EmptyRange(format!("no tensors start within [{t_from}, {t_to}] ms")));
    }
    let mut edges: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, agg[(i, j)]))
        .collect();
    edges.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let keep = ((edges.len() as f64) * keep_top_percent.clamp(0.0, 100.0) / 100.0).ceil() as usize;
    edges.truncate(keep);
    Ok(edges)
}

pub fn edges_tsv(edges: &[(usize, usize, f64)], names: &[String]) -> String {
    let mut out = String::from("source\ttarget\tweight\n");
    for &(i, j, w) in edges {
        let _ = writeln!(out, "{}\t{}\t{w:.6e}", names[i], names[j]);
    }
    out
}

/// Ten channels over 3 s in ten 1 s windows: channels 0 to 3 carry a damped
/// two-mode response and channels 4 to 9 stay constant.
pub fn planted_dominance_series() -> Vec<AdjacencyTensor> {
    let n = 10;
    let rows: Vec<f64> = (0..3000)
        .flat_map(|k| {
            let t = k as f64 * 1e-3;
            let a = (-0.3 * t).exp() * (9.0 * t).sin();
            let b = (-0.5 * t).exp() * (4.0 * t).cos();
            let mix = [(1.0, 0.2), (0.8, -0.5), (0.3, 1.0), (-0.6, 0.7)];
            (0..n)
                .map(|c| if c < 4 { 1.0 + mix[c].0 * a + mix[c].1 * b } else { 1.0 })
                .collect::<Vec<_>>()
        })
        .collect();
    let traj: Arc<[f64]> = rows.into();
    let names: Arc<[String]> = (0..n).map(|c| format!("c{c}")).collect::<Vec<_>>().into();
    (0..10)
        .map(|s| {
            let w = TimeSeriesWindow::view(traj.clone(), n, s * 200, 1000, 1e-3, names.clone(), (s * 200) as i64).expect("window fits the trajectory");
            build_adjacency(&w, &DmdConfig::default()).expect("planted windows are well conditioned")
        })
        .collect()
}
