//! Measurement windows: `T` samples of `n` channels at a fixed sampling interval.
//!
//! A window is a cheap view into a shared row-major buffer, so slicing a long
//! trajectory into many overlapping windows does not copy sample data.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{DramnError, Result};

#[derive(Debug, Clone)]
pub struct TimeSeriesWindow {
    buf: Arc<[f64]>,
    start_row: usize,
    len: usize,
    n: usize,
    dt: f64,
    channel_names: Arc<[String]>,
    t_start: i64,
}

fn default_names(n: usize) -> Arc<[String]> {
    (0..n).map(|i| format!("ch{i}")).collect::<Vec<_>>().into()
}

impl TimeSeriesWindow {
    /// Builds an owned window from row-major samples (`rows.len() == T * n`).
    pub fn from_rows(
        rows: Vec<f64>,
        n: usize,
        dt: f64,
        channel_names: Option<Vec<String>>,
        t_start: i64,
    ) -> Result<Self> {
        if n == 0 || !rows.len().is_multiple_of(n) {
            return Err(DramnError::ShapeMismatch(format!(
                "{} values do not form rows of {n} channels",
                rows.len()
            )));
        }
        let len = rows.len() / n;
        let names = match channel_names {
            Some(v) => v.into(),
            None => default_names(n),
        };
        Self::view(rows.into(), n, 0, len, dt, names, t_start)
    }

    /// Builds an owned window from a `T x n` matrix.
    pub fn from_matrix(data: &DMatrix<f64>, dt: f64, t_start: i64) -> Result<Self> {
        let (t, n) = data.shape();
        let mut rows = Vec::with_capacity(t * n);
        for k in 0..t {
            rows.extend(data.row(k).iter().copied());
        }
        Self::from_rows(rows, n, dt, None, t_start)
    }

    /// A view of rows `start_row..start_row + len` of a shared row-major buffer.
    pub fn view(
        buf: Arc<[f64]>,
        n: usize,
        start_row: usize,
        len: usize,
        dt: f64,
        channel_names: Arc<[String]>,
        t_start: i64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(DramnError::DegenerateWindow("window has no channels".into()));
        }
        if len == 0 {
            return Err(DramnError::DegenerateWindow("window has no samples".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DramnError::DegenerateWindow(format!("sampling interval {dt} is not positive")));
        }
        if channel_names.len() != n {
            return Err(DramnError::ShapeMismatch(format!(
                "{} channel names for {n} channels",
                channel_names.len()
            )));
        }
        if (start_row + len) * n > buf.len() {
            return Err(DramnError::ShapeMismatch(format!(
                "rows {start_row}..{} exceed buffer of {} rows",
                start_row + len,
                buf.len() / n
            )));
        }
        let w = TimeSeriesWindow {
            buf,
            start_row,
            len,
            n,
            dt,
            channel_names,
            t_start,
        };
        if w.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(DramnError::DegenerateWindow("window contains non-finite samples".into()));
        }
        Ok(w)
    }

    /// Number of samples `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of channels `n`.
    pub fn n_channels(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Offset of the first sample in the source scenario, in milliseconds.
    pub fn t_start(&self) -> i64 {
        self.t_start
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn shared_names(&self) -> Arc<[String]> {
        Arc::clone(&self.channel_names)
    }

    /// Rows `offset..offset + len` of this window, sharing its buffer.
    pub fn sub_window(&self, offset: usize, len: usize, t_start: i64) -> Result<Self> {
        if offset + len > self.len {
            return Err(DramnError::ShapeMismatch(format!(
                "rows {offset}..{} exceed a window of {}",
                offset + len,
                self.len
            )));
        }
        Self::view(
            Arc::clone(&self.buf),
            self.n,
            self.start_row + offset,
            len,
            self.dt,
            Arc::clone(&self.channel_names),
            t_start,
        )
    }

    /// The window covering both `self` and a later `other` cut from the same buffer.
    pub fn span_to(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.buf, &other.buf) || other.start_row < self.start_row {
            return Err(DramnError::ShapeMismatch("windows do not share a buffer in order".into()));
        }
        let len = (other.start_row + other.len).max(self.start_row + self.len) - self.start_row;
        Self::view(
            Arc::clone(&self.buf),
            self.n,
            self.start_row,
            len,
            self.dt,
            Arc::clone(&self.channel_names),
            self.t_start,
        )
    }

    /// Row offset of `other` relative to this window, when both share a buffer.
    pub fn offset_of(&self, other: &Self) -> Option<usize> {
        (Arc::ptr_eq(&self.buf, &other.buf) && other.start_row >= self.start_row).then(|| other.start_row - self.start_row)
    }

    /// Contiguous row-major samples of this window.
    pub fn as_slice(&self) -> &[f64] {
        &self.buf[self.start_row * self.n..(self.start_row + self.len) * self.n]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let s = (self.start_row + k) * self.n;
        &self.buf[s..s + self.n]
    }

    pub fn value(&self, k: usize, channel: usize) -> f64 {
        self.buf[(self.start_row + k) * self.n + channel]
    }

    /// Samples as a `T x n` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len, self.n, self.as_slice())
    }

    /// Samples as an `n x T` matrix whose column `k` is sample `k`.
    pub fn to_snapshot_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.len, self.as_slice())
    }

    /// Per-channel mean over the window.
    pub fn channel_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for k in 0..self.len {
            for (acc, v) in m.iter_mut().zip(self.row(k)) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.len as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Copy of the window restricted to the given channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        if let Some(&bad) = channels.iter().find(|&&c| c >= self.n) {
            return Err(DramnError::OutOfRange(format!("channel {bad} of {}", self.n)));
        }
        let mut rows = Vec::with_capacity(self.len * channels.len());
        for k in 0..self.len {
            let r = self.row(k);
            rows.extend(channels.iter().map(|&c| r[c]));
        }
        let names = channels.iter().map(|&c| self.channel_names[c].clone()).collect();
        Self::from_rows(rows, channels.len(), self.dt, Some(names), self.t_start)
    }

    /// Copy of the window with every sample replaced by `f(row, channel, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let mut rows = Vec::with_capacity(self.len * self.n);
        for k in 0..self.len {
            rows.extend(self.row(k).iter().enumerate().map(|(c, &v)| f(k, c, v)));
        }
        Self::view(
            rows.into(),
            self.n,
            0,
            self.len,
            self.dt,
            Arc::clone(&self.channel_names),
            self.t_start,
        )
    }
}
