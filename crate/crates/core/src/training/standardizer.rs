//! Per-channel z-score standardization, fit on training windows only.

use serde::{Deserialize, Serialize};

use crate::error::{DramnError, Result};
use crate::window::TimeSeriesWindow;

pub const STD_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits channel means and standard deviations over every sample of every window.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a TimeSeriesWindow>) -> Result<Self> {
        let mut count = 0usize;
        let mut mean: Vec<f64> = Vec::new();
        let mut m2: Vec<f64> = Vec::new();
        for w in windows {
            let n = w.n_channels();
            if mean.is_empty() {
                mean = vec![0.0; n];
                m2 = vec![0.0; n];
            } else if mean.len() != n {
                return Err(DramnError::ShapeMismatch(format!(
                    "window with {n} channels among windows with {}",
                    mean.len()
                )));
            }
            // Chan et al. pairwise merge of per-window moments.
            let wm = w.channel_means();
            let mut wm2 = vec![0.0; n];
            for k in 0..w.len() {
                for (c, v) in w.row(k).iter().enumerate() {
                    let d = v - wm[c];
                    wm2[c] += d * d;
                }
            }
            let (na, nb) = (count as f64, w.len() as f64);
            let tot = na + nb;
            for c in 0..n {
                let delta = wm[c] - mean[c];
                mean[c] += delta * nb / tot;
                m2[c] += wm2[c] + delta * delta * na * nb / tot;
            }
            count += w.len();
        }
        if count == 0 {
            return Err(DramnError::DatasetTooSmall("no windows to fit the standardizer".into()));
        }
        let std = m2.iter().map(|s| (s / count as f64).sqrt().max(STD_FLOOR)).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn identity(n: usize) -> Self {
        Standardizer {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    pub fn n_channels(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_value(&self, channel: usize, v: f64) -> f64 {
        (v - self.mean[channel]) / self.std[channel]
    }

    pub fn inverse_value(&self, channel: usize, z: f64) -> f64 {
        z * self.std[channel] + self.mean[channel]
    }

    pub fn transform(&self, w: &TimeSeriesWindow) -> Result<TimeSeriesWindow> {
        self.check(w)?;
        w.map_values(|_, c, v| self.transform_value(c, v))
    }

    pub fn inverse(&self, w: &TimeSeriesWindow) -> Result<TimeSeriesWindow> {
        self.check(w)?;
        w.map_values(|_, c, v| self.inverse_value(c, v))
    }

    /// Standardized channel means, from raw channel means.
    pub fn transform_means(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().enumerate().map(|(c, &v)| self.transform_value(c, v)).collect()
    }

    /// The standardizer restricted to a subset of channels.
    pub fn select(&self, channels: &[usize]) -> Self {
        Standardizer {
            mean: channels.iter().map(|&c| self.mean[c]).collect(),
            std: channels.iter().map(|&c| self.std[c]).collect(),
        }
    }

    fn check(&self, w: &TimeSeriesWindow) -> Result<()> {
        if w.n_channels() != self.n_channels() {
            return Err(DramnError::ShapeMismatch(format!(
                "standardizer has {} channels, window has {}",
                self.n_channels(),
                w.n_channels()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_windows(seed: u64, count: usize, n: usize) -> Vec<TimeSeriesWindow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let t = rng.random_range(2..30);
                let rows = (0..t * n).map(|i| rng.random_range(-3.0..5.0) * (1 + i % n) as f64).collect();
                TimeSeriesWindow::from_rows(rows, n, 1e-3, None, 0).unwrap()
            })
            .collect()
    }

    #[test]
    fn matches_pooled_two_pass_statistics() {
        let ws = random_windows(1, 7, 3);
        let s = Standardizer::fit(&ws).unwrap();
        for c in 0..3 {
            let all: Vec<f64> = ws.iter().flat_map(|w| (0..w.len()).map(move |k| w.value(k, c))).collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            let var = all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64;
            assert!((s.mean[c] - m).abs() < 1e-12);
            assert!((s.std[c] - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_uses_floor() {
        let w = TimeSeriesWindow::from_rows(vec![2.0, 1.0, 2.0, 3.0], 2, 1e-3, None, 0).unwrap();
        let s = Standardizer::fit([&w]).unwrap();
        assert_eq!(s.std[0], STD_FLOOR);
        assert!(Standardizer::fit(std::iter::empty()).is_err());
    }

    #[test]
    fn test_statistics_never_leak() {
        let train = random_windows(2, 5, 2);
        let a = Standardizer::fit(&train).unwrap();
        let mut test = random_windows(3, 4, 2);
        let _ = a.transform(&test[0]).unwrap();
        test = test.iter().map(|w| w.map_values(|_, _, v| v * 1e6 + 42.0).unwrap()).collect();
        let _ = a.transform(&test[0]).unwrap();
        let b = Standardizer::fit(&train).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_is_identity(seed in 0u64..10_000) {
            let ws = random_windows(seed, 3, 4);
            let s = Standardizer::fit(&ws).unwrap();
            for w in &ws {
                let back = s.inverse(&s.transform(w).unwrap()).unwrap();
                for (x, y) in back.as_slice().iter().zip(w.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
            }
        }
    }
}
