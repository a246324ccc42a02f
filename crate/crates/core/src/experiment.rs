//! Model fitting and the evaluation protocols built on it: held-out scoring,
//! noise sweeps, ablations, generalization and runtime benchmarks.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjacency::build_adjacency;
use crate::data::{inject_noise, synthesize_scenario, EventKind, GenerationMix, SurrogateConfig};
use crate::dataset::{Dataset, SequenceSample};
use crate::dmd::DmdConfig;
use crate::error::{DramnError, Result};
use crate::metrics::{full_metrics, MetricsReport};
use crate::model::{forward, init_params, Dims, ModelParams, Variant};
use crate::selection::{strength_report, NodeStrengthReport};
use crate::training::{predict, train, EpochRecord, Example, Split, Standardizer, TrainConfig};
use crate::window::TimeSeriesWindow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub variant: Variant,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub l_seq: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            variant: Variant::Dramn,
            feature_dim: 64,
            hidden_dim: 64,
            l_seq: 5,
        }
    }
}

impl ModelSpec {
    pub fn dims(&self, n: usize, t: usize) -> Dims {
        Dims {
            f: self.feature_dim,
            h: self.hidden_dim,
            l_seq: self.l_seq,
            ..Dims::new(n, t)
        }
    }
}

/// Parameters plus everything needed to turn a sample into a model input.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub standardizer: Standardizer,
    /// Channels of the dataset the model reads, in model node order.
    pub channels: Vec<usize>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainedModel {
    fn example(&self, s: &SequenceSample, all_channels: usize) -> Result<Example> {
        if self.channels.len() == all_channels && self.channels.iter().enumerate().all(|(i, &c)| i == c) {
            Ok(s.to_example(&self.standardizer))
        } else {
            Ok(s.select_channels(&self.channels)?.to_example(&self.standardizer))
        }
    }

    pub fn examples(&self, samples: &[SequenceSample]) -> Result<Vec<Example>> {
        samples
            .iter()
            .map(|s| self.example(s, s.windows.first().map_or(0, |w| w.n_channels())))
            .collect()
    }

    pub fn predict(&self, samples: &[SequenceSample], parallel: bool) -> Result<Vec<f64>> {
        predict(&self.params, &self.examples(samples)?, parallel)
    }

    pub fn evaluate(&self, samples: &[SequenceSample], threshold: f64, parallel: bool) -> Result<MetricsReport> {
        let probs = self.predict(samples, parallel)?;
        let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
        full_metrics(&probs, &labels, threshold)
    }
}

pub fn pick(samples: &[SequenceSample], idx: &[usize]) -> Vec<SequenceSample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

/// Fits a standardizer on the training windows and trains one model.
/// `channels` restricts the inputs to a subset of the dataset channels.
pub fn fit_model(
    train_samples: &[SequenceSample],
    val_samples: &[SequenceSample],
    spec: &ModelSpec,
    cfg: &TrainConfig,
    channels: Option<&[usize]>,
) -> Result<TrainedModel> {
    let first = train_samples
        .first()
        .ok_or_else(|| DramnError::DatasetTooSmall("no training samples".into()))?;
    let n_all = first.windows[0].n_channels();
    let channels: Vec<usize> = channels.map_or_else(|| (0..n_all).collect(), <[usize]>::to_vec);
    let restrict = |s: &[SequenceSample]| -> Result<Vec<SequenceSample>> {
        if channels.len() == n_all {
            Ok(s.to_vec())
        } else {
            s.iter().map(|x| x.select_channels(&channels)).collect()
        }
    };
    let tr = restrict(train_samples)?;
    let va = restrict(val_samples)?;
    let standardizer = Standardizer::fit(tr.iter().flat_map(|s| s.windows.iter()))?;
    let to_ex = |v: &[SequenceSample]| v.iter().map(|s| s.to_example(&standardizer)).collect::<Vec<_>>();
    let (tr_ex, va_ex) = (to_ex(&tr), to_ex(&va));
    let dims = spec.dims(channels.len(), first.windows[0].len());
    let init = init_params(dims, spec.variant, cfg.seed)?;
    let out = train(init, &tr_ex, &va_ex, cfg)?;
    Ok(TrainedModel {
        params: out.params,
        standardizer,
        channels,
        history: out.history,
        best_epoch: out.best_epoch,
    })
}

/// Train / validation / test samples of a split.
pub fn split_samples(ds: &Dataset, split: &Split) -> (Vec<SequenceSample>, Vec<SequenceSample>, Vec<SequenceSample>) {
    (pick(&ds.samples, &split.train), pick(&ds.samples, &split.val), pick(&ds.samples, &split.test))
}

/// Node-strength ranking over every graph of `samples` whose window starts in `[t_from, t_to]`.
pub fn channel_ranking(samples: &[SequenceSample], t_from: i64, t_to: i64) -> Result<NodeStrengthReport> {
    let graphs: Vec<_> = samples.iter().flat_map(|s| s.graphs.iter().cloned()).collect();
    strength_report(&graphs, t_from, t_to)
}

/// Seed for the noise of one sample, independent of evaluation order.
fn sample_noise_seed(seed: u64, s: &SequenceSample, salt: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ s.scenario_id.rotate_left(17) ^ (s.t_end as u64).rotate_left(41) ^ salt);
    r.random()
}

/// Adds noise once over the span of the sequence, re-cuts the windows and
/// rebuilds their graphs.
pub fn noisy_sample(s: &SequenceSample, snr_db: f64, seed: u64, dmd: &DmdConfig) -> Result<SequenceSample> {
    if snr_db == f64::INFINITY {
        return Ok(s.clone());
    }
    let first = &s.windows[0];
    let last = s.windows.last().unwrap_or(first);
    let span = first.span_to(last)?;
    let noisy = inject_noise(&span, snr_db, seed)?;
    let windows = s
        .windows
        .iter()
        .map(|w| {
            let off = span
                .offset_of(w)
                .ok_or_else(|| DramnError::ShapeMismatch("sequence windows do not share a buffer".into()))?;
            noisy.sub_window(off, w.len(), w.t_start())
        })
        .collect::<Result<Vec<TimeSeriesWindow>>>()?;
    s.with_windows(windows, dmd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub snr_db: f64,
    pub metrics: MetricsReport,
}

pub const DEFAULT_SNRS: [f64; 9] = [5.0, 15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0, 85.0];

/// Scores the model on noisy copies of `samples` at each SNR.
pub fn noise_sweep(
    model: &TrainedModel,
    samples: &[SequenceSample],
    snrs: &[f64],
    dmd: &DmdConfig,
    seed: u64,
    parallel: bool,
) -> Result<Vec<NoisePoint>> {
    snrs.iter()
        .map(|&snr| {
            let make = |s: &SequenceSample| noisy_sample(s, snr, sample_noise_seed(seed, s, snr.to_bits()), dmd);
            let noisy: Vec<SequenceSample> = if parallel {
                samples.par_iter().map(make).collect::<Result<_>>()?
            } else {
                samples.iter().map(make).collect::<Result<_>>()?
            };
            Ok(NoisePoint {
                snr_db: snr,
                metrics: model.evaluate(&noisy, 0.5, parallel)?,
            })
        })
        .collect()
}

/// The clean samples followed by one noisy copy of each at an SNR drawn
/// uniformly from `snr_range`.
pub fn augment_with_noise(
    samples: &[SequenceSample],
    snr_range: (f64, f64),
    dmd: &DmdConfig,
    seed: u64,
    parallel: bool,
) -> Result<Vec<SequenceSample>> {
    let make = |s: &SequenceSample| {
        let mut rng = ChaCha8Rng::seed_from_u64(sample_noise_seed(seed, s, 0xA5A5));
        let snr = rng.random_range(snr_range.0..=snr_range.1);
        noisy_sample(s, snr, rng.random(), dmd)
    };
    let noisy: Vec<SequenceSample> = if parallel {
        samples.par_iter().map(make).collect::<Result<_>>()?
    } else {
        samples.iter().map(make).collect::<Result<_>>()?
    };
    let mut out = samples.to_vec();
    out.extend(noisy);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationVariant {
    pub name: String,
    pub spec: ModelSpec,
}

impl AblationVariant {
    pub fn standard() -> Vec<AblationVariant> {
        let v = |name: &str, variant, l_seq| AblationVariant {
            name: name.into(),
            spec: ModelSpec {
                variant,
                l_seq,
                ..ModelSpec::default()
            },
        };
        vec![
            v("dramn_lseq5", Variant::Dramn, 5),
            v("dramn_lseq1", Variant::Dramn, 1),
            v("identity_lstm", Variant::IdentityLstm, 5),
            v("single_step_gcn", Variant::SingleStepGcn, 1),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub metrics: MetricsReport,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub non_convergent: bool,
}

/// Validation loss never improved after the first epoch and the model is close to chance.
pub fn is_non_convergent(best_epoch: usize, auroc: Option<f64>) -> bool {
    best_epoch <= 1 && auroc.is_none_or(|a| a < 0.6)
}

/// Trains each variant on the same split and seed and scores it on the test samples.
pub fn ablation_run(
    train_samples: &[SequenceSample],
    val_samples: &[SequenceSample],
    test_samples: &[SequenceSample],
    variants: &[AblationVariant],
    cfg: &TrainConfig,
) -> Result<Vec<(AblationRow, TrainedModel)>> {
    variants
        .iter()
        .map(|v| {
            let model = fit_model(train_samples, val_samples, &v.spec, cfg, None).map_err(|e| e.within(format!("variant {}", v.name)))?;
            let metrics = model.evaluate(test_samples, 0.5, !cfg.deterministic)?;
            let row = AblationRow {
                name: v.name.clone(),
                non_convergent: is_non_convergent(model.best_epoch, metrics.auroc),
                best_epoch: model.best_epoch,
                epochs_run: model.history.len(),
                metrics,
            };
            Ok((row, model))
        })
        .collect()
}

/// Scores a model on the generalization set cut from outside the training ranges.
pub fn generalization_eval(model: &TrainedModel, heldout: &[SequenceSample], parallel: bool) -> Result<MetricsReport> {
    if heldout.is_empty() {
        return Err(DramnError::EmptyRange("generalization set is empty".into()));
    }
    model.evaluate(heldout, 0.5, parallel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n_channels: usize,
    pub stage: String,
    pub repetitions: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

fn summarize(n: usize, stage: &str, mut ms: Vec<f64>) -> TimingRow {
    let mean = ms.iter().sum::<f64>() / ms.len() as f64;
    ms.sort_by(f64::total_cmp);
    let idx = ((0.95 * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1;
    TimingRow {
        n_channels: n,
        stage: stage.into(),
        repetitions: ms.len(),
        mean_ms: if ms.len() == 1 { ms[0] } else { mean },
        p95_ms: ms[idx],
    }
}

/// Times adjacency construction per window and model inference per sequence
/// for surrogates observed through `n` channels. One warm-up run per stage is
/// discarded; measurements run on the calling thread.
pub fn timing_benchmark(sizes: &[usize], repetitions: usize, spec: &ModelSpec, dmd: &DmdConfig, seed: u64) -> Result<Vec<TimingRow>> {
    let reps = repetitions.max(1);
    let mut rows = Vec::new();
    for &n in sizes {
        let cfg = SurrogateConfig {
            n_gen: n.div_ceil(4).max(2),
            duration_ms: 6000,
            ..SurrogateConfig::default()
        };
        let mix = GenerationMix { sg: 40, gfm: 30, gfl: 30 };
        let rec = synthesize_scenario(&mix, EventKind::Unperturbed, seed, &cfg)?;
        let channels: Vec<usize> = (0..n).collect();
        let t_len = 1000;
        let max_start = rec.rows() - t_len;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut window = || -> Result<TimeSeriesWindow> {
            let start = rng.random_range(0..max_start);
            rec.window(start, t_len)?.select_channels(&channels)
        };
        let mut adj_ms = Vec::with_capacity(reps);
        let mut graphs = Vec::new();
        let _ = build_adjacency(&window()?, dmd)?;
        for _ in 0..reps {
            let w = window()?;
            let t0 = Instant::now();
            let g = build_adjacency(&w, dmd)?;
            adj_ms.push(t0.elapsed().as_secs_f64() * 1e3);
            if graphs.len() < spec.l_seq.max(1) {
                graphs.push(g);
            }
        }
        rows.push(summarize(n, "adjacency", adj_ms));

        let params = init_params(spec.dims(n, t_len), spec.variant, seed)?;
        while graphs.len() < spec.l_seq.max(1) {
            graphs.push(build_adjacency(&window()?, dmd)?);
        }
        let input = crate::model::ModelInput {
            means: (0..graphs.len())
                .map(|_| nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
            graphs,
        };
        let _ = forward(&input, &params)?;
        let mut fwd_ms = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = Instant::now();
            std::hint::black_box(forward(std::hint::black_box(&input), &params)?);
            fwd_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(summarize(n, "inference", fwd_ms));
    }
    Ok(rows)
}
