//! The command stages behind the CLI. Each stage reads only files written by
//! earlier stages (scenario store, adjacency cache, checkpoints) and writes
//! its reports under the configured root.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{load_or_build, CacheStats};
use crate::config::RunConfig;
use crate::data::{scenario_seed, synthesize_scenario, ScenarioRecord};
use crate::dataset::{manifest_text, read_manifest, read_scenario, scenario_file_name, write_scenario, Dataset, DatasetConfig, ScenarioSummary, SequenceSample, MANIFEST_NAME};
use crate::error::{DramnError, Result};
use crate::experiment::{ablation_run, augment_with_noise, channel_ranking, fit_model, generalization_eval, noise_sweep, split_samples, timing_benchmark, AblationRow, AblationVariant, ModelSpec, TimingRow, TrainedModel};
use crate::metrics::MetricsReport;
use crate::model::{read_checkpoint, write_checkpoint, Variant};
use crate::report::{metrics_cells, metrics_table, read_json, write_atomic, write_json, write_tsv, RunMeta, METRICS_COLUMNS};
use crate::selection::{aggregated_edges, edges_tsv, report_tsv, top_k};
use crate::training::{split_dataset, Split, Standardizer, TrainConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Run every stage on the calling thread.
    pub deterministic: bool,
    /// Keep scenario files that already exist and parse.
    pub skip_existing: bool,
    /// Let training reuse valid adjacency cache files.
    pub resume: bool,
}

pub const MODEL_NAME: &str = "model";
pub const NOISE_MODEL_NAME: &str = "model_noise_augmented";

pub struct Pipeline {
    pub cfg: RunConfig,
    pub opts: RunOptions,
    meta: RunMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub stable: usize,
    pub unstable: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub scenarios: usize,
    pub written: usize,
    pub reused: usize,
    /// Per event name.
    pub balance: BTreeMap<String, ClassCounts>,
    pub manifest: PathBuf,
}

impl GenerateSummary {
    pub fn balance_tsv(&self) -> String {
        let mut out = String::from("event\tstable\tunstable\tdiverged\ttotal\n");
        let mut all = ClassCounts::default();
        for (event, c) in &self.balance {
            let _ = writeln!(out, "{event}\t{}\t{}\t{}\t{}", c.stable, c.unstable, c.diverged, c.stable + c.unstable + c.diverged);
            all.stable += c.stable;
            all.unstable += c.unstable;
            all.diverged += c.diverged;
        }
        let _ = writeln!(out, "all\t{}\t{}\t{}\t{}", all.stable, all.unstable, all.diverged, all.stable + all.unstable + all.diverged);
        out
    }
}

/// Everything besides the parameters that evaluation needs to rebuild a model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub spec: ModelSpec,
    pub standardizer: Standardizer,
    pub channels: Vec<usize>,
    pub channel_names: Vec<String>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
    pub split: Split,
    pub checkpoint_sha256: String,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub cache: CacheStats,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub key: String,
    pub metrics: MetricsReport,
    pub best_f1: bool,
}

#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub test: MetricsReport,
    pub generalization: Option<MetricsReport>,
    pub window_sweep: Vec<SweepRow>,
    pub node_subsets: Vec<SweepRow>,
}

#[derive(Debug, Clone)]
pub struct SelectSummary {
    pub ranking: Vec<String>,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRow {
    pub model: String,
    pub snr_db: f64,
    pub metrics: MetricsReport,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Marks the row with the highest F1, the first one on ties.
fn flag_best_f1(rows: &mut [SweepRow]) {
    let best = rows
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, f)) if f >= r.metrics.f1 => acc,
            _ => Some((i, r.metrics.f1)),
        });
    if let Some((i, _)) = best {
        rows[i].best_f1 = true;
    }
}

fn sweep_tsv(key: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{key}\t{METRICS_COLUMNS}\tbest_f1\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.key, metrics_cells(&r.metrics), r.best_f1 as u8);
    }
    out
}

impl Pipeline {
    pub fn new(cfg: RunConfig, opts: RunOptions) -> Result<Self> {
        cfg.validate()?;
        let meta = RunMeta::new(cfg.hash(), cfg.seed);
        Ok(Pipeline { cfg, opts, meta })
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    fn parallel(&self) -> bool {
        !self.opts.deterministic
    }

    /// The configured training settings under the master seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.cfg.seed,
            deterministic: self.opts.deterministic || self.cfg.train.deterministic,
            ..self.cfg.train.clone()
        }
    }

    fn report(&self, name: &str) -> PathBuf {
        self.cfg.paths.reports().join(name)
    }

    /// Synthesizes and labels every scenario into the store; the manifest is written last.
    pub fn generate(&self) -> Result<GenerateSummary> {
        let ds = &self.cfg.dataset;
        let store = self.cfg.paths.store();
        std::fs::create_dir_all(&store).map_err(|e| DramnError::io(&store, e))?;
        let specs = ds.scenario_specs(self.cfg.seed)?;
        let run = |&(mix, event): &(_, _)| -> Result<(ScenarioRecord, bool)> {
            let seed = scenario_seed(self.cfg.seed, &mix, event);
            let id = crate::data::scenario_id(&mix, event);
            let path = store.join(scenario_file_name(id));
            if self.opts.skip_existing && path.exists() {
                if let Ok(r) = read_scenario(&path) {
                    if r.id == id && r.seed == seed {
                        return Ok((r, false));
                    }
                }
            }
            let mut rec = synthesize_scenario(&mix, event, seed, &ds.surrogate)?;
            if !rec.diverged {
                rec.label = crate::data::label_scenario(&rec, &ds.labels)?;
            }
            write_scenario(&rec, &path)?;
            Ok((rec, true))
        };
        let results: Vec<Result<(ScenarioRecord, bool)>> = if self.parallel() {
            specs.par_iter().map(run).collect()
        } else {
            specs.iter().map(run).collect()
        };
        let mut records = Vec::with_capacity(results.len());
        let mut summary = GenerateSummary {
            scenarios: 0,
            written: 0,
            reused: 0,
            balance: BTreeMap::new(),
            manifest: store.join(MANIFEST_NAME),
        };
        for r in results {
            let (rec, fresh) = r?;
            if fresh {
                summary.written += 1;
            } else {
                summary.reused += 1;
            }
            let c = summary.balance.entry(rec.event.name().to_string()).or_default();
            match (rec.diverged, rec.label) {
                (true, _) => c.diverged += 1,
                (false, 0) => c.stable += 1,
                _ => c.unstable += 1,
            }
            // Keep only the header fields; the samples are on disk.
            records.push(ScenarioRecord {
                trajectory: Vec::new().into(),
                ..rec
            });
        }
        summary.scenarios = records.len();
        write_tsv(&self.report("class_balance.tsv"), &self.meta, &summary.balance_tsv())?;
        write_atomic(&summary.manifest, manifest_text(&records, Some(&self.meta.header_line())).as_bytes())?;
        Ok(summary)
    }

    fn manifest(&self) -> Result<Vec<(ScenarioSummary, String)>> {
        let store = self.cfg.paths.store();
        if !store.join(MANIFEST_NAME).exists() {
            return Err(DramnError::MissingArtifact(format!(
                "scenario manifest {} (run `dramn generate` first)",
                store.join(MANIFEST_NAME).display()
            )));
        }
        read_manifest(&store)
    }

    /// Reads the store and windows every record through the adjacency cache.
    pub fn load_dataset(&self, dataset: &DatasetConfig, reuse_cache: bool) -> Result<(Dataset, CacheStats)> {
        let store = self.cfg.paths.store();
        let cache = self.cfg.paths.cache();
        let rows = self.manifest()?;
        let run = |(_, file): &(ScenarioSummary, String)| -> Result<(ScenarioRecord, Option<_>, CacheStats)> {
            let path = store.join(file);
            if !path.exists() {
                return Err(DramnError::MissingArtifact(format!("scenario file {} listed in the manifest", path.display())));
            }
            let rec = read_scenario(&path)?;
            let (w, stats) = load_or_build(&rec, dataset, &cache, reuse_cache)?;
            Ok((rec, w, stats))
        };
        let results: Vec<Result<_>> = if self.parallel() {
            rows.par_iter().map(run).collect()
        } else {
            rows.iter().map(run).collect()
        };
        let mut ds = Dataset {
            channel_names: dataset.surrogate.channel_names(),
            ..Dataset::default()
        };
        let mut stats = CacheStats::default();
        for r in results {
            let (rec, w, s) = r?;
            stats.merge(s);
            match w {
                Some(w) => {
                    ds.samples.extend(w.training);
                    ds.heldout.extend(w.heldout);
                }
                None => ds.skipped_diverged += 1,
            }
            if let Some(first) = ds.samples.first() {
                ds.channel_names = first.windows[0].channel_names().to_vec();
            }
            ds.scenarios.push(ScenarioSummary::of(&rec));
        }
        if ds.samples.is_empty() {
            return Err(DramnError::DatasetTooSmall("the store holds no usable scenarios".into()));
        }
        Ok((ds, stats))
    }

    pub fn split(&self, ds: &Dataset) -> Result<Split> {
        let t = &self.cfg.train;
        split_dataset(&ds.sample_scenario_ids(), t.val_fraction, t.test_fraction, self.cfg.seed)
    }

    fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.cfg.paths.checkpoints().join(format!("{name}.ckpt"))
    }

    fn sidecar_path(&self, name: &str) -> PathBuf {
        self.cfg.paths.checkpoints().join(format!("{name}.json"))
    }

    /// Writes `<name>.ckpt` (metadata line, then the binary parameters) and its JSON sidecar.
    fn save_model(&self, name: &str, model: &TrainedModel, spec: &ModelSpec, split: &Split, names: &[String], best_val: f64) -> Result<PathBuf> {
        let mut bytes = self.meta.header_line().into_bytes();
        bytes.push(b'\n');
        write_checkpoint(&model.params, &mut bytes).expect("writing to a Vec cannot fail");
        let path = self.checkpoint_path(name);
        write_atomic(&path, &bytes)?;
        let sidecar = ModelSidecar {
            spec: *spec,
            standardizer: model.standardizer.clone(),
            channels: model.channels.clone(),
            channel_names: model.channels.iter().map(|&c| names[c].clone()).collect(),
            best_epoch: model.best_epoch,
            epochs_run: model.history.len(),
            best_val_loss: best_val,
            split: split.clone(),
            checkpoint_sha256: sha256_hex(&bytes),
        };
        write_json(&self.sidecar_path(name), &self.meta, "model", &sidecar)?;
        Ok(path)
    }

    /// Loads a checkpoint written by [`Pipeline::train`] or [`Pipeline::noise`].
    pub fn load_model(&self, name: &str) -> Result<(TrainedModel, ModelSidecar)> {
        let ckpt = self.checkpoint_path(name);
        let side = self.sidecar_path(name);
        for p in [&ckpt, &side] {
            if !p.exists() {
                return Err(DramnError::MissingArtifact(format!("checkpoint file {} (run `dramn train` first)", p.display())));
            }
        }
        let (_, sidecar): (RunMeta, ModelSidecar) = read_json(&side)?;
        let bytes = std::fs::read(&ckpt).map_err(|e| DramnError::io(&ckpt, e))?;
        if sha256_hex(&bytes) != sidecar.checkpoint_sha256 {
            return Err(DramnError::format(&ckpt, "checkpoint does not match its sidecar"));
        }
        let mut r = BufReader::new(bytes.as_slice());
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| DramnError::io(&ckpt, e))?;
        if RunMeta::parse_header(line.trim_end()).is_none() {
            return Err(DramnError::format(&ckpt, "missing metadata line"));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(|e| DramnError::io(&ckpt, e))?;
        let params = read_checkpoint(&mut rest.as_slice()).map_err(|e| DramnError::format(&ckpt, e.to_string()))?;
        let model = TrainedModel {
            params,
            standardizer: sidecar.standardizer.clone(),
            channels: sidecar.channels.clone(),
            history: Vec::new(),
            best_epoch: sidecar.best_epoch,
        };
        Ok((model, sidecar))
    }

    fn history_tsv(model: &TrainedModel) -> String {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\twall_ms\n");
        for h in &model.history {
            let _ = writeln!(out, "{}\t{:.9}\t{:.9}\t{}", h.epoch, h.train_loss, h.val_loss, h.wall_ms);
        }
        out
    }

    pub fn train(&self) -> Result<TrainSummary> {
        let (ds, cache) = self.load_dataset(&self.cfg.dataset, self.opts.resume)?;
        let split = self.split(&ds)?;
        let (tr, va, te) = split_samples(&ds, &split);
        let tc = self.train_config();
        let model = fit_model(&tr, &va, &self.cfg.model, &tc, None).map_err(|e| e.within("training"))?;
        let best_val = model
            .history
            .get(model.best_epoch.saturating_sub(1))
            .map_or(f64::NAN, |h| h.val_loss);
        let checkpoint = self.save_model(MODEL_NAME, &model, &self.cfg.model, &split, &ds.channel_names, best_val)?;
        write_tsv(&self.report("history.tsv"), &self.meta, &Self::history_tsv(&model))?;
        Ok(TrainSummary {
            cache,
            n_train: tr.len(),
            n_val: va.len(),
            n_test: te.len(),
            best_epoch: model.best_epoch,
            epochs_run: model.history.len(),
            checkpoint,
        })
    }

    fn test_samples(&self, ds: &Dataset, sidecar: &ModelSidecar) -> Result<Vec<SequenceSample>> {
        let split = self.split(ds)?;
        if split != sidecar.split {
            return Err(DramnError::format(
                self.sidecar_path(MODEL_NAME),
                "the store no longer matches the split the model was trained on",
            ));
        }
        Ok(split_samples(ds, &split).2)
    }

    pub fn evaluate(&self, window_sweep: bool, node_subsets: bool) -> Result<EvaluateSummary> {
        let (model, sidecar) = self.load_model(MODEL_NAME)?;
        let (ds, _) = self.load_dataset(&self.cfg.dataset, true)?;
        let te = self.test_samples(&ds, &sidecar)?;
        let thr = self.cfg.evaluate.threshold;
        let par = self.parallel();
        let test = model.evaluate(&te, thr, par)?;
        let generalization = if ds.heldout.is_empty() {
            None
        } else {
            Some(generalization_eval(&model, &ds.heldout, par)?)
        };
        let mut rows = vec![("test".to_string(), test.clone())];
        if let Some(g) = &generalization {
            rows.push(("generalization".to_string(), g.clone()));
        }
        write_tsv(&self.report("metrics.tsv"), &self.meta, &metrics_table("set", &rows))?;
        write_json(&self.report("metrics.json"), &self.meta, "metrics", &rows)?;

        let tc = self.train_config();
        let mut summary = EvaluateSummary {
            test,
            generalization,
            window_sweep: Vec::new(),
            node_subsets: Vec::new(),
        };
        if window_sweep {
            for &t_ms in &self.cfg.evaluate.window_sweep_ms {
                let mut dcfg = self.cfg.dataset.clone();
                dcfg.windows.sequence.window_ms = t_ms;
                dcfg.heldout = false;
                let (wds, _) = self.load_dataset(&dcfg, true).map_err(|e| e.within(format!("window {t_ms} ms")))?;
                let split = self.split(&wds)?;
                let (tr, va, te) = split_samples(&wds, &split);
                let m = fit_model(&tr, &va, &self.cfg.model, &tc, None).map_err(|e| e.within(format!("window {t_ms} ms")))?;
                summary.window_sweep.push(SweepRow {
                    key: t_ms.to_string(),
                    metrics: m.evaluate(&te, thr, par)?,
                    best_f1: false,
                });
            }
            flag_best_f1(&mut summary.window_sweep);
            write_tsv(&self.report("window_sweep.tsv"), &self.meta, &sweep_tsv("window_ms", &summary.window_sweep))?;
        }
        if node_subsets {
            let (tr, va, te) = split_samples(&ds, &self.split(&ds)?);
            let sel = &self.cfg.select;
            let ranking = channel_ranking(&tr, sel.t_from_ms, sel.t_to_ms)?;
            let n = ds.n_channels();
            let mut ks: Vec<usize> = self.cfg.evaluate.node_subsets.iter().copied().filter(|&k| k > 0 && k < n).collect();
            ks.sort_unstable();
            ks.dedup();
            ks.push(n);
            for k in ks {
                let channels = top_k(&ranking, k)?;
                let m = if k == n {
                    model.clone()
                } else {
                    fit_model(&tr, &va, &self.cfg.model, &tc, Some(&channels)).map_err(|e| e.within(format!("top-{k} channels")))?
                };
                summary.node_subsets.push(SweepRow {
                    key: if k == n { format!("all ({n})") } else { k.to_string() },
                    metrics: m.evaluate(&te, thr, par)?,
                    best_f1: false,
                });
            }
            flag_best_f1(&mut summary.node_subsets);
            write_tsv(&self.report("node_subsets.tsv"), &self.meta, &sweep_tsv("channels", &summary.node_subsets))?;
        }
        Ok(summary)
    }

    /// Ranks channels by node strength over the training graphs.
    pub fn select(&self) -> Result<SelectSummary> {
        let (ds, _) = self.load_dataset(&self.cfg.dataset, true)?;
        let (tr, _, _) = split_samples(&ds, &self.split(&ds)?);
        let sel = &self.cfg.select;
        let report = channel_ranking(&tr, sel.t_from_ms, sel.t_to_ms)?;
        let chosen = top_k(&report, sel.k.min(ds.n_channels()))?;
        let names = &ds.channel_names;
        write_tsv(&self.report("node_strength.tsv"), &self.meta, &report_tsv(&report, names))?;
        let graphs: Vec<_> = tr.iter().flat_map(|s| s.graphs.iter().cloned()).collect();
        let edges = aggregated_edges(&graphs, sel.t_from_ms, sel.t_to_ms, sel.edge_top_percent)?;
        write_tsv(&self.report("edges.tsv"), &self.meta, &edges_tsv(&edges, names))?;
        let summary = SelectSummary {
            ranking: report.ranking.iter().map(|&c| names[c].clone()).collect(),
            selected: chosen.iter().map(|&c| names[c].clone()).collect(),
        };
        write_json(&self.report("selection.json"), &self.meta, "selection", &serde_json::json!({
            "k": chosen.len(),
            "selected": summary.selected,
            "ranking": summary.ranking,
            "time_range_ms": [sel.t_from_ms, sel.t_to_ms],
        }))?;
        Ok(summary)
    }

    /// Sweeps SNR for the trained model and for a model trained on noise-augmented data.
    pub fn noise(&self) -> Result<Vec<NoiseRow>> {
        let (clean, sidecar) = self.load_model(MODEL_NAME)?;
        let (ds, _) = self.load_dataset(&self.cfg.dataset, true)?;
        let split = self.split(&ds)?;
        let te = self.test_samples(&ds, &sidecar)?;
        let (tr, va, _) = split_samples(&ds, &split);
        let par = self.parallel();
        let dmd = &self.cfg.dataset.dmd;
        let seed = self.cfg.seed;
        let range = self.cfg.noise.augment_snr_db;
        let tr_aug = augment_with_noise(&tr, range, dmd, seed, par)?;
        let va_aug = augment_with_noise(&va, range, dmd, seed ^ 1, par)?;
        let aug = fit_model(&tr_aug, &va_aug, &self.cfg.model, &self.train_config(), None).map_err(|e| e.within("noise-augmented training"))?;
        let best_val = aug.history.get(aug.best_epoch.saturating_sub(1)).map_or(f64::NAN, |h| h.val_loss);
        self.save_model(NOISE_MODEL_NAME, &aug, &self.cfg.model, &split, &ds.channel_names, best_val)?;
        let snrs = &self.cfg.noise.snrs_db;
        let mut rows = Vec::new();
        for (name, m) in [("clean", &clean), ("noise_augmented", &aug)] {
            for p in noise_sweep(m, &te, snrs, dmd, seed ^ 0x5EED, par)? {
                rows.push(NoiseRow {
                    model: name.into(),
                    snr_db: p.snr_db,
                    metrics: p.metrics,
                });
            }
        }
        let mut out = format!("model\tsnr_db\t{METRICS_COLUMNS}\n");
        for r in &rows {
            let _ = writeln!(out, "{}\t{}\t{}", r.model, r.snr_db, metrics_cells(&r.metrics));
        }
        write_tsv(&self.report("noise.tsv"), &self.meta, &out)?;
        Ok(rows)
    }

    /// The standard ablation variants at the configured model width.
    pub fn ablation_variants(&self) -> Vec<AblationVariant> {
        let l = self.cfg.model.l_seq;
        AblationVariant::standard()
            .into_iter()
            .map(|mut v| {
                let seq = if v.spec.l_seq > 1 { l } else { 1 };
                v.spec = ModelSpec {
                    variant: v.spec.variant,
                    l_seq: seq,
                    ..self.cfg.model
                };
                if v.spec.variant == Variant::Dramn && seq > 1 {
                    v.name = format!("dramn_lseq{seq}");
                }
                v
            })
            .collect()
    }

    pub fn ablate(&self) -> Result<Vec<AblationRow>> {
        let (ds, _) = self.load_dataset(&self.cfg.dataset, true)?;
        let (tr, va, te) = split_samples(&ds, &self.split(&ds)?);
        let rows: Vec<AblationRow> = ablation_run(&tr, &va, &te, &self.ablation_variants(), &self.train_config())?
            .into_iter()
            .map(|(r, _)| r)
            .collect();
        let mut out = format!("variant\t{METRICS_COLUMNS}\tbest_epoch\tepochs_run\tnon_convergent\n");
        for r in &rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.name, metrics_cells(&r.metrics), r.best_epoch, r.epochs_run, r.non_convergent as u8);
        }
        write_tsv(&self.report("ablation.tsv"), &self.meta, &out)?;
        Ok(rows)
    }

    pub fn bench(&self) -> Result<Vec<TimingRow>> {
        let b = &self.cfg.bench;
        let rows = timing_benchmark(&b.sizes, b.repetitions, &self.cfg.model, &self.cfg.dataset.dmd, self.cfg.seed)?;
        let mut out = String::from("n_channels\tstage\trepetitions\tmean_ms\tp95_ms\n");
        for r in &rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{:.4}\t{:.4}", r.n_channels, r.stage, r.repetitions, r.mean_ms, r.p95_ms);
        }
        write_tsv(&self.report("bench.tsv"), &self.meta, &out)?;
        Ok(rows)
    }
}

/// True when `path` is a report whose metadata line names this run.
pub fn report_matches(path: &Path, meta: &RunMeta) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| t.lines().next().and_then(RunMeta::parse_header))
        .is_some_and(|m| &m == meta)
}
