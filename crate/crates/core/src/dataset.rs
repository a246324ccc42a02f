//! Scenario windowing, dataset assembly and the on-disk scenario store.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjacency::{build_adjacency, sequence_windows, AdjacencyTensor, SequenceConfig};
use crate::data::{
    scenario_seed, subsample_scenarios, synthesize_scenario, ternary_grid, EventKind, GenerationMix, LabelConfig,
    ScenarioRecord, SurrogateConfig,
};
use crate::dmd::{DmdConfig, C64};
use crate::error::{DramnError, Result};
use crate::model::ModelInput;
use crate::training::{Example, Standardizer};
use crate::window::TimeSeriesWindow;

/// Where sequence end-times fall, all in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowPlan {
    pub sequence: SequenceConfig,
    pub event_first_end_ms: i64,
    pub event_last_end_ms: i64,
    pub event_end_step_ms: i64,
    pub unperturbed_range_ms: (i64, i64),
    pub unperturbed_count: usize,
    /// Ranges that must contain every window of a generalization sequence.
    pub heldout_ranges_ms: Vec<(i64, i64)>,
    pub heldout_end_step_ms: i64,
}

impl Default for WindowPlan {
    fn default() -> Self {
        WindowPlan {
            sequence: SequenceConfig::default(),
            event_first_end_ms: 20_000,
            event_last_end_ms: 30_000,
            event_end_step_ms: 1000,
            unperturbed_range_ms: (10_000, 60_000),
            unperturbed_count: 11,
            heldout_ranges_ms: vec![(0, 19_000), (30_001, 60_000)],
            heldout_end_step_ms: 1000,
        }
    }
}

impl WindowPlan {
    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        if self.event_end_step_ms <= 0 || self.heldout_end_step_ms <= 0 || self.event_last_end_ms < self.event_first_end_ms {
            return Err(DramnError::Config(format!("invalid window plan {self:?}")));
        }
        if self.unperturbed_range_ms.1 < self.unperturbed_range_ms.0 {
            return Err(DramnError::EmptyRange(format!("unperturbed range {:?}", self.unperturbed_range_ms)));
        }
        Ok(())
    }

    /// End-times of the training sequences for one scenario.
    pub fn training_ends(&self, event: EventKind, seed: u64) -> Vec<i64> {
        if event.is_event() {
            (0..)
                .map(|k| self.event_first_end_ms + k * self.event_end_step_ms)
                .take_while(|&t| t <= self.event_last_end_ms)
                .collect()
        } else {
            let lo = self.unperturbed_range_ms.0.max(self.sequence.history_ms() - 1);
            let hi = self.unperturbed_range_ms.1.max(lo);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5E_ED0F_E4D5);
            let mut ends: Vec<i64> = (0..self.unperturbed_count).map(|_| rng.random_range(lo..=hi)).collect();
            ends.sort_unstable();
            ends
        }
    }

    /// End-times whose whole sequence lies inside one of the held-out ranges.
    pub fn heldout_ends(&self) -> Vec<i64> {
        let h = self.sequence.history_ms();
        let step = self.heldout_end_step_ms;
        let mut out = Vec::new();
        for &(lo, hi) in &self.heldout_ranges_ms {
            let first = lo + h - 1;
            let mut t = first.div_euclid(step) * step;
            if t < first {
                t += step;
            }
            while t <= hi {
                out.push(t);
                t += step;
            }
        }
        out
    }
}

/// One labelled sequence of windows with its adjacency tensors.
#[derive(Debug, Clone)]
pub struct SequenceSample {
    pub scenario_id: u64,
    pub mix: GenerationMix,
    pub event: EventKind,
    pub t_end: i64,
    pub windows: Vec<TimeSeriesWindow>,
    pub graphs: Vec<AdjacencyTensor>,
    pub label: u8,
}

impl SequenceSample {
    /// Raw per-channel window means, oldest window first.
    pub fn raw_means(&self) -> Vec<Vec<f64>> {
        self.windows.iter().map(|w| w.channel_means()).collect()
    }

    /// Model input built from standardized window means.
    pub fn to_example(&self, standardizer: &Standardizer) -> Example {
        let means = self
            .raw_means()
            .iter()
            .map(|m| DVector::from_vec(standardizer.transform_means(m)))
            .collect();
        Example {
            input: ModelInput {
                means,
                graphs: self.graphs.clone(),
            },
            label: self.label as f64,
        }
    }

    /// The same sample restricted to `channels`, with the graphs restricted to match.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        Ok(SequenceSample {
            windows: self
                .windows
                .iter()
                .map(|w| w.select_channels(channels))
                .collect::<Result<_>>()?,
            graphs: self.graphs.iter().map(|g| g.select_nodes(channels)).collect(),
            ..self.clone()
        })
    }

    /// Rebuilds the graphs from the (possibly modified) windows.
    pub fn with_windows(&self, windows: Vec<TimeSeriesWindow>, dmd: &DmdConfig) -> Result<Self> {
        let graphs = windows.iter().map(|w| build_adjacency(w, dmd)).collect::<Result<_>>()?;
        Ok(SequenceSample {
            windows,
            graphs,
            ..self.clone()
        })
    }
}

/// Cuts the sequences ending at `ends` out of a record and builds their graphs.
pub fn window_scenario(record: &ScenarioRecord, ends: &[i64], seq: &SequenceConfig, dmd: &DmdConfig) -> Result<Vec<SequenceSample>> {
    ends.iter()
        .map(|&t_end| {
            let windows = sequence_windows(&record.trajectory, record.n_channels, record.dt, &record.channel_names, t_end, seq)?;
            let graphs = windows
                .iter()
                .map(|w| build_adjacency(w, dmd))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.within(format!("scenario {} at {t_end} ms", record.id)))?;
            Ok(SequenceSample {
                scenario_id: record.id,
                mix: record.mix,
                event: record.event,
                t_end,
                windows,
                graphs,
                label: record.label,
            })
        })
        .collect()
}

/// Training and generalization samples of one record.
#[derive(Debug, Clone, Default)]
pub struct WindowedScenario {
    pub training: Vec<SequenceSample>,
    pub heldout: Vec<SequenceSample>,
}

/// Windows a labelled record; diverged records yield `None`.
pub fn window_dataset(record: &ScenarioRecord, plan: &WindowPlan, dmd: &DmdConfig, heldout: bool) -> Result<Option<WindowedScenario>> {
    plan.validate()?;
    if record.diverged {
        return Ok(None);
    }
    let training = window_scenario(record, &plan.training_ends(record.event, record.seed), &plan.sequence, dmd)?;
    let heldout = if heldout && record.event.is_event() {
        window_scenario(record, &plan.heldout_ends(), &plan.sequence, dmd)?
    } else {
        Vec::new()
    };
    Ok(Some(WindowedScenario { training, heldout }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub grid_total: u32,
    pub grid_min_share: u32,
    pub grid_step: u32,
    pub events: Vec<EventKind>,
    pub keep_1_in: usize,
    /// Apply the 1-in-k subsampling to unperturbed scenarios too.
    pub subsample_unperturbed: bool,
    pub surrogate: SurrogateConfig,
    pub labels: LabelConfig,
    pub windows: WindowPlan,
    pub dmd: DmdConfig,
    /// Build the generalization set from the held-out ranges.
    pub heldout: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            grid_total: 100,
            grid_min_share: 1,
            grid_step: 2,
            events: vec![EventKind::LoadIncrease, EventKind::ShortCircuit],
            keep_1_in: 20,
            subsample_unperturbed: true,
            surrogate: SurrogateConfig::default(),
            labels: LabelConfig::default(),
            windows: WindowPlan::default(),
            dmd: DmdConfig::default(),
            heldout: false,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        self.surrogate.validate()?;
        self.windows.validate()?;
        self.dmd.validate()?;
        if self.events.is_empty() || self.keep_1_in == 0 {
            return Err(DramnError::Config("events must be non-empty and keep_1_in positive".into()));
        }
        Ok(())
    }

    /// The (mix, event) pairs that survive subsampling.
    pub fn scenario_specs(&self, seed: u64) -> Result<Vec<(GenerationMix, EventKind)>> {
        let grid = ternary_grid(self.grid_total, self.grid_min_share, self.grid_step)?;
        let specs: Vec<_> = grid
            .iter()
            .flat_map(|m| self.events.iter().map(move |&e| (*m, e)))
            .collect();
        Ok(subsample_scenarios(&specs, self.keep_1_in, self.subsample_unperturbed, seed))
    }
}

/// Summary row of one synthesized scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: u64,
    pub mix: GenerationMix,
    pub event: EventKind,
    pub seed: u64,
    pub label: u8,
    pub diverged: bool,
}

impl ScenarioSummary {
    pub fn of(r: &ScenarioRecord) -> Self {
        ScenarioSummary {
            id: r.id,
            mix: r.mix,
            event: r.event,
            seed: r.seed,
            label: r.label,
            diverged: r.diverged,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<SequenceSample>,
    pub heldout: Vec<SequenceSample>,
    pub scenarios: Vec<ScenarioSummary>,
    pub channel_names: Vec<String>,
    pub skipped_diverged: usize,
}

impl Dataset {
    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn sample_scenario_ids(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.scenario_id).collect()
    }
}

/// Synthesizes, labels and windows every scenario. `parallel` only changes
/// scheduling: results are collected in scenario order either way.
pub fn build_dataset(cfg: &DatasetConfig, seed: u64, parallel: bool) -> Result<Dataset> {
    cfg.validate()?;
    let specs = cfg.scenario_specs(seed)?;
    let run = |&(mix, event): &(GenerationMix, EventKind)| -> Result<(ScenarioSummary, Option<WindowedScenario>)> {
        let rec = synthesize_scenario(&mix, event, scenario_seed(seed, &mix, event), &cfg.surrogate)?;
        let mut rec = rec;
        if !rec.diverged {
            rec.label = crate::data::label_scenario(&rec, &cfg.labels)?;
        }
        let win = window_dataset(&rec, &cfg.windows, &cfg.dmd, cfg.heldout)?;
        Ok((ScenarioSummary::of(&rec), win))
    };
    let results: Vec<Result<_>> = if parallel {
        specs.par_iter().map(run).collect()
    } else {
        specs.iter().map(run).collect()
    };
    let mut ds = Dataset {
        channel_names: cfg.surrogate.channel_names(),
        ..Default::default()
    };
    for r in results {
        let (summary, win) = r?;
        match win {
            Some(w) => {
                ds.samples.extend(w.training);
                ds.heldout.extend(w.heldout);
            }
            None => ds.skipped_diverged += 1,
        }
        ds.scenarios.push(summary);
    }
    Ok(ds)
}

/// Synthesizes the surviving scenarios without windowing them.
pub fn synthesize_all(cfg: &DatasetConfig, seed: u64, parallel: bool) -> Result<Vec<ScenarioRecord>> {
    cfg.validate()?;
    let specs = cfg.scenario_specs(seed)?;
    let run = |&(mix, event): &(GenerationMix, EventKind)| -> Result<ScenarioRecord> {
        let mut rec = synthesize_scenario(&mix, event, scenario_seed(seed, &mix, event), &cfg.surrogate)?;
        if !rec.diverged {
            rec.label = crate::data::label_scenario(&rec, &cfg.labels)?;
        }
        Ok(rec)
    };
    if parallel {
        specs.par_iter().map(run).collect()
    } else {
        specs.iter().map(run).collect()
    }
}

/// Windows already synthesized records in order.
pub fn window_records(records: &[ScenarioRecord], cfg: &DatasetConfig, parallel: bool) -> Result<Dataset> {
    let run = |r: &ScenarioRecord| window_dataset(r, &cfg.windows, &cfg.dmd, cfg.heldout);
    let wins: Vec<Result<_>> = if parallel {
        records.par_iter().map(run).collect()
    } else {
        records.iter().map(run).collect()
    };
    let mut ds = Dataset {
        channel_names: records
            .first()
            .map(|r| r.channel_names.to_vec())
            .unwrap_or_else(|| cfg.surrogate.channel_names()),
        ..Default::default()
    };
    for (rec, w) in records.iter().zip(wins) {
        match w? {
            Some(w) => {
                ds.samples.extend(w.training);
                ds.heldout.extend(w.heldout);
            }
            None => ds.skipped_diverged += 1,
        }
        ds.scenarios.push(ScenarioSummary::of(rec));
    }
    Ok(ds)
}

const SCENARIO_MAGIC: &[u8; 4] = b"DSCN";
const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioHeader {
    id: u64,
    mix: GenerationMix,
    event: EventKind,
    seed: u64,
    label: u8,
    diverged: bool,
    spectrum: Vec<(f64, f64)>,
    channel_names: Vec<String>,
    dt: f64,
    rows: usize,
}

pub fn scenario_file_name(id: u64) -> String {
    format!("scenario_{id:012}.bin")
}

/// Writes `magic, version, header length, JSON header, f64 LE samples`.
pub fn write_scenario(record: &ScenarioRecord, path: &Path) -> Result<()> {
    let header = ScenarioHeader {
        id: record.id,
        mix: record.mix,
        event: record.event,
        seed: record.seed,
        label: record.label,
        diverged: record.diverged,
        spectrum: record.generator_spectrum.iter().map(|z| (z.re, z.im)).collect(),
        channel_names: record.channel_names.to_vec(),
        dt: record.dt,
        rows: record.rows(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| DramnError::format(path, e.to_string()))?;
    let io = |e| DramnError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(SCENARIO_MAGIC).map_err(io)?;
    w.write_all(&SCENARIO_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    for v in record.trajectory.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioRecord> {
    let io = |e| DramnError::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(io)?;
    if &head[..4] != SCENARIO_MAGIC {
        return Err(DramnError::format(path, "not a scenario file"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != SCENARIO_VERSION {
        return Err(DramnError::format(path, format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(io)?;
    let h: ScenarioHeader = serde_json::from_slice(&json).map_err(|e| DramnError::format(path, e.to_string()))?;
    let n = h.channel_names.len();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != h.rows * n * 8 {
        return Err(DramnError::format(path, format!("expected {} samples, found {} bytes", h.rows * n, bytes.len())));
    }
    let traj: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(ScenarioRecord {
        id: h.id,
        mix: h.mix,
        event: h.event,
        seed: h.seed,
        trajectory: traj.into(),
        n_channels: n,
        channel_names: Arc::from(h.channel_names),
        dt: h.dt,
        generator_spectrum: h.spectrum.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
        label: h.label,
        diverged: h.diverged,
    })
}

pub const MANIFEST_NAME: &str = "manifest.tsv";
const MANIFEST_HEADER: &str = "id\tsg\tgfm\tgfl\tevent\tlabel\tdiverged\tfile";

/// Tab-separated manifest of `records`, after an optional `#` comment line.
pub fn manifest_text(records: &[ScenarioRecord], comment: Option<&str>) -> String {
    let mut manifest = String::new();
    if let Some(c) = comment {
        manifest.push_str(c);
        manifest.push('\n');
    }
    manifest.push_str(MANIFEST_HEADER);
    manifest.push('\n');
    for r in records {
        manifest.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.id,
            r.mix.sg,
            r.mix.gfm,
            r.mix.gfl,
            r.event.name(),
            r.label,
            r.diverged as u8,
            scenario_file_name(r.id)
        ));
    }
    manifest
}

/// Writes every record and then the manifest into `dir`.
pub fn write_store(records: &[ScenarioRecord], dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| DramnError::io(dir, e))?;
    for r in records {
        write_scenario(r, &dir.join(scenario_file_name(r.id)))?;
    }
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest_text(records, None)).map_err(|e| DramnError::io(&path, e))?;
    Ok(path)
}

/// Manifest rows as `(summary, file name)`.
pub fn read_manifest(dir: &Path) -> Result<Vec<(ScenarioSummary, String)>> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| DramnError::io(&path, e))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(DramnError::format(&path, "unexpected manifest header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || DramnError::format(&path, format!("malformed row {l:?}"));
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
            let event = match f[4] {
                "load_increase" => EventKind::LoadIncrease,
                "short_circuit" => EventKind::ShortCircuit,
                "unperturbed" => EventKind::Unperturbed,
                _ => return Err(bad()),
            };
            Ok((
                ScenarioSummary {
                    id: num(f[0])?,
                    mix: GenerationMix {
                        sg: num(f[1])? as u32,
                        gfm: num(f[2])? as u32,
                        gfl: num(f[3])? as u32,
                    },
                    event,
                    seed: 0,
                    label: num(f[5])? as u8,
                    diverged: num(f[6])? == 1,
                },
                f[7].to_string(),
            ))
        })
        .collect()
}

/// Loads every scenario listed in the manifest of `dir`.
pub fn read_store(dir: &Path) -> Result<Vec<ScenarioRecord>> {
    read_manifest(dir)?
        .into_iter()
        .map(|(_, file)| read_scenario(&dir.join(file)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mix(sg: u32, gfm: u32, gfl: u32) -> GenerationMix {
        GenerationMix { sg, gfm, gfl }
    }

    #[test]
    fn event_scenarios_yield_eleven_sequences() {
        let plan = WindowPlan::default();
        let ends = plan.training_ends(EventKind::LoadIncrease, 0);
        assert_eq!(ends, (20..=30).map(|s| s * 1000).collect::<Vec<_>>());
        let last: Vec<(i64, i64)> = ends.iter().map(|&t| *plan.sequence.window_spans(t).last().unwrap()).collect();
        assert_eq!(last[0], (19_001, 20_000));
        assert_eq!(last[10], (29_001, 30_000));
    }

    #[test]
    fn heldout_ends_stay_inside_ranges() {
        let plan = WindowPlan::default();
        let ends = plan.heldout_ends();
        let train = plan.training_ends(EventKind::ShortCircuit, 0);
        assert!(!ends.is_empty());
        for t in &ends {
            assert!(!train.contains(t));
            let spans = plan.sequence.window_spans(*t);
            let (s, e) = (spans[0].0, spans.last().unwrap().1);
            assert!(plan.heldout_ranges_ms.iter().any(|&(lo, hi)| s >= lo && e <= hi), "{t}");
        }
        assert_eq!(ends[0], 2000);
        assert!(ends.contains(&19_000) && ends.contains(&32_000) && ends.contains(&60_000));
        assert!(!ends.contains(&31_000));
    }

    #[test]
    fn unperturbed_ends_are_seeded() {
        let plan = WindowPlan::default();
        let a = plan.training_ends(EventKind::Unperturbed, 7);
        assert_eq!(a.len(), 11);
        assert!(a.iter().all(|&t| (10_000..=60_000).contains(&t)));
        assert_eq!(a, plan.training_ends(EventKind::Unperturbed, 7));
        assert_ne!(a, plan.training_ends(EventKind::Unperturbed, 8));
    }

    #[test]
    fn windowing_a_record() {
        let cfg = SurrogateConfig::default();
        let rec = synthesize_scenario(&mix(40, 40, 20), EventKind::LoadIncrease, 3, &cfg).unwrap();
        let plan = WindowPlan {
            heldout_end_step_ms: 10_000,
            ..WindowPlan::default()
        };
        let w = window_dataset(&rec, &plan, &DmdConfig::default(), true).unwrap().unwrap();
        assert_eq!(w.training.len(), 11);
        assert!(w.training.iter().all(|s| s.label == rec.label && s.graphs.len() == 5 && s.windows[0].len() == 1000));
        assert_eq!(w.training[0].windows[4].t_start(), 19_001);
        assert_eq!(w.training[0].windows[0].t_start(), 18_601);
        assert!(!w.heldout.is_empty());
        let train_ends: Vec<i64> = w.training.iter().map(|s| s.t_end).collect();
        assert!(w.heldout.iter().all(|s| !train_ends.contains(&s.t_end)));

        let mut diverged = rec.clone();
        diverged.diverged = true;
        assert!(window_dataset(&diverged, &plan, &DmdConfig::default(), true).unwrap().is_none());
    }

    #[test]
    fn dataset_is_a_function_of_config_and_seed() {
        let cfg = DatasetConfig {
            grid_step: 25,
            keep_1_in: 1,
            surrogate: SurrogateConfig {
                n_gen: 3,
                duration_ms: 32_000,
                ..SurrogateConfig::default()
            },
            windows: WindowPlan {
                unperturbed_range_ms: (10_000, 32_000),
                ..WindowPlan::default()
            },
            events: vec![EventKind::ShortCircuit],
            ..DatasetConfig::default()
        };
        let a = build_dataset(&cfg, 1, true).unwrap();
        let b = build_dataset(&cfg, 1, false).unwrap();
        assert_eq!(a.scenarios.len(), 3);
        assert_eq!(a.samples.len(), 33);
        assert_eq!(a.scenarios, b.scenarios);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.windows[0].as_slice(), y.windows[0].as_slice());
            assert_eq!(x.graphs, y.graphs);
        }
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SurrogateConfig {
            duration_ms: 2000,
            ..SurrogateConfig::default()
        };
        let recs: Vec<_> = [mix(30, 30, 40), mix(60, 20, 20)]
            .iter()
            .map(|m| synthesize_scenario(m, EventKind::Unperturbed, 4, &cfg).unwrap())
            .collect();
        write_store(&recs, dir.path()).unwrap();
        let back = read_store(dir.path()).unwrap();
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.trajectory, b.trajectory);
            assert_eq!(a.generator_spectrum, b.generator_spectrum);
            assert_eq!((a.id, a.label, a.mix, a.event), (b.id, b.label, b.mix, b.event));
        }
        let man = read_manifest(dir.path()).unwrap();
        assert_eq!(man.len(), 2);

        let bad = dir.path().join(scenario_file_name(recs[0].id));
        let mut bytes = std::fs::read(&bad).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&bad, bytes).unwrap();
        assert!(matches!(read_scenario(&bad), Err(DramnError::Format { .. })));
    }
}
