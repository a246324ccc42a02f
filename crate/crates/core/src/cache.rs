//! On-disk cache of adjacency sequences, one file per scenario.
//!
//! Layout: `DACC`, version `u32`, 32-byte key, payload length `u64`, CRC-32 of
//! the payload `u32`, payload. The payload lists training then held-out
//! samples as `t_end i64`, tensor count `u32`, tensors. A file whose key or
//! checksum does not match is rebuilt.

use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::adjacency::{sequence_windows, AdjacencyTensor};
use crate::data::ScenarioRecord;
use crate::dataset::{window_dataset, DatasetConfig, SequenceSample, WindowedScenario};
use crate::error::{DramnError, Result};
use crate::report::write_atomic;

const MAGIC: &[u8; 4] = b"DACC";
const VERSION: u32 = 1;

/// Hash of everything that shapes the cached tensors.
pub fn cache_key(cfg: &DatasetConfig) -> [u8; 32] {
    let json = serde_json::to_vec(&(&cfg.surrogate, &cfg.labels, &cfg.windows, &cfg.dmd, cfg.heldout)).expect("config serializes");
    Sha256::digest(&json).into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    /// Files present but rejected (wrong key, bad checksum or malformed).
    pub rebuilt: usize,
}

impl CacheStats {
    pub fn merge(&mut self, o: CacheStats) {
        self.hits += o.hits;
        self.misses += o.misses;
        self.rebuilt += o.rebuilt;
    }
}

pub fn cache_file(dir: &Path, record: &ScenarioRecord, key: &[u8; 32]) -> PathBuf {
    let tag: String = key[..6].iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("adj_{:012}_{tag}.bin", record.id))
}

fn encode(w: &WindowedScenario) -> Vec<u8> {
    let mut p = Vec::new();
    for set in [&w.training, &w.heldout] {
        p.extend_from_slice(&(set.len() as u32).to_le_bytes());
        for s in set.iter() {
            p.extend_from_slice(&s.t_end.to_le_bytes());
            p.extend_from_slice(&(s.graphs.len() as u32).to_le_bytes());
            for g in &s.graphs {
                g.write_to(&mut p).expect("writing to a Vec cannot fail");
            }
        }
    }
    p
}

fn decode(payload: &[u8], record: &ScenarioRecord, cfg: &DatasetConfig) -> std::io::Result<WindowedScenario> {
    let mut r = Cursor::new(payload);
    let mut u32b = [0u8; 4];
    let mut i64b = [0u8; 8];
    let mut sets = Vec::new();
    for _ in 0..2 {
        r.read_exact(&mut u32b)?;
        let count = u32::from_le_bytes(u32b) as usize;
        let mut set = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut i64b)?;
            let t_end = i64::from_le_bytes(i64b);
            r.read_exact(&mut u32b)?;
            let n_graphs = u32::from_le_bytes(u32b) as usize;
            let graphs = (0..n_graphs)
                .map(|_| AdjacencyTensor::read_from(&mut r))
                .collect::<std::io::Result<Vec<_>>>()?;
            let windows = sequence_windows(
                &record.trajectory,
                record.n_channels,
                record.dt,
                &record.channel_names,
                t_end,
                &cfg.windows.sequence,
            )
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
            if windows.len() != graphs.len() || graphs.iter().any(|g| g.n != record.n_channels) {
                return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "tensor count or size mismatch"));
            }
            set.push(SequenceSample {
                scenario_id: record.id,
                mix: record.mix,
                event: record.event,
                t_end,
                windows,
                graphs,
                label: record.label,
            });
        }
        sets.push(set);
    }
    if r.position() as usize != payload.len() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "trailing bytes"));
    }
    let heldout = sets.pop().unwrap_or_default();
    let training = sets.pop().unwrap_or_default();
    Ok(WindowedScenario { training, heldout })
}

fn try_read(path: &Path, key: &[u8; 32], record: &ScenarioRecord, cfg: &DatasetConfig) -> Option<WindowedScenario> {
    let bytes = std::fs::read(path).ok()?;
    if bytes.len() < 52 || &bytes[..4] != MAGIC || u32::from_le_bytes(bytes[4..8].try_into().ok()?) != VERSION {
        return None;
    }
    if &bytes[8..40] != key {
        return None;
    }
    let len = u64::from_le_bytes(bytes[40..48].try_into().ok()?) as usize;
    let crc = u32::from_le_bytes(bytes[48..52].try_into().ok()?);
    let payload = bytes.get(52..)?;
    if payload.len() != len || crc32fast::hash(payload) != crc {
        return None;
    }
    decode(payload, record, cfg).ok()
}

pub fn write_cache(path: &Path, key: &[u8; 32], w: &WindowedScenario) -> Result<()> {
    let payload = encode(w);
    let mut bytes = Vec::with_capacity(payload.len() + 52);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(key);
    bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    bytes.extend_from_slice(&payload);
    write_atomic(path, &bytes)
}

/// Windows a record, reusing a valid cache file when `reuse` is set and
/// (re)writing the cache otherwise. Diverged records yield `None`.
pub fn load_or_build(record: &ScenarioRecord, cfg: &DatasetConfig, dir: &Path, reuse: bool) -> Result<(Option<WindowedScenario>, CacheStats)> {
    let mut stats = CacheStats::default();
    if record.diverged {
        return Ok((None, stats));
    }
    let key = cache_key(cfg);
    let path = cache_file(dir, record, &key);
    if reuse && path.exists() {
        if let Some(w) = try_read(&path, &key, record, cfg) {
            stats.hits += 1;
            return Ok((Some(w), stats));
        }
        stats.rebuilt += 1;
    } else {
        stats.misses += 1;
    }
    let w = window_dataset(record, &cfg.windows, &cfg.dmd, cfg.heldout)?
        .ok_or_else(|| DramnError::Labeling(format!("scenario {} diverged", record.id)))?;
    write_cache(&path, &key, &w)?;
    Ok((Some(w), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize_scenario, EventKind, GenerationMix, SurrogateConfig};
    use crate::dataset::WindowPlan;

    fn setup() -> (ScenarioRecord, DatasetConfig) {
        let cfg = DatasetConfig {
            surrogate: SurrogateConfig {
                duration_ms: 32_000,
                ..SurrogateConfig::default()
            },
            windows: WindowPlan {
                heldout_ranges_ms: vec![(0, 19_000)],
                heldout_end_step_ms: 9000,
                ..WindowPlan::default()
            },
            heldout: true,
            ..DatasetConfig::default()
        };
        let rec = synthesize_scenario(&GenerationMix { sg: 30, gfm: 30, gfl: 40 }, EventKind::LoadIncrease, 5, &cfg.surrogate).unwrap();
        (rec, cfg)
    }

    #[test]
    fn hit_after_build_and_rebuild_after_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let (rec, cfg) = setup();
        let (a, s1) = load_or_build(&rec, &cfg, dir.path(), true).unwrap();
        assert_eq!(s1, CacheStats { hits: 0, misses: 1, rebuilt: 0 });
        let (b, s2) = load_or_build(&rec, &cfg, dir.path(), true).unwrap();
        assert_eq!(s2.hits, 1);
        let (a, b) = (a.unwrap(), b.unwrap());
        assert_eq!(a.training.len(), 11);
        assert_eq!(a.heldout.len(), 2);
        for (x, y) in a.training.iter().chain(&a.heldout).zip(b.training.iter().chain(&b.heldout)) {
            assert_eq!(x.graphs, y.graphs);
            assert_eq!(x.t_end, y.t_end);
            assert_eq!(x.windows[0].as_slice(), y.windows[0].as_slice());
        }

        let path = cache_file(dir.path(), &rec, &cache_key(&cfg));
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 9;
        bytes[last] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        let (c, s3) = load_or_build(&rec, &cfg, dir.path(), true).unwrap();
        assert_eq!(s3.rebuilt, 1);
        assert_eq!(c.unwrap().training[10].graphs, a.training[10].graphs);
        let (_, s4) = load_or_build(&rec, &cfg, dir.path(), true).unwrap();
        assert_eq!(s4.hits, 1);
    }

    #[test]
    fn key_tracks_window_geometry() {
        let (_, cfg) = setup();
        let mut other = cfg.clone();
        other.windows.sequence.window_ms = 500;
        assert_ne!(cache_key(&cfg), cache_key(&other));
        let mut same = cfg.clone();
        same.keep_1_in = 3;
        assert_eq!(cache_key(&cfg), cache_key(&same));
    }
}
