//! Synthetic labelled scenarios: a ring of generation units whose inertia,
//! damping and stiffness depend on the generation mix, discretized exactly
//! and driven by load-step or fault events.
//!
//! Unit `j` is synchronous, grid-forming or grid-following for `j mod 3 = 0, 1, 2`.
//! Grid-following units lose damping as their share grows past a threshold
//! that moves up with the grid-forming share, which carves a contiguous
//! unstable region out of the ternary simplex.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dmd::C64;
use crate::error::{DramnError, Result};
use crate::window::TimeSeriesWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenerationMix {
    pub sg: u32,
    pub gfm: u32,
    pub gfl: u32,
}

impl GenerationMix {
    pub fn total(&self) -> u32 {
        self.sg + self.gfm + self.gfl
    }

    /// Shares as fractions of the total.
    pub fn fractions(&self) -> [f64; 3] {
        let t = self.total() as f64;
        [self.sg as f64 / t, self.gfm as f64 / t, self.gfl as f64 / t]
    }
}

impl std::fmt::Display for GenerationMix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.sg, self.gfm, self.gfl)
    }
}

/// Every composition of `total` into three parts that are multiples of `step`
/// and at least `min_share`, ordered by `sg` then `gfm`.
pub fn ternary_grid(total: u32, min_share: u32, step: u32) -> Result<Vec<GenerationMix>> {
    if step == 0 {
        return Err(DramnError::Infeasible("ternary step must be positive".into()));
    }
    if total < 3 * min_share {
        return Err(DramnError::Infeasible(format!(
            "total {total} cannot hold three shares of at least {min_share}"
        )));
    }
    let lo = min_share.div_ceil(step).max(1) * step;
    let lo = if min_share == 0 { 0 } else { lo };
    let mut out = Vec::new();
    let mut sg = lo;
    while sg <= total {
        let mut gfm = lo;
        while sg + gfm <= total {
            let gfl = total - sg - gfm;
            if gfl >= lo && gfl.is_multiple_of(step) {
                out.push(GenerationMix { sg, gfm, gfl });
            }
            gfm += step;
        }
        sg += step;
    }
    if out.is_empty() {
        return Err(DramnError::Infeasible(format!(
            "no mixes with total {total}, minimum share {min_share} and step {step}"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LoadIncrease,
    ShortCircuit,
    Unperturbed,
}

impl EventKind {
    pub fn code(self) -> u64 {
        match self {
            EventKind::LoadIncrease => 0,
            EventKind::ShortCircuit => 1,
            EventKind::Unperturbed => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::LoadIncrease => "load_increase",
            EventKind::ShortCircuit => "short_circuit",
            EventKind::Unperturbed => "unperturbed",
        }
    }

    pub fn is_event(self) -> bool {
        self != EventKind::Unperturbed
    }
}

/// Stable identifier of a (mix, event) pair.
pub fn scenario_id(mix: &GenerationMix, event: EventKind) -> u64 {
    ((mix.sg as u64 * 1009 + mix.gfm as u64) * 1009 + mix.gfl as u64) * 4 + event.code()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scenario seed derived from the master seed and the scenario identity.
pub fn scenario_seed(master: u64, mix: &GenerationMix, event: EventKind) -> u64 {
    splitmix64(master ^ splitmix64(scenario_id(mix, event)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSet {
    pub voltage: bool,
    pub frequency: bool,
    pub active_power: bool,
    pub reactive_power: bool,
}

impl Default for ChannelSet {
    fn default() -> Self {
        ChannelSet {
            voltage: true,
            frequency: true,
            active_power: true,
            reactive_power: true,
        }
    }
}

impl ChannelSet {
    pub fn kinds(&self) -> Vec<char> {
        let mut k = Vec::new();
        for (on, c) in [
            (self.voltage, 'V'),
            (self.frequency, 'f'),
            (self.active_power, 'P'),
            (self.reactive_power, 'Q'),
        ] {
            if on {
                k.push(c);
            }
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    pub n_gen: usize,
    pub channels: ChannelSet,
    /// Seconds per sample.
    pub dt: f64,
    /// Simulated horizon in milliseconds; the trajectory has `duration_ms / (1000 dt) + 1` rows.
    pub duration_ms: i64,
    pub event_ms: i64,
    pub fault_duration_ms: i64,
    /// Total load increase in p.u., spread evenly over the units.
    pub load_step: f64,
    /// Accelerating input applied to the faulted units while the fault lasts.
    pub fault_kick: f64,
    pub fault_units: Vec<usize>,
    /// Voltage held on the faulted units while the fault lasts.
    pub fault_voltage: f64,
    /// Standard deviation of the initial state deviation.
    pub init_std: f64,
    pub kv: f64,
    pub kf: f64,
    pub kp: f64,
    pub kq: f64,
    /// Ring coupling scale; the Laplacian weight is `gain · (0.3 + σ_sg + σ_gfm)`.
    pub coupling_gain: f64,
    /// Loss of grid-following damping at full saturation.
    pub gfl_damping_drop: f64,
    pub gfl_threshold: f64,
    pub gfl_gfm_relief: f64,
    pub gfl_transition_width: f64,
    /// Clamp channels to sensor ranges (V in [0, 2], f in [57, 63], P in [-1, 2], Q in [-1, 1]).
    pub sensor_limits: bool,
    /// State magnitude beyond which the integration is flagged as diverged.
    pub divergence_limit: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_gen: 3,
            channels: ChannelSet::default(),
            dt: 1e-3,
            duration_ms: 60_000,
            event_ms: 20_000,
            fault_duration_ms: 50,
            load_step: 0.1,
            fault_kick: 3.0,
            fault_units: vec![0, 1],
            fault_voltage: 0.2,
            init_std: 1e-3,
            kv: 35.0,
            kf: 3.0 / (2.0 * std::f64::consts::PI),
            kp: 0.1,
            kq: 0.5,
            coupling_gain: 10.0,
            gfl_damping_drop: 2.3,
            gfl_threshold: 0.45,
            gfl_gfm_relief: 0.3,
            gfl_transition_width: 0.002,
            sensor_limits: true,
            divergence_limit: 1e100,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_gen < 2 {
            return Err(DramnError::Config("surrogate needs at least two units".into()));
        }
        if self.channels.kinds().is_empty() {
            return Err(DramnError::Config("at least one channel kind must be enabled".into()));
        }
        if !(self.dt > 0.0) || self.duration_ms <= 0 {
            return Err(DramnError::Config("dt and duration must be positive".into()));
        }
        if let Some(&u) = self.fault_units.iter().find(|&&u| u >= self.n_gen) {
            return Err(DramnError::Config(format!("fault unit {u} out of {} units", self.n_gen)));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.kinds().len() * self.n_gen
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels
            .kinds()
            .into_iter()
            .flat_map(|k| (0..self.n_gen).map(move |j| format!("{k}{j}")))
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.ms_to_row(self.duration_ms) + 1
    }

    pub fn ms_to_row(&self, ms: i64) -> usize {
        (ms as f64 / (1000.0 * self.dt)).round() as usize
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Linear swing-equation network `M ω̇ = −D ω − (K + L) δ + u`, state `[δ; ω]`.
#[derive(Debug, Clone)]
pub struct SurrogateSystem {
    pub n_gen: usize,
    pub inertia: DVector<f64>,
    pub damping: DVector<f64>,
    /// `K + L`: local restoring stiffness plus ring coupling Laplacian.
    pub stiffness: DMatrix<f64>,
    /// Continuous-time state matrix, `2 n_gen` square.
    pub a: DMatrix<f64>,
    /// Input map, `2 n_gen x n_gen`.
    pub b: DMatrix<f64>,
}

impl SurrogateSystem {
    pub fn new(mix: &GenerationMix, cfg: &SurrogateConfig) -> Result<Self> {
        cfg.validate()?;
        let [s_sg, s_gfm, s_gfl] = mix.fractions();
        let g = cfg.n_gen;
        let crit = (s_gfl - cfg.gfl_threshold - cfg.gfl_gfm_relief * s_gfm) / cfg.gfl_transition_width;
        let mut inertia = DVector::zeros(g);
        let mut damping = DVector::zeros(g);
        let mut stiff = DMatrix::<f64>::zeros(g, g);
        for j in 0..g {
            let (m, d, kappa) = match j % 3 {
                0 => (0.5 + 3.0 * s_sg, 2.0 + 6.0 * s_sg, s_sg),
                1 => (0.3 + 1.0 * s_gfm, 1.5 + 8.0 * s_gfm, s_gfm),
                _ => (0.4, 2.0 - cfg.gfl_damping_drop * sigmoid(crit), 0.3),
            };
            inertia[j] = m;
            damping[j] = d;
            stiff[(j, j)] += 60.0 * m * (0.6 + 0.8 * kappa);
        }
        let coupling = cfg.coupling_gain * (0.3 + s_sg + s_gfm);
        for j in 0..g {
            let mut nbrs = vec![(j + g - 1) % g, (j + 1) % g];
            nbrs.dedup();
            if g == 2 {
                nbrs.truncate(1);
            }
            for l in nbrs {
                stiff[(j, j)] += coupling;
                stiff[(j, l)] -= coupling;
            }
        }
        let mut a = DMatrix::zeros(2 * g, 2 * g);
        let mut b = DMatrix::zeros(2 * g, g);
        for j in 0..g {
            a[(j, g + j)] = 1.0;
            for l in 0..g {
                a[(g + j, l)] = -stiff[(j, l)] / inertia[j];
            }
            a[(g + j, g + j)] = -damping[j] / inertia[j];
            b[(g + j, j)] = 1.0 / inertia[j];
        }
        Ok(SurrogateSystem {
            n_gen: g,
            inertia,
            damping,
            stiffness: stiff,
            a,
            b,
        })
    }

    /// Continuous-time eigenvalues, sorted by descending real part then imaginary part.
    pub fn spectrum(&self) -> Vec<C64> {
        let mut ev: Vec<C64> = self.a.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
        ev
    }

    /// Exact zero-order-hold discretization from the exponential of the
    /// augmented matrix `[[A, B], [0, 0]]·dt`.
    pub fn discretize(&self, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = self.a.nrows();
        let k = self.b.ncols();
        let mut aug = DMatrix::zeros(m + k, m + k);
        aug.view_mut((0, 0), (m, m)).copy_from(&(&self.a * dt));
        aug.view_mut((0, m), (m, k)).copy_from(&(&self.b * dt));
        let e = aug.exp();
        (e.view((0, 0), (m, m)).into_owned(), e.view((0, m), (m, k)).into_owned())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRecord {
    pub id: u64,
    pub mix: GenerationMix,
    pub event: EventKind,
    pub seed: u64,
    /// Row-major `rows x n` samples, row `k` at `k·dt` seconds.
    pub trajectory: Arc<[f64]>,
    pub n_channels: usize,
    pub channel_names: Arc<[String]>,
    pub dt: f64,
    pub generator_spectrum: Vec<C64>,
    pub label: u8,
    pub diverged: bool,
}

impl ScenarioRecord {
    pub fn rows(&self) -> usize {
        self.trajectory.len() / self.n_channels.max(1)
    }

    pub fn value(&self, row: usize, channel: usize) -> f64 {
        self.trajectory[row * self.n_channels + channel]
    }

    /// A window of `len` rows starting at `start_row`.
    pub fn window(&self, start_row: usize, len: usize) -> Result<TimeSeriesWindow> {
        TimeSeriesWindow::view(
            Arc::clone(&self.trajectory),
            self.n_channels,
            start_row,
            len,
            self.dt,
            Arc::clone(&self.channel_names),
            (start_row as f64 * self.dt * 1000.0).round() as i64,
        )
    }
}

fn clamp_if(on: bool, v: f64, lo: f64, hi: f64) -> f64 {
    if on {
        v.clamp(lo, hi)
    } else {
        v
    }
}

/// Simulates 60 s (by default) of the surrogate for one mix and event and labels the result.
pub fn synthesize_scenario(mix: &GenerationMix, event: EventKind, seed: u64, cfg: &SurrogateConfig) -> Result<ScenarioRecord> {
    let sys = SurrogateSystem::new(mix, cfg)?;
    let g = cfg.n_gen;
    let m = 2 * g;
    let (ad, bd) = sys.discretize(cfg.dt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = Normal::new(0.0, cfg.init_std.max(0.0)).map_err(|e| DramnError::Config(e.to_string()))?;
    let mut x = DVector::from_fn(m, |_, _| init.sample(&mut rng));

    let rows = cfg.rows();
    let kinds = cfg.channels.kinds();
    let n = kinds.len() * g;
    let event_row = cfg.ms_to_row(cfg.event_ms);
    let fault_end = event_row + cfg.ms_to_row(cfg.fault_duration_ms);
    let base_p = 1.0 / g as f64;
    let per_unit_load = cfg.load_step / g as f64;
    let lim = cfg.sensor_limits;
    let mut is_fault_unit = vec![false; g];
    for &u in &cfg.fault_units {
        is_fault_unit[u] = true;
    }

    let mut traj = Vec::with_capacity(rows * n);
    let mut u = DVector::zeros(g);
    let mut diverged = false;
    for k in 0..rows {
        let loaded = event == EventKind::LoadIncrease && k >= event_row;
        let faulted = event == EventKind::ShortCircuit && k >= event_row && k < fault_end;
        for j in 0..g {
            u[j] = 0.0;
            if loaded {
                u[j] -= per_unit_load;
            }
            if faulted && is_fault_unit[j] {
                u[j] += cfg.fault_kick;
            }
        }
        let delta = x.rows(0, g);
        let omega = x.rows(g, g);
        let mean_delta = delta.mean();
        let electrical = &sys.stiffness * delta;
        for &kind in &kinds {
            for j in 0..g {
                let clamp_unit = faulted && is_fault_unit[j];
                let v = match kind {
                    'V' if clamp_unit => cfg.fault_voltage,
                    'V' => clamp_if(lim, 1.0 + cfg.kv * delta[j], 0.0, 2.0),
                    'f' => clamp_if(lim, 60.0 + cfg.kf * omega[j], 57.0, 63.0),
                    'P' if clamp_unit => 0.0,
                    'P' => {
                        let load = if loaded { per_unit_load } else { 0.0 };
                        clamp_if(lim, base_p + cfg.kp * electrical[j] + load, -1.0, 2.0)
                    }
                    _ => clamp_if(lim, 0.1 + cfg.kq * (delta[j] - mean_delta), -1.0, 1.0),
                };
                traj.push(v);
            }
        }
        x = &ad * &x + &bd * &u;
        if !x.iter().all(|v| v.is_finite() && v.abs() <= cfg.divergence_limit) {
            diverged = true;
            break;
        }
    }
    if diverged {
        traj.clear();
    }
    let mut rec = ScenarioRecord {
        id: scenario_id(mix, event),
        mix: *mix,
        event,
        seed,
        trajectory: traj.into(),
        n_channels: n,
        channel_names: cfg.channel_names().into(),
        dt: cfg.dt,
        generator_spectrum: sys.spectrum(),
        label: 0,
        diverged,
    };
    if !diverged {
        rec.label = label_scenario(&rec, &LabelConfig::default())?;
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelConfig {
    pub v_band: (f64, f64),
    pub f_band: (f64, f64),
    pub min_damping_ratio: f64,
    /// Threshold checks only look at samples after this time, in seconds.
    pub settle_after_s: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            v_band: (0.95, 1.05),
            f_band: (59.8, 60.2),
            min_damping_ratio: 0.03,
            settle_after_s: 25.0,
        }
    }
}

/// Which labelling criteria fire for a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCriteria {
    pub growing_mode: bool,
    pub voltage_excursion: bool,
    pub frequency_excursion: bool,
    pub poor_damping: bool,
}

impl LabelCriteria {
    pub fn any(&self) -> bool {
        self.growing_mode || self.voltage_excursion || self.frequency_excursion || self.poor_damping
    }
}

/// Damping ratio `−Re λ / |λ|` of a continuous-time eigenvalue.
pub fn damping_ratio(lambda: C64) -> f64 {
    -lambda.re / lambda.norm()
}

pub fn spectral_criteria(spectrum: &[C64], min_zeta: f64) -> (bool, bool) {
    let growing = spectrum.iter().any(|z| z.re > 0.0);
    let poor = spectrum
        .iter()
        .filter(|z| z.im.abs() > 1e-9 * z.norm().max(1e-300))
        .any(|&z| damping_ratio(z) < min_zeta);
    (growing, poor)
}

pub fn label_criteria(record: &ScenarioRecord, cfg: &LabelConfig) -> Result<LabelCriteria> {
    if record.generator_spectrum.is_empty() {
        return Err(DramnError::Labeling(format!("scenario {} has no spectrum", record.id)));
    }
    let (growing_mode, poor_damping) = spectral_criteria(&record.generator_spectrum, cfg.min_damping_ratio);
    let first = ((cfg.settle_after_s / record.dt).floor() as usize + 1).min(record.rows());
    let mut crit = LabelCriteria {
        growing_mode,
        poor_damping,
        ..Default::default()
    };
    for (c, name) in record.channel_names.iter().enumerate() {
        let band = match name.chars().next() {
            Some('V') => cfg.v_band,
            Some('f') => cfg.f_band,
            _ => continue,
        };
        let out = (first..record.rows()).any(|k| {
            let v = record.value(k, c);
            v < band.0 || v > band.1
        });
        if out {
            if name.starts_with('V') {
                crit.voltage_excursion = true;
            } else {
                crit.frequency_excursion = true;
            }
        }
    }
    Ok(crit)
}

/// `1` (unstable) when any labelling criterion fires, else `0`.
pub fn label_scenario(record: &ScenarioRecord, cfg: &LabelConfig) -> Result<u8> {
    Ok(label_criteria(record, cfg)?.any() as u8)
}

/// Keeps about one in `keep_1_in` items, chosen pseudo-randomly under `seed`;
/// the kept items stay in their original order.
pub fn subsample<T: Clone>(items: &[T], keep_1_in: usize, seed: u64) -> Vec<T> {
    if keep_1_in <= 1 {
        return items.to_vec();
    }
    let count = (items.len() + keep_1_in / 2) / keep_1_in;
    let mut idx: Vec<usize> = (0..items.len()).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = idx[..count].to_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| items[i].clone()).collect()
}

/// Subsamples each event family separately; unperturbed scenarios are kept
/// whole unless `include_unperturbed` is set.
pub fn subsample_scenarios(
    specs: &[(GenerationMix, EventKind)],
    keep_1_in: usize,
    include_unperturbed: bool,
    seed: u64,
) -> Vec<(GenerationMix, EventKind)> {
    let mut out = Vec::new();
    for ev in [EventKind::LoadIncrease, EventKind::ShortCircuit, EventKind::Unperturbed] {
        let family: Vec<_> = specs.iter().copied().filter(|s| s.1 == ev).collect();
        if ev.is_event() || include_unperturbed {
            out.extend(subsample(&family, keep_1_in, seed ^ splitmix64(ev.code())));
        } else {
            out.extend(family);
        }
    }
    out
}

/// Adds white Gaussian noise to each channel so that the ratio of the
/// channel's deviation-from-mean power to the noise power is `snr_db`.
/// An infinite SNR returns the window unchanged; flat channels use unit power.
pub fn inject_noise(window: &TimeSeriesWindow, snr_db: f64, seed: u64) -> Result<TimeSeriesWindow> {
    if snr_db == f64::INFINITY {
        return Ok(window.clone());
    }
    if snr_db.is_nan() {
        return Err(DramnError::Domain("SNR must not be NaN".into()));
    }
    let means = window.channel_means();
    let n = window.n_channels();
    let mut power = vec![0.0; n];
    for k in 0..window.len() {
        for (c, v) in window.row(k).iter().enumerate() {
            power[c] += (v - means[c]).powi(2);
        }
    }
    let sigma: Vec<f64> = power
        .iter()
        .zip(&means)
        .map(|(p, mean)| {
            let p = p / window.len() as f64;
            // Rounding in the mean leaves a tiny residual power on constant channels.
            let flat = (1e-12 * mean.abs().max(1.0)).powi(2);
            let p = if p > flat { p } else { 1.0 };
            (p / 10f64.powf(snr_db / 10.0)).sqrt()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    window.map_values(|_, c, v| v + sigma[c] * rng.sample::<f64, _>(rand_distr::StandardNormal))
}
