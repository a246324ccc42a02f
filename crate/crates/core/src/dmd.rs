//! Rank-truncated dynamic mode decomposition of a measurement window.
//!
//! Snapshot pairs `(X1, X2)` are related by a best-fit linear operator which is
//! projected onto the leading left singular vectors of `X1`. The reduced
//! operator's spectrum approximates the discrete-time eigenvalues of the data,
//! and the exact DMD modes lift its eigenvectors back to channel space.

use std::cmp::Ordering;

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{DramnError, Result};
use crate::linalg::{eigenvector, thin_svd};
use crate::window::TimeSeriesWindow;

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmdConfig {
    pub rank: usize,
    pub svd_rel_tol: f64,
    pub delay_embedding: usize,
}

impl Default for DmdConfig {
    fn default() -> Self {
        DmdConfig {
            rank: 5,
            svd_rel_tol: 1e-10,
            delay_embedding: 0,
        }
    }
}

impl DmdConfig {
    pub fn with_rank(rank: usize) -> Self {
        DmdConfig {
            rank,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(DramnError::Config("dmd rank must be at least 1".into()));
        }
        if !(self.svd_rel_tol > 0.0 && self.svd_rel_tol < 1.0) {
            return Err(DramnError::Config(format!(
                "svd_rel_tol {} must lie in (0, 1)",
                self.svd_rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DmdResult {
    /// `n x r_eff` complex modes.
    pub modes: DMatrix<C64>,
    /// Discrete-time eigenvalues, sorted by descending modulus.
    pub eigenvalues: DVector<C64>,
    pub r_eff: usize,
    /// Number of samples in the decomposed window.
    pub window_len: usize,
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `n x r` left singular vectors.
    pub u: DMatrix<f64>,
    /// Positive, descending singular values.
    pub s: DVector<f64>,
    /// `m x r` right singular vectors.
    pub v: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Splits a window into the shifted snapshot matrices `X1 = [x_0 .. x_{T-2}]`
/// and `X2 = [x_1 .. x_{T-1}]`, one column per sample.
pub fn build_snapshots(window: &TimeSeriesWindow) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let t = window.len();
    if t < 2 {
        return Err(DramnError::DegenerateWindow(format!(
            "need at least 2 samples for snapshot pairs, got {t}"
        )));
    }
    let n = window.n_channels();
    let data = window.as_slice();
    let x1 = DMatrix::from_column_slice(n, t - 1, &data[..n * (t - 1)]);
    let x2 = DMatrix::from_column_slice(n, t - 1, &data[n..]);
    Ok((x1, x2))
}

/// Thin SVD of `x1` keeping `min(rank, #{σ > rel_tol·σ_max})` components.
pub fn truncated_svd(x1: &DMatrix<f64>, rank: usize, rel_tol: f64) -> Result<TruncatedSvd> {
    if x1.iter().any(|v| !v.is_finite()) {
        return Err(DramnError::numerical("truncated_svd", "non-finite snapshot entry"));
    }
    if x1.iter().all(|&v| v == 0.0) {
        return Err(DramnError::ZeroMatrix);
    }
    let (u, sigma, v) = thin_svd(x1)?;
    let smax = sigma[0];
    if smax <= 0.0 {
        return Err(DramnError::ZeroMatrix);
    }
    let keep = sigma
        .iter()
        .take_while(|&&s| s > rel_tol * smax)
        .count()
        .min(rank)
        .max(1);
    Ok(TruncatedSvd {
        u: u.columns(0, keep).into_owned(),
        s: sigma.rows(0, keep).into_owned(),
        v: v.columns(0, keep).into_owned(),
    })
}

/// `X2 V_r S_r^{-1}`, the common factor of the reduced operator and the modes.
fn lifted_basis(svd: &TruncatedSvd, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x2.ncols() != svd.v.nrows() {
        return Err(DramnError::ShapeMismatch(format!(
            "X2 has {} columns but V_r has {} rows",
            x2.ncols(),
            svd.v.nrows()
        )));
    }
    let mut b = x2 * &svd.v;
    for (j, &s) in svd.s.iter().enumerate() {
        b.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(b)
}

/// `Ã = U_rᵀ X2 V_r S_r⁻¹`.
pub fn reduced_operator(svd: &TruncatedSvd, x2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x2.nrows() != svd.u.nrows() {
        return Err(DramnError::ShapeMismatch(format!(
            "X2 has {} rows but U_r has {} rows",
            x2.nrows(),
            svd.u.nrows()
        )));
    }
    Ok(svd.u.transpose() * lifted_basis(svd, x2)?)
}

fn eigen_order(a: &C64, b: &C64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

/// Eigen-decomposition of a small dense real matrix: `Ã W = W Λ`, eigenvalues
/// sorted by descending modulus, then real part, then imaginary part.
pub fn eig_small(a: &DMatrix<f64>) -> Result<(DMatrix<C64>, DVector<C64>)> {
    let r = a.nrows();
    if r == 0 || a.ncols() != r {
        return Err(DramnError::ShapeMismatch(format!(
            "eig_small needs a non-empty square matrix, got {}x{}",
            r,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(DramnError::numerical("eig_small", "non-finite operator entry"));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| DramnError::numerical("eig_small", "Schur iteration did not converge"))?;
    let mut lambdas: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    lambdas.sort_by(eigen_order);

    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let scale = a.norm();
    let mut w = DMatrix::<C64>::zeros(r, r);
    for (k, &lambda) in lambdas.iter().enumerate() {
        let v = eigenvector(&ac, lambda)?;
        let residual = (&ac * &v - &v * lambda).norm();
        if !(residual <= 1e-8 * scale) {
            return Err(DramnError::numerical(
                "eig_small",
                format!("eigenpair {k} (λ = {lambda}) has residual {residual:.3e} against ‖Ã‖ = {scale:.3e}"),
            ));
        }
        w.set_column(k, &v);
    }
    Ok((w, DVector::from_vec(lambdas)))
}

/// Exact DMD modes `Φ = X2 V_r S_r⁻¹ W`.
pub fn dmd_modes(x2: &DMatrix<f64>, svd: &TruncatedSvd, w: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if w.nrows() != svd.rank() {
        return Err(DramnError::ShapeMismatch(format!(
            "W has {} rows for rank {}",
            w.nrows(),
            svd.rank()
        )));
    }
    let b = lifted_basis(svd, x2)?.map(|v| C64::new(v, 0.0));
    Ok(b * w)
}

/// Stacks `delays` shifted copies under the original channels: block `j` of
/// output sample `k` holds input sample `k + delays - j`.
pub fn delay_embed(window: &TimeSeriesWindow, delays: usize) -> Result<TimeSeriesWindow> {
    if delays == 0 {
        return Ok(window.clone());
    }
    let t = window.len();
    if delays >= t {
        return Err(DramnError::DegenerateWindow(format!(
            "{delays} delays leave no samples in a window of {t}"
        )));
    }
    let n = window.n_channels();
    let out_len = t - delays;
    let mut rows = Vec::with_capacity(out_len * n * (delays + 1));
    for k in 0..out_len {
        for j in 0..=delays {
            rows.extend_from_slice(window.row(k + delays - j));
        }
    }
    let names = (0..=delays)
        .flat_map(|j| {
            window.channel_names().iter().map(move |c| {
                if j == 0 {
                    c.clone()
                } else {
                    format!("{c}@-{j}")
                }
            })
        })
        .collect();
    TimeSeriesWindow::from_rows(rows, n * (delays + 1), window.dt(), Some(names), window.t_start())
}

/// Collapses delay-embedded modes back to `n` rows: magnitudes are averaged
/// across the row blocks and phases are circular-averaged.
fn fold_modes(modes: &DMatrix<C64>, n: usize, blocks: usize) -> DMatrix<C64> {
    let r = modes.ncols();
    DMatrix::from_fn(n, r, |i, k| {
        let (mut mag, mut c, mut s) = (0.0, 0.0, 0.0);
        for j in 0..blocks {
            let z = modes[(j * n + i, k)];
            mag += z.norm();
            let ang = if z.norm() == 0.0 { 0.0 } else { z.arg() };
            c += ang.cos();
            s += ang.sin();
        }
        let phase = if c == 0.0 && s == 0.0 { 0.0 } else { s.atan2(c) };
        C64::from_polar(mag / blocks as f64, phase)
    })
}

/// Full decomposition pipeline for one window.
pub fn dmd(window: &TimeSeriesWindow, cfg: &DmdConfig) -> Result<DmdResult> {
    cfg.validate()?;
    let n = window.n_channels();
    let embedded;
    let source = if cfg.delay_embedding > 0 {
        embedded = delay_embed(window, cfg.delay_embedding)?;
        &embedded
    } else {
        window
    };
    let (x1, x2) = build_snapshots(source)?;
    let svd = truncated_svd(&x1, cfg.rank, cfg.svd_rel_tol)?;
    let a = reduced_operator(&svd, &x2)?;
    let (w, eigenvalues) = eig_small(&a)?;
    let mut modes = dmd_modes(&x2, &svd, &w)?;
    if cfg.delay_embedding > 0 {
        modes = fold_modes(&modes, n, cfg.delay_embedding + 1);
    }
    if modes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DramnError::numerical("dmd", "non-finite mode entry"));
    }
    Ok(DmdResult {
        r_eff: eigenvalues.len(),
        modes,
        eigenvalues,
        window_len: window.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{lti_trajectory, random_spectrum_system};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn win(rows: Vec<f64>, n: usize) -> TimeSeriesWindow {
        TimeSeriesWindow::from_rows(rows, n, 1e-3, None, 0).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn snapshots_shift_by_one_sample() {
        let (x1, x2) = build_snapshots(&win(vec![1.0, 2.0, 3.0], 1)).unwrap();
        assert_eq!(x1.as_slice(), &[1.0, 2.0]);
        assert_eq!(x2.as_slice(), &[2.0, 3.0]);

        let (x1, x2) = build_snapshots(&win(vec![4.0; 5], 1)).unwrap();
        assert_eq!(x1, x2);

        let (x1, x2) = build_snapshots(&win(vec![1.0, 0.5, 0.25, 0.125], 1)).unwrap();
        assert_eq!(x1.as_slice(), &[1.0, 0.5, 0.25]);
        assert_eq!(x2.as_slice(), &[0.5, 0.25, 0.125]);

        assert!(matches!(
            build_snapshots(&win(vec![1.0, 2.0], 2)),
            Err(DramnError::DegenerateWindow(_))
        ));
    }

    #[test]
    fn svd_identity_and_cutoff() {
        let s = truncated_svd(&DMatrix::identity(3, 3), 2, 1e-10).unwrap();
        assert_eq!(s.s.as_slice(), &[1.0, 1.0]);
        let utu = s.u.transpose() * &s.u;
        assert!((utu - DMatrix::identity(2, 2)).norm() < 1e-14);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1e-20]));
        let s = truncated_svd(&d, 5, 1e-12).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.s[0] - 3.0).abs() < 1e-15);

        assert!(matches!(
            truncated_svd(&DMatrix::zeros(3, 4), 2, 1e-10),
            Err(DramnError::ZeroMatrix)
        ));
    }

    /// One-sided Jacobi SVD used only as an independent reference for singular values.
    fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
        let mut m = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
        let c = m.ncols();
        for _ in 0..100 {
            let mut off = 0.0f64;
            for p in 0..c {
                for q in p + 1..c {
                    let alpha: f64 = m.column(p).norm_squared();
                    let beta: f64 = m.column(q).norm_squared();
                    let gamma: f64 = m.column(p).dot(&m.column(q));
                    off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                    if gamma.abs() < 1e-300 {
                        continue;
                    }
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    for i in 0..m.nrows() {
                        let (x, y) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = cs * x - sn * y;
                        m[(i, q)] = sn * x + cs * y;
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..c).map(|j| m.column(j).norm()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    #[test]
    fn svd_matches_jacobi_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DMatrix::from_fn(4, 6, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let s = truncated_svd(&a, 3, 1e-10).unwrap();
        let utu = s.u.transpose() * &s.u;
        let vtv = s.v.transpose() * &s.v;
        assert!((utu - DMatrix::identity(3, 3)).norm() < 1e-10);
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-10);
        let reference = jacobi_singular_values(&a);
        for (got, want) in s.s.iter().zip(&reference) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let recon = &s.u * DMatrix::from_diagonal(&s.s) * s.v.transpose();
        assert!((a - recon).norm() <= reference[3] * (1.0 + 1e-9));
    }

    #[test]
    fn reduced_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x1 = DMatrix::from_fn(3, 8, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let s = truncated_svd(&x1, 3, 1e-10).unwrap();
        let a = reduced_operator(&s, &x1).unwrap();
        assert!((&a - DMatrix::identity(3, 3)).norm() < 1e-12);
        let a = reduced_operator(&s, &(&x1 * 2.0)).unwrap();
        assert!((&a - DMatrix::identity(3, 3) * 2.0).norm() < 1e-12);

        // Data generated by a known 2x2 generator.
        let gen = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]);
        let rows = lti_trajectory(&gen, &DVector::from_vec(vec![1.0, -0.5]), 20);
        let (x1, x2) = build_snapshots(&win(rows, 2)).unwrap();
        let s = truncated_svd(&x1, 2, 1e-12).unwrap();
        let at = reduced_operator(&s, &x2).unwrap();
        let mut got: Vec<C64> = at.complex_eigenvalues().iter().copied().collect();
        let mut want: Vec<C64> = gen.complex_eigenvalues().iter().copied().collect();
        got.sort_by(eigen_order);
        want.sort_by(eigen_order);
        for (g, w) in got.iter().zip(&want) {
            assert!(close(*g, *w, 1e-8));
        }
    }

    #[test]
    fn eig_small_examples() {
        let (_, l) = eig_small(&DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.9]))).unwrap();
        assert!(close(l[0], C64::new(0.9, 0.0), 1e-14));
        assert!(close(l[1], C64::new(0.5, 0.0), 1e-14));

        let om: f64 = 0.3;
        let rot = DMatrix::from_row_slice(2, 2, &[om.cos(), -om.sin(), om.sin(), om.cos()]);
        let (w, l) = eig_small(&rot).unwrap();
        assert!(close(l[0], C64::new(om.cos(), om.sin()), 1e-12));
        assert!(close(l[1], C64::new(om.cos(), -om.sin()), 1e-12));
        let rc = rot.map(|v| C64::new(v, 0.0));
        for k in 0..2 {
            let v = w.column(k).into_owned();
            assert!((&rc * &v - &v * l[k]).norm() < 1e-12);
        }

        // z^2 - z + 0.25 = (z - 0.5)^2
        let comp = DMatrix::from_row_slice(2, 2, &[1.0, -0.25, 1.0, 0.0]);
        let (_, l) = eig_small(&comp).unwrap();
        for z in l.iter() {
            assert!(close(*z, C64::new(0.5, 0.0), 1e-7), "{z}");
        }
    }

    #[test]
    fn dmd_scalar_and_decoupled_systems() {
        let r = dmd(&win(vec![1.0, 0.5, 0.25, 0.125], 1), &DmdConfig::default()).unwrap();
        assert_eq!(r.r_eff, 1);
        assert!(close(r.eigenvalues[0], C64::new(0.5, 0.0), 1e-14));
        assert!(r.modes[(0, 0)].norm() > 0.0);

        let gen = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.4]));
        let rows = lti_trajectory(&gen, &DVector::from_vec(vec![1.0, 1.0]), 30);
        let r = dmd(&win(rows, 2), &DmdConfig::default()).unwrap();
        assert!(close(r.eigenvalues[0], C64::new(0.9, 0.0), 1e-10));
        assert!(close(r.eigenvalues[1], C64::new(0.4, 0.0), 1e-10));
        assert!(r.modes[(1, 0)].norm() < 1e-8 * r.modes[(0, 0)].norm());
        assert!(r.modes[(0, 1)].norm() < 1e-8 * r.modes[(1, 1)].norm());
    }

    #[test]
    fn dmd_static_and_rank_clamp() {
        let rows: Vec<f64> = (0..10).flat_map(|_| [2.0, -1.0, 0.5]).collect();
        let r = dmd(&win(rows, 3), &DmdConfig::default()).unwrap();
        assert_eq!(r.r_eff, 1);
        assert!(close(r.eigenvalues[0], C64::new(1.0, 0.0), 1e-12));

        let gen = DMatrix::from_row_slice(2, 2, &[0.8, 0.3, -0.3, 0.8]);
        let rows = lti_trajectory(&gen, &DVector::from_vec(vec![1.0, 0.0]), 40);
        let r = dmd(&win(rows, 2), &DmdConfig::with_rank(5)).unwrap();
        assert!(r.r_eff <= 2);
    }

    #[test]
    fn dmd_recovers_three_state_spectrum() {
        // Spectrum {0.95, 0.8 ± 0.3i} in a rotated basis.
        let d = DMatrix::from_row_slice(3, 3, &[0.95, 0.0, 0.0, 0.0, 0.8, 0.3, 0.0, -0.3, 0.8]);
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.3, 0.1, 1.0, 0.4, 0.5, -0.2, 1.0]);
        let gen = &p * d * p.clone().try_inverse().unwrap();
        let rows = lti_trajectory(&gen, &DVector::from_vec(vec![1.0, -1.0, 0.5]), 200);
        let r = dmd(&win(rows, 3), &DmdConfig::with_rank(3)).unwrap();
        let want = [C64::new(0.95, 0.0), C64::new(0.8, 0.3), C64::new(0.8, -0.3)];
        for (g, w) in r.eigenvalues.iter().zip(&want) {
            assert!(close(*g, *w, 1e-6), "{g} vs {w}");
        }
    }

    #[test]
    fn delay_embedding_layout() {
        let w = win(vec![1.0, 2.0, 3.0], 1);
        let e = delay_embed(&w, 1).unwrap();
        assert_eq!(e.n_channels(), 2);
        assert_eq!(e.to_snapshot_matrix(), DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 2.0]));
        assert_eq!(delay_embed(&w, 0).unwrap().as_slice(), w.as_slice());
        assert!(delay_embed(&w, 3).is_err());

        let w = win(vec![1.0, 2.0, 3.0, 4.0, 5.0], 1);
        let e = delay_embed(&w, 2).unwrap().to_snapshot_matrix();
        let hankel = DMatrix::from_row_slice(3, 3, &[3.0, 4.0, 5.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0]);
        assert_eq!(e, hankel);
    }

    #[test]
    fn delay_embedded_dmd_folds_modes_back() {
        let gen = DMatrix::from_row_slice(2, 2, &[0.9, 0.3, -0.3, 0.9]);
        let rows = lti_trajectory(&gen, &DVector::from_vec(vec![1.0, 0.0]), 60);
        let cfg = DmdConfig {
            rank: 4,
            delay_embedding: 2,
            ..DmdConfig::default()
        };
        let r = dmd(&win(rows, 2), &cfg).unwrap();
        assert_eq!(r.modes.nrows(), 2);
        assert!(r.r_eff <= 4);
        assert!(close(r.eigenvalues[0], C64::new(0.9, 0.3), 1e-8));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn recovers_random_spectra(seed in 0u64..10_000, n in 1usize..=8) {
            let (gen, spectrum) = random_spectrum_system(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let x0 = DVector::from_fn(n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let rows = lti_trajectory(&gen, &x0, 10 * n + 10);
            let r = dmd(&win(rows, n), &DmdConfig::with_rank(n)).unwrap();
            prop_assert!(r.r_eff <= n);
            prop_assert_eq!(r.r_eff, n);
            for (g, w) in r.eigenvalues.iter().zip(&spectrum) {
                prop_assert!((g.norm() - w.norm()).abs() <= 1e-6, "{} vs {}", g, w);
            }
        }

        #[test]
        fn one_step_prediction(seed in 0u64..10_000, n in 2usize..=6) {
            let (gen, _) = random_spectrum_system(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = DVector::from_fn(n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let rows = lti_trajectory(&gen, &x0, 10 * n + 10);
            let w = win(rows, n);
            let r = dmd(&w, &DmdConfig::with_rank(n)).unwrap();
            let (x1, x2) = build_snapshots(&w).unwrap();
            let phi = &r.modes;
            let pinv = phi.clone().pseudo_inverse(1e-14).unwrap();
            let pred = phi * DMatrix::from_diagonal(&r.eigenvalues) * pinv * x1.map(|v| C64::new(v, 0.0));
            let err = (pred - x2.map(|v| C64::new(v, 0.0))).norm() / x2.norm();
            prop_assert!(err <= 1e-6, "relative prediction error {}", err);
        }

        #[test]
        fn offset_changes_only_unit_mode(seed in 0u64..10_000, m in 2usize..=5) {
            let (gen, _) = random_spectrum_system(m, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = DVector::from_fn(m, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let n = m + 2;
            let c = DMatrix::from_fn(n, m, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let states = lti_trajectory(&gen, &x0, 12 * m + 20);
            let t = states.len() / m;
            let mut rows = Vec::with_capacity(t * n);
            for k in 0..t {
                let y = &c * DVector::from_column_slice(&states[k * m..(k + 1) * m]);
                rows.extend(y.iter().copied());
            }
            let base = dmd(&win(rows.clone(), n), &DmdConfig::with_rank(m)).unwrap();
            let shifted: Vec<f64> = rows.iter().enumerate().map(|(i, v)| v + 0.5 + (i % n) as f64).collect();
            let off = dmd(&win(shifted, n), &DmdConfig::with_rank(m + 1)).unwrap();
            for b in base.eigenvalues.iter().filter(|z| (*z - C64::new(1.0, 0.0)).norm() > 1e-3) {
                let nearest = off.eigenvalues.iter().map(|z| (z - b).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest <= 1e-6, "eigenvalue {} moved by {}", b, nearest);
            }
        }

        #[test]
        fn effective_rank_bound(seed in 0u64..10_000, n in 1usize..=4, t in 3usize..12, delays in 0usize..3, rank in 1usize..8) {
            prop_assume!(t > delays + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<f64> = (0..n * t).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let cfg = DmdConfig { rank, delay_embedding: delays, ..DmdConfig::default() };
            let r = dmd(&win(rows, n), &cfg).unwrap();
            prop_assert!(r.r_eff >= 1);
            prop_assert!(r.r_eff <= rank.min(n * (delays + 1)).min(t - delays - 1));
            prop_assert_eq!(r.modes.nrows(), n);
        }
    }
}
