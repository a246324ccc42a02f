//! Random linear time-invariant systems with a prescribed, well-separated spectrum.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dmd::C64;

/// A real diagonalizable `n x n` generator and its eigenvalues, sorted by
/// descending modulus then descending real and imaginary parts.
///
/// Moduli are drawn from a grid on `[0.3, 1.2]` with spacing `0.05`, so distinct
/// eigenvalues (other than conjugate partners) never share a modulus.
pub fn random_spectrum_system(n: usize, seed: u64) -> (DMatrix<f64>, Vec<C64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid: Vec<f64> = (0..=18).map(|i| 0.3 + 0.05 * i as f64).collect();
    grid.shuffle(&mut rng);
    let pairs = rng.random_range(0..=n / 2);
    let mut d = DMatrix::<f64>::zeros(n, n);
    let mut spectrum = Vec::with_capacity(n);
    let mut idx = 0;
    for p in 0..pairs {
        let rho = grid[p];
        let theta = rng.random_range(0.2..2.5);
        let (re, im) = (rho * f64::cos(theta), rho * f64::sin(theta));
        d[(idx, idx)] = re;
        d[(idx, idx + 1)] = im;
        d[(idx + 1, idx)] = -im;
        d[(idx + 1, idx + 1)] = re;
        spectrum.push(C64::new(re, im));
        spectrum.push(C64::new(re, -im));
        idx += 2;
    }
    for (j, &rho) in grid[pairs..].iter().take(n - idx).enumerate() {
        let sign = if rng.random_bool(0.3) { -1.0 } else { 1.0 };
        d[(idx + j, idx + j)] = sign * rho;
        spectrum.push(C64::new(sign * rho, 0.0));
    }
    let basis = loop {
        let p = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sv = p.singular_values();
        if sv.min() > 0.0 && sv.max() / sv.min() < 50.0 {
            break p;
        }
    };
    let inv = basis.clone().try_inverse().expect("well-conditioned basis");
    spectrum.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    (&basis * d * inv, spectrum)
}

/// Iterates `x_{k+1} = A x_k` for `t` samples and returns them row-major.
pub fn lti_trajectory(a: &DMatrix<f64>, x0: &DVector<f64>, t: usize) -> Vec<f64> {
    let mut rows = Vec::with_capacity(t * x0.len());
    let mut x = x0.clone();
    for _ in 0..t {
        rows.extend(x.iter().copied());
        x = a * x;
    }
    rows
}
