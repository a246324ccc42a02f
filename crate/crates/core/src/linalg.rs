//! Small dense factorizations used by the decomposition.
//!
//! The thin SVD reduces the data matrix with a Householder QR and then runs
//! one-sided Jacobi rotations on the small triangular factor, which stays
//! accurate for rank-deficient inputs.

use nalgebra::{DMatrix, DVector};

use crate::dmd::C64;
use crate::error::{DramnError, Result};

/// Thin SVD `a = U diag(s) Vᵀ` with `s` sorted in descending order.
/// `U` is `rows x k`, `V` is `cols x k`, `k = min(rows, cols)`.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if a.nrows() < a.ncols() {
        let (u, s, v) = thin_svd(&a.transpose())?;
        return Ok((v, s, u));
    }
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, s, vr) = jacobi_svd_square(&r)?;
    Ok((q * ur, s, vr))
}

/// One-sided (Hestenes) Jacobi SVD of a small square matrix.
fn jacobi_svd_square(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let k = b.ncols();
    let mut w = b.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    let mut converged = k < 2;
    let negligible = (f64::EPSILON * b.norm()).powi(2);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if alpha <= negligible || beta <= negligible || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let (x, y) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = c * x - s * y;
                        m[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DramnError::numerical("thin_svd", "Jacobi sweeps did not converge"));
    }
    let sigma: Vec<f64> = (0..k).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let mut u = DMatrix::zeros(k, k);
    let mut vs = DMatrix::zeros(k, k);
    let mut s = DVector::zeros(k);
    let floor = f64::EPSILON * b.norm();
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = sigma[src];
        if sigma[src] > floor {
            u.set_column(dst, &(w.column(src) / sigma[src]));
        } else {
            missing.push(dst);
        }
        vs.set_column(dst, &v.column(src));
    }
    // Complete the left basis for numerically zero singular values.
    let mut e = 0;
    for dst in missing {
        while e < k {
            let mut cand = DVector::<f64>::zeros(k);
            cand[e] = 1.0;
            e += 1;
            for _ in 0..2 {
                for j in 0..k {
                    let col = u.column(j);
                    let proj = col.dot(&cand);
                    cand -= col * proj;
                }
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                u.set_column(dst, &(cand / nrm));
                break;
            }
        }
    }
    Ok((u, s, vs))
}

/// Unit-norm eigenvector of `a` for the (approximate) eigenvalue `lambda`, by
/// inverse iteration with a slightly perturbed shift. The largest entry is
/// rotated onto the positive real axis.
pub fn eigenvector(a: &DMatrix<C64>, lambda: C64) -> Result<DVector<C64>> {
    let r = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut last_err = String::new();
    for bump in [1e-13, 1e-11, 1e-9] {
        let mu = lambda + C64::new(bump * scale, 0.5 * bump * scale);
        let mut shifted = a.clone();
        for i in 0..r {
            shifted[(i, i)] -= mu;
        }
        let lu = shifted.lu();
        let mut w = DVector::from_fn(r, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
        w /= C64::new(w.norm(), 0.0);
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&w) {
                Some(next) if next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) && next.norm() > 0.0 => {
                    let nn = next.norm();
                    w = next / C64::new(nn, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            last_err = format!("shift {mu} produced a singular or non-finite solve");
            continue;
        }
        let (pivot, _) = w
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
        let p = w[pivot];
        w *= p.conj() / p.norm();
        return Ok(w);
    }
    Err(DramnError::numerical("eigenvector", last_err))
}
