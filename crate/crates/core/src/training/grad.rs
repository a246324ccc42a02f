//! Reverse-mode gradients of the MAE loss through the readout, the recurrence,
//! the layer mixing and the compressor.

use nalgebra::{DMatrix, DVector};

use crate::error::{DramnError, Result};
use crate::model::{forward_trace, Gradients, ModelInput, ModelParams, Trace, Variant};

/// `|p − y|`.
pub fn mae_loss(p: f64, y: f64) -> f64 {
    (p - y).abs()
}

/// Mean absolute error over a batch.
pub fn batch_mae(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|&(p, y)| mae_loss(p, y)).sum::<f64>() / pairs.len() as f64
}

/// Loss and exact gradients for one labelled sequence.
pub fn backward(input: &ModelInput, params: &ModelParams, y: f64) -> Result<(f64, Gradients)> {
    let trace = forward_trace(input, params)?;
    let loss = mae_loss(trace.p, y);
    let dl_dp = if y >= 0.5 { -1.0 } else { 1.0 };
    let grads = backprop(&trace, params, dl_dp);
    if !grads.is_finite() {
        return Err(DramnError::numerical("backward", "non-finite gradient"));
    }
    Ok((loss, grads))
}

/// Gradients of `p` scaled by `dl_dp`.
pub(crate) fn backprop(trace: &Trace, params: &ModelParams, dl_dp: f64) -> Gradients {
    let dims = params.dims;
    let (n, hdim) = (dims.n, dims.h);
    let mut gr = params.zeros_like();
    let p = trace.p;
    let dlogit = dl_dp * p * (1.0 - p);
    gr.b_r[0] = dlogit;

    let last = trace.steps.last().expect("at least one step");
    let ds = dlogit / n as f64;
    for r in 0..n {
        for k in 0..hdim {
            gr.w_r[k] += ds * last.h[(r, k)];
        }
    }
    let mut dh = DMatrix::from_fn(n, hdim, |_, k| ds * params.w_r[k]);
    let mut dc = DMatrix::<f64>::zeros(n, hdim);

    for st in trace.steps.iter().rev() {
        let dz = if params.variant.is_recurrent() {
            let mut dz = DMatrix::zeros(n, 4 * hdim);
            for r in 0..n {
                for k in 0..hdim {
                    let (i, f, o, g) = (
                        st.gates[(r, k)],
                        st.gates[(r, hdim + k)],
                        st.gates[(r, 2 * hdim + k)],
                        st.gates[(r, 3 * hdim + k)],
                    );
                    let tc = st.c[(r, k)].tanh();
                    let dhv = dh[(r, k)];
                    let dcv = dc[(r, k)] + dhv * o * (1.0 - tc * tc);
                    dz[(r, k)] = dcv * g * i * (1.0 - i);
                    dz[(r, hdim + k)] = dcv * st.c_prev[(r, k)] * f * (1.0 - f);
                    dz[(r, 2 * hdim + k)] = dhv * tc * o * (1.0 - o);
                    dz[(r, 3 * hdim + k)] = dcv * i * (1.0 - g * g);
                    dc[(r, k)] = dcv * f;
                }
            }
            dz
        } else {
            DMatrix::from_fn(n, hdim, |r, k| {
                let a = st.gates[(r, k)];
                dh[(r, k)] * (1.0 - a * a)
            })
        };

        for (b, col) in gr.bias.iter_mut().zip(dz.column_iter()) {
            *b += col.sum();
        }
        gr.w_x.gemm_tr(1.0, &st.x_til, &dz, 1.0);
        let dx_til = &dz * params.w_x.transpose();
        let dh_til = if params.variant.is_recurrent() {
            gr.w_h.gemm_tr(1.0, &st.h_til, &dz, 1.0);
            &dz * params.w_h.transpose()
        } else {
            DMatrix::zeros(n, hdim)
        };

        if params.variant != Variant::IdentityLstm {
            let dg = &dx_til * st.x_hat.transpose() + &dh_til * st.h_prev.transpose();
            if let Some(layers) = &st.layers {
                for (a, l) in gr.alpha.iter_mut().zip(layers) {
                    *a += dg.dot(l);
                }
            }
        }

        let dx_hat = st.g.tr_mul(&dx_til);
        dh = st.g.tr_mul(&dh_til);

        // x_hat[c, :] = pooled_c * proj_w + proj_b, pooled_c = a * mean_c + b
        let dpooled: DVector<f64> = &dx_hat * &params.proj_w;
        gr.proj_w.gemv_tr(1.0, &dx_hat, &st.pooled, 1.0);
        for (pb, col) in gr.proj_b.iter_mut().zip(dx_hat.column_iter()) {
            *pb += col.sum();
        }
        gr.comp_scale[0] += dpooled.dot(&st.means);
        gr.comp_bias[0] += dpooled.sum();
    }
    gr
}
