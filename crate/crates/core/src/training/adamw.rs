//! AdamW with decoupled weight decay and bias-corrected moments.

use serde::{Deserialize, Serialize};

use crate::model::{Gradients, ModelParams, GROUP_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW {
    pub cfg: AdamWConfig,
    m: ModelParams,
    v: ModelParams,
    t: u64,
    frozen: Vec<&'static str>,
}

impl AdamW {
    pub fn new(params: &ModelParams, cfg: AdamWConfig) -> Self {
        AdamW {
            cfg,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            frozen: Vec::new(),
        }
    }

    /// Excludes a parameter group from updates and weight decay.
    pub fn freeze(mut self, group: &'static str) -> Self {
        debug_assert!(GROUP_NAMES.contains(&group));
        self.frozen.push(group);
        self
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.t += 1;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powf(self.t as f64);
        let bc2 = 1.0 - c.beta2.powf(self.t as f64);
        let groups = params
            .groups_mut()
            .into_iter()
            .zip(grads.groups())
            .zip(self.m.groups_mut())
            .zip(self.v.groups_mut());
        for ((((name, p), (_, g)), (_, m)), (_, v)) in groups {
            if self.frozen.contains(&name) {
                continue;
            }
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= c.lr * c.weight_decay * p[i];
                p[i] -= c.lr * mhat / (vhat.sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Dims, Variant};

    fn params() -> ModelParams {
        let dims = Dims {
            n: 2,
            t: 5,
            f: 3,
            h: 2,
            d: 5,
            l_seq: 1,
        };
        init_params(dims, Variant::Dramn, 4).unwrap()
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = params();
        let before = p.clone();
        let mut opt = AdamW::new(&p, AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        });
        let g = p.zeros_like();
        for _ in 0..5 {
            opt.step(&mut p, &g);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn constant_gradient_moves_by_lr() {
        let mut p = params();
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        let mut opt = AdamW::new(&p, cfg);
        let mut g = p.zeros_like();
        for (_, v) in g.groups_mut() {
            v.fill(0.37);
        }
        for _ in 0..200 {
            let before = p.w_r[0];
            opt.step(&mut p, &g);
            let delta = before - p.w_r[0];
            // With a constant gradient the bias-corrected ratio m̂/√v̂ is exactly 1.
            assert!((delta - cfg.lr * 0.37 / (0.37 + cfg.eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_shrinks_geometrically() {
        let mut p = params();
        let start = p.w_x[(1, 1)];
        let cfg = AdamWConfig::default();
        let mut opt = AdamW::new(&p, cfg);
        let g = p.zeros_like();
        for _ in 0..10 {
            opt.step(&mut p, &g);
        }
        let want = start * (1.0 - cfg.lr * cfg.weight_decay).powi(10);
        assert!((p.w_x[(1, 1)] - want).abs() < 1e-15);
    }

    #[test]
    fn frozen_groups_stay_put() {
        let mut p = params();
        let alpha = p.alpha.clone();
        let mut opt = AdamW::new(&p, AdamWConfig::default()).freeze("alpha");
        let mut g = p.zeros_like();
        g.alpha.fill(1.0);
        g.w_r.fill(1.0);
        let w_r = p.w_r.clone();
        opt.step(&mut p, &g);
        assert_eq!(p.alpha, alpha);
        assert_ne!(p.w_r, w_r);
        assert_eq!(opt.steps_taken(), 1);
    }
}
