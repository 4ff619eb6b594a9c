//! Adam optimizer over lists of matrices.
//!
//! Every trainable object in this crate exposes its parameters as an ordered
//! `Vec<&mut Array2<f64>>` (biases are 1×n matrices); gradients arrive in the
//! same order. Adam keeps one (m, v) moment pair per tensor and applies the
//! standard bias-corrected update
//!
//!   m <- b1 m + (1-b1) g         v <- b2 v + (1-b2) g^2
//!   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
//!
//! One `step` call is one optimizer step (t increments once, shared by all
//! tensors), matching per-page-graph stepping in the training loops.

use ndarray::Array2;

/// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    moments: Vec<(Array2<f64>, Array2<f64>)>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            moments: Vec::new(),
        }
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Apply one update. `params` and `grads` must be aligned: same length,
    /// same shapes, same order on every call (moments are keyed by position).
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) {
        assert_eq!(
            params.len(),
            grads.len(),
            "params/grads must pair up one-to-one"
        );
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| (Array2::zeros(p.raw_dim()), Array2::zeros(p.raw_dim())))
                .collect();
        }
        assert_eq!(self.moments.len(), params.len(), "param list changed size");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.moments.iter_mut())
        {
            assert_eq!(p.raw_dim(), g.raw_dim(), "grad shape must match param");
            ndarray::Zip::from(&mut **p)
                .and(g)
                .and(&mut *m)
                .and(&mut *v)
                .for_each(|p, &g, m, v| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Minimizing f(x) = sum x^2 must converge toward zero.
    #[test]
    fn adam_descends_a_quadratic() {
        let mut x = array![[1.0, -2.0], [0.5, 3.0]];
        let mut opt = Adam::new(0.05);
        for _ in 0..500 {
            let grad = 2.0 * &x;
            opt.step(&mut [&mut x], &[grad]);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-2), "did not converge: {x:?}");
    }

    /// First step moves each coordinate by exactly lr (bias correction makes
    /// m_hat/sqrt(v_hat) = sign(g) on step one, up to eps).
    #[test]
    fn first_step_size_is_lr() {
        let mut x = array![[10.0]];
        let mut opt = Adam::new(0.1);
        opt.step(&mut [&mut x], &[array![[3.0]]]);
        assert!((x[[0, 0]] - (10.0 - 0.1)).abs() < 1e-6);
    }
}
