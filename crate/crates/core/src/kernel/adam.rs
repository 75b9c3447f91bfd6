//! Adam optimizer with bias correction.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    t: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Adam {
    pub fn new(lr: f32) -> Adam {
        Adam::with_betas(lr, 0.9, 0.999)
    }

    pub fn with_betas(lr: f32, beta1: f32, beta2: f32) -> Adam {
        Adam {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Apply one update across a fixed sequence of (param, grad) buffers.
    /// Moment state is keyed by position, so callers must present the same
    /// buffers in the same order every step.
    pub fn step<'a>(
        &mut self,
        pairs: impl Iterator<Item = (&'a mut [f32], &'a [f32])>,
    ) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0usize;
        for (param, grad) in pairs {
            if param.len() != grad.len() {
                return Err(Error::shape(format!(
                    "adam buffer {k}: param {} vs grad {}",
                    param.len(),
                    grad.len()
                )));
            }
            if self.m.len() == k {
                self.m.push(vec![0.0; param.len()]);
                self.v.push(vec![0.0; param.len()]);
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            if m.len() != param.len() {
                return Err(Error::shape(format!(
                    "adam buffer {k} changed size: {} vs {}",
                    m.len(),
                    param.len()
                )));
            }
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                param[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
            k += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = Adam::new(1e-3);
        let mut p = vec![0.5f32, -1.5];
        let g = vec![0.0f32, 0.0];
        adam.step(std::iter::once((p.as_mut_slice(), g.as_slice()))).unwrap();
        assert_eq!(p, vec![0.5, -1.5]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        // With bias correction, mhat = g and vhat = g*g on step one, so the
        // update is lr * g / (|g| + eps) = lr * sign(g) up to eps.
        for g0 in [3.0f32, -0.02] {
            let mut adam = Adam::new(0.01);
            let mut p = vec![1.0f32];
            let g = vec![g0];
            adam.step(std::iter::once((p.as_mut_slice(), g.as_slice()))).unwrap();
            let expected = 1.0 - 0.01 * g0.signum();
            assert!((p[0] - expected).abs() < 1e-5, "{} vs {expected}", p[0]);
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(x) = (x - 3)^2, grad = 2 (x - 3).
        let mut adam = Adam::new(0.05);
        let mut x = vec![-4.0f32];
        for _ in 0..5000 {
            let g = vec![2.0 * (x[0] - 3.0)];
            adam.step(std::iter::once((x.as_mut_slice(), g.as_slice()))).unwrap();
            if (x[0] - 3.0).abs() < 1e-6 {
                return;
            }
        }
        panic!("did not converge: x = {}", x[0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = Adam::new(1e-3);
        let mut p = vec![0.0f32; 3];
        let g = vec![0.0f32; 2];
        assert!(adam
            .step(std::iter::once((p.as_mut_slice(), g.as_slice())))
            .is_err());
    }
}
