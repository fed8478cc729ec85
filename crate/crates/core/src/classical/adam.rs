use crate::error::{Error, Result};

pub const LEARNING_RATE: f64 = 1e-3;
pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments for one parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self::with_lr(len, LEARNING_RATE)
    }

    pub fn with_lr(len: usize, lr: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            lr,
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Length {
            what: "adam parameters",
            expected: state.m.len(),
            got: params.len().max(grads.len()),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0, -2.0, 0.5];
        let g = [0.3, -7.0, 1e-3];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &g, &mut s).unwrap();
        let deltas = [p[0] - 1.0, p[1] + 2.0, p[2] - 0.5];
        for (d, g) in deltas.iter().zip(&g) {
            assert!((d.abs() - LEARNING_RATE).abs() < 1e-7);
            assert_eq!(d.signum(), -g.signum());
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = vec![0.25; 4];
        let mut s = AdamState::new(4);
        for _ in 0..100 {
            adam_step(&mut p, &[0.0; 4], &mut s).unwrap();
        }
        assert_eq!(p, vec![0.25; 4]);
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut p = vec![0.1, 0.2];
            let mut s = AdamState::new(2);
            for k in 0..50 {
                let g = [(k as f64).sin(), (k as f64 * 0.3).cos()];
                adam_step(&mut p, &g, &mut s).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s).is_err());
        assert!(adam_step(&mut [0.0; 2], &[0.0; 1], &mut s).is_err());
    }
}
