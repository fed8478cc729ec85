#![allow(dead_code)]

use hqnn::classical::{bce_with_logits, LayerStack, Tensor};
use hqnn::harness::Model;
use hqnn::oracle::relative_error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const H: f64 = 1e-4;
pub const TOL: f64 = 1e-4;
// same magnitude floor as the quantum gradient checks
pub const FLOOR: f64 = 1e-3;

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn projected(stack: &mut LayerStack, x: &Tensor, r: &[f64], training: bool) -> f64 {
    let y = stack.forward(x, training).unwrap();
    y.data().iter().zip(r).map(|(a, b)| a * b).sum()
}

/// Central difference, or `None` when the step crosses a ReLU or max-pool
/// switch. Under smooth curvature the gap between one-sided slopes shrinks
/// linearly with the step; a kink anywhere in `[-H, H]` breaks that ratio.
pub fn smooth_fd(f: impl Fn(f64) -> f64) -> Option<f64> {
    let mid = f(0.0);
    let (plus, minus) = (f(H), f(-H));
    let coarse = ((plus - mid) - (mid - minus)) / H;
    if coarse.abs() > 1e-6 {
        let fine = ((f(H / 10.0) - mid) - (mid - f(-H / 10.0))) / (H / 10.0);
        if !(0.05..=0.2).contains(&(fine / coarse)) {
            return None;
        }
    }
    Some((plus - minus) / (2.0 * H))
}

/// Compares backprop with central differences for the input and every
/// parameter of `stack`, using the scalar `Σ r·output`. Returns the worst
/// relative error; at most 1% of entries may sit on a kink.
pub fn check_stack(mut stack: LayerStack, x: Tensor, training: bool, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = stack.clone().forward(&x, training).unwrap();
    let r: Vec<f64> = (0..out.len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();

    let mut analytic = stack.clone();
    analytic.zero_grad();
    analytic.forward(&x, training).unwrap();
    let gx = analytic
        .backward(&Tensor::new(out.shape().to_vec(), r.clone()).unwrap())
        .unwrap();

    let mut checks: Vec<(f64, Option<f64>)> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let fd = smooth_fd(|delta| {
                let mut xs = x.clone();
                xs.data_mut()[i] += delta;
                projected(&mut stack.clone(), &xs, &r, training)
            });
            (gx.data()[i], fd)
        })
        .collect();
    let grads: Vec<Vec<f64>> = analytic.params().iter().map(|p| p.grad.clone()).collect();
    let entries: Vec<(usize, usize)> = grads
        .iter()
        .enumerate()
        .flat_map(|(k, g)| (0..g.len()).map(move |i| (k, i)))
        .collect();
    checks.par_extend(entries.into_par_iter().map(|(k, i)| {
        let fd = smooth_fd(|delta| {
            let mut s = stack.clone();
            s.params_mut()[k].value[i] += delta;
            projected(&mut s, &x, &r, training)
        });
        (grads[k][i], fd)
    }));
    let kinks = checks.iter().filter(|c| c.1.is_none()).count();
    assert!(
        kinks * 100 <= checks.len(),
        "{kinks} of {} entries on kinks",
        checks.len()
    );
    let worst = checks
        .iter()
        .filter_map(|&(a, fd)| fd.map(|fd| relative_error(a, fd, FLOOR)))
        .fold(0.0, f64::max);
    // untouched original still works for later callers
    stack.forward(&x, training).unwrap();
    worst
}

/// Worst relative error between backprop through a whole model and central
/// differences of the mean BCE loss, over the input and every parameter.
pub fn check_model(model: &Model, x: &Tensor, labels: &[u8]) -> f64 {
    let loss = |m: &Model, x: &Tensor| {
        let logits = m.clone().forward(x, true).unwrap();
        bce_with_logits(&logits, labels).unwrap().0
    };
    let mut analytic = model.clone();
    analytic.zero_grad();
    let logits = analytic.forward(x, true).unwrap();
    let (_, dlogits) = bce_with_logits(&logits, labels).unwrap();
    let gx = analytic.backward(&dlogits).unwrap();

    let mut checks: Vec<(f64, Option<f64>)> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let fd = smooth_fd(|delta| {
                let mut xs = x.clone();
                xs.data_mut()[i] += delta;
                loss(model, &xs)
            });
            (gx.data()[i], fd)
        })
        .collect();
    let grads: Vec<Vec<f64>> = analytic.params().iter().map(|p| p.grad.clone()).collect();
    let entries: Vec<(usize, usize)> = grads
        .iter()
        .enumerate()
        .flat_map(|(k, g)| (0..g.len()).map(move |i| (k, i)))
        .collect();
    checks.par_extend(entries.into_par_iter().map(|(k, i)| {
        let fd = smooth_fd(|delta| {
            let mut m = model.clone();
            m.params_mut()[k].value[i] += delta;
            loss(&m, x)
        });
        (grads[k][i], fd)
    }));
    let kinks = checks.iter().filter(|c| c.1.is_none()).count();
    assert!(
        kinks * 100 <= checks.len(),
        "{kinks} of {} entries on kinks",
        checks.len()
    );
    checks
        .iter()
        .filter_map(|&(a, fd)| fd.map(|fd| relative_error(a, fd, FLOOR)))
        .fold(0.0, f64::max)
}
