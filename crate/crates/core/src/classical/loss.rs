use crate::error::{Error, Result};

/// Mean binary cross-entropy on logits in the overflow-free form
/// `max(z, 0) − z·y + ln(1 + e^{−|z|})`, with gradient `(σ(z) − y)/n`.
pub fn bce_with_logits(logits: &[f64], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
    if logits.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    if logits.len() != labels.len() {
        return Err(Error::Length {
            what: "labels",
            expected: logits.len(),
            got: labels.len(),
        });
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        if y > 1 {
            return Err(Error::Invalid(format!("label {y} is not binary")));
        }
        let y = y as f64;
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid(z) - y) / n);
    }
    Ok((loss / n, grad))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logit() {
        let (l, g) = bce_with_logits(&[0.0], &[1]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn large_logits_are_stable() {
        let (l, _) = bce_with_logits(&[50.0], &[1]).unwrap();
        assert!(l.is_finite() && l < 1e-20);
        let (l, _) = bce_with_logits(&[-800.0], &[0]).unwrap();
        assert!(l.is_finite() && l < 1e-300);
        let (l, g) = bce_with_logits(&[-800.0], &[1]).unwrap();
        assert!((l - 800.0).abs() < 1e-9);
        assert!((g[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_naive_formula() {
        let z = [-3.0, -0.5, 0.2, 1.7, 4.0, -1.1];
        let y = [0u8, 1, 0, 1, 1, 0];
        let (l, _) = bce_with_logits(&z, &y).unwrap();
        let naive: f64 = z
            .iter()
            .zip(&y)
            .map(|(&z, &y)| {
                let s = 1.0 / (1.0 + (-z).exp());
                let y = y as f64;
                -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
            })
            .sum::<f64>()
            / z.len() as f64;
        assert!((l - naive).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(bce_with_logits(&[], &[]).is_err());
        assert!(bce_with_logits(&[0.0], &[2]).is_err());
        assert!(bce_with_logits(&[0.0, 1.0], &[1]).is_err());
    }
}
