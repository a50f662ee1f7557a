use crate::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_diff_grad<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("finite difference step must be > 0, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = f(&probe);
        probe[i] = orig - h;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite function value around coordinate {i}"
            )));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let g = finite_diff_grad(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], DEFAULT_FD_STEP)
            .unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn constant_and_linear() {
        let g = finite_diff_grad(|_| 7.0, &[0.3, -2.0, 5.0], DEFAULT_FD_STEP).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        let g = finite_diff_grad(|x| 3.0 * x[0] - x[1], &[0.0, 0.0], DEFAULT_FD_STEP).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-9 && (g[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(finite_diff_grad(|x| x[0].ln(), &[0.0], DEFAULT_FD_STEP).is_err());
        assert!(finite_diff_grad(|x| x[0], &[0.0], 0.0).is_err());
    }
}
