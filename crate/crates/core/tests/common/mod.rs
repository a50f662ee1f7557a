//! Reference implementations that share no code with the library: brute
//! force sparsemax, rand_distr gamma draws and libm log-gamma.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Gamma};

/// Projection onto the simplex by enumerating every candidate support.
/// Entries equal to negative infinity are excluded.
pub fn brute_sparsemax(v: &[f64]) -> Vec<f64> {
    let active: Vec<usize> = (0..v.len()).filter(|&i| v[i] != f64::NEG_INFINITY).collect();
    let m = active.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let s: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| active[b]).collect();
        let tau = (s.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / s.len() as f64;
        if s.iter().any(|&i| v[i] - tau < 0.0) {
            continue;
        }
        let mut p = vec![0.0; v.len()];
        for &i in &s {
            p[i] = v[i] - tau;
        }
        let dist: f64 = active.iter().map(|&i| (p[i] - v[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p));
        }
    }
    best.expect("some support is feasible").1
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Dirichlet draw from independent gammas; zero concentrations give zero.
pub fn dirichlet(alpha: &[f64], rng: &mut StdRng) -> Vec<f64> {
    let g: Vec<f64> = alpha
        .iter()
        .map(|&a| if a > 0.0 { Gamma::new(a, 1.0).unwrap().sample(rng) } else { 0.0 })
        .collect();
    let s: f64 = g.iter().sum();
    g.iter().map(|x| x / s).collect()
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Central difference of `E_{Dir(α)}[f]` in `α_j`, with sample `i` drawn at
/// `α ± h` from the same seed. Returns the estimate and its standard error.
pub fn fd_expectation<F: Fn(&[f64]) -> f64>(alpha: &[f64], j: usize, h: f64, n: usize, seed: u64, f: F) -> (f64, f64) {
    let (mut up, mut dn) = (alpha.to_vec(), alpha.to_vec());
    up[j] += h;
    dn[j] -= h;
    let diffs: Vec<f64> = (0..n)
        .map(|i| {
            let s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64);
            let a = f(&dirichlet(&up, &mut rng(s)));
            let b = f(&dirichlet(&dn, &mut rng(s)));
            (a - b) / (2.0 * h)
        })
        .collect();
    mean_stderr(&diffs)
}

/// `log Dir(z; α)` over the coordinates with `α_i > 0`.
pub fn log_pdf(z: &[f64], alpha: &[f64]) -> f64 {
    let s: f64 = alpha.iter().filter(|&&a| a > 0.0).sum();
    let mut lp = libm::lgamma(s);
    for (&zi, &a) in z.iter().zip(alpha) {
        if a > 0.0 {
            lp += (a - 1.0) * zi.ln() - libm::lgamma(a);
        }
    }
    lp
}

/// Monte-Carlo `E_q[log q − log p]` with its standard error.
pub fn mc_kl(q: &[f64], p: &[f64], n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            let z = dirichlet(q, &mut r);
            log_pdf(&z, q) - log_pdf(&z, p)
        })
        .collect();
    mean_stderr(&xs)
}
