mod common;

use lacon::dirichlet::{
    dirichlet_draw, dirichlet_kl, dirichlet_log_pdf, gamma_sample, rsvi_gradient, rsvi_sample_terms, DirichletParams, KlDivergence,
};
use lacon::numerics::{RngStream, SimplexVector};
use lacon::par::Exec;

fn dp(a: &[f64]) -> DirichletParams {
    DirichletParams::with_default_floor(a.to_vec()).unwrap()
}

#[test]
fn gamma_moments() {
    let n = 100_000;
    for (k, &alpha) in [0.3, 1.0, 2.5, 10.0].iter().enumerate() {
        let mut rng = RngStream::new(11, k as u64);
        let xs: Vec<f64> = (0..n).map(|_| gamma_sample(alpha, 4, &mut rng).unwrap().value).collect();
        let (mean, _) = common::mean_stderr(&xs);
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se_mean = (alpha / n as f64).sqrt();
        // Var of the sample variance for Γ(α): (μ₄ − σ⁴)/n with μ₄ = 3α² + 6α.
        let se_var = ((2.0 * alpha * alpha + 6.0 * alpha) / n as f64).sqrt();
        assert!((mean - alpha).abs() < 3.0 * se_mean, "alpha {alpha}: mean {mean}");
        assert!((var - alpha).abs() < 3.0 * se_var, "alpha {alpha}: var {var}");
    }
}

#[test]
fn dirichlet_mean_and_support() {
    let p = dp(&[2.0, 3.0, 5.0]);
    let mut rng = RngStream::new(12, 0);
    let draws: Vec<Vec<f64>> = (0..100_000).map(|_| dirichlet_draw(&p, 4, &mut rng).unwrap().z).collect();
    for (j, target) in [0.2, 0.3, 0.5].iter().enumerate() {
        let col: Vec<f64> = draws.iter().map(|z| z[j]).collect();
        let (m, se) = common::mean_stderr(&col);
        assert!((m - target).abs() < 3.0 * se, "coordinate {j}: {m}");
    }
    for z in &draws[..1000] {
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-9 && z.iter().all(|&x| x >= 0.0));
    }
    let sparse = dp(&[5.0, 0.0, 5.0]);
    for _ in 0..1000 {
        assert_eq!(dirichlet_draw(&sparse, 4, &mut rng).unwrap().z[1], 0.0);
    }
}

#[test]
fn kl_against_monte_carlo() {
    let kl = dirichlet_kl(&dp(&[2.0, 2.0]), &dp(&[1.0, 1.0])).unwrap().finite().unwrap();
    assert!((kl - 0.1251).abs() < 1e-4, "{kl}");
    let (mc, se) = common::mc_kl(&[2.0, 2.0], &[1.0, 1.0], 200_000, 1);
    assert!((kl - mc).abs() < 3.0 * se, "{kl} vs {mc} ± {se}");

    let mut r = RngStream::new(13, 0);
    for case in 0..5 {
        let n = 2 + case % 4;
        let q: Vec<f64> = (0..n).map(|_| r.range(0.5, 4.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| r.range(0.5, 4.0)).collect();
        let kl = dirichlet_kl(&dp(&q), &dp(&p)).unwrap().finite().unwrap();
        let (mc, se) = common::mc_kl(&q, &p, 200_000, 100 + case as u64);
        assert!((kl - mc).abs() < 3.0 * se, "case {case}: {kl} vs {mc} ± {se}");
    }
    for a in [[1.5, 2.5, 0.0], [1.0, 1.0, 1.0]] {
        assert_eq!(dirichlet_kl(&dp(&a), &dp(&a)).unwrap(), KlDivergence::Finite(0.0));
    }
    assert!(dirichlet_kl(&dp(&[1.0, 1.0]), &dp(&[1.0, 0.0])).unwrap().is_infinite());
}

#[test]
fn log_pdf_reference_values() {
    let z = |v: &[f64]| SimplexVector::new(v.to_vec()).unwrap();
    assert!(dirichlet_log_pdf(&z(&[0.5, 0.5]), &dp(&[1.0, 1.0])).abs() < 1e-12);
    // Beta(2, 2) density at 0.2 is 6 · 0.2 · 0.8 = 0.96.
    let lp = dirichlet_log_pdf(&z(&[0.2, 0.8]), &dp(&[2.0, 2.0]));
    assert!((lp - 0.96f64.ln()).abs() < 1e-12, "{lp}");
    assert!((lp - common::log_pdf(&[0.2, 0.8], &[2.0, 2.0])).abs() < 1e-12);
    assert!(dirichlet_log_pdf(&z(&[0.5, 0.0, 0.5]), &dp(&[1.0, 0.0, 1.0])).abs() < 1e-12);
    assert_eq!(dirichlet_log_pdf(&z(&[0.5, 0.0, 0.5]), &dp(&[1.0, 1.0, 0.0])), f64::NEG_INFINITY);
}

#[test]
fn rsvi_linear_mean_gradient() {
    let p = dp(&[2.0, 3.0]);
    let g = rsvi_gradient(&p, 9, |z| z[0], |_| vec![1.0, 0.0], 200_000, &RngStream::new(14, 0), Exec::default()).unwrap();
    // d/dα of α₁/(α₁+α₂) at (2, 3).
    let exact = [3.0 / 25.0, -2.0 / 25.0];
    for j in 0..2 {
        let (fd, fd_se) = common::fd_expectation(&[2.0, 3.0], j, 0.01, 200_000, 20 + j as u64, |z| z[0]);
        let total = g.g_rep[j] + g.g_cor[j];
        assert!((total - exact[j]).abs() < 3.0 * g.std_err[j], "{j}: {total} vs {}", exact[j]);
        let se = (g.std_err[j].powi(2) + fd_se.powi(2)).sqrt();
        assert!((total - fd).abs() < 3.0 * se, "{j}: {total} vs fd {fd}");
    }
}

#[test]
fn rsvi_quadratic_against_brute_force() {
    let alpha = [1.5, 1.5, 2.0];
    let c = [0.7, -1.3, 2.1];
    let f = move |z: &[f64]| z.iter().zip(&c).map(|(a, b)| b * a * a).sum::<f64>();
    let g = rsvi_gradient(&dp(&alpha), 4, f, move |z| z.iter().zip(&c).map(|(a, b)| 2.0 * b * a).collect(), 200_000, &RngStream::new(15, 0), Exec::default())
        .unwrap();
    for j in 0..3 {
        let (fd, fd_se) = common::fd_expectation(&alpha, j, 0.01, 1_000_000, 30 + j as u64, f);
        let se = (g.std_err[j].powi(2) + fd_se.powi(2)).sqrt();
        let total = g.g_rep[j] + g.g_cor[j];
        assert!((total - fd).abs() < 3.0 * se, "{j}: {total} vs {fd} ± {se}");
    }
}

#[test]
fn constant_function_has_zero_gradient() {
    let g = rsvi_gradient(&dp(&[0.7, 2.0, 4.0]), 4, |_| 3.0, |z| vec![0.0; z.len()], 100_000, &RngStream::new(16, 0), Exec::default())
        .unwrap();
    for j in 0..3 {
        assert!(g.g_rep[j].abs() < 1e-12);
        assert!(g.g_cor[j].abs() < 3.0 * g.std_err_cor[j], "{j}: {}", g.g_cor[j]);
    }
}

/// Mean per-draw `|g_cor|` for `f(z) = z₁` at α = (2, 3).
fn mean_abs_correction(boost: u32) -> f64 {
    let p = dp(&[2.0, 3.0]);
    let mut rng = RngStream::new(17, boost as u64);
    let n = 50_000;
    let mut total = 0.0;
    for _ in 0..n {
        let d = dirichlet_draw(&p, boost, &mut rng).unwrap();
        let (_, cor) = rsvi_sample_terms(&p, &d, d.z[0], &[1.0, 0.0]);
        total += cor.iter().map(|c| c.abs()).sum::<f64>();
    }
    total / n as f64
}

#[test]
fn correction_shrinks_with_more_boosters() {
    let (b0, b1, b9) = (mean_abs_correction(0), mean_abs_correction(1), mean_abs_correction(9));
    assert!(b9 < b1 && b9 < b0, "{b0} {b1} {b9}");
}
