//! Gradient of `E_{z~Dir(α)}[f(z)]` through the rejection sampler.
//!
//! Each draw contributes a reparameterization part, which differentiates
//! `f` along `z = normalize(h(ε, α+B) · boosters)` as if every proposal were
//! accepted, and a correction part `f(z) · ∂/∂α log(q/r)` accounting for
//! the acceptance step.

use super::gamma::log_accept_ratio_dalpha;
use super::params::DirichletParams;
use super::sample::{dirichlet_draw, DirichletDraw};
use crate::numerics::{finite_diff_grad, RngStream};
use crate::par::{self, Exec};
use crate::{Error, Result};

/// Monte-Carlo estimate of `∇_α E[f(z)] = g_rep + g_cor`.
#[derive(Clone, Debug, PartialEq)]
pub struct RsviGradient {
    pub g_rep: Vec<f64>,
    pub g_cor: Vec<f64>,
    pub n_samples: usize,
    /// Standard error of `g_rep + g_cor`.
    pub std_err: Vec<f64>,
    pub std_err_rep: Vec<f64>,
    pub std_err_cor: Vec<f64>,
}

impl RsviGradient {
    pub fn total(&self) -> Vec<f64> {
        self.g_rep.iter().zip(&self.g_cor).map(|(a, b)| a + b).collect()
    }
}

/// Per-draw `(g_rep, g_cor)` for a draw produced from `params`, given
/// `f(z)` and `∇_z f(z)` at the draw. Off-support entries are zero.
pub fn rsvi_sample_terms(
    params: &DirichletParams,
    draw: &DirichletDraw,
    f_value: f64,
    grad_f: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = params.len();
    let mut g_rep = vec![0.0; n];
    let mut g_cor = vec![0.0; n];
    let zdot: f64 = params.support().iter().map(|&j| grad_f[j] * draw.z[j]).sum();
    for (g, &i) in draw.gammas.iter().zip(params.support()) {
        // ∂f/∂g_i through z = g / Σg
        let df_dg = (grad_f[i] - zdot) / draw.total;
        g_rep[i] = df_dg * g.dvalue_dalpha();
        g_cor[i] = f_value * log_accept_ratio_dalpha(g.epsilon, g.alpha_aug);
    }
    (g_rep, g_cor)
}

const CHUNK: usize = 2048;

#[derive(Clone)]
struct Moments {
    n: usize,
    rep: Vec<f64>,
    rep2: Vec<f64>,
    cor: Vec<f64>,
    cor2: Vec<f64>,
    tot2: Vec<f64>,
}

impl Moments {
    fn zeros(dim: usize) -> Self {
        Moments {
            n: 0,
            rep: vec![0.0; dim],
            rep2: vec![0.0; dim],
            cor: vec![0.0; dim],
            cor2: vec![0.0; dim],
            tot2: vec![0.0; dim],
        }
    }

    fn push(&mut self, rep: &[f64], cor: &[f64]) {
        self.n += 1;
        for i in 0..rep.len() {
            self.rep[i] += rep[i];
            self.rep2[i] += rep[i] * rep[i];
            self.cor[i] += cor[i];
            self.cor2[i] += cor[i] * cor[i];
            let t = rep[i] + cor[i];
            self.tot2[i] += t * t;
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        let pairs = [
            (&mut self.rep, &other.rep),
            (&mut self.rep2, &other.rep2),
            (&mut self.cor, &other.cor),
            (&mut self.cor2, &other.cor2),
            (&mut self.tot2, &other.tot2),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

fn std_err(sum: f64, sum2: f64, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

/// Estimates `∇_α E_{z~Dir(α)}[f(z)]` from `n_samples` draws.
///
/// `grad_f` is first compared with finite differences of `f` at one
/// random draw. Samples are split into fixed-size chunks, each with its own
/// child stream of `rng`, so the estimate does not depend on `exec`.
pub fn rsvi_gradient<F, G>(
    params: &DirichletParams,
    boost: u32,
    f: F,
    grad_f: G,
    n_samples: usize,
    rng: &RngStream,
    exec: Exec,
) -> Result<RsviGradient>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    G: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    if n_samples == 0 {
        return Err(Error::InvalidInput("rsvi_gradient needs n_samples >= 1".into()));
    }
    check_gradient(params, boost, &f, &grad_f, rng)?;

    let dim = params.len();
    let chunks = n_samples.div_ceil(CHUNK);
    let parts = par::try_map_range(exec, chunks, |c| -> Result<Moments> {
        let mut stream = rng.child(c as u64);
        let count = CHUNK.min(n_samples - c * CHUNK);
        let mut m = Moments::zeros(dim);
        for k in 0..count {
            let draw = dirichlet_draw(params, boost, &mut stream)?;
            let fv = f(&draw.z);
            if !fv.is_finite() {
                return Err(Error::Estimator(format!(
                    "f is non-finite ({fv}) at draw {} with z = {:?}",
                    c * CHUNK + k,
                    draw.z
                )));
            }
            let gf = grad_f(&draw.z);
            let (rep, cor) = rsvi_sample_terms(params, &draw, fv, &gf);
            m.push(&rep, &cor);
        }
        Ok(m)
    })?;
    let mut total = Moments::zeros(dim);
    for p in &parts {
        total.merge(p);
    }
    let n = total.n as f64;
    let tot_sum: Vec<f64> = (0..dim).map(|i| total.rep[i] + total.cor[i]).collect();
    Ok(RsviGradient {
        g_rep: total.rep.iter().map(|s| s / n).collect(),
        g_cor: total.cor.iter().map(|s| s / n).collect(),
        n_samples: total.n,
        std_err: (0..dim).map(|i| std_err(tot_sum[i], total.tot2[i], total.n)).collect(),
        std_err_rep: (0..dim).map(|i| std_err(total.rep[i], total.rep2[i], total.n)).collect(),
        std_err_cor: (0..dim).map(|i| std_err(total.cor[i], total.cor2[i], total.n)).collect(),
    })
}

fn check_gradient<F, G>(params: &DirichletParams, boost: u32, f: &F, grad_f: &G, rng: &RngStream) -> Result<()>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut probe_rng = rng.child(u64::MAX);
    let probe = dirichlet_draw(params, boost, &mut probe_rng)?;
    let analytic = grad_f(&probe.z);
    if analytic.len() != params.len() {
        return Err(Error::Estimator(format!(
            "grad_f returned {} entries for dimension {}",
            analytic.len(),
            params.len()
        )));
    }
    let support = params.support();
    let base: Vec<f64> = support.iter().map(|&i| probe.z[i]).collect();
    let fd = finite_diff_grad(
        |x| {
            let mut z = probe.z.clone();
            for (k, &i) in support.iter().enumerate() {
                z[i] = x[k];
            }
            f(&z)
        },
        &base,
        1e-6,
    )?;
    for (k, &i) in support.iter().enumerate() {
        let tol = 1e-4 * analytic[i].abs().max(1.0);
        if (fd[k] - analytic[i]).abs() > tol {
            return Err(Error::Estimator(format!(
                "grad_f disagrees with finite differences at coordinate {i}: {} vs {}",
                analytic[i], fd[k]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(a: &[f64]) -> DirichletParams {
        DirichletParams::with_default_floor(a.to_vec()).unwrap()
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let p = dp(&[1.5, 0.7, 3.0]);
        let g = rsvi_gradient(&p, 4, |_| 2.0, |z| vec![0.0; z.len()], 40_000, &RngStream::new(1, 2), Exec::default())
            .unwrap();
        for i in 0..3 {
            assert_eq!(g.g_rep[i], 0.0);
            assert!(g.g_cor[i].abs() < 3.0 * g.std_err_cor[i] + 1e-12, "coord {i}: {:?}", g);
        }
    }

    #[test]
    fn inconsistent_gradient_rejected() {
        let p = dp(&[1.0, 2.0]);
        let r = rsvi_gradient(&p, 4, |z| z[0], |_| vec![0.0, 1.0], 10, &RngStream::new(0, 0), Exec::Sequential);
        assert!(matches!(r, Err(Error::Estimator(_))));
    }

    #[test]
    fn non_finite_f_reports_the_draw() {
        let p = dp(&[1.0, 2.0]);
        let r = rsvi_gradient(
            &p,
            4,
            |z| if z[0] > 0.5 { f64::NAN } else { 0.0 },
            |z| vec![0.0; z.len()],
            1000,
            &RngStream::new(0, 0),
            Exec::Sequential,
        );
        // The probe point may itself trip the finite-difference check.
        assert!(matches!(r, Err(Error::Estimator(_)) | Err(Error::Evaluation(_))));
    }

    #[test]
    fn execution_strategy_does_not_change_the_estimate() {
        let p = dp(&[2.0, 0.0, 3.0]);
        let run = |exec| {
            rsvi_gradient(&p, 2, |z| z[0] * z[2], |z| vec![z[2], 0.0, z[0]], 10_000, &RngStream::new(4, 4), exec)
                .unwrap()
        };
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
    }

    #[test]
    fn off_support_entries_are_zero() {
        let p = dp(&[2.0, 0.0, 3.0]);
        let g = rsvi_gradient(&p, 4, |z| z[0], |_| vec![1.0, 0.0, 0.0], 5000, &RngStream::new(2, 2), Exec::default())
            .unwrap();
        assert_eq!(g.g_rep[1], 0.0);
        assert_eq!(g.g_cor[1], 0.0);
    }
}
