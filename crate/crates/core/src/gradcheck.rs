//! Registry of gradient and estimator self-checks.
//!
//! Each check reports a measured error next to its tolerance. Runs are
//! seeded, so the measured errors are reproducible.

use serde::Serialize;

use crate::dirichlet::{dirichlet_kl, dirichlet_kl_grad, rsvi_gradient, DirichletParams, DEFAULT_SHAPE_AUGMENTATION};
use crate::model::checkpoint::{decode_checkpoint, encode_checkpoint};
use crate::model::{
    backward_deterministic, deterministic_pass, policy_loss_grad, ActionLabel, Hyper, ParameterStore, UnitFeatureSet,
};
use crate::numerics::{digamma, finite_diff_grad, ln_gamma, sparsemax, sparsemax_backward, trigamma, RngStream};
use crate::par::Exec;
use crate::{Error, Result};

/// Deliberate defects for testing the harness itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Drops the `-11ᵀ/|S|` term of the sparsemax Jacobian.
    SparsemaxJacobian,
}

impl std::str::FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparsemax-jacobian" => Ok(Fault::SparsemaxJacobian),
            other => Err(Error::Usage(format!("unknown fault `{other}` (known: sparsemax-jacobian)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        CheckResult { name: name.into(), measured, tolerance, passed: measured <= tolerance, detail }
    }
}

pub const CHECK_NAMES: [&str; 7] = [
    "special.digamma",
    "special.trigamma",
    "sparsemax.jacobian",
    "dirichlet.kl_grad",
    "dirichlet.rsvi_linear",
    "model.deterministic_grad",
    "model.checkpoint_round_trip",
];

/// Runs every check in [`CHECK_NAMES`] order.
pub fn run_checks(seed: u64, fault: Option<Fault>, exec: Exec) -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_digamma(),
        check_trigamma(),
        check_sparsemax(seed, fault)?,
        check_kl_grad(seed)?,
        check_rsvi(seed, exec)?,
        check_model(seed)?,
        check_checkpoint(seed)?,
    ])
}

/// One line per check, then a summary line.
pub fn render_report(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<30} {} measured={:.3e} tolerance={:.1e} {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.measured,
            r.tolerance,
            r.detail
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    out.push_str(&format!("{} checks, {} failed\n", results.len(), failed));
    out
}

const XS: [f64; 8] = [0.03, 0.2, 0.9, 1.0, 2.5, 7.0, 40.0, 300.0];

fn check_digamma() -> CheckResult {
    let err = XS
        .iter()
        .map(|&x| {
            let h = 1e-5 * x;
            let fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
            (digamma(x) - fd).abs() / digamma(x).abs().max(1.0)
        })
        .fold(0.0, f64::max);
    CheckResult::new("special.digamma", err, 1e-7, "relative, vs differences of ln_gamma".into())
}

fn check_trigamma() -> CheckResult {
    let err = XS
        .iter()
        .map(|&x| {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            (trigamma(x) - fd).abs() / trigamma(x).abs().max(1.0)
        })
        .fold(0.0, f64::max);
    CheckResult::new("special.trigamma", err, 1e-6, "relative, vs differences of digamma".into())
}

fn faulty_backward(v: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    let p = sparsemax(v)?;
    let mut out = vec![0.0; v.len()];
    for &i in p.support() {
        out[i] = upstream[i];
    }
    Ok(out)
}

/// Distance of `v` from the nearest kink of sparsemax.
fn kink_margin(v: &[f64]) -> Result<f64> {
    let p = sparsemax(v)?;
    let i = p.support()[0];
    let tau = v[i] - p.values()[i];
    Ok(v.iter().map(|&x| (x - tau).abs()).fold(f64::INFINITY, f64::min))
}

fn check_sparsemax(seed: u64, fault: Option<Fault>) -> Result<CheckResult> {
    let mut rng = RngStream::named(seed, "gradcheck.sparsemax", 0);
    let (mut err, mut cases) = (0.0f64, 0);
    while cases < 200 {
        let n = 2 + rng.below(5);
        let v: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
        if kink_margin(&v)? < 1e-3 {
            continue;
        }
        let u: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let an = match fault {
            Some(Fault::SparsemaxJacobian) => faulty_backward(&v, &u)?,
            None => sparsemax_backward(&v, &u)?,
        };
        let fd = finite_diff_grad(
            |x| sparsemax(x).map(|p| p.values().iter().zip(&u).map(|(a, b)| a * b).sum()).unwrap_or(f64::NAN),
            &v,
            1e-6,
        )?;
        err = err.max(an.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        cases += 1;
    }
    Ok(CheckResult::new("sparsemax.jacobian", err, 1e-7, format!("absolute, {cases} vectors with n <= 6")))
}

fn check_kl_grad(seed: u64) -> Result<CheckResult> {
    let mut rng = RngStream::named(seed, "gradcheck.kl", 0);
    let mut err = 0.0f64;
    for _ in 0..20 {
        let n = 2 + rng.below(4);
        let qa: Vec<f64> = (0..n).map(|_| rng.range(0.1, 5.0)).collect();
        let p = DirichletParams::with_default_floor((0..n).map(|_| rng.range(0.1, 5.0)).collect())?;
        let q = DirichletParams::with_default_floor(qa.clone())?;
        let an = dirichlet_kl_grad(&q, &p)?.ok_or_else(|| Error::Estimator("KL unexpectedly infinite".into()))?;
        let fd = finite_diff_grad(
            |a| {
                DirichletParams::with_default_floor(a.to_vec())
                    .and_then(|q| dirichlet_kl(&q, &p))
                    .ok()
                    .and_then(|k| k.finite())
                    .unwrap_or(f64::NAN)
            },
            &qa,
            1e-6,
        )?;
        for (a, b) in an.iter().zip(&fd) {
            err = err.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    Ok(CheckResult::new("dirichlet.kl_grad", err, 1e-6, "relative, 20 pairs of dimension 2 to 5".into()))
}

fn check_rsvi(seed: u64, exec: Exec) -> Result<CheckResult> {
    let mut rng = RngStream::named(seed, "gradcheck.rsvi", 0);
    let mut worst = 0.0f64;
    for case in 0..3 {
        let n = 2 + case;
        let alpha: Vec<f64> = (0..n).map(|_| rng.range(0.3, 4.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.range(-2.0, 2.0)).collect();
        let p = DirichletParams::with_default_floor(alpha.clone())?;
        let wf = w.clone();
        let g = rsvi_gradient(
            &p,
            DEFAULT_SHAPE_AUGMENTATION,
            move |z| z.iter().zip(&wf).map(|(a, b)| a * b).sum(),
            |_| w.clone(),
            40_000,
            &rng.child(case as u64),
            exec,
        )?;
        // d/dα_j of Σ w_i α_i / Σα.
        let s: f64 = alpha.iter().sum();
        let mean: f64 = alpha.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / s;
        for (j, est) in g.total().iter().enumerate() {
            let exact = (w[j] - mean) / s;
            worst = worst.max((est - exact).abs() / g.std_err[j].max(1e-12));
        }
    }
    Ok(CheckResult::new("dirichlet.rsvi_linear", worst, 4.0, "standard errors, linear f, 40000 draws".into()))
}

/// Random tiny network and state: `n <= 5` units, embedding width `d <= 4`.
fn tiny_case(rng: &mut RngStream) -> Result<(UnitFeatureSet, ParameterStore, ActionLabel)> {
    let hyper = Hyper {
        d_in: 1 + rng.below(4),
        global_dim: 1 + rng.below(3),
        embed_hidden: 1 + rng.below(4),
        embed_dim: 1 + rng.below(4),
        pred_hidden1: 2 + rng.below(4),
        pred_hidden2: 2 + rng.below(4),
        grid: 2,
        ..Hyper::default()
    };
    let n = 2 + rng.below(4);
    let mut init = rng.child(0);
    let store = ParameterStore::init(hyper.clone(), &mut init)?;
    let rows = (0..n).map(|_| (0..hyper.d_in).map(|_| rng.range(-1.5, 1.5)).collect()).collect();
    let global = (0..hyper.global_dim).map(|_| rng.range(-1.0, 1.0)).collect();
    let state = UnitFeatureSet::from_rows(rows, global);
    let cell = rng.below(4);
    let label = match rng.below(3) {
        0 => ActionLabel::idle(cell),
        1 => ActionLabel::movement(rng.below(8), cell),
        _ => ActionLabel::attack(rng.below(n), cell),
    };
    Ok((state, store, label))
}

fn loss_at(state: &UnitFeatureSet, store: &ParameterStore, label: &ActionLabel) -> f64 {
    deterministic_pass(state, store, None)
        .and_then(|p| policy_loss_grad(&p.dist, label, store.hyper.lambda_int))
        .map(|(l, _)| l)
        .unwrap_or(f64::NAN)
}

/// Largest relative error of the deterministic-path parameter gradient over
/// `configs` random tiny networks.
pub fn deterministic_grad_error(seed: u64, configs: usize) -> Result<f64> {
    let mut rng = RngStream::named(seed, "gradcheck.model", 0);
    let mut err = 0.0f64;
    for _ in 0..configs {
        let (state, store, label) = tiny_case(&mut rng)?;
        let pass = deterministic_pass(&state, &store, None)?;
        let (_, dl) = policy_loss_grad(&pass.dist, &label, store.hyper.lambda_int)?;
        let mut grads = store.zero_grads();
        backward_deterministic(&state, &store, &pass, &dl, &mut grads)?;
        let an = grads.flat();
        let theta: Vec<f64> = store.tensors().iter().flat_map(|t| t.data().iter().copied()).collect();
        let fd = finite_diff_grad(
            |th| {
                let mut s = store.clone();
                let mut k = 0;
                for t in s.tensors_mut() {
                    for v in t.data_mut() {
                        *v = th[k];
                        k += 1;
                    }
                }
                loss_at(&state, &s, &label)
            },
            &theta,
            1e-5,
        )?;
        for (a, b) in an.iter().zip(&fd) {
            err = err.max((a - b).abs() / a.abs().max(b.abs()).max(1e-3));
        }
    }
    Ok(err)
}

fn check_model(seed: u64) -> Result<CheckResult> {
    let err = deterministic_grad_error(seed, 20)?;
    Ok(CheckResult::new("model.deterministic_grad", err, 1e-4, "relative, 20 networks with n <= 5, d <= 4".into()))
}

fn check_checkpoint(seed: u64) -> Result<CheckResult> {
    let mut rng = RngStream::named(seed, "gradcheck.checkpoint", 0);
    let (_, store, _) = tiny_case(&mut rng)?;
    let back = decode_checkpoint(&encode_checkpoint(&store))?;
    let mismatched = store
        .tensors()
        .iter()
        .zip(back.tensors())
        .flat_map(|(a, b)| a.data().iter().zip(b.data()))
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count();
    let bad = (mismatched > 0 || back.hyper != store.hyper) as u8 as f64;
    Ok(CheckResult::new("model.checkpoint_round_trip", bad, 0.0, format!("{mismatched} differing values")))
}
