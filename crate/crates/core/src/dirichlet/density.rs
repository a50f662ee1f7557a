use super::params::DirichletParams;
use crate::numerics::{digamma, ln_gamma, trigamma, SimplexVector};
use crate::{Error, Result};

/// Dirichlet KL divergence, or an explicit marker when `q` puts mass where
/// `p` has none.
#[derive(Clone, Debug, PartialEq)]
pub enum KlDivergence {
    Finite(f64),
    /// Coordinates in `support(q)` missing from `support(p)`.
    Infinite { uncovered: Vec<usize> },
}

impl KlDivergence {
    pub fn finite(&self) -> Option<f64> {
        match self {
            KlDivergence::Finite(v) => Some(*v),
            KlDivergence::Infinite { .. } => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, KlDivergence::Infinite { .. })
    }
}

fn uncovered(q: &DirichletParams, p: &DirichletParams) -> Vec<usize> {
    q.support().iter().copied().filter(|&i| !p.in_support(i)).collect()
}

/// Closed-form `KL[Dir(q) ‖ Dir(p)]` over `support(q)`.
pub fn dirichlet_kl(q: &DirichletParams, p: &DirichletParams) -> Result<KlDivergence> {
    if q.len() != p.len() {
        return Err(Error::InvalidInput(format!(
            "KL dimension mismatch: {} vs {}",
            q.len(),
            p.len()
        )));
    }
    let missing = uncovered(q, p);
    if !missing.is_empty() {
        return Ok(KlDivergence::Infinite { uncovered: missing });
    }
    if q == p {
        return Ok(KlDivergence::Finite(0.0));
    }
    let (qa, pa) = (q.alpha(), p.alpha());
    let sq: f64 = q.support().iter().map(|&i| qa[i]).sum();
    let sp: f64 = q.support().iter().map(|&i| pa[i]).sum();
    let psi_sq = digamma(sq);
    let mut kl = ln_gamma(sq) - ln_gamma(sp);
    for &i in q.support() {
        kl += ln_gamma(pa[i]) - ln_gamma(qa[i]) + (qa[i] - pa[i]) * (digamma(qa[i]) - psi_sq);
    }
    Ok(KlDivergence::Finite(kl))
}

/// Gradient of [`dirichlet_kl`] with respect to `q`'s concentrations,
/// zero off `support(q)`. `None` when the KL is infinite.
pub fn dirichlet_kl_grad(q: &DirichletParams, p: &DirichletParams) -> Result<Option<Vec<f64>>> {
    if q.len() != p.len() {
        return Err(Error::InvalidInput("KL gradient dimension mismatch".into()));
    }
    if !uncovered(q, p).is_empty() {
        return Ok(None);
    }
    let (qa, pa) = (q.alpha(), p.alpha());
    let sq: f64 = q.support().iter().map(|&i| qa[i]).sum();
    let sp: f64 = q.support().iter().map(|&i| pa[i]).sum();
    let common = (sq - sp) * trigamma(sq);
    let mut g = vec![0.0; q.len()];
    for &i in q.support() {
        g[i] = (qa[i] - pa[i]) * trigamma(qa[i]) - common;
    }
    Ok(Some(g))
}

/// Dirichlet log density over `support(params)`; `-inf` when `z` has mass
/// outside that support.
pub fn dirichlet_log_pdf(z: &SimplexVector, params: &DirichletParams) -> f64 {
    if z.len() != params.len() || z.support().iter().any(|&i| !params.in_support(i)) {
        return f64::NEG_INFINITY;
    }
    let a = params.alpha();
    let total = params.total();
    let mut lp = ln_gamma(total);
    for &i in params.support() {
        lp -= ln_gamma(a[i]);
        let zi = z.values()[i];
        if a[i] != 1.0 {
            lp += (a[i] - 1.0) * zi.ln();
        }
    }
    lp
}
