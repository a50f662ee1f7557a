use serde::{Deserialize, Serialize};

use super::action::ActionDistribution;
use super::features::{UnitFeatureSet, MAIN_HERO};
use super::params::*;
use super::tensor::{affine, affine_backward, dot, Tensor};
use crate::dirichlet::{dirichlet_sample, DirichletParams};
use crate::numerics::{sparsemax, sparsemax_backward, RngStream, SimplexVector, EXCLUDED};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionMode {
    Deterministic,
    Stochastic,
}

/// Alignment weights over units, tagged with how they were produced.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentWeights {
    pub z: SimplexVector,
    pub mode: AttentionMode,
}

/// Encoder intermediates for one state.
#[derive(Clone, Debug)]
pub struct Encoded {
    h1: Tensor,
    /// Unit embeddings, `n × d`; row 0 is the query.
    pub x: Tensor,
}

fn check_dims(state: &UnitFeatureSet, store: &ParameterStore) -> Result<()> {
    state.validate()?;
    let h = &store.hyper;
    if state.d_in != h.d_in {
        return Err(Error::Config(format!(
            "feature width {} does not match model d_in {}",
            state.d_in, h.d_in
        )));
    }
    if state.global.len() != h.global_dim {
        return Err(Error::Config(format!(
            "global info has {} entries, model expects {}",
            state.global.len(),
            h.global_dim
        )));
    }
    Ok(())
}

pub(crate) fn encode(state: &UnitFeatureSet, store: &ParameterStore) -> Result<Encoded> {
    check_dims(state, store)?;
    let (w1, b1) = (store.tensor(EMBED_W1), store.tensor(EMBED_B1));
    let (w2, b2) = (store.tensor(EMBED_W2), store.tensor(EMBED_B2));
    let (e, d) = (w1.rows(), w2.rows());
    let mut h1 = Tensor::zeros(&[state.n, e]);
    let mut x = Tensor::zeros(&[state.n, d]);
    for i in 0..state.n {
        let a: Vec<f64> = affine(w1, b1, state.row(i)).into_iter().map(f64::tanh).collect();
        let y: Vec<f64> = affine(w2, b2, &a).into_iter().map(f64::tanh).collect();
        h1.row_mut(i).copy_from_slice(&a);
        x.row_mut(i).copy_from_slice(&y);
    }
    Ok(Encoded { h1, x })
}

fn encode_backward(state: &UnitFeatureSet, enc: &Encoded, dx: &Tensor, store: &ParameterStore, grads: &mut Gradients) {
    let w2 = store.tensor(EMBED_W2).clone();
    for i in 0..state.n {
        let dpre2: Vec<f64> = dx.row(i).iter().zip(enc.x.row(i)).map(|(g, y)| g * (1.0 - y * y)).collect();
        if dpre2.iter().all(|v| *v == 0.0) {
            continue;
        }
        let dh1 = {
            let (gw, gb) = split_two(grads, EMBED_W2, EMBED_B2);
            affine_backward(&w2, enc.h1.row(i), &dpre2, gw, gb)
        };
        let dpre1: Vec<f64> = dh1.iter().zip(enc.h1.row(i)).map(|(g, a)| g * (1.0 - a * a)).collect();
        let (gw, gb) = split_two(grads, EMBED_W1, EMBED_B1);
        affine_backward(store.tensor(EMBED_W1), state.row(i), &dpre1, gw, gb);
    }
}

/// Mutable access to a weight gradient and its bias gradient (`b = w + 1`).
fn split_two(grads: &mut Gradients, w: usize, b: usize) -> (&mut Tensor, &mut Tensor) {
    debug_assert_eq!(b, w + 1);
    let (lo, hi) = grads.tensors_mut().split_at_mut(b);
    (&mut lo[w], &mut hi[0])
}

/// Unit embeddings `X`, one row per unit.
pub fn embed_units(state: &UnitFeatureSet, store: &ParameterStore) -> Result<Tensor> {
    encode(state, store).map(|e| e.x)
}

/// Scaled dot products of every unit with the query row:
/// `t_i = ⟨X_0, X_i⟩ / √d`.
pub fn attention_scores(x: &Tensor) -> Vec<f64> {
    let scale = 1.0 / (x.cols() as f64).sqrt();
    let q = x.row(MAIN_HERO);
    (0..x.rows()).map(|i| dot(q, x.row(i)) * scale).collect()
}

fn scores_backward(x: &Tensor, dt: &[f64], dx: &mut Tensor) {
    let scale = 1.0 / (x.cols() as f64).sqrt();
    let d = x.cols();
    let mut dq = vec![0.0; d];
    let q = x.row(MAIN_HERO).to_vec();
    for (i, &g) in dt.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = x.row(i);
        for k in 0..d {
            dq[k] += g * scale * row[k];
        }
        for (k, r) in dx.row_mut(i).iter_mut().enumerate() {
            *r += g * scale * q[k];
        }
    }
    for (r, g) in dx.row_mut(MAIN_HERO).iter_mut().zip(&dq) {
        *r += g;
    }
}

/// Scores with dead units (and, if given, units outside `keep`) replaced
/// by the exclusion sentinel.
pub fn masked_scores(scores: &[f64], state: &UnitFeatureSet, keep: Option<&[bool]>) -> Vec<f64> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let kept = state.alive[i] && keep.is_none_or(|k| k[i]);
            if kept {
                t
            } else {
                EXCLUDED
            }
        })
        .collect()
}

/// Linear fusion `c = Σ_i z_i X_i`.
pub fn fuse(x: &Tensor, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != x.rows() {
        return Err(Error::InvalidInput(format!(
            "fuse: {} weights for {} units",
            z.len(),
            x.rows()
        )));
    }
    let mut c = vec![0.0; x.cols()];
    for (i, &w) in z.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (ck, xk) in c.iter_mut().zip(x.row(i)) {
            *ck += w * xk;
        }
    }
    Ok(c)
}

/// Backward of [`fuse`]: returns `(∂L/∂X, ∂L/∂z)` given `∂L/∂c`.
pub fn fuse_backward(x: &Tensor, z: &[f64], dc: &[f64]) -> (Tensor, Vec<f64>) {
    let mut dx = Tensor::zeros(x.shape());
    let mut dz = vec![0.0; z.len()];
    for i in 0..x.rows() {
        dz[i] = dot(x.row(i), dc);
        if z[i] != 0.0 {
            for (r, g) in dx.row_mut(i).iter_mut().zip(dc) {
                *r = z[i] * g;
            }
        }
    }
    (dx, dz)
}

#[derive(Clone, Debug)]
pub(crate) struct PredCache {
    input: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    query: Vec<f64>,
}

pub(crate) fn predict_cached(
    c: &[f64],
    global: &[f64],
    x: &Tensor,
    store: &ParameterStore,
) -> (ActionDistribution, PredCache) {
    let mut input = c.to_vec();
    input.extend_from_slice(global);
    let a1: Vec<f64> = affine(store.tensor(PRED_W1), store.tensor(PRED_B1), &input)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let a2: Vec<f64> = affine(store.tensor(PRED_W2), store.tensor(PRED_B2), &a1)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let query = affine(store.tensor(TARGET_W), store.tensor(TARGET_B), &a2);
    let scale = 1.0 / (x.cols() as f64).sqrt();
    let dist = ActionDistribution {
        level1: affine(store.tensor(L1_W), store.tensor(L1_B), &a2),
        moves: affine(store.tensor(MOVE_W), store.tensor(MOVE_B), &a2),
        targets: (0..x.rows()).map(|i| dot(&query, x.row(i)) * scale).collect(),
        intention: affine(store.tensor(INTENT_W), store.tensor(INTENT_B), &a2),
    };
    (dist, PredCache { input, a1, a2, query })
}

/// Predictor heads from a fused context, the global info and the unit
/// embeddings (keys for the target head).
pub fn predict(c: &[f64], global: &[f64], x: &Tensor, store: &ParameterStore) -> Result<ActionDistribution> {
    let h = &store.hyper;
    if c.len() != h.embed_dim || global.len() != h.global_dim || x.cols() != h.embed_dim {
        return Err(Error::Config("predictor input dimensions do not match the model".into()));
    }
    Ok(predict_cached(c, global, x, store).0)
}

/// Returns `∂L/∂c` and adds the target-head contribution to `dx`.
pub(crate) fn predict_backward(
    cache: &PredCache,
    x: &Tensor,
    dlogits: &ActionDistribution,
    store: &ParameterStore,
    grads: &mut Gradients,
    dx: &mut Tensor,
) -> Vec<f64> {
    let scale = 1.0 / (x.cols() as f64).sqrt();
    let h2 = cache.a2.len();
    let mut da2 = vec![0.0; h2];
    let mut add = |v: Vec<f64>| {
        for (a, b) in da2.iter_mut().zip(v) {
            *a += b;
        }
    };
    {
        let (gw, gb) = split_two(grads, L1_W, L1_B);
        add(affine_backward(store.tensor(L1_W), &cache.a2, &dlogits.level1, gw, gb));
    }
    {
        let (gw, gb) = split_two(grads, MOVE_W, MOVE_B);
        add(affine_backward(store.tensor(MOVE_W), &cache.a2, &dlogits.moves, gw, gb));
    }
    {
        let (gw, gb) = split_two(grads, INTENT_W, INTENT_B);
        add(affine_backward(store.tensor(INTENT_W), &cache.a2, &dlogits.intention, gw, gb));
    }
    let mut dq = vec![0.0; cache.query.len()];
    for (i, &g) in dlogits.targets.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (k, r) in dx.row_mut(i).iter_mut().enumerate() {
            *r += g * scale * cache.query[k];
        }
        for (k, xk) in x.row(i).iter().enumerate() {
            dq[k] += g * scale * xk;
        }
    }
    {
        let (gw, gb) = split_two(grads, TARGET_W, TARGET_B);
        add(affine_backward(store.tensor(TARGET_W), &cache.a2, &dq, gw, gb));
    }
    let dpre2: Vec<f64> = da2.iter().zip(&cache.a2).map(|(g, a)| g * (1.0 - a * a)).collect();
    let da1 = {
        let (gw, gb) = split_two(grads, PRED_W2, PRED_B2);
        affine_backward(store.tensor(PRED_W2), &cache.a1, &dpre2, gw, gb)
    };
    let dpre1: Vec<f64> = da1.iter().zip(&cache.a1).map(|(g, a)| g * (1.0 - a * a)).collect();
    let dinput = {
        let (gw, gb) = split_two(grads, PRED_W1, PRED_B1);
        affine_backward(store.tensor(PRED_W1), &cache.input, &dpre1, gw, gb)
    };
    dinput[..x.cols()].to_vec()
}

/// Everything cached by a deterministic forward pass.
#[derive(Clone, Debug)]
pub struct DeterministicPass {
    pub(crate) enc: Encoded,
    /// Masked attention scores fed to sparsemax.
    pub scores: Vec<f64>,
    pub z: SimplexVector,
    pub c: Vec<f64>,
    pub(crate) pred: PredCache,
    pub dist: ActionDistribution,
}

impl DeterministicPass {
    pub fn embeddings(&self) -> &Tensor {
        &self.enc.x
    }
}

/// Deterministic pass with an optional unit mask (units with `keep[i] ==
/// false` are excluded from attention).
pub fn deterministic_pass(state: &UnitFeatureSet, store: &ParameterStore, keep: Option<&[bool]>) -> Result<DeterministicPass> {
    if let Some(k) = keep {
        if k.len() != state.n {
            return Err(Error::InvalidInput("attention mask length mismatch".into()));
        }
    }
    let enc = encode(state, store)?;
    let scores = masked_scores(&attention_scores(&enc.x), state, keep);
    let z = sparsemax(&scores)?;
    let c = fuse(&enc.x, z.values())?;
    let (dist, pred) = predict_cached(&c, &state.global, &enc.x, store);
    Ok(DeterministicPass { enc, scores, z, c, pred, dist })
}

/// `z = sparsemax(t)`, `c = Σ z_i X_i`, then the predictor.
pub fn forward_deterministic(state: &UnitFeatureSet, store: &ParameterStore) -> Result<(ActionDistribution, AlignmentWeights)> {
    let pass = deterministic_pass(state, store, None)?;
    Ok((pass.dist, AlignmentWeights { z: pass.z, mode: AttentionMode::Deterministic }))
}

/// Reverse-mode gradients of a scalar loss through a deterministic pass,
/// given the loss gradient wrt the logits. Accumulates into `grads`.
pub fn backward_deterministic(
    state: &UnitFeatureSet,
    store: &ParameterStore,
    pass: &DeterministicPass,
    dlogits: &ActionDistribution,
    grads: &mut Gradients,
) -> Result<()> {
    let x = &pass.enc.x;
    let mut dx = Tensor::zeros(x.shape());
    let dc = predict_backward(&pass.pred, x, dlogits, store, grads, &mut dx);
    let (dx_fuse, dz) = fuse_backward(x, pass.z.values(), &dc);
    dx.add_scaled(&dx_fuse, 1.0);
    let dt = sparsemax_backward(&pass.scores, &dz)?;
    scores_backward(x, &dt, &mut dx);
    encode_backward(state, &pass.enc, &dx, store, grads);
    Ok(())
}

pub(crate) fn encode_backward_pub(state: &UnitFeatureSet, enc: &Encoded, dx: &Tensor, store: &ParameterStore, grads: &mut Gradients) {
    encode_backward(state, enc, dx, store, grads)
}

pub(crate) fn scores_backward_pub(x: &Tensor, dt: &[f64], dx: &mut Tensor) {
    scores_backward(x, dt, dx)
}

/// Dirichlet concentrations `c_conc · sparsemax(t)` for masked scores.
pub fn stochastic_alpha(masked: &[f64], store: &ParameterStore) -> Result<DirichletParams> {
    let h = &store.hyper;
    let p = sparsemax(masked)?;
    let alpha = p.values().iter().map(|v| h.c_conc * v).collect();
    DirichletParams::new(alpha, h.alpha_floor)
        .map_err(|e| Error::Degenerate(format!("concentration support is empty: {e}")))
}

/// `α = c_conc · sparsemax(t)`, `z` the average of `n_avg` Dirichlet draws.
pub fn forward_stochastic(
    state: &UnitFeatureSet,
    store: &ParameterStore,
    rng: &mut RngStream,
    n_avg: usize,
) -> Result<(ActionDistribution, AlignmentWeights, DirichletParams)> {
    forward_stochastic_masked(state, store, None, rng, n_avg)
}

pub(crate) fn forward_stochastic_masked(
    state: &UnitFeatureSet,
    store: &ParameterStore,
    keep: Option<&[bool]>,
    rng: &mut RngStream,
    n_avg: usize,
) -> Result<(ActionDistribution, AlignmentWeights, DirichletParams)> {
    let enc = encode(state, store)?;
    let scores = masked_scores(&attention_scores(&enc.x), state, keep);
    let alpha = stochastic_alpha(&scores, store)?;
    let sample = dirichlet_sample(&alpha, store.hyper.shape_aug, n_avg, rng)?;
    let c = fuse(&enc.x, sample.mean.values())?;
    let (dist, _) = predict_cached(&c, &state.global, &enc.x, store);
    Ok((dist, AlignmentWeights { z: sample.mean, mode: AttentionMode::Stochastic }, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::action::{policy_loss_grad, ActionLabel};
    use crate::model::params::{Hyper, TENSOR_NAMES};

    fn tiny(n: usize, seed: u64) -> (UnitFeatureSet, ParameterStore) {
        let h = Hyper {
            d_in: 3,
            global_dim: 2,
            embed_hidden: 4,
            embed_dim: 3,
            pred_hidden1: 5,
            pred_hidden2: 4,
            grid: 2,
            ..Hyper::default()
        };
        let mut rng = RngStream::new(seed, 9);
        let store = ParameterStore::init(h, &mut rng).unwrap();
        let rows = (0..n).map(|_| (0..3).map(|_| rng.range(-1.5, 1.5)).collect()).collect();
        let state = UnitFeatureSet::from_rows(rows, vec![rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)]);
        (state, store)
    }

    fn loss_at(state: &UnitFeatureSet, store: &ParameterStore, label: &ActionLabel) -> f64 {
        let pass = deterministic_pass(state, store, None).unwrap();
        policy_loss_grad(&pass.dist, label, store.hyper.lambda_int).unwrap().0
    }

    #[test]
    fn deterministic_gradients_match_finite_differences() {
        for seed in 0..4 {
            let (state, store) = tiny(4, seed);
            let label = ActionLabel::attack(2, 1);
            let pass = deterministic_pass(&state, &store, None).unwrap();
            let (_, dl) = policy_loss_grad(&pass.dist, &label, store.hyper.lambda_int).unwrap();
            let mut g = store.zero_grads();
            backward_deterministic(&state, &store, &pass, &dl, &mut g).unwrap();
            for t in 0..TENSOR_NAMES.len() {
                for k in 0..store.tensor(t).data().len() {
                    let h = 1e-6;
                    let mut p = store.clone();
                    p.tensors_mut()[t].data_mut()[k] += h;
                    let up = loss_at(&state, &p, &label);
                    p.tensors_mut()[t].data_mut()[k] -= 2.0 * h;
                    let dn = loss_at(&state, &p, &label);
                    let fd = (up - dn) / (2.0 * h);
                    let an = g.tensor(t).data()[k];
                    assert!((fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-2), "{} [{k}]: {an} vs {fd}", TENSOR_NAMES[t]);
                }
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (state, store) = tiny(3, 1);
        let pass = deterministic_pass(&state, &store, None).unwrap();
        let mut g = store.zero_grads();
        backward_deterministic(&state, &store, &pass, &pass.dist.zeros_like(), &mut g).unwrap();
        assert_eq!(g.global_norm(), 0.0);
    }

    #[test]
    fn masked_head_gets_no_gradient() {
        let (state, store) = tiny(3, 2);
        let pass = deterministic_pass(&state, &store, None).unwrap();
        let (_, dl) = policy_loss_grad(&pass.dist, &ActionLabel::idle(0), store.hyper.lambda_int).unwrap();
        let mut g = store.zero_grads();
        backward_deterministic(&state, &store, &pass, &dl, &mut g).unwrap();
        for name in ["head.move.w", "head.move.b", "head.target.w", "head.target.b"] {
            let t = g.by_name(name).unwrap();
            assert!(t.data().iter().all(|&v| v == 0.0), "{name}");
        }
    }

    #[test]
    fn zero_weight_units_do_not_touch_the_context() {
        for seed in 0..20 {
            let (mut state, store) = tiny(5, seed);
            let pass = deterministic_pass(&state, &store, None).unwrap();
            let Some(j) = (0..5).find(|&j| pass.z.values()[j] == 0.0) else { continue };
            for v in &mut state.raw[j * 3..(j + 1) * 3] {
                *v *= -7.0;
            }
            let x = embed_units(&state, &store).unwrap();
            assert_eq!(fuse(&x, pass.z.values()).unwrap(), pass.c);
        }
    }

    #[test]
    fn dead_and_unkept_units_get_no_weight() {
        let (mut state, store) = tiny(4, 3);
        state.alive[2] = false;
        let keep = [true, true, true, false];
        let pass = deterministic_pass(&state, &store, Some(&keep)).unwrap();
        assert_eq!(pass.z.values()[2], 0.0);
        assert_eq!(pass.z.values()[3], 0.0);
        assert!(deterministic_pass(&state, &store, Some(&keep[..2])).is_err());
    }

    #[test]
    fn large_concentration_approaches_sparsemax() {
        let (state, mut store) = tiny(4, 4);
        store.hyper.c_conc = 1e4;
        let (_, w) = forward_deterministic(&state, &store).unwrap();
        let (_, s, _) = forward_stochastic(&state, &store, &mut RngStream::new(1, 1), 64).unwrap();
        for (a, b) in w.z.values().iter().zip(s.z.values()) {
            assert!((a - b).abs() < 0.01, "{a} vs {b}");
        }
    }
}
