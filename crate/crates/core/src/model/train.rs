use serde::{Deserialize, Serialize};

use super::action::{policy_loss, policy_loss_grad, ActionLabel, Level1};
use super::elbo::{elbo_loss_and_grad, prior_alpha};
use super::features::UnitFeatureSet;
use super::net::{backward_deterministic, deterministic_pass, forward_stochastic, AttentionMode};
use super::optim::{clip_global_norm, sgd_step, Velocity};
use super::params::{Gradients, ParameterStore};
use crate::dirichlet::DirichletParams;
use crate::numerics::RngStream;
use crate::par::{try_map_range, Exec};
use crate::{Error, Result};

/// One imitation example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledState {
    pub state: UnitFeatureSet,
    pub label: ActionLabel,
    /// Units the expert actually used to decide.
    pub true_attention: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: AttentionMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// Global-norm clipping threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: AttentionMode::Deterministic,
            epochs: 20,
            batch_size: 32,
            lr: 0.05,
            momentum: 0.9,
            clip_norm: Some(5.0),
        }
    }
}

/// Per-head accuracy on a labelled set. Level-2 heads are scored only on
/// samples whose label uses them; `None` when there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadAccuracy {
    pub samples: usize,
    pub loss: f64,
    pub level1: f64,
    pub move_dir: Option<f64>,
    pub target: Option<f64>,
    pub intention: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Epoch 0 is the untrained model.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation: Option<HeadAccuracy>,
    /// Mean KL to the prior (stochastic mode).
    pub kl_mean: Option<f64>,
    /// Coordinates raised by union flooring during the epoch.
    pub union_raised: Option<usize>,
    pub grad_norm_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: AttentionMode,
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.epochs[0].train_loss
    }

    pub fn final_loss(&self) -> f64 {
        self.epochs[self.epochs.len() - 1].train_loss
    }
}

struct SampleOutcome {
    loss: f64,
    kl: f64,
    raised: usize,
    grads: Option<Gradients>,
}

fn sample_outcome(
    sample: &LabelledState,
    store: &ParameterStore,
    mode: AttentionMode,
    prior: Option<&DirichletParams>,
    rng: RngStream,
    want_grads: bool,
) -> Result<SampleOutcome> {
    let lambda = store.hyper.lambda_int;
    match mode {
        AttentionMode::Deterministic => {
            let pass = deterministic_pass(&sample.state, store, None)?;
            if !want_grads {
                let loss = policy_loss(&pass.dist, &sample.label, lambda)?;
                return Ok(SampleOutcome { loss, kl: 0.0, raised: 0, grads: None });
            }
            let (loss, dlogits) = policy_loss_grad(&pass.dist, &sample.label, lambda)?;
            let mut g = store.zero_grads();
            backward_deterministic(&sample.state, store, &pass, &dlogits, &mut g)?;
            Ok(SampleOutcome { loss, kl: 0.0, raised: 0, grads: Some(g) })
        }
        AttentionMode::Stochastic => {
            let prior = prior.ok_or_else(|| Error::Usage("stochastic training needs a prior".into()))?;
            let mut rng = rng;
            let mut g = store.zero_grads();
            let terms = elbo_loss_and_grad(&sample.state, &sample.label, store, prior, &mut rng, &mut g)?;
            Ok(SampleOutcome { loss: terms.loss, kl: terms.kl, raised: terms.raised, grads: want_grads.then_some(g) })
        }
    }
}

fn shapes_agree(a: &ParameterStore, b: &ParameterStore) -> bool {
    a.tensors().iter().zip(b.tensors()).all(|(x, y)| x.shape() == y.shape()) && a.tensors().len() == b.tensors().len()
}

/// Mini-batch imitation training.
///
/// Randomness comes only from `rng`: epoch `e` shuffles with `rng.child(e)`
/// and sample `i` of that epoch draws from `rng.child(e).child(i)`. Per-sample
/// work may run in parallel; reductions always follow sample order, so the
/// result does not depend on `exec`.
pub fn train(
    train_set: &[LabelledState],
    validation: &[LabelledState],
    cfg: &TrainConfig,
    init: ParameterStore,
    prior: Option<&ParameterStore>,
    rng: &RngStream,
    exec: Exec,
) -> Result<(ParameterStore, TrainReport)> {
    if train_set.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let priors: Option<Vec<DirichletParams>> = match cfg.mode {
        AttentionMode::Deterministic => None,
        AttentionMode::Stochastic => {
            let p = prior.ok_or_else(|| Error::Config("stochastic training requires a prior checkpoint".into()))?;
            if !shapes_agree(p, &init) {
                return Err(Error::Config("prior checkpoint is incompatible with the model hyperparameters".into()));
            }
            let h = &init.hyper;
            Some(try_map_range(exec, train_set.len(), |i| {
                prior_alpha(&train_set[i].state, p, h.c_conc, h.alpha_floor)
            })?)
        }
    };
    let prior_of = |i: usize| priors.as_ref().map(|v| &v[i]);

    let mut store = init;
    let mut velocity = Velocity::zeros(&store);
    let n = train_set.len();
    let mut records = Vec::with_capacity(cfg.epochs + 1);

    // Untrained loss on the same footing as the epoch losses.
    let start = rng.child(0);
    let initial = try_map_range(exec, n, |i| {
        sample_outcome(&train_set[i], &store, cfg.mode, prior_of(i), start.child(i as u64), false)
    })
    .map_err(|e| name_sample(e, 0))?;
    records.push(epoch_record(0, &initial, None, cfg.mode, validation, &store, &start, exec)?);

    for epoch in 1..=cfg.epochs {
        let stream = rng.child(epoch as u64);
        let mut order: Vec<usize> = (0..n).collect();
        stream.child(u64::MAX).shuffle(&mut order);
        let mut per_sample: Vec<Option<SampleOutcome>> = (0..n).map(|_| None).collect();
        let mut norms = Vec::new();
        for batch in order.chunks(cfg.batch_size) {
            let outs = try_map_range(exec, batch.len(), |k| {
                let i = batch[k];
                sample_outcome(&train_set[i], &store, cfg.mode, prior_of(i), stream.child(i as u64), true)
                    .map_err(|e| name_sample(e, i))
            })?;
            let mut g = store.zero_grads();
            for o in &outs {
                g.add_scaled(o.grads.as_ref().expect("gradients requested"), 1.0);
            }
            g.scale(1.0 / batch.len() as f64);
            let norm = match cfg.clip_norm {
                Some(c) => clip_global_norm(&mut g, c),
                None => g.global_norm(),
            };
            norms.push(norm);
            sgd_step(&mut store, &g, &mut velocity, cfg.lr, cfg.momentum)?;
            for (&i, mut o) in batch.iter().zip(outs) {
                o.grads = None;
                per_sample[i] = Some(o);
            }
        }
        let outs: Vec<SampleOutcome> = per_sample.into_iter().map(|o| o.expect("every sample visited")).collect();
        let grad_mean = norms.iter().sum::<f64>() / norms.len() as f64;
        records.push(epoch_record(epoch, &outs, Some(grad_mean), cfg.mode, validation, &store, &stream, exec)?);
    }
    Ok((store, TrainReport { mode: cfg.mode, epochs: records }))
}

fn name_sample(e: Error, i: usize) -> Error {
    match e {
        Error::Training(m) => Error::Training(format!("sample {i}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("sample {i}: {m}")),
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn epoch_record(
    epoch: usize,
    outs: &[SampleOutcome],
    grad_norm_mean: Option<f64>,
    mode: AttentionMode,
    validation: &[LabelledState],
    store: &ParameterStore,
    stream: &RngStream,
    exec: Exec,
) -> Result<EpochRecord> {
    let n = outs.len() as f64;
    let loss = outs.iter().map(|o| o.loss).sum::<f64>() / n;
    let stoch = mode == AttentionMode::Stochastic;
    let validation = if validation.is_empty() {
        None
    } else {
        Some(evaluate(validation, store, mode, &stream.child(u64::MAX - 1), exec)?)
    };
    Ok(EpochRecord {
        epoch,
        train_loss: loss,
        validation,
        kl_mean: stoch.then(|| outs.iter().map(|o| o.kl).sum::<f64>() / n),
        union_raised: stoch.then(|| outs.iter().map(|o| o.raised).sum()),
        grad_norm_mean,
    })
}

/// Greedy-decoded accuracy of every head. The stochastic model decodes
/// from the average of `n_avg` draws, sample `i` using `rng.child(i)`.
pub fn evaluate(samples: &[LabelledState], store: &ParameterStore, mode: AttentionMode, rng: &RngStream, exec: Exec) -> Result<HeadAccuracy> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    let h = &store.hyper;
    let per = try_map_range(exec, samples.len(), |i| -> Result<(f64, ActionLabel)> {
        let s = &samples[i];
        let dist = match mode {
            AttentionMode::Deterministic => deterministic_pass(&s.state, store, None)?.dist,
            AttentionMode::Stochastic => forward_stochastic(&s.state, store, &mut rng.child(i as u64), h.n_avg)?.0,
        };
        Ok((policy_loss(&dist, &s.label, h.lambda_int)?, dist.argmax_label()))
    })?;
    let mut loss = 0.0;
    let (mut l1, mut intent) = (0usize, 0usize);
    let (mut mv, mut mv_n, mut tg, mut tg_n) = (0usize, 0usize, 0usize, 0usize);
    for (s, (l, pred)) in samples.iter().zip(&per) {
        loss += l;
        l1 += (pred.level1 == s.label.level1) as usize;
        intent += (pred.intention == s.label.intention) as usize;
        match s.label.level1 {
            Level1::Move => {
                mv_n += 1;
                mv += (pred.level1 == Level1::Move && pred.move_dir == s.label.move_dir) as usize;
            }
            Level1::Attack => {
                tg_n += 1;
                tg += (pred.level1 == Level1::Attack && pred.target == s.label.target) as usize;
            }
            Level1::Idle => {}
        }
    }
    let n = samples.len() as f64;
    let frac = |k: usize, d: usize| (d > 0).then(|| k as f64 / d as f64);
    Ok(HeadAccuracy {
        samples: samples.len(),
        loss: loss / n,
        level1: l1 as f64 / n,
        move_dir: frac(mv, mv_n),
        target: frac(tg, tg_n),
        intention: intent as f64 / n,
    })
}

/// How the alignment weights relate to the expert's own attention set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub samples: usize,
    /// Fraction of states whose `z` puts at least `faithful_mass` on the
    /// expert's attention set.
    pub faithful: f64,
    /// Fraction of states with `‖z‖₀ <= max_support`.
    pub sparse: f64,
    pub mean_mass: f64,
    pub mean_support: f64,
}

pub fn attention_stats(
    samples: &[LabelledState],
    store: &ParameterStore,
    mode: AttentionMode,
    faithful_mass: f64,
    max_support: usize,
    rng: &RngStream,
    exec: Exec,
) -> Result<AttentionStats> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("attention statistics need samples".into()));
    }
    let per = try_map_range(exec, samples.len(), |i| -> Result<(f64, usize)> {
        let s = &samples[i];
        let z = match mode {
            AttentionMode::Deterministic => deterministic_pass(&s.state, store, None)?.z,
            AttentionMode::Stochastic => forward_stochastic(&s.state, store, &mut rng.child(i as u64), store.hyper.n_avg)?.1.z,
        };
        let mass = s.true_attention.iter().map(|&j| z.values()[j]).sum();
        Ok((mass, z.support().len()))
    })?;
    let n = samples.len() as f64;
    Ok(AttentionStats {
        samples: samples.len(),
        faithful: per.iter().filter(|(m, _)| *m >= faithful_mass).count() as f64 / n,
        sparse: per.iter().filter(|(_, k)| *k <= max_support).count() as f64 / n,
        mean_mass: per.iter().map(|(m, _)| m).sum::<f64>() / n,
        mean_support: per.iter().map(|(_, k)| *k as f64).sum::<f64>() / n,
    })
}
