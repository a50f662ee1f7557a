use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::dirichlet::DEFAULT_ALPHA_FLOOR;
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Model hyperparameters. The first block fixes tensor shapes; the second
/// only affects the stochastic path and the loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub d_in: usize,
    pub global_dim: usize,
    pub embed_hidden: usize,
    pub embed_dim: usize,
    pub pred_hidden1: usize,
    pub pred_hidden2: usize,
    /// Side of the coarse intention grid (`grid²` cells).
    pub grid: usize,

    /// Concentration scale: `α = c_conc · sparsemax(t)`.
    pub c_conc: f64,
    pub kl_weight: f64,
    pub n_avg: usize,
    /// Shape augmentation boosters `B`.
    pub shape_aug: u32,
    pub lambda_int: f64,
    pub alpha_floor: f64,
    /// Value given to coordinates raised by union flooring.
    pub union_fill: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            d_in: 12,
            global_dim: 5,
            embed_hidden: 32,
            embed_dim: 16,
            pred_hidden1: 64,
            pred_hidden2: 64,
            grid: 6,
            c_conc: 1.0,
            kl_weight: 0.01,
            n_avg: 8,
            shape_aug: 4,
            lambda_int: 0.5,
            alpha_floor: DEFAULT_ALPHA_FLOOR,
            union_fill: 1e-3,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_in", self.d_in),
            ("global_dim", self.global_dim),
            ("embed_hidden", self.embed_hidden),
            ("embed_dim", self.embed_dim),
            ("pred_hidden1", self.pred_hidden1),
            ("pred_hidden2", self.pred_hidden2),
            ("grid", self.grid),
            ("n_avg", self.n_avg),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be >= 1")));
            }
        }
        if !(self.c_conc > 0.0) {
            return Err(Error::Config("model.c_conc must be > 0".into()));
        }
        if !(self.kl_weight >= 0.0) || !(self.lambda_int >= 0.0) {
            return Err(Error::Config("loss weights must be >= 0".into()));
        }
        if !(self.alpha_floor > 0.0) || !(self.union_fill > self.alpha_floor) {
            return Err(Error::Config("need 0 < alpha_floor < union_fill".into()));
        }
        Ok(())
    }

    /// Declared shape of every named tensor, in storage order.
    pub fn shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        let (e, d) = (self.embed_hidden, self.embed_dim);
        let (h1, h2) = (self.pred_hidden1, self.pred_hidden2);
        let cells = self.grid * self.grid;
        vec![
            ("embed.w1", vec![e, self.d_in]),
            ("embed.b1", vec![e]),
            ("embed.w2", vec![d, e]),
            ("embed.b2", vec![d]),
            ("pred.w1", vec![h1, d + self.global_dim]),
            ("pred.b1", vec![h1]),
            ("pred.w2", vec![h2, h1]),
            ("pred.b2", vec![h2]),
            ("head.level1.w", vec![3, h2]),
            ("head.level1.b", vec![3]),
            ("head.move.w", vec![8, h2]),
            ("head.move.b", vec![8]),
            ("head.target.w", vec![d, h2]),
            ("head.target.b", vec![d]),
            ("head.intent.w", vec![cells, h2]),
            ("head.intent.b", vec![cells]),
        ]
    }
}

/// Tensor names in storage order.
pub const TENSOR_NAMES: [&str; 16] = [
    "embed.w1",
    "embed.b1",
    "embed.w2",
    "embed.b2",
    "pred.w1",
    "pred.b1",
    "pred.w2",
    "pred.b2",
    "head.level1.w",
    "head.level1.b",
    "head.move.w",
    "head.move.b",
    "head.target.w",
    "head.target.b",
    "head.intent.w",
    "head.intent.b",
];

pub(crate) const EMBED_W1: usize = 0;
pub(crate) const EMBED_B1: usize = 1;
pub(crate) const EMBED_W2: usize = 2;
pub(crate) const EMBED_B2: usize = 3;
pub(crate) const PRED_W1: usize = 4;
pub(crate) const PRED_B1: usize = 5;
pub(crate) const PRED_W2: usize = 6;
pub(crate) const PRED_B2: usize = 7;
pub(crate) const L1_W: usize = 8;
pub(crate) const L1_B: usize = 9;
pub(crate) const MOVE_W: usize = 10;
pub(crate) const MOVE_B: usize = 11;
pub(crate) const TARGET_W: usize = 12;
pub(crate) const TARGET_B: usize = 13;
pub(crate) const INTENT_W: usize = 14;
pub(crate) const INTENT_B: usize = 15;

/// All network weights with their hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterStore {
    pub hyper: Hyper,
    tensors: Vec<Tensor>,
}

impl ParameterStore {
    /// All-zero weights.
    pub fn zeros(hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        let tensors = hyper.shapes().into_iter().map(|(_, s)| Tensor::zeros(&s)).collect();
        Ok(ParameterStore { hyper, tensors })
    }

    /// Uniform Glorot initialization of weight matrices, zero biases.
    pub fn init(hyper: Hyper, rng: &mut RngStream) -> Result<Self> {
        let mut store = Self::zeros(hyper)?;
        for t in store.tensors.iter_mut() {
            if t.shape().len() == 2 {
                let limit = (6.0 / (t.rows() + t.cols()) as f64).sqrt();
                for w in t.data_mut() {
                    *w = rng.range(-limit, limit);
                }
            }
        }
        Ok(store)
    }

    /// Builds a store from named tensors, checking names and shapes.
    pub fn from_tensors(hyper: Hyper, named: Vec<(String, Tensor)>) -> Result<Self> {
        hyper.validate()?;
        let shapes = hyper.shapes();
        if named.len() != shapes.len() {
            return Err(Error::CheckpointMismatch {
                field: "tensors".into(),
                detail: format!("expected {} tensors, found {}", shapes.len(), named.len()),
            });
        }
        let mut tensors = Vec::with_capacity(shapes.len());
        for ((name, shape), (got_name, t)) in shapes.into_iter().zip(named) {
            if name != got_name {
                return Err(Error::CheckpointMismatch {
                    field: got_name,
                    detail: format!("expected tensor `{name}`"),
                });
            }
            if t.shape() != shape.as_slice() {
                return Err(Error::CheckpointMismatch {
                    field: got_name,
                    detail: format!("shape {:?}, expected {:?}", t.shape(), shape),
                });
            }
            tensors.push(t);
        }
        Ok(ParameterStore { hyper, tensors })
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        TENSOR_NAMES.iter().copied().zip(self.tensors.iter())
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        TENSOR_NAMES.iter().position(|n| *n == name).map(|i| &self.tensors[i])
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        TENSOR_NAMES.iter().position(|n| *n == name).map(move |i| &mut self.tensors[i])
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients { tensors: self.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect() }
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data().len()).sum()
    }
}

/// Gradient accumulator mirroring a [`ParameterStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.tensors[idx]
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut Tensor {
        &mut self.tensors[idx]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        TENSOR_NAMES.iter().position(|n| *n == name).map(|i| &self.tensors[i])
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors.iter_mut() {
            t.data_mut().iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors.iter().map(|t| t.sum_squares()).sum::<f64>().sqrt()
    }

    /// Flattened view, storage order.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_shapes_line_up() {
        let h = Hyper::default();
        let names: Vec<_> = h.shapes().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, TENSOR_NAMES.to_vec());
    }

    #[test]
    fn init_is_seeded() {
        let a = ParameterStore::init(Hyper::default(), &mut RngStream::new(3, 0)).unwrap();
        let b = ParameterStore::init(Hyper::default(), &mut RngStream::new(3, 0)).unwrap();
        let c = ParameterStore::init(Hyper::default(), &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.tensor(EMBED_B1).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn from_tensors_rejects_wrong_shape() {
        let h = Hyper::default();
        let mut named: Vec<(String, Tensor)> =
            h.shapes().into_iter().map(|(n, s)| (n.to_string(), Tensor::zeros(&s))).collect();
        named[2].1 = Tensor::zeros(&[3, 3]);
        match ParameterStore::from_tensors(h, named) {
            Err(Error::CheckpointMismatch { field, .. }) => assert_eq!(field, "embed.w2"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
