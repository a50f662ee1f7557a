use serde::{Deserialize, Serialize};

/// Dense row-major tensor of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; len] }
    }

    /// Panics if `data.len()` does not match `shape`.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "tensor shape/data mismatch");
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// `w · x + b` for `w` of shape `[out, in]`.
pub(crate) fn affine(w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    let (out, inp) = (w.rows(), w.cols());
    debug_assert_eq!(inp, x.len());
    let wd = w.data();
    let bd = b.data();
    (0..out)
        .map(|o| {
            let row = &wd[o * inp..(o + 1) * inp];
            bd[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

/// Accumulates the gradients of `y = w x + b` given `dy`, and returns `dx`.
pub(crate) fn affine_backward(
    w: &Tensor,
    x: &[f64],
    dy: &[f64],
    gw: &mut Tensor,
    gb: &mut Tensor,
) -> Vec<f64> {
    let (out, inp) = (w.rows(), w.cols());
    let mut dx = vec![0.0; inp];
    let wd = w.data();
    let gwd = gw.data_mut();
    for o in 0..out {
        let g = dy[o];
        if g == 0.0 {
            continue;
        }
        let row = &wd[o * inp..(o + 1) * inp];
        let grow = &mut gwd[o * inp..(o + 1) * inp];
        for i in 0..inp {
            grow[i] += g * x[i];
            dx[i] += g * row[i];
        }
    }
    for (b, g) in gb.data_mut().iter_mut().zip(dy) {
        *b += g;
    }
    dx
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
