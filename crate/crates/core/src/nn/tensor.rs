//! Dense n-dimensional value/gradient container.
//!
//! Data is stored flat in row-major order. Everything in this crate uses
//! rank-1 (`[features]`) or rank-2 (`[batch, features]`) tensors; the leading
//! axis is the batch axis when present.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
    grad: Option<Vec<S>>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::LengthMismatch {
                what: "tensor shape vs data",
                left: expect,
                right: data.len(),
            });
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![S::zero(); n],
            grad: None,
        }
    }

    /// Rank-1 tensor from a slice.
    pub fn vector(data: &[S]) -> Self {
        Tensor {
            shape: vec![data.len()],
            data: data.to_vec(),
            grad: None,
        }
    }

    /// Rank-2 tensor from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows when interpreted as a batch: the leading axis for
    /// rank >= 2, otherwise a single row.
    pub fn rows(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[0]
        } else {
            1
        }
    }

    /// Features per row (product of all non-leading axes for rank >= 2).
    pub fn row_len(&self) -> usize {
        if self.shape.len() >= 2 {
            self.data.len() / self.shape[0].max(1)
        } else {
            self.data.len()
        }
    }

    pub fn row(&self, i: usize) -> &[S] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        let w = self.row_len();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn grad(&self) -> Option<&[S]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated (zeroed) on first use.
    pub fn grad_mut(&mut self) -> &mut [S] {
        if self.grad.is_none() {
            self.grad = Some(vec![S::zero(); self.data.len()]);
        }
        self.grad.as_deref_mut().unwrap()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = S::zero());
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
