use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::Result;

/// Affine map `x · W + b` with `W: in × out` and `b: 1 × out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Matrix,
}

/// Parameter gradients of a [`Linear`] layer.
#[derive(Clone, Debug)]
pub struct LinearGrad {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Self {
            weight: Matrix::glorot(fan_in, fan_out, rng),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul(&self.weight)?;
        y.add_row_bias(&self.bias)?;
        Ok(y)
    }

    /// Returns `(dL/dx, dL/dθ)` given the layer input and `dL/dy`.
    pub fn backward(&self, x: &Matrix, grad_out: &Matrix) -> Result<(Matrix, LinearGrad)> {
        let grad_w = x.t_matmul(grad_out)?;
        let grad_b = grad_out.column_sums();
        let grad_x = grad_out.matmul_t(&self.weight)?;
        Ok((
            grad_x,
            LinearGrad {
                weight: grad_w,
                bias: grad_b,
            },
        ))
    }
}
