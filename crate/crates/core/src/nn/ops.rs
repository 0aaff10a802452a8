//! Element-wise activation and dropout kernels with their backward passes.

use rand::Rng;

use super::Matrix;
use crate::error::{shape, Error, Result};

pub fn relu(x: &Matrix) -> Matrix {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    y
}

/// Passes `grad` through only where the forward input was strictly positive.
pub fn relu_backward(input: &Matrix, grad: &Matrix) -> Result<Matrix> {
    if input.shape() != grad.shape() {
        return Err(shape(
            "relu_backward",
            format!("{:?} vs {:?}", input.shape(), grad.shape()),
        ));
    }
    let mut out = grad.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(out)
}

/// Inverted-dropout mask: each entry is `0` or `1 / (1 - rate)`.
#[derive(Clone, Debug)]
pub struct DropoutMask(Vec<f64>);

impl DropoutMask {
    pub fn identity(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn dropout<R: Rng + ?Sized>(
    x: &Matrix,
    rate: f64,
    rng: &mut R,
) -> Result<(Matrix, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Contract(format!(
            "dropout rate {rate} outside [0,1)"
        )));
    }
    if rate == 0.0 {
        return Ok((x.clone(), DropoutMask::identity(x.data().len())));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.data().len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((y, DropoutMask(mask)))
}

pub fn dropout_backward(grad: &Matrix, mask: &DropoutMask) -> Result<Matrix> {
    if grad.data().len() != mask.0.len() {
        return Err(shape(
            "dropout_backward",
            format!(
                "{} grads vs {} mask entries",
                grad.data().len(),
                mask.0.len()
            ),
        ));
    }
    let mut out = grad.clone();
    for (g, m) in out.data_mut().iter_mut().zip(&mask.0) {
        *g *= m;
    }
    Ok(out)
}
