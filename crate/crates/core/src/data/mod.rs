//! Dataset loading, feature standardization, splits, and a synthetic
//! biased-graph generator.

mod loader;
mod split;
mod synthetic;

pub use loader::{load_dataset, read_index_file, Dataset, DatasetSpec, DatasetSplit, LoadStats};
pub use split::{split_nodes, SplitPolicy, StratifyBy};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::nn::Matrix;

/// Z-scores each column with the population standard deviation. Constant
/// columns map to zero.
pub fn standardize_features(x: &Matrix) -> Matrix {
    let (n, d) = x.shape();
    let mut out = x.clone();
    if n == 0 {
        return out;
    }
    for c in 0..d {
        let mean = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for r in 0..n {
            let v = if std > 1e-12 {
                (x.get(r, c) - mean) / std
            } else {
                0.0
            };
            out.set(r, c, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_examples() {
        let x = Matrix::new(3, 2, vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0]).unwrap();
        let z = standardize_features(&x);
        let k = (1.5f64).sqrt(); // (x - 2) / sqrt(2/3)
        assert!((z.get(0, 0) + k).abs() < 1e-12);
        assert!(z.get(1, 0).abs() < 1e-12);
        assert!((z.get(2, 0) - k).abs() < 1e-12);
        assert!((z.get(0, 0) + 1.2247).abs() < 1e-4);
        assert_eq!([z.get(0, 1), z.get(1, 1), z.get(2, 1)], [0.0; 3]);
        let again = standardize_features(&z);
        for (a, b) in again.data().iter().zip(z.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
