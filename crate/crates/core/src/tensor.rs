//! Dense rank-1/2 tensor of 64-bit reals with a handful of numerically
//! stable primitives.
//!
//! Everything the network computes flows through this type: embeddings,
//! hidden states, attention scores, parameter matrices. Storage is
//! row-major. Tensors are values; public operations return new tensors and
//! never mutate their inputs, so shared references are safe to read from
//! any thread. 64-bit floats are used throughout so gradients can be
//! checked against finite differences at tight tolerances.

use crate::error::{Error, Result};

/// Dense tensor of rank 1 or 2, row-major f64 storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Zero-filled tensor. Panics on rank 0, rank > 2, or a zero dimension.
    pub fn zeros(shape: &[usize]) -> Self {
        check_shape(shape);
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    /// Builds a tensor from raw data; the data length must equal the
    /// product of the shape.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        check_shape(shape);
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {:?} (expected {})",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Rank-1 tensor from a vector.
    pub fn vector(data: Vec<f64>) -> Self {
        assert!(!data.is_empty(), "vector must be non-empty");
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    /// Rank-2 tensor from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_vec(&[rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Number of rows; a rank-1 tensor has one row.
    pub fn rows(&self) -> usize {
        if self.rank() == 2 {
            self.shape[0]
        } else {
            1
        }
    }

    /// Number of columns; for rank-1 this is the length.
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Element of a rank-2 tensor.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert_eq!(self.rank(), 2);
        let c = self.cols();
        self.data[i * c + j] = value;
    }

    /// Row `i` of a rank-2 tensor as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert_eq!(self.rank(), 2);
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert_eq!(self.rank(), 2);
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    /// True when every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Matrix product `self · other` for [m×k] · [k×n] -> [m×n].
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.cols() != other.rows() {
            return Err(Error::Shape(format!(
                "matmul requires [m x k] . [k x n], got {:?} . {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k, n) = (self.rows(), self.cols(), other.cols());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                let brow = &other.data[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
        Tensor::from_vec(&[m, n], out)
    }

    /// Matrix-vector product [m×n] · [n] -> [m].
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.rank() != 2 || self.cols() != v.len() {
            return Err(Error::Shape(format!(
                "matvec requires [m x n] . [n], got {:?} . [{}]",
                self.shape,
                v.len()
            )));
        }
        let (m, n) = (self.rows(), self.cols());
        let mut out = vec![0.0; m];
        for i in 0..m {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Transposed matrix-vector product [m×n]ᵀ · [m] -> [n]; used by the
    /// hand-derived backward passes without materializing the transpose.
    pub fn matvec_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.rank() != 2 || self.rows() != v.len() {
            return Err(Error::Shape(format!(
                "matvec_t requires [m x n]^T . [m], got {:?} and [{}]",
                self.shape,
                v.len()
            )));
        }
        let (m, n) = (self.rows(), self.cols());
        let mut out = vec![0.0; n];
        for i in 0..m {
            let row = &self.data[i * n..(i + 1) * n];
            let vi = v[i];
            for j in 0..n {
                out[j] += row[j] * vi;
            }
        }
        Ok(out)
    }

    /// Accumulates the outer product `u ⊗ v` into a rank-2 tensor in place.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(self.rank(), 2);
        debug_assert_eq!(self.rows(), u.len());
        debug_assert_eq!(self.cols(), v.len());
        let n = self.cols();
        for (i, &ui) in u.iter().enumerate() {
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += ui * vj;
            }
        }
    }

    /// Elementwise in-place `self += scale * other`. Shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        assert_eq!(self.shape, other.shape, "add_scaled shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// Sum of squared entries.
    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

fn check_shape(shape: &[usize]) {
    assert!(
        !shape.is_empty() && shape.len() <= 2,
        "tensor rank must be 1 or 2, got shape {shape:?}"
    );
    assert!(
        shape.iter().all(|&d| d > 0),
        "tensor dimensions must be positive, got shape {shape:?}"
    );
}

/// Numerically stable softmax over a slice.
///
/// Subtracts the maximum before exponentiating so extreme inputs cannot
/// overflow. `-inf` entries are the masking mechanism: they map to exactly
/// zero weight. NaN and `+inf` are rejected, as is an input whose entries
/// are all `-inf` (everything masked).
pub fn softmax_slice(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Invalid("softmax of an empty input".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() || x == f64::INFINITY {
            return Err(Error::Numeric(format!("softmax input contains {x}")));
        }
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::Invalid(
            "softmax input has no unmasked (finite) entry".into(),
        ));
    }
    let mut out: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    Ok(out)
}

/// Softmax of a rank-1 tensor. See [`softmax_slice`].
pub fn softmax(v: &Tensor) -> Result<Tensor> {
    if v.rank() != 1 {
        return Err(Error::Shape(format!(
            "softmax expects a rank-1 tensor, got shape {:?}",
            v.shape()
        )));
    }
    Ok(Tensor::vector(softmax_slice(v.data())?))
}

/// Logistic sigmoid, saturation-safe at both tails.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn matmul_identity() {
        let eye = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(eye.matmul(&m).unwrap(), m);
    }

    #[test]
    fn matmul_hand_product() {
        let a = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Tensor::matrix(2, 1, vec![3.0, 4.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[1, 1]);
        assert_eq!(c.data(), &[11.0]);
    }

    /// Independent oracle: naive triple loop in (i, j, p) order, distinct
    /// from the cache-friendly (i, p, j) order used by `matmul`.
    fn matmul_oracle(a: &Tensor, b: &Tensor) -> Tensor {
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for p in 0..k {
                    acc += a.at(i, p) * b.at(p, j);
                }
                out[i * n + j] = acc;
            }
        }
        Tensor::from_vec(&[m, n], out).unwrap()
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = Rng::new(100);
        let a = Tensor::matrix(4, 5, rng.uniform_vec(20, -2.0, 2.0)).unwrap();
        let b = Tensor::matrix(5, 3, rng.uniform_vec(15, -2.0, 2.0)).unwrap();
        let got = a.matmul(&b).unwrap();
        let want = matmul_oracle(&a, &b);
        for (g, w) in got.data().iter().zip(want.data()) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::matrix(2, 3, vec![0.0; 6]).unwrap();
        let b = Tensor::matrix(2, 2, vec![0.0; 4]).unwrap();
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[2, 2]"), "{err}");
    }

    #[test]
    fn matmul_associative_on_random_triples() {
        let mut rng = Rng::new(7);
        for _ in 0..20 {
            let a = Tensor::matrix(3, 4, rng.uniform_vec(12, -1.0, 1.0)).unwrap();
            let b = Tensor::matrix(4, 2, rng.uniform_vec(8, -1.0, 1.0)).unwrap();
            let c = Tensor::matrix(2, 5, rng.uniform_vec(10, -1.0, 1.0)).unwrap();
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (l, r) in left.data().iter().zip(right.data()) {
                let scale = l.abs().max(r.abs()).max(1.0);
                assert!((l - r).abs() / scale < 1e-9, "{l} vs {r}");
            }
        }
    }

    #[test]
    fn softmax_symmetry() {
        let p = softmax(&Tensor::vector(vec![0.0, 0.0, 0.0])).unwrap();
        for &x in p.data() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_extreme_inputs_are_stable() {
        let p = softmax(&Tensor::vector(vec![1000.0, -1000.0])).unwrap();
        assert!((p.data()[0] - 1.0).abs() < 1e-12);
        assert!(p.data()[1].abs() < 1e-12);
        assert!(p.all_finite());
    }

    // Expected values computed by exp-normalize at 50-digit precision.
    #[test]
    fn softmax_matches_high_precision_evaluation() {
        let p = softmax(&Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        let want = [
            0.09003057317038046,
            0.24472847105479765,
            0.6652409557748219,
        ];
        for (g, w) in p.data().iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn softmax_empty_is_an_error() {
        assert!(softmax_slice(&[]).is_err());
    }

    #[test]
    fn softmax_rejects_nan_and_positive_infinity() {
        assert!(softmax_slice(&[1.0, f64::NAN]).is_err());
        assert!(softmax_slice(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn softmax_neg_infinity_masks_to_exact_zero() {
        let p = softmax_slice(&[1.0, f64::NEG_INFINITY, 2.0]).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_all_masked_is_an_error() {
        assert!(softmax_slice(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).is_err());
    }

    #[test]
    fn sigmoid_tails_do_not_overflow() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn from_vec_length_mismatch() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matvec_and_transpose_agree_with_matmul() {
        let mut rng = Rng::new(5);
        let m = Tensor::matrix(3, 4, rng.uniform_vec(12, -1.0, 1.0)).unwrap();
        let v = rng.uniform_vec(4, -1.0, 1.0);
        let got = m.matvec(&v).unwrap();
        let vm = Tensor::matrix(4, 1, v.clone()).unwrap();
        let want = m.matmul(&vm).unwrap();
        for (g, w) in got.iter().zip(want.data()) {
            assert!((g - w).abs() < 1e-12);
        }

        let u = rng.uniform_vec(3, -1.0, 1.0);
        let got_t = m.matvec_t(&u).unwrap();
        // oracle: explicit transpose
        let mut tdata = vec![0.0; 12];
        for i in 0..3 {
            for j in 0..4 {
                tdata[j * 3 + i] = m.at(i, j);
            }
        }
        let mt = Tensor::matrix(4, 3, tdata).unwrap();
        let want_t = mt.matvec(&u).unwrap();
        for (g, w) in got_t.iter().zip(&want_t) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // Shift invariance: softmax(v + c) == softmax(v) elementwise.
        #[test]
        fn softmax_shift_invariance(
            v in proptest::collection::vec(-50.0f64..50.0, 1..12),
            c in -100.0f64..100.0,
        ) {
            let base = softmax_slice(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let moved = softmax_slice(&shifted).unwrap();
            for (a, b) in base.iter().zip(&moved) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        // Sums to one for all finite inputs up to |v_i| <= 1e6.
        #[test]
        fn softmax_sums_to_one(
            v in proptest::collection::vec(-1.0e6f64..1.0e6, 1..12),
        ) {
            let p = softmax_slice(&v).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}
