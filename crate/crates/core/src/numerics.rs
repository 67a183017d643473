//! Dense float64 kernel: vectors, row-major matrices, softmax, normalization,
//! seeded Gaussian sampling, and finite-difference gradient checking.
//!
//! Everything here is deterministic: the same seed and substream label always
//! reproduce the same bits, which is what makes run artifacts byte-identical.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous 64-bit float vector.
pub type Vec64 = Vec<f64>;

/// Row-major dense matrix with explicit shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat64 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat64 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.rows);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert!(i < self.rows);
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat64 {
        Mat64::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A v` for a vector of length `cols`.
    pub fn matvec(&self, v: &[f64]) -> Vec64 {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v` for a vector of length `rows`.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec64 {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &c) in v.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += c * a;
            }
        }
        out
    }

    /// `self += c · u vᵀ`.
    pub fn add_outer(&mut self, c: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "add_outer row mismatch");
        assert_eq!(v.len(), self.cols, "add_outer col mismatch");
        for (i, &ui) in u.iter().enumerate() {
            let cu = c * ui;
            if cu == 0.0 {
                continue;
            }
            for (a, &b) in self.row_mut(i).iter_mut().zip(v) {
                *a += cu * b;
            }
        }
    }

    /// `self += c · other`, shapes must match.
    pub fn add_scaled(&mut self, c: f64, other: &Mat64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Mat64 {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat64 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Numerically stable softmax: subtracts the max logit before exponentiation.
pub fn softmax(logits: &[f64]) -> Result<Vec64> {
    if logits.is_empty() {
        return Err(Error::EmptyLogits);
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax input"));
    }
    Ok(softmax_unchecked(logits))
}

/// Softmax without input validation; callers guarantee non-empty finite logits.
pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out: Vec64 = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// `ln Σ exp(x_i)`, stabilized by max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Scale a vector to unit Euclidean norm. Errors on the zero vector.
pub fn l2_normalize(v: &[f64]) -> Result<Vec64> {
    let norm = l2_norm(v);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite("l2_normalize input"));
    }
    Ok(v.iter().map(|&x| x / norm).collect())
}

/// One-hot encoding of token `x` over a vocabulary of size `m`.
pub fn one_hot(x: usize, m: usize) -> Result<Vec64> {
    if x >= m {
        return Err(Error::TokenOutOfRange { token: x, vocab: m });
    }
    let mut v = vec![0.0; m];
    v[x] = 1.0;
    Ok(v)
}

/// Seeded counter-based generator with labeled substreams.
///
/// Built on ChaCha12, which is a counter-mode stream: the same seed always
/// produces the same bits, and `substream` selects an independent stream
/// for a component (dataset / init / shuffle / per-trial) without consuming
/// state from the parent.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha12Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream identified by a label.
    pub fn substream(&self, label: &str) -> Rng {
        self.substream_indexed(label, 0)
    }

    /// Independent stream identified by a label and a trial index.
    pub fn substream_indexed(&self, label: &str, index: u64) -> Rng {
        let mut inner = ChaCha12Rng::seed_from_u64(self.seed);
        inner.set_stream(fnv1a64(label.as_bytes()) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        Rng {
            seed: self.seed,
            inner,
        }
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.inner.gen_range(0..=i);
            xs.swap(i, j);
        }
    }

    /// Random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Matrix with i.i.d. `N(0, variance)` entries.
pub fn gauss_matrix(rng: &mut Rng, rows: usize, cols: usize, variance: f64) -> Result<Mat64> {
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::InvalidVariance(variance));
    }
    let sd = variance.sqrt();
    Ok(Mat64::from_fn(rows, cols, |_, _| sd * rng.normal()))
}

/// Central-difference gradient estimate of a scalar function of a matrix:
/// entry (i,j) is `(f(X + h·E_ij) − f(X − h·E_ij)) / (2h)`.
pub fn finite_diff_grad<F>(f: F, x: &Mat64, h: f64) -> Result<Mat64>
where
    F: Fn(&Mat64) -> f64,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidStep(h));
    }
    let mut grad = Mat64::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let fp = f(&probe);
            probe[(i, j)] = orig - h;
            let fm = f(&probe);
            probe[(i, j)] = orig;
            if !fp.is_finite() || !fm.is_finite() {
                return Err(Error::NonFinite("finite_diff_grad objective"));
            }
            grad[(i, j)] = (fp - fm) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// `‖a − b‖∞ / max(1, ‖b‖∞)`: relative disagreement of two matrices.
pub fn rel_err(a: &Mat64, b: &Mat64) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut diff = 0.0f64;
    let mut scale = 1.0f64;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        diff = diff.max((x - y).abs());
        scale = scale.max(y.abs());
    }
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::numerics::Rng;

    #[test]
    fn softmax_zero_logits_is_uniform() {
        let p = softmax(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, vec![0.25; 4]);
        for m in [3usize, 17, 800] {
            let p = softmax(&vec![0.0; m]).unwrap();
            for &x in &p {
                assert_eq!(x, 1.0 / m as f64);
            }
        }
    }

    #[test]
    fn softmax_ln3_example() {
        let p = softmax(&[3.0f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-15);
        assert!((p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_empty_and_nonfinite() {
        assert!(matches!(softmax(&[]), Err(Error::EmptyLogits)));
        assert!(matches!(
            softmax(&[1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn l2_normalize_examples() {
        let e3 = one_hot(2, 4).unwrap();
        assert_eq!(l2_normalize(&e3).unwrap(), e3);
        let v = l2_normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
        let w = l2_normalize(&[0.5, 0.5]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((w[0] - s).abs() < 1e-15 && (w[1] - s).abs() < 1e-15);
        assert!(matches!(l2_normalize(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(one_hot(2, 3).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(matches!(
            one_hot(5, 4),
            Err(Error::TokenOutOfRange { token: 5, vocab: 4 })
        ));
    }

    #[test]
    fn gauss_matrix_is_reproducible() {
        let a = gauss_matrix(&mut Rng::new(11).substream("x"), 2, 2, 1.0).unwrap();
        let b = gauss_matrix(&mut Rng::new(11).substream("x"), 2, 2, 1.0).unwrap();
        assert_eq!(a, b);
        let c = gauss_matrix(&mut Rng::new(11).substream("y"), 2, 2, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gauss_matrix_rejects_zero_variance() {
        assert!(matches!(
            gauss_matrix(&mut Rng::new(1), 2, 2, 0.0),
            Err(Error::InvalidVariance(_))
        ));
    }

    #[test]
    fn gauss_matrix_row_norm_monte_carlo() {
        // variance 1/d over d columns: E‖row‖² = 1
        let d = 64;
        let m = gauss_matrix(&mut Rng::new(5), 10_000, d, 1.0 / d as f64).unwrap();
        let mean: f64 = (0..m.rows()).map(|i| dot(m.row(i), m.row(i))).sum::<f64>() / 1e4;
        assert!((mean - 1.0).abs() < 0.05, "mean row sq norm {mean}");
    }

    #[test]
    fn finite_diff_of_entry_sum_is_ones() {
        let x = gauss_matrix(&mut Rng::new(3), 3, 4, 1.0).unwrap();
        let g = finite_diff_grad(|m| m.as_slice().iter().sum(), &x, 1e-5).unwrap();
        for &v in g.as_slice() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_diff_of_half_sq_norm_is_x() {
        let mut rng = Rng::new(4);
        let x = Mat64::from_fn(4, 4, |_, _| 20.0 * rng.uniform() - 10.0);
        let g = finite_diff_grad(|m| 0.5 * dot(m.as_slice(), m.as_slice()), &x, 1e-5).unwrap();
        assert!(rel_err(&g, &x) <= 1e-8, "rel err {}", rel_err(&g, &x));
    }

    #[test]
    fn finite_diff_rejects_bad_step_and_nonfinite() {
        let x = Mat64::zeros(2, 2);
        assert!(finite_diff_grad(|_| 0.0, &x, 0.0).is_err());
        assert!(finite_diff_grad(|_| f64::NAN, &x, 1e-5).is_err());
    }

    #[test]
    fn matvec_and_outer_agree_with_direct() {
        let a = Mat64::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        assert_eq!(a.matvec(&[1.0, 2.0]), vec![2.0, 8.0, 14.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0, 1.0]), vec![6.0, 9.0]);
        let mut b = Mat64::zeros(2, 2);
        b.add_outer(2.0, &[1.0, 0.0], &[3.0, 4.0]);
        assert_eq!(b[(0, 0)], 6.0);
        assert_eq!(b[(1, 1)], 0.0);
    }

    proptest! {
        #[test]
        fn softmax_is_probability_vector(v in proptest::collection::vec(-50.0f64..50.0, 1..20)) {
            let p = softmax(&v).unwrap();
            prop_assert!(p.iter().all(|&x| x > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn softmax_shift_invariance(
            v in proptest::collection::vec(-30.0f64..30.0, 1..12),
            c in -100.0f64..100.0,
        ) {
            let p = softmax(&v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|&x| x + c).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn l2_normalize_unit_norm_and_idempotent(
            v in proptest::collection::vec(-10.0f64..10.0, 1..12)
                .prop_filter("nonzero", |v| l2_norm(v) > 1e-6)
        ) {
            let u = l2_normalize(&v).unwrap();
            prop_assert!((l2_norm(&u) - 1.0).abs() < 1e-12);
            let w = l2_normalize(&u).unwrap();
            for (a, b) in u.iter().zip(&w) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
