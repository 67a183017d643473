//! Gaussian token embeddings and numerical checks of the concentration
//! properties they rely on: near-orthonormality of `N(0, (1/d)I)` rows, the
//! χ² tail bound behind it, and the minimum embedding dimension formula.
//!
//! The checks here are statistical, not proofs: a frequency is compared
//! against its theoretical bound plus three binomial standard errors.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, gauss_matrix, Mat64, Rng};

/// A set of `m` token embeddings of dimension `d`, one per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    vectors: Mat64,
}

impl EmbeddingSet {
    /// Rows sampled i.i.d. from `N(0, (1/d) I)`.
    pub fn gaussian(m: usize, d: usize, rng: &mut Rng) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParam {
                name: "m",
                msg: format!("need at least 2 tokens, got {m}"),
            });
        }
        if d < 1 {
            return Err(Error::InvalidParam {
                name: "d",
                msg: "embedding dimension must be at least 1".into(),
            });
        }
        Ok(Self {
            vectors: gauss_matrix(rng, m, d, 1.0 / d as f64)?,
        })
    }

    /// One-hot embeddings (the identity matrix); exact fixtures for tests.
    pub fn one_hot(m: usize) -> Self {
        Self {
            vectors: Mat64::identity(m),
        }
    }

    pub fn from_matrix(vectors: Mat64) -> Result<Self> {
        if vectors.rows() < 1 || vectors.cols() < 1 {
            return Err(Error::InvalidParam {
                name: "vectors",
                msg: "embedding matrix must be non-empty".into(),
            });
        }
        if !vectors.is_finite() {
            return Err(Error::NonFinite("embedding matrix"));
        }
        Ok(Self { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    pub fn matrix(&self) -> &Mat64 {
        &self.vectors
    }
}

/// `m×m` matrix of pairwise inner products `⟨v_i, v_j⟩`, exactly symmetric.
pub fn gram_matrix(emb: &EmbeddingSet) -> Mat64 {
    let m = emb.len();
    let mut g = Mat64::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(emb.vector(i), emb.vector(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Max deviation of the Gram matrix from the identity, and whether it is
/// within `eps`.
pub fn check_almost_orthonormal(emb: &EmbeddingSet, eps: f64) -> (bool, f64) {
    let g = gram_matrix(emb);
    let m = emb.len();
    let mut max_dev = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((g[(i, j)] - target).abs());
        }
    }
    (max_dev <= eps, max_dev)
}

/// Smallest integer dimension `d ≥ 16·ln(2n²/δ)/ε²` (natural logarithm),
/// which guarantees `n` Gaussian embeddings are `ε`-orthonormal with
/// probability at least `1 − δ`.
pub fn min_dim_for_eps(n: usize, eps: f64, delta: f64) -> usize {
    assert!(n >= 2 && eps > 0.0 && eps <= 1.0 && delta > 0.0 && delta < 1.0);
    let bound = 16.0 * (2.0 * (n * n) as f64 / delta).ln() / (eps * eps);
    bound.ceil() as usize
}

/// Empirical check of the χ² tail bound: for `g_1..g_t` i.i.d. standard
/// normal, both
/// `P[Σg² ≥ t + 2√(tx) + 2x]` and `P[Σg² ≤ t − 2√(tx)]` are at most `e^{−x}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiSqTailReport {
    pub t: usize,
    pub x: f64,
    pub trials: usize,
    /// Empirical frequency of the upper-tail event.
    pub upper_emp: f64,
    /// Empirical frequency of the lower-tail event.
    pub lower_emp: f64,
    /// Theoretical bound `e^{−x}`.
    pub bound: f64,
    /// Binomial standard error of a frequency at the bound probability.
    pub std_err: f64,
    /// Both frequencies within `bound + 3·std_err`.
    pub ok: bool,
}

pub fn chi_sq_tail_check(t: usize, x: f64, trials: usize, rng: &mut Rng) -> ChiSqTailReport {
    assert!(t >= 1 && x >= 0.0 && trials >= 1);
    let upper_thresh = t as f64 + 2.0 * (t as f64 * x).sqrt() + 2.0 * x;
    let lower_thresh = t as f64 - 2.0 * (t as f64 * x).sqrt();
    let mut upper = 0usize;
    let mut lower = 0usize;
    for _ in 0..trials {
        let mut s = 0.0;
        for _ in 0..t {
            let g = rng.normal();
            s += g * g;
        }
        if s >= upper_thresh {
            upper += 1;
        }
        if s <= lower_thresh {
            lower += 1;
        }
    }
    let bound = (-x).exp();
    let std_err = (bound * (1.0 - bound) / trials as f64).sqrt();
    let upper_emp = upper as f64 / trials as f64;
    let lower_emp = lower as f64 / trials as f64;
    let limit = bound + 3.0 * std_err;
    ChiSqTailReport {
        t,
        x,
        trials,
        upper_emp,
        lower_emp,
        bound,
        std_err,
        ok: upper_emp <= limit && lower_emp <= limit,
    }
}

/// `m×m` cosine-similarity matrix. Errors on a zero-norm row.
pub fn cosine_report(emb: &EmbeddingSet) -> Result<Mat64> {
    let m = emb.len();
    let norms: Vec<f64> = (0..m)
        .map(|i| dot(emb.vector(i), emb.vector(i)).sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroRow(i));
    }
    let mut c = Mat64::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(emb.vector(i), emb.vector(j)) / (norms[i] * norms[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Dense CSV export with a header row of token ids.
pub fn write_cosine_csv<W: Write>(cos: &Mat64, mut w: W) -> Result<()> {
    let m = cos.rows();
    let header: Vec<String> = (0..m).map(|j| j.to_string()).collect();
    writeln!(w, "token,{}", header.join(","))?;
    for i in 0..m {
        let row: Vec<String> = cos.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", i, row.join(","))?;
    }
    Ok(())
}
