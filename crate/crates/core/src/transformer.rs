//! Reparameterized one-layer transformer: attention weights from `Z`,
//! next-token probabilities from `Y`, exact per-sequence gradients, batch-1
//! SGD, the fixed-context `W` trainer for four-token sequences, and the
//! context-overlap spectrum that controls how far `Y`-updates drift from
//! `W`-updates.
//!
//! For an input `(x_1 .. x_T)` the query token `x_T` attends to the earlier
//! tokens (never to itself) with weights `b = softmax(Z[x_T, x_t])`, the
//! aggregated context is `ctx = LN(Xᵀ b)`, and the next-token distribution is
//! `softmax(Yᵀ ctx)`. With a single contextual token the context is exactly
//! one-hot, so only one row of `Y` is read and written per step; a row whose
//! token never starts a train sequence keeps its initial zeros bit-for-bit.
//! That mechanical asymmetry is what the oracles in [`crate::oracles`]
//! quantify.

use serde::{Deserialize, Serialize};

use crate::datasets::{FourTokenDataset, ReversalDataset, Sequence, Token};
use crate::error::{Error, Result};
use crate::numerics::{dot, l2_norm, log_sum_exp, softmax_unchecked, Mat64, Rng, Vec64};

/// Effective weights of the one-layer transformer after reparameterization:
/// `Y` drives next-token logits, `Z` drives attention scores. Both are
/// zero-initialized, matching an inner-product initialization of
/// near-orthonormal high-dimensional factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReparamModel {
    pub y: Mat64,
    pub z: Mat64,
}

impl ReparamModel {
    pub fn zeros(m: usize) -> Self {
        Self {
            y: Mat64::zeros(m, m),
            z: Mat64::zeros(m, m),
        }
    }

    pub fn vocab(&self) -> usize {
        self.y.rows()
    }
}

/// Attention weights of the query token over the contextual tokens:
/// `b_t = softmax_t(Z[x_T, x_t])`, length `T−1`.
pub fn attention_weights(z: &Mat64, seq: &Sequence) -> Result<Vec64> {
    if seq.tokens().len() < 3 {
        return Err(Error::SequenceTooShort(seq.tokens().len()));
    }
    let query = seq.query();
    let logits: Vec64 = seq.context().iter().map(|&t| z[(query, t)]).collect();
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("attention logits"));
    }
    Ok(softmax_unchecked(&logits))
}

/// `LN(Xᵀ b)`: the normalized attention-weighted context aggregate as a
/// dense vocabulary-length vector.
pub fn context_vector(m: usize, seq: &Sequence, b: &[f64]) -> Result<Vec64> {
    let agg = ContextAgg::from_weights(seq, b)?;
    let mut v = vec![0.0; m];
    for &(tok, unit) in &agg.unit_support {
        if tok >= m {
            return Err(Error::TokenOutOfRange {
                token: tok,
                vocab: m,
            });
        }
        v[tok] = unit;
    }
    Ok(v)
}

/// Sparse form of the context aggregate: raw coefficients per distinct
/// context token, their normalized values, and the aggregate norm.
#[derive(Clone, Debug)]
struct ContextAgg {
    /// `(token, Σ b_t over positions holding that token)`
    support: Vec<(Token, f64)>,
    /// `(token, coefficient / ‖aggregate‖)`
    unit_support: Vec<(Token, f64)>,
    norm: f64,
}

impl ContextAgg {
    fn from_weights(seq: &Sequence, b: &[f64]) -> Result<Self> {
        let ctx = seq.context();
        assert_eq!(ctx.len(), b.len(), "attention weight length mismatch");
        let mut support: Vec<(Token, f64)> = Vec::with_capacity(ctx.len());
        for (&tok, &w) in ctx.iter().zip(b) {
            match support.iter_mut().find(|(t, _)| *t == tok) {
                Some((_, acc)) => *acc += w,
                None => support.push((tok, w)),
            }
        }
        let coeffs: Vec<f64> = support.iter().map(|&(_, c)| c).collect();
        let norm = l2_norm(&coeffs);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let unit_support = support.iter().map(|&(t, c)| (t, c / norm)).collect();
        Ok(Self {
            support,
            unit_support,
            norm,
        })
    }

    fn from_model(z: &Mat64, seq: &Sequence) -> Result<Self> {
        let b = attention_weights(z, seq)?;
        Self::from_weights(seq, &b)
    }
}

/// Logits `Yᵀ ctx` computed from the sparse context support.
fn logits_from_support(y: &Mat64, unit_support: &[(Token, f64)]) -> Vec64 {
    let m = y.cols();
    let mut logits = vec![0.0; m];
    for &(tok, c) in unit_support {
        for (l, &w) in logits.iter_mut().zip(y.row(tok)) {
            *l += c * w;
        }
    }
    logits
}

/// Next-token distribution `softmax(Yᵀ LN(Xᵀ b_T))` over the vocabulary.
pub fn next_token_prob(model: &ReparamModel, seq: &Sequence) -> Result<Vec64> {
    let agg = ContextAgg::from_model(&model.z, seq)?;
    Ok(softmax_unchecked(&logits_from_support(
        &model.y,
        &agg.unit_support,
    )))
}

/// Per-sequence log-likelihood `ln p(x_{T+1} | x_1..x_T)`; the objective the
/// gradients below ascend.
pub fn seq_log_prob(model: &ReparamModel, seq: &Sequence) -> Result<f64> {
    let agg = ContextAgg::from_model(&model.z, seq)?;
    let logits = logits_from_support(&model.y, &agg.unit_support);
    Ok(logits[seq.label()] - log_sum_exp(&logits))
}

/// Exact ascent directions for one sequence, scaled by the learning rates:
///
/// ```text
/// dY = η_Y · ctx (e_label − α)ᵀ
/// dZ = η_Z · e_query (e_label − α)ᵀ Yᵀ P⊥_v / ‖v‖ · Xᵀ diag(b) X
/// ```
///
/// with `v = Xᵀb`, `ctx = v/‖v‖`, `α = softmax(Yᵀctx)`, and `P⊥_v` the
/// projector onto the orthogonal complement of `v`. With a single contextual
/// token the projector annihilates the aggregate and `dZ` is exactly zero.
pub fn grad_yz(
    model: &ReparamModel,
    seq: &Sequence,
    eta_y: f64,
    eta_z: f64,
) -> Result<(Mat64, Mat64)> {
    let m = model.vocab();
    let agg = ContextAgg::from_model(&model.z, seq)?;
    let logits = logits_from_support(&model.y, &agg.unit_support);
    let alpha = softmax_unchecked(&logits);
    let label = seq.label();

    let mut dy = Mat64::zeros(m, m);
    for &(tok, unit) in &agg.unit_support {
        let row = dy.row_mut(tok);
        for (j, (r, &a)) in row.iter_mut().zip(&alpha).enumerate() {
            let target = if j == label { 1.0 } else { 0.0 };
            *r = eta_y * (unit * (target - a));
        }
    }

    let mut dz = Mat64::zeros(m, m);
    let deltas = z_row_deltas(&model.y, &agg, &alpha, label);
    let row = dz.row_mut(seq.query());
    for (tok, d) in deltas {
        row[tok] = eta_z * d;
    }
    Ok((dy, dz))
}

/// Per-token increments of the query row of `Z` (unscaled by the rate):
/// `w = Σ_t b_t · gp[x_t] · e_{x_t}` with `gp = P⊥_v Y(e_label − α) / ‖v‖`.
/// Positions holding the same token contribute `(Σ b_t) · gp[token]`, which
/// is the aggregated support coefficient.
fn z_row_deltas(y: &Mat64, agg: &ContextAgg, alpha: &[f64], label: Token) -> Vec<(Token, f64)> {
    // g_r = Y[r,·]·(e_label − α), needed only at support tokens
    let g: Vec<f64> = agg
        .support
        .iter()
        .map(|&(tok, _)| {
            y.row(tok)
                .iter()
                .zip(alpha)
                .enumerate()
                .map(|(j, (&w, &a))| {
                    let target = if j == label { 1.0 } else { 0.0 };
                    w * (target - a)
                })
                .sum::<f64>()
        })
        .collect();
    let norm_sq = agg.norm * agg.norm;
    let v_dot_g: f64 = agg
        .support
        .iter()
        .zip(&g)
        .map(|(&(_, c), &gr)| c * gr)
        .sum();
    agg.support
        .iter()
        .zip(&g)
        .map(|(&(tok, c), &gr)| {
            let gp = (gr - c * (v_dot_g / norm_sq)) / agg.norm;
            (tok, c * gp)
        })
        .collect()
}

/// Cyclic visits the train list in canonical order; shuffled redraws the
/// order each epoch from the trainer's RNG substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainOrder {
    Cyclic,
    Shuffled,
}

/// Batch-1 SGD schedule and recording configuration.
#[derive(Clone, Debug)]
pub struct SgdConfig {
    pub eta_y: f64,
    pub eta_z: f64,
    pub steps: usize,
    pub order: TrainOrder,
    /// Record label probabilities every this many steps (step 0 and the
    /// final step are always recorded).
    pub record_every: usize,
    /// Rows of `Y` to snapshot at every checkpoint.
    pub snapshot_rows: Vec<usize>,
    /// Recompute attention from the live `Z` at every step instead of once
    /// per epoch. Irrelevant when `eta_z == 0`.
    pub live_attention: bool,
}

impl SgdConfig {
    pub fn new(eta_y: f64, eta_z: f64, steps: usize, record_every: usize) -> Self {
        Self {
            eta_y,
            eta_z,
            steps,
            order: TrainOrder::Cyclic,
            record_every: record_every.max(1),
            snapshot_rows: Vec::new(),
            live_attention: false,
        }
    }
}

/// A snapshot of one weight row at a recorded step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowSnapshot {
    pub step: usize,
    pub row: usize,
    pub values: Vec64,
}

/// Time-indexed record of a training run: per-sequence label probabilities
/// for the train and test splits at each checkpoint, optional row snapshots,
/// and per-row update counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub steps: Vec<usize>,
    pub train_probs: Vec<Vec<f64>>,
    pub test_probs: Vec<Vec<f64>>,
    pub snapshots: Vec<RowSnapshot>,
    pub update_counts: Vec<usize>,
    pub eta_y: f64,
    pub eta_z: f64,
}

impl TrainRecord {
    fn new(eta_y: f64, eta_z: f64, rows: usize) -> Self {
        Self {
            steps: Vec::new(),
            train_probs: Vec::new(),
            test_probs: Vec::new(),
            snapshots: Vec::new(),
            update_counts: vec![0; rows],
            eta_y,
            eta_z,
        }
    }

    pub fn checkpoints(&self) -> usize {
        self.steps.len()
    }

    pub fn mean_train_nll(&self, checkpoint: usize) -> f64 {
        mean_nll(&self.train_probs[checkpoint])
    }

    pub fn mean_test_nll(&self, checkpoint: usize) -> f64 {
        mean_nll(&self.test_probs[checkpoint])
    }

    /// Wide CSV: step, mean train NLL, mean test NLL, min train prob,
    /// max test prob.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "step,mean_train_nll,mean_test_nll,min_train_prob,max_test_prob"
        )?;
        for i in 0..self.steps.len() {
            let min_train = self.train_probs[i]
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            let max_test = self.test_probs[i]
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            writeln!(
                w,
                "{},{},{},{},{}",
                self.steps[i],
                self.mean_train_nll(i),
                self.mean_test_nll(i),
                min_train,
                max_test
            )?;
        }
        Ok(())
    }
}

pub fn mean_nll(probs: &[f64]) -> f64 {
    if probs.is_empty() {
        return f64::NAN;
    }
    probs.iter().map(|&p| -p.ln()).sum::<f64>() / probs.len() as f64
}

/// One ascent step of a logit row toward a label:
/// `row += eta · (e_label − softmax(row))`.
///
/// Single shared update path for `Y` rows driven by a one-hot context and
/// for `W` rows in the four-token trainer, so their trajectories are
/// bit-comparable on matched schedules.
fn row_ascent_step(row: &mut [f64], label: Token, eta: f64) {
    let alpha = softmax_unchecked(row);
    for (j, (r, &a)) in row.iter_mut().zip(&alpha).enumerate() {
        let target = if j == label { 1.0 } else { 0.0 };
        *r += eta * (target - a);
    }
}

/// Train the reparameterized model with batch-1 SGD over the train list,
/// recording label probabilities for both splits.
///
/// Works for any mix of sequence lengths. For three-token data the context
/// is one-hot: only the first-token row of `Y` is touched, the `Z` gradient
/// vanishes identically, and rows of `Y` whose token never starts a train
/// sequence remain exactly zero.
pub fn sgd_train(
    model: &mut ReparamModel,
    train: &[Sequence],
    test: &[Sequence],
    cfg: &SgdConfig,
    rng: &mut Rng,
) -> Result<TrainRecord> {
    if train.is_empty() {
        return Err(Error::InvalidParam {
            name: "train",
            msg: "empty training set".into(),
        });
    }
    if !(cfg.eta_y.is_finite() && cfg.eta_z.is_finite()) || cfg.eta_y < 0.0 || cfg.eta_z < 0.0 {
        return Err(Error::InvalidParam {
            name: "eta",
            msg: format!(
                "learning rates must be finite and non-negative, got ({}, {})",
                cfg.eta_y, cfg.eta_z
            ),
        });
    }
    let m = model.vocab();
    let n = train.len();
    let mut rec = TrainRecord::new(cfg.eta_y, cfg.eta_z, m);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cached: Vec<ContextAgg> = train
        .iter()
        .map(|s| ContextAgg::from_model(&model.z, s))
        .collect::<Result<_>>()?;

    record_checkpoint(&mut rec, 0, model, train, test, &cfg.snapshot_rows)?;
    for step in 1..=cfg.steps {
        let pos = (step - 1) % n;
        if pos == 0 {
            if cfg.order == TrainOrder::Shuffled {
                rng.shuffle(&mut order);
            }
            if !cfg.live_attention && cfg.eta_z != 0.0 && step > 1 {
                for (c, s) in cached.iter_mut().zip(train) {
                    *c = ContextAgg::from_model(&model.z, s)?;
                }
            }
        }
        let idx = order[pos];
        if cfg.live_attention {
            let agg = ContextAgg::from_model(&model.z, &train[idx])?;
            apply_sgd_step(model, &train[idx], &agg, cfg, &mut rec.update_counts)?;
        } else {
            apply_sgd_step(
                model,
                &train[idx],
                &cached[idx],
                cfg,
                &mut rec.update_counts,
            )?;
        }
        if step % cfg.record_every == 0 || step == cfg.steps {
            record_checkpoint(&mut rec, step, model, train, test, &cfg.snapshot_rows)?;
        }
    }
    Ok(rec)
}

fn apply_sgd_step(
    model: &mut ReparamModel,
    seq: &Sequence,
    agg: &ContextAgg,
    cfg: &SgdConfig,
    counts: &mut [usize],
) -> Result<()> {
    let label = seq.label();
    if agg.unit_support.len() == 1 && agg.unit_support[0].1 == 1.0 {
        // one-hot context: the update reads and writes a single row, and the
        // Z gradient is exactly zero
        let tok = agg.unit_support[0].0;
        let row = model.y.row_mut(tok);
        row_ascent_step(row, label, cfg.eta_y);
        counts[tok] += 1;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Y row update"));
        }
        return Ok(());
    }

    let logits = logits_from_support(&model.y, &agg.unit_support);
    let alpha = softmax_unchecked(&logits);
    let z_deltas = if cfg.eta_z != 0.0 {
        Some(z_row_deltas(&model.y, agg, &alpha, label))
    } else {
        None
    };
    for &(tok, unit) in &agg.unit_support {
        let row = model.y.row_mut(tok);
        for (j, (r, &a)) in row.iter_mut().zip(&alpha).enumerate() {
            let target = if j == label { 1.0 } else { 0.0 };
            *r += cfg.eta_y * (unit * (target - a));
        }
        counts[tok] += 1;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Y row update"));
        }
    }
    if let Some(deltas) = z_deltas {
        let row = model.z.row_mut(seq.query());
        for (tok, d) in deltas {
            row[tok] += cfg.eta_z * d;
            if !row[tok].is_finite() {
                return Err(Error::NonFinite("Z row update"));
            }
        }
    }
    Ok(())
}

fn record_checkpoint(
    rec: &mut TrainRecord,
    step: usize,
    model: &ReparamModel,
    train: &[Sequence],
    test: &[Sequence],
    snapshot_rows: &[usize],
) -> Result<()> {
    let label_prob = |s: &Sequence| -> Result<f64> {
        let p = next_token_prob(model, s)?;
        Ok(p[s.label()])
    };
    rec.steps.push(step);
    rec.train_probs
        .push(train.iter().map(label_prob).collect::<Result<_>>()?);
    rec.test_probs
        .push(test.iter().map(label_prob).collect::<Result<_>>()?);
    for &row in snapshot_rows {
        rec.snapshots.push(RowSnapshot {
            step,
            row,
            values: model.y.row(row).to_vec(),
        });
    }
    Ok(())
}

/// Four-token model with the attention context frozen: `W = Fᵀ Y`, one row
/// per entity token, where column `f_n` of `F` is the normalized context
/// vector of the unique sequence labeled by entity `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WModel {
    pub w: Mat64,
    pub f: Mat64,
    pub entities: Vec<Token>,
    row_of_token: Vec<Option<usize>>,
}

impl WModel {
    /// `F` columns computed from a fixed attention matrix `Z`.
    pub fn from_dataset_with_z(ds: &FourTokenDataset, z: &Mat64) -> Result<Self> {
        Self::build(ds, |seq| {
            let b = attention_weights(z, seq)?;
            context_vector(ds.m, seq, &b)
        })
    }

    /// Idealized post-convergence attention: every context vector is
    /// `√(1−c²)·e_partner + c·e_R1`, the symmetric-overlap construction.
    pub fn from_dataset_with_overlap(ds: &FourTokenDataset, c: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::InvalidParam {
                name: "c",
                msg: format!("overlap must lie in [0, 1), got {c}"),
            });
        }
        let major = (1.0 - c * c).sqrt();
        Self::build(ds, |seq| {
            let mut v = vec![0.0; ds.m];
            v[seq.first()] = major;
            v[ds.r1] += c;
            Ok(v)
        })
    }

    fn build(
        ds: &FourTokenDataset,
        mut ctx_of: impl FnMut(&Sequence) -> Result<Vec64>,
    ) -> Result<Self> {
        let entities = ds.entities();
        let k = entities.len();
        let mut f = Mat64::zeros(ds.m, k);
        for (col, &label) in entities.iter().enumerate() {
            let seq = ds
                .train
                .iter()
                .chain(&ds.test)
                .find(|s| s.label() == label)
                .ok_or_else(|| {
                    Error::DatasetInvariant(format!("entity {label} labels no sequence"))
                })?;
            let ctx = ctx_of(seq)?;
            for i in 0..ds.m {
                f[(i, col)] = ctx[i];
            }
        }
        Ok(Self {
            w: Mat64::zeros(k, ds.m),
            f,
            row_of_token: token_rows(&entities, ds.m),
            entities,
        })
    }

    pub fn row_index(&self, token: Token) -> Option<usize> {
        self.row_of_token.get(token).copied().flatten()
    }

    /// Label probability of a sequence under the frozen-context model:
    /// `softmax(W[row(label)])[label]`.
    pub fn label_prob(&self, seq: &Sequence) -> Result<f64> {
        let row = self.row_index(seq.label()).ok_or(Error::TokenOutOfRange {
            token: seq.label(),
            vocab: self.w.rows(),
        })?;
        let p = softmax_unchecked(self.w.row(row));
        Ok(p[seq.label()])
    }
}

fn token_rows(entities: &[Token], m: usize) -> Vec<Option<usize>> {
    let mut map = vec![None; m];
    for (i, &t) in entities.iter().enumerate() {
        map[t] = Some(i);
    }
    map
}

/// Gradient updates directly on `W`: per step only the row of the sequence
/// label moves, by `η·(e_label − softmax(w_row))`. Rows whose entity never
/// serves as a train label stay exactly zero, so the held-out direction is
/// predicted uniformly at every step.
pub fn w_train(
    wm: &mut WModel,
    ds: &FourTokenDataset,
    eta_y: f64,
    steps: usize,
    order: TrainOrder,
    record_every: usize,
    rng: &mut Rng,
) -> Result<TrainRecord> {
    if ds.train.is_empty() {
        return Err(Error::InvalidParam {
            name: "train",
            msg: "empty training set".into(),
        });
    }
    let n = ds.train.len();
    let record_every = record_every.max(1);
    let mut rec = TrainRecord::new(eta_y, 0.0, wm.w.rows());
    let mut ord: Vec<usize> = (0..n).collect();

    let record = |rec: &mut TrainRecord, step: usize, wm: &WModel| -> Result<()> {
        rec.steps.push(step);
        rec.train_probs.push(
            ds.train
                .iter()
                .map(|s| wm.label_prob(s))
                .collect::<Result<_>>()?,
        );
        rec.test_probs.push(
            ds.test
                .iter()
                .map(|s| wm.label_prob(s))
                .collect::<Result<_>>()?,
        );
        Ok(())
    };

    record(&mut rec, 0, wm)?;
    for step in 1..=steps {
        let pos = (step - 1) % n;
        if pos == 0 && order == TrainOrder::Shuffled {
            rng.shuffle(&mut ord);
        }
        let seq = &ds.train[ord[pos]];
        let label = seq.label();
        let row_idx = wm.row_index(label).ok_or(Error::TokenOutOfRange {
            token: label,
            vocab: wm.w.rows(),
        })?;
        let row = wm.w.row_mut(row_idx);
        row_ascent_step(row, label, eta_y);
        rec.update_counts[row_idx] += 1;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("W row update"));
        }
        if step % record_every == 0 || step == steps {
            record(&mut rec, step, wm)?;
        }
    }
    Ok(rec)
}

/// Context-overlap deviation `E = FᵀF − I` and its top eigenvalue, found by
/// shifted power iteration to tolerance 1e-10.
pub fn attention_overlap(f: &Mat64) -> (Mat64, f64) {
    let k = f.cols();
    let mut e = Mat64::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let mut d = 0.0;
            for r in 0..f.rows() {
                d += f[(r, i)] * f[(r, j)];
            }
            let v = if i == j { d - 1.0 } else { d };
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
    }
    let lambda1 = top_eigenvalue(&e, 1e-12, 100_000);
    (e, lambda1)
}

/// Largest (signed) eigenvalue of a symmetric matrix by shifted power
/// iteration with Rayleigh-quotient convergence.
fn top_eigenvalue(e: &Mat64, tol: f64, max_iter: usize) -> f64 {
    let k = e.rows();
    if k == 0 {
        return 0.0;
    }
    // Gershgorin shift keeps the iterated matrix positive semidefinite, so
    // its dominant eigenvalue is λ₁(E) + shift.
    let shift = (0..k)
        .map(|i| e.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    if shift == 0.0 {
        return 0.0;
    }
    // deterministic start with an index tilt so it is not orthogonal to the
    // dominant eigenvector in symmetric cases
    let mut v: Vec<f64> = (0..k).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let norm = l2_norm(&v);
    for x in &mut v {
        *x /= norm;
    }
    let mut lambda = f64::INFINITY;
    for _ in 0..max_iter {
        let mut bv = e.matvec(&v);
        for (b, &x) in bv.iter_mut().zip(&v) {
            *b += shift * x;
        }
        let norm = l2_norm(&bv);
        if norm == 0.0 {
            return -shift;
        }
        for b in &mut bv {
            *b /= norm;
        }
        let ev = e.matvec(&bv);
        let new_lambda = dot(&bv, &ev);
        let done = (new_lambda - lambda).abs() <= tol * new_lambda.abs().max(1.0);
        v = bv;
        lambda = new_lambda;
        if done {
            break;
        }
    }
    lambda
}

/// One weight matrix of the asymmetry visualization, with its token labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub row_tokens: Vec<Token>,
    pub col_tokens: Vec<Token>,
    pub values: Mat64,
}

/// The four weight matrices that visualize asymmetry after a reversal run:
/// trained pairs in both directions, and held-out pairs in their seen and
/// unseen directions. Rows index input entities, columns output entities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitReport {
    /// `Y[A_i, B_j]` over trained pairs.
    pub train_forward: LabeledMatrix,
    /// `Y[B_i, A_j]` over trained pairs.
    pub train_reverse: LabeledMatrix,
    /// Seen direction of held-out pairs: input entity → output entity.
    pub val_seen: LabeledMatrix,
    /// Unseen direction of held-out pairs (token-swapped seen matrix);
    /// identically zero under these dynamics.
    pub val_unseen: LabeledMatrix,
}

fn gather(y: &Mat64, rows: &[Token], cols: &[Token]) -> LabeledMatrix {
    let values = Mat64::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])]);
    LabeledMatrix {
        row_tokens: rows.to_vec(),
        col_tokens: cols.to_vec(),
        values,
    }
}

pub fn logit_report(model: &ReparamModel, ds: &ReversalDataset) -> LogitReport {
    let a_train: Vec<Token> = ds.i_train.iter().map(|&i| ds.entity_a[i]).collect();
    let b_train: Vec<Token> = ds.i_train.iter().map(|&i| ds.entity_b[i]).collect();
    // seen direction: forward for pairs tested backward, backward for pairs
    // tested forward
    let mut val_in = Vec::new();
    let mut val_out = Vec::new();
    for &i in &ds.i_test1 {
        val_in.push(ds.entity_a[i]);
        val_out.push(ds.entity_b[i]);
    }
    for &i in &ds.i_test2 {
        val_in.push(ds.entity_b[i]);
        val_out.push(ds.entity_a[i]);
    }
    LogitReport {
        train_forward: gather(&model.y, &a_train, &b_train),
        train_reverse: gather(&model.y, &b_train, &a_train),
        val_seen: gather(&model.y, &val_in, &val_out),
        val_unseen: gather(&model.y, &val_out, &val_in),
    }
}
