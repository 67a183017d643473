//! Synthetic sequence families: three-token reversal pairs, three-token
//! implication chains, four-token reversal pairs, and bilinear token pairs.
//!
//! Token ids are assigned by drawing a random permutation of `[M]` and
//! slicing; relation tokens take the last slots. The train list is stored in
//! a canonical order (both-direction sequences first, then one-direction
//! sequences); traversal order is the trainer's concern, not the dataset's.
//! Every invariant is checked at construction and again on load.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingSet;
use crate::error::{Error, Result};
use crate::numerics::Rng;

pub type Token = usize;

pub const DATASET_SCHEMA: u32 = 1;

/// A token sequence of length `T+1`; the last token is the label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(Vec<Token>);

impl Sequence {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.len() < 3 {
            return Err(Error::SequenceTooShort(tokens.len()));
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    /// Input length `T` (the label is excluded).
    pub fn t(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> Token {
        self.0[0]
    }

    /// The query token `x_T`.
    pub fn query(&self) -> Token {
        self.0[self.0.len() - 2]
    }

    /// Contextual tokens `x_1 .. x_{T-1}` (everything before the query).
    pub fn context(&self) -> &[Token] {
        &self.0[..self.0.len() - 2]
    }

    pub fn label(&self) -> Token {
        self.0[self.0.len() - 1]
    }
}

fn seq3(a: Token, rel: Token, b: Token) -> Sequence {
    Sequence(vec![a, rel, b])
}

fn seq4(a: Token, r1: Token, r2: Token, b: Token) -> Sequence {
    Sequence(vec![a, r1, r2, b])
}

fn check_distinct(tokens: &[Token], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &t in tokens {
        if t >= m {
            return Err(Error::DatasetInvariant(format!(
                "token {t} out of range for vocabulary {m}"
            )));
        }
        if seen[t] {
            return Err(Error::DatasetInvariant(format!("token {t} appears twice")));
        }
        seen[t] = true;
    }
    Ok(())
}

fn check_canonical_indices(sets: &[&[usize]], total: usize) -> Result<()> {
    let flat: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    let expect: Vec<usize> = (0..total).collect();
    if flat != expect {
        return Err(Error::DatasetInvariant(
            "index sets are not the canonical partition of 0..n_total".into(),
        ));
    }
    Ok(())
}

/// Three-token reversal family: `A_i → B_i` and `B_i ← A_i`.
///
/// Pairs in `i_train` appear in both directions in the train split; pairs in
/// `i_test1` appear forward-only (tested backward) and pairs in `i_test2`
/// backward-only (tested forward).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversalDataset {
    pub m: usize,
    pub seed: u64,
    pub entity_a: Vec<Token>,
    pub entity_b: Vec<Token>,
    pub fwd: Token,
    pub bwd: Token,
    pub i_train: Vec<usize>,
    pub i_test1: Vec<usize>,
    pub i_test2: Vec<usize>,
    pub train: Vec<Sequence>,
    pub test: Vec<Sequence>,
}

impl ReversalDataset {
    pub fn n_total(&self) -> usize {
        self.entity_a.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n_total = self.n_total();
        if self.entity_b.len() != n_total {
            return Err(Error::DatasetInvariant(
                "entity list length mismatch".into(),
            ));
        }
        if 2 * n_total + 2 > self.m {
            return Err(Error::VocabTooSmall {
                needed: 2 * n_total + 2,
                vocab: self.m,
            });
        }
        let mut all: Vec<Token> = Vec::with_capacity(2 * n_total + 2);
        all.extend(&self.entity_a);
        all.extend(&self.entity_b);
        all.push(self.fwd);
        all.push(self.bwd);
        check_distinct(&all, self.m)?;
        check_canonical_indices(&[&self.i_train, &self.i_test1, &self.i_test2], n_total)?;

        let mut want_train = Vec::new();
        for &i in &self.i_train {
            want_train.push(seq3(self.entity_a[i], self.fwd, self.entity_b[i]));
        }
        for &i in &self.i_train {
            want_train.push(seq3(self.entity_b[i], self.bwd, self.entity_a[i]));
        }
        for &i in &self.i_test1 {
            want_train.push(seq3(self.entity_a[i], self.fwd, self.entity_b[i]));
        }
        for &i in &self.i_test2 {
            want_train.push(seq3(self.entity_b[i], self.bwd, self.entity_a[i]));
        }
        let mut want_test = Vec::new();
        for &i in &self.i_test1 {
            want_test.push(seq3(self.entity_b[i], self.bwd, self.entity_a[i]));
        }
        for &i in &self.i_test2 {
            want_test.push(seq3(self.entity_a[i], self.fwd, self.entity_b[i]));
        }
        if self.train != want_train || self.test != want_test {
            return Err(Error::DatasetInvariant(
                "sequences do not match the canonical construction".into(),
            ));
        }
        // The property that drives the zero-row conclusion: no test first
        // token ever starts a train sequence.
        for ts in &self.test {
            if self.train.iter().any(|tr| tr.first() == ts.first()) {
                return Err(Error::DatasetInvariant(format!(
                    "test first token {} also starts a train sequence",
                    ts.first()
                )));
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        m: usize,
        seed: u64,
        entity_a: Vec<Token>,
        entity_b: Vec<Token>,
        fwd: Token,
        bwd: Token,
        n_train: usize,
        n_test1: usize,
        n_test2: usize,
    ) -> Result<Self> {
        let n_total = n_train + n_test1 + n_test2;
        if entity_a.len() != n_total || entity_b.len() != n_total {
            return Err(Error::DatasetInvariant(
                "entity lists must have length n_train + n_test1 + n_test2".into(),
            ));
        }
        let i_train: Vec<usize> = (0..n_train).collect();
        let i_test1: Vec<usize> = (n_train..n_train + n_test1).collect();
        let i_test2: Vec<usize> = (n_train + n_test1..n_total).collect();
        let mut train = Vec::new();
        for &i in &i_train {
            train.push(seq3(entity_a[i], fwd, entity_b[i]));
        }
        for &i in &i_train {
            train.push(seq3(entity_b[i], bwd, entity_a[i]));
        }
        for &i in &i_test1 {
            train.push(seq3(entity_a[i], fwd, entity_b[i]));
        }
        for &i in &i_test2 {
            train.push(seq3(entity_b[i], bwd, entity_a[i]));
        }
        let mut test = Vec::new();
        for &i in &i_test1 {
            test.push(seq3(entity_b[i], bwd, entity_a[i]));
        }
        for &i in &i_test2 {
            test.push(seq3(entity_a[i], fwd, entity_b[i]));
        }
        let ds = Self {
            m,
            seed,
            entity_a,
            entity_b,
            fwd,
            bwd,
            i_train,
            i_test1,
            i_test2,
            train,
            test,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Build a reversal dataset by slicing a random permutation of `[M]`.
pub fn build_reversal3(
    m: usize,
    n_train: usize,
    n_test1: usize,
    n_test2: usize,
    rng: &mut Rng,
) -> Result<ReversalDataset> {
    let n_total = n_train + n_test1 + n_test2;
    if 2 * n_total + 2 > m {
        return Err(Error::VocabTooSmall {
            needed: 2 * n_total + 2,
            vocab: m,
        });
    }
    let perm = rng.permutation(m);
    ReversalDataset::from_parts(
        m,
        rng.seed(),
        perm[..n_total].to_vec(),
        perm[n_total..2 * n_total].to_vec(),
        perm[m - 2],
        perm[m - 1],
        n_train,
        n_test1,
        n_test2,
    )
}

/// Three-token implication family: `A_i → B_i`, `B_i → C_i`, `A_i ⤳ C_i`.
///
/// Triples in `i_train` contribute all three sequences to the train split;
/// triples in `i_test` contribute only the two direct sequences, and the
/// indirect sequence goes to the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotDataset {
    pub m: usize,
    pub seed: u64,
    pub entity_a: Vec<Token>,
    pub entity_b: Vec<Token>,
    pub entity_c: Vec<Token>,
    pub direct: Token,
    pub indirect: Token,
    pub i_train: Vec<usize>,
    pub i_test: Vec<usize>,
    pub train: Vec<Sequence>,
    pub test: Vec<Sequence>,
}

impl CotDataset {
    pub fn n_total(&self) -> usize {
        self.entity_a.len()
    }

    pub fn n_train(&self) -> usize {
        self.i_train.len()
    }

    pub fn n_test(&self) -> usize {
        self.i_test.len()
    }

    /// Positions in `train` of the direct sequences of held-out triples
    /// (the pairs whose indirect conclusion is in the test split).
    pub fn test_triple_direct_positions(&self) -> std::ops::Range<usize> {
        3 * self.n_train()..3 * self.n_train() + 2 * self.n_test()
    }

    pub fn validate(&self) -> Result<()> {
        let n_total = self.n_total();
        if self.entity_b.len() != n_total || self.entity_c.len() != n_total {
            return Err(Error::DatasetInvariant(
                "entity list length mismatch".into(),
            ));
        }
        if 3 * n_total + 2 > self.m {
            return Err(Error::VocabTooSmall {
                needed: 3 * n_total + 2,
                vocab: self.m,
            });
        }
        let mut all: Vec<Token> = Vec::with_capacity(3 * n_total + 2);
        all.extend(&self.entity_a);
        all.extend(&self.entity_b);
        all.extend(&self.entity_c);
        all.push(self.direct);
        all.push(self.indirect);
        check_distinct(&all, self.m)?;
        check_canonical_indices(&[&self.i_train, &self.i_test], n_total)?;

        let mut want_train = Vec::new();
        for &i in &self.i_train {
            want_train.push(seq3(self.entity_a[i], self.direct, self.entity_b[i]));
        }
        for &i in &self.i_train {
            want_train.push(seq3(self.entity_b[i], self.direct, self.entity_c[i]));
        }
        for &i in &self.i_train {
            want_train.push(seq3(self.entity_a[i], self.indirect, self.entity_c[i]));
        }
        for &i in &self.i_test {
            want_train.push(seq3(self.entity_a[i], self.direct, self.entity_b[i]));
        }
        for &i in &self.i_test {
            want_train.push(seq3(self.entity_b[i], self.direct, self.entity_c[i]));
        }
        let want_test: Vec<Sequence> = self
            .i_test
            .iter()
            .map(|&i| seq3(self.entity_a[i], self.indirect, self.entity_c[i]))
            .collect();
        if self.train != want_train || self.test != want_test {
            return Err(Error::DatasetInvariant(
                "sequences do not match the canonical construction".into(),
            ));
        }
        // A held-out A_i appears in training only in the sequence labeled B_i.
        for (pos, &i) in self.i_test.iter().enumerate() {
            let a = self.entity_a[i];
            let b = self.entity_b[i];
            debug_assert_eq!(self.test[pos].first(), a);
            for tr in &self.train {
                if tr.first() == a && tr.label() != b {
                    return Err(Error::DatasetInvariant(format!(
                        "held-out entity {a} starts a train sequence labeled {}",
                        tr.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Build an implication-chain dataset by slicing a random permutation of `[M]`.
pub fn build_cot3(m: usize, n_train: usize, n_test: usize, rng: &mut Rng) -> Result<CotDataset> {
    let n_total = n_train + n_test;
    if 3 * n_total + 2 > m {
        return Err(Error::VocabTooSmall {
            needed: 3 * n_total + 2,
            vocab: m,
        });
    }
    let perm = rng.permutation(m);
    let entity_a = perm[..n_total].to_vec();
    let entity_b = perm[n_total..2 * n_total].to_vec();
    let entity_c = perm[2 * n_total..3 * n_total].to_vec();
    let direct = perm[m - 2];
    let indirect = perm[m - 1];
    let i_train: Vec<usize> = (0..n_train).collect();
    let i_test: Vec<usize> = (n_train..n_total).collect();
    let mut train = Vec::new();
    for &i in &i_train {
        train.push(seq3(entity_a[i], direct, entity_b[i]));
    }
    for &i in &i_train {
        train.push(seq3(entity_b[i], direct, entity_c[i]));
    }
    for &i in &i_train {
        train.push(seq3(entity_a[i], indirect, entity_c[i]));
    }
    for &i in &i_test {
        train.push(seq3(entity_a[i], direct, entity_b[i]));
    }
    for &i in &i_test {
        train.push(seq3(entity_b[i], direct, entity_c[i]));
    }
    let test: Vec<Sequence> = i_test
        .iter()
        .map(|&i| seq3(entity_a[i], indirect, entity_c[i]))
        .collect();
    let ds = CotDataset {
        m,
        seed: rng.seed(),
        entity_a,
        entity_b,
        entity_c,
        direct,
        indirect,
        i_train,
        i_test,
        train,
        test,
    };
    ds.validate()?;
    Ok(ds)
}

/// Four-token reversal family: `A_i R₁ R₂ B_i` and `B_i R₁ R₂ A_i`, where
/// the two relation tokens jointly represent a self-inverse relationship.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourTokenDataset {
    pub m: usize,
    pub seed: u64,
    pub entity_a: Vec<Token>,
    pub entity_b: Vec<Token>,
    pub r1: Token,
    pub r2: Token,
    pub i_train: Vec<usize>,
    pub i_test: Vec<usize>,
    pub train: Vec<Sequence>,
    pub test: Vec<Sequence>,
}

impl FourTokenDataset {
    pub fn n_total(&self) -> usize {
        self.entity_a.len()
    }

    /// The `K = 2·N_total` entity tokens, A entities first.
    pub fn entities(&self) -> Vec<Token> {
        let mut e = self.entity_a.clone();
        e.extend(&self.entity_b);
        e
    }

    pub fn validate(&self) -> Result<()> {
        let n_total = self.n_total();
        if self.entity_b.len() != n_total {
            return Err(Error::DatasetInvariant(
                "entity list length mismatch".into(),
            ));
        }
        if 2 * n_total + 2 > self.m {
            return Err(Error::VocabTooSmall {
                needed: 2 * n_total + 2,
                vocab: self.m,
            });
        }
        let mut all: Vec<Token> = Vec::with_capacity(2 * n_total + 2);
        all.extend(&self.entity_a);
        all.extend(&self.entity_b);
        all.push(self.r1);
        all.push(self.r2);
        check_distinct(&all, self.m)?;
        check_canonical_indices(&[&self.i_train, &self.i_test], n_total)?;

        let mut want_train = Vec::new();
        for &i in &self.i_train {
            want_train.push(seq4(self.entity_a[i], self.r1, self.r2, self.entity_b[i]));
        }
        for &i in &self.i_train {
            want_train.push(seq4(self.entity_b[i], self.r1, self.r2, self.entity_a[i]));
        }
        for &i in &self.i_test {
            want_train.push(seq4(self.entity_a[i], self.r1, self.r2, self.entity_b[i]));
        }
        let want_test: Vec<Sequence> = self
            .i_test
            .iter()
            .map(|&i| seq4(self.entity_b[i], self.r1, self.r2, self.entity_a[i]))
            .collect();
        if self.train != want_train || self.test != want_test {
            return Err(Error::DatasetInvariant(
                "sequences do not match the canonical construction".into(),
            ));
        }
        // No test label ever appears as a train label.
        for ts in &self.test {
            if self.train.iter().any(|tr| tr.label() == ts.label()) {
                return Err(Error::DatasetInvariant(format!(
                    "test label {} is also a train label",
                    ts.label()
                )));
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        m: usize,
        seed: u64,
        entity_a: Vec<Token>,
        entity_b: Vec<Token>,
        r1: Token,
        r2: Token,
        n_train: usize,
        n_test: usize,
    ) -> Result<Self> {
        let n_total = n_train + n_test;
        if entity_a.len() != n_total || entity_b.len() != n_total {
            return Err(Error::DatasetInvariant(
                "entity lists must have length n_train + n_test".into(),
            ));
        }
        let i_train: Vec<usize> = (0..n_train).collect();
        let i_test: Vec<usize> = (n_train..n_total).collect();
        let mut train = Vec::new();
        for &i in &i_train {
            train.push(seq4(entity_a[i], r1, r2, entity_b[i]));
        }
        for &i in &i_train {
            train.push(seq4(entity_b[i], r1, r2, entity_a[i]));
        }
        for &i in &i_test {
            train.push(seq4(entity_a[i], r1, r2, entity_b[i]));
        }
        let test: Vec<Sequence> = i_test
            .iter()
            .map(|&i| seq4(entity_b[i], r1, r2, entity_a[i]))
            .collect();
        let ds = Self {
            m,
            seed,
            entity_a,
            entity_b,
            r1,
            r2,
            i_train,
            i_test,
            train,
            test,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Build a four-token dataset by slicing a random permutation of `[M]`.
pub fn build_four_token(
    m: usize,
    n_train: usize,
    n_test: usize,
    rng: &mut Rng,
) -> Result<FourTokenDataset> {
    let n_total = n_train + n_test;
    if 2 * n_total + 2 > m {
        return Err(Error::VocabTooSmall {
            needed: 2 * n_total + 2,
            vocab: m,
        });
    }
    let perm = rng.permutation(m);
    FourTokenDataset::from_parts(
        m,
        rng.seed(),
        perm[..n_total].to_vec(),
        perm[n_total..2 * n_total].to_vec(),
        perm[m - 2],
        perm[m - 1],
        n_train,
        n_test,
    )
}

/// Bilinear training pairs over Gaussian embeddings: disjoint token subsets
/// `X` and `Y`, forward pairs `(x_i, y_i)` for all `i`, backward pairs
/// `(y_i, x_i)` for `i ≥ 2`, and the single held-out pair `(y_1, x_1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearPairs {
    pub seed: u64,
    pub embeddings: EmbeddingSet,
    pub x_tokens: Vec<usize>,
    pub y_tokens: Vec<usize>,
    pub train: Vec<(usize, usize)>,
    pub test: (usize, usize),
}

impl BilinearPairs {
    pub fn vocab(&self) -> usize {
        self.embeddings.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    pub fn n(&self) -> usize {
        self.x_tokens.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let m = self.vocab();
        if self.y_tokens.len() != n || n == 0 {
            return Err(Error::DatasetInvariant("token subset size mismatch".into()));
        }
        let mut all = self.x_tokens.clone();
        all.extend(&self.y_tokens);
        check_distinct(&all, m)?;
        let mut want = Vec::new();
        for i in 0..n {
            want.push((self.x_tokens[i], self.y_tokens[i]));
        }
        for i in 1..n {
            want.push((self.y_tokens[i], self.x_tokens[i]));
        }
        if self.train != want {
            return Err(Error::DatasetInvariant(
                "train pairs do not match the canonical construction".into(),
            ));
        }
        if self.test != (self.y_tokens[0], self.x_tokens[0]) {
            return Err(Error::DatasetInvariant(
                "test pair must be the reversed first pair".into(),
            ));
        }
        Ok(())
    }

    pub fn from_parts(
        seed: u64,
        embeddings: EmbeddingSet,
        x_tokens: Vec<usize>,
        y_tokens: Vec<usize>,
    ) -> Result<Self> {
        let n = x_tokens.len();
        if n == 0 || y_tokens.len() != n {
            return Err(Error::DatasetInvariant(
                "need equal-sized non-empty token subsets".into(),
            ));
        }
        let mut train = Vec::with_capacity(2 * n - 1);
        for i in 0..n {
            train.push((x_tokens[i], y_tokens[i]));
        }
        for i in 1..n {
            train.push((y_tokens[i], x_tokens[i]));
        }
        let test = (y_tokens[0], x_tokens[0]);
        let ds = Self {
            seed,
            embeddings,
            x_tokens,
            y_tokens,
            train,
            test,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Sample embeddings and disjoint token subsets for the bilinear model.
pub fn build_bilinear_pairs(m: usize, n: usize, d: usize, rng: &mut Rng) -> Result<BilinearPairs> {
    if n == 0 {
        return Err(Error::InvalidParam {
            name: "n",
            msg: "need at least one pair".into(),
        });
    }
    if 2 * n > m {
        return Err(Error::VocabTooSmall {
            needed: 2 * n,
            vocab: m,
        });
    }
    let embeddings = EmbeddingSet::gaussian(m, d, rng)?;
    let perm = rng.permutation(m);
    BilinearPairs::from_parts(
        rng.seed(),
        embeddings,
        perm[..n].to_vec(),
        perm[n..2 * n].to_vec(),
    )
}

/// Any of the four dataset families, tagged for serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dataset {
    Reversal3(ReversalDataset),
    Cot3(CotDataset),
    FourToken(FourTokenDataset),
    Bilinear(BilinearPairs),
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dataset::Reversal3(d) => d.validate(),
            Dataset::Cot3(d) => d.validate(),
            Dataset::FourToken(d) => d.validate(),
            Dataset::Bilinear(d) => d.validate(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Dataset::Reversal3(_) => "reversal3",
            Dataset::Cot3(_) => "cot3",
            Dataset::FourToken(_) => "four_token",
            Dataset::Bilinear(_) => "bilinear",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    schema: u32,
    #[serde(flatten)]
    dataset: Dataset,
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    dataset.validate()?;
    let file = DatasetFile {
        schema: DATASET_SCHEMA,
        dataset: dataset.clone(),
    };
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, &file)?;
    Ok(())
}

/// The schema'd file form as a JSON value, for callers that embed extra
/// run metadata before writing. Loading ignores unknown keys.
pub fn dataset_file_value(dataset: &Dataset) -> Result<serde_json::Value> {
    dataset.validate()?;
    Ok(serde_json::to_value(DatasetFile {
        schema: DATASET_SCHEMA,
        dataset: dataset.clone(),
    })?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let r = BufReader::new(File::open(path)?);
    let file: DatasetFile = serde_json::from_reader(r)?;
    if file.schema != DATASET_SCHEMA {
        return Err(Error::DatasetInvariant(format!(
            "unsupported dataset schema {} (expected {DATASET_SCHEMA})",
            file.schema
        )));
    }
    file.dataset.validate()?;
    Ok(file.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversal_reference_sizes() {
        let mut rng = Rng::new(1).substream("dataset");
        let ds = build_reversal3(800, 140, 30, 30, &mut rng).unwrap();
        assert_eq!(ds.train.len(), 340);
        assert_eq!(ds.test.len(), 60);
        ds.validate().unwrap();
    }

    #[test]
    fn reversal_single_pair() {
        let mut rng = Rng::new(2);
        let ds = build_reversal3(10, 1, 0, 0, &mut rng).unwrap();
        let (a, b) = (ds.entity_a[0], ds.entity_b[0]);
        assert_eq!(ds.train.len(), 2);
        assert_eq!(ds.train[0].tokens(), &[a, ds.fwd, b]);
        assert_eq!(ds.train[1].tokens(), &[b, ds.bwd, a]);
        assert!(ds.test.is_empty());
    }

    #[test]
    fn reversal_capacity_check() {
        let mut rng = Rng::new(3);
        assert!(matches!(
            build_reversal3(6, 2, 1, 1, &mut rng),
            Err(Error::VocabTooSmall {
                needed: 10,
                vocab: 6
            })
        ));
    }

    #[test]
    fn reversal_test_first_tokens_disjoint_from_train() {
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let ds = build_reversal3(64, 8, 5, 4, &mut rng).unwrap();
            for ts in &ds.test {
                assert!(ds.train.iter().all(|tr| tr.first() != ts.first()));
            }
        }
    }

    #[test]
    fn cot_reference_sizes() {
        let mut rng = Rng::new(4);
        let ds = build_cot3(800, 140, 60, &mut rng).unwrap();
        assert_eq!(ds.train.len(), 540);
        assert_eq!(ds.test.len(), 60);
        ds.validate().unwrap();
    }

    #[test]
    fn cot_single_triple_and_capacity() {
        let ds = build_cot3(20, 1, 0, &mut Rng::new(5)).unwrap();
        assert_eq!(ds.train.len(), 3);
        assert!(ds.test.is_empty());
        // two triples need 3·2 + 2 = 8 distinct tokens
        assert!(matches!(
            build_cot3(7, 1, 1, &mut Rng::new(5)),
            Err(Error::VocabTooSmall {
                needed: 8,
                vocab: 7
            })
        ));
        assert!(build_cot3(8, 1, 1, &mut Rng::new(5)).is_ok());
    }

    #[test]
    fn cot_heldout_first_token_only_labeled_b() {
        let mut rng = Rng::new(6);
        let ds = build_cot3(100, 10, 5, &mut rng).unwrap();
        for &i in &ds.i_test {
            let a = ds.entity_a[i];
            for tr in &ds.train {
                if tr.first() == a {
                    assert_eq!(tr.label(), ds.entity_b[i]);
                }
            }
        }
    }

    #[test]
    fn four_token_sizes_and_shapes() {
        let mut rng = Rng::new(7);
        let ds = build_four_token(100, 10, 5, &mut rng).unwrap();
        assert_eq!(ds.train.len(), 25);
        assert_eq!(ds.test.len(), 5);
        assert!(ds
            .train
            .iter()
            .chain(&ds.test)
            .all(|s| s.tokens().len() == 4));

        let ds = build_four_token(100, 0, 1, &mut Rng::new(8)).unwrap();
        let (a, b) = (ds.entity_a[0], ds.entity_b[0]);
        assert_eq!(ds.train.len(), 1);
        assert_eq!(ds.train[0].tokens(), &[a, ds.r1, ds.r2, b]);
        assert_eq!(ds.test[0].tokens(), &[b, ds.r1, ds.r2, a]);
    }

    #[test]
    fn bilinear_sizes() {
        let mut rng = Rng::new(9);
        let ds = build_bilinear_pairs(64, 8, 512, &mut rng).unwrap();
        assert_eq!(ds.train.len(), 15);
        ds.validate().unwrap();

        let ds = build_bilinear_pairs(4, 2, 16, &mut Rng::new(10)).unwrap();
        let (x, y) = (&ds.x_tokens, &ds.y_tokens);
        assert_eq!(ds.train, vec![(x[0], y[0]), (x[1], y[1]), (y[1], x[1])]);
        assert_eq!(ds.test, (y[0], x[0]));

        assert!(matches!(
            build_bilinear_pairs(3, 2, 8, &mut Rng::new(11)),
            Err(Error::VocabTooSmall { .. })
        ));
    }

    #[test]
    fn construction_is_deterministic() {
        let a = build_reversal3(50, 5, 2, 2, &mut Rng::new(123).substream("dataset")).unwrap();
        let b = build_reversal3(50, 5, 2, 2, &mut Rng::new(123).substream("dataset")).unwrap();
        assert_eq!(a, b);
        let c = build_reversal3(50, 5, 2, 2, &mut Rng::new(124).substream("dataset")).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn roundtrip_all_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let kinds = [
            Dataset::Reversal3(build_reversal3(100, 5, 2, 2, &mut Rng::new(1)).unwrap()),
            Dataset::Cot3(build_cot3(100, 4, 2, &mut Rng::new(2)).unwrap()),
            Dataset::FourToken(build_four_token(100, 4, 2, &mut Rng::new(3)).unwrap()),
            Dataset::Bilinear(build_bilinear_pairs(16, 3, 8, &mut Rng::new(4)).unwrap()),
        ];
        for (i, ds) in kinds.iter().enumerate() {
            let path = dir.path().join(format!("ds{i}.json"));
            save_dataset(ds, &path).unwrap();
            let loaded = load_dataset(&path).unwrap();
            assert_eq!(*ds, loaded);
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.json");
        let ds = Dataset::Reversal3(build_reversal3(100, 5, 2, 2, &mut Rng::new(1)).unwrap());
        save_dataset(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Json(_))));
    }

    mod construction_properties {
        use super::*;
        use proptest::prelude::*;

        use crate::numerics::Rng;

        proptest! {
            // Construction either satisfies every type invariant (validate
            // re-checks them all) or fails the capacity precondition.
            #[test]
            fn reversal_construction_valid_or_capacity_error(
                seed in 0u64..1000,
                n_train in 0usize..6,
                n_test1 in 0usize..4,
                n_test2 in 0usize..4,
                m in 2usize..40,
            ) {
                let mut rng = Rng::new(seed);
                match build_reversal3(m, n_train, n_test1, n_test2, &mut rng) {
                    Ok(ds) => {
                        prop_assert!(2 * ds.n_total() + 2 <= m);
                        prop_assert!(ds.validate().is_ok());
                        prop_assert_eq!(ds.train.len(), 2 * n_train + n_test1 + n_test2);
                        for ts in &ds.test {
                            prop_assert!(ds.train.iter().all(|tr| tr.first() != ts.first()));
                        }
                    }
                    Err(Error::VocabTooSmall { needed, vocab }) => {
                        prop_assert_eq!(needed, 2 * (n_train + n_test1 + n_test2) + 2);
                        prop_assert!(needed > vocab);
                    }
                    Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
                }
            }

            #[test]
            fn cot_construction_valid_or_capacity_error(
                seed in 0u64..1000,
                n_train in 0usize..5,
                n_test in 0usize..4,
                m in 2usize..40,
            ) {
                let mut rng = Rng::new(seed);
                match build_cot3(m, n_train, n_test, &mut rng) {
                    Ok(ds) => {
                        prop_assert!(ds.validate().is_ok());
                        prop_assert_eq!(ds.train.len(), 3 * n_train + 2 * n_test);
                        prop_assert_eq!(ds.test.len(), n_test);
                    }
                    Err(Error::VocabTooSmall { needed, vocab }) => {
                        prop_assert!(needed > vocab);
                    }
                    Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
                }
            }
        }
    }

    #[test]
    fn mismatched_vocab_is_a_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.json");
        let ds = Dataset::Reversal3(build_reversal3(100, 5, 2, 2, &mut Rng::new(1)).unwrap());
        save_dataset(&ds, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // shrink the declared vocabulary below the token ids actually used
        let tampered = text.replacen("\"m\": 100", "\"m\": 10", 1);
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(Error::DatasetInvariant(_) | Error::VocabTooSmall { .. })
        ));
    }
}
