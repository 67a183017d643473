//! The concentration / initialization / comparison-bound verification suite:
//! every probabilistic ingredient the models rely on, checked at desk scale
//! with seeded Monte Carlo and reported as one entry per lemma-style claim.

use serde::{Deserialize, Serialize};

use crate::bilinear::{
    bilinear_next_prob, init_theta, integrate_scalar_ode, ode_bound_check, OdeSamples, ThetaInit,
};
use crate::datasets::build_bilinear_pairs;
use crate::embeddings::{
    check_almost_orthonormal, chi_sq_tail_check, min_dim_for_eps, EmbeddingSet,
};
use crate::error::Result;
use crate::numerics::Rng;

/// Desk-scale parameters of the suite. Defaults match the acceptance
/// thresholds; the overrides exist so the failure path is testable.
#[derive(Clone, Debug)]
pub struct LemmaSuiteConfig {
    /// Number of embeddings for the orthonormality check.
    pub orth_n: usize,
    pub orth_eps: f64,
    pub orth_delta: f64,
    /// Override the embedding dimension (default: from the formula).
    pub orth_d: Option<usize>,
    pub orth_seeds: usize,
    pub orth_min_pass: usize,
    /// `(t, x)` cases for the χ² tail check.
    pub chi_cases: Vec<(usize, f64)>,
    pub chi_trials: usize,
    /// Vocabulary, pairs, dimension, scale and seeds for the
    /// near-uniform-initialization window check.
    pub init_m: usize,
    pub init_pairs: usize,
    pub init_dim: usize,
    pub init_sigma: f64,
    pub init_seeds: usize,
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        Self {
            orth_n: 50,
            orth_eps: 0.2,
            orth_delta: 0.01,
            orth_d: None,
            orth_seeds: 100,
            orth_min_pass: 99,
            chi_cases: vec![(100, 1.0), (100, 2.0)],
            chi_trials: 100_000,
            init_m: 64,
            init_pairs: 8,
            init_dim: 512,
            init_sigma: 1e-3,
            init_seeds: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub pass: bool,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub seed: u64,
    pub checks: Vec<LemmaCheck>,
    pub ok: bool,
}

pub fn lemma_suite(seed: u64) -> Result<LemmaSuiteReport> {
    lemma_suite_with(seed, &LemmaSuiteConfig::default())
}

pub fn lemma_suite_with(seed: u64, cfg: &LemmaSuiteConfig) -> Result<LemmaSuiteReport> {
    let root = Rng::new(seed);
    let mut checks = Vec::new();

    // Gaussian embeddings are almost orthonormal at the formula dimension.
    // The diagonal case doubles as the single-vector normality check.
    {
        let d = cfg
            .orth_d
            .unwrap_or_else(|| min_dim_for_eps(cfg.orth_n, cfg.orth_eps, cfg.orth_delta));
        let mut passes = 0usize;
        let mut worst = 0.0f64;
        for trial in 0..cfg.orth_seeds {
            let mut rng = root.substream_indexed("lemma-orthonormal", trial as u64);
            let emb = EmbeddingSet::gaussian(cfg.orth_n, d, &mut rng)?;
            let (ok, dev) = check_almost_orthonormal(&emb, cfg.orth_eps);
            if ok {
                passes += 1;
            }
            worst = worst.max(dev);
        }
        checks.push(LemmaCheck {
            name: "gaussian_embeddings_almost_orthonormal".into(),
            pass: passes >= cfg.orth_min_pass,
            details: serde_json::json!({
                "n": cfg.orth_n,
                "d": d,
                "eps": cfg.orth_eps,
                "seeds": cfg.orth_seeds,
                "passes": passes,
                "required": cfg.orth_min_pass,
                "worst_deviation": worst,
            }),
        });
    }

    // χ² upper/lower tail frequencies vs the exp(−x) bound.
    {
        let mut pass = true;
        let mut cases = Vec::new();
        for (i, &(t, x)) in cfg.chi_cases.iter().enumerate() {
            let mut rng = root.substream_indexed("lemma-chisq", i as u64);
            let rep = chi_sq_tail_check(t, x, cfg.chi_trials, &mut rng);
            pass &= rep.ok;
            cases.push(serde_json::json!({
                "t": rep.t,
                "x": rep.x,
                "trials": rep.trials,
                "upper_emp": rep.upper_emp,
                "lower_emp": rep.lower_emp,
                "bound": rep.bound,
                "std_err": rep.std_err,
                "ok": rep.ok,
            }));
        }
        checks.push(LemmaCheck {
            name: "chi_squared_tail".into(),
            pass,
            details: serde_json::Value::Array(cases),
        });
    }

    // Small Gaussian initialization keeps every train-pair probability
    // inside the near-uniform window (1/(2m), 3/(2m)).
    {
        let m = cfg.init_m;
        let (lo, hi) = (1.0 / (2.0 * m as f64), 3.0 / (2.0 * m as f64));
        let mut pass = true;
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi = 0.0f64;
        for trial in 0..cfg.init_seeds {
            let mut ds_rng = root.substream_indexed("lemma-init-ds", trial as u64);
            let pairs = build_bilinear_pairs(m, cfg.init_pairs, cfg.init_dim, &mut ds_rng)?;
            let mut init_rng = root.substream_indexed("lemma-init-theta", trial as u64);
            let params = init_theta(
                &ThetaInit::Gaussian {
                    sigma: cfg.init_sigma,
                },
                &pairs,
                &mut init_rng,
            )?;
            for &(input, target) in &pairs.train {
                let p = bilinear_next_prob(&params, &pairs, input)[target];
                worst_lo = worst_lo.min(p);
                worst_hi = worst_hi.max(p);
                if p <= lo || p >= hi {
                    pass = false;
                }
            }
        }
        checks.push(LemmaCheck {
            name: "initial_probabilities_near_uniform".into(),
            pass,
            details: serde_json::json!({
                "m": m,
                "dim": cfg.init_dim,
                "sigma": cfg.init_sigma,
                "seeds": cfg.init_seeds,
                "window": [lo, hi],
                "min_prob": worst_lo,
                "max_prob": worst_hi,
            }),
        });
    }

    // Scalar comparison bounds: equality cases track the closed forms
    // pointwise, strict cases stay inside them.
    {
        let (c1, c2, c3) = (1.0, 2.0, 3.0);
        let (times, f1_eq) = integrate_scalar_ode(1.0, 10.0, 2000, |_, f| -c1 * f * f);
        let (_, f2_eq) = integrate_scalar_ode(2.0, 10.0, 2000, |t, f| -c2 * f / (t + c3));
        let eq = ode_bound_check(
            &OdeSamples {
                times: times.clone(),
                f1: Some(f1_eq),
                f2: Some(f2_eq),
            },
            c1,
            c2,
            c3,
        );
        let (_, f1_strict) = integrate_scalar_ode(1.0, 10.0, 2000, |_, f| -2.0 * c1 * f * f);
        let (_, f2_const) = integrate_scalar_ode(2.0, 10.0, 2000, |_, _| 0.0);
        let strict = ode_bound_check(
            &OdeSamples {
                times,
                f1: Some(f1_strict),
                f2: Some(f2_const),
            },
            c1,
            c2,
            c3,
        );
        checks.push(LemmaCheck {
            name: "ode_comparison_bounds".into(),
            pass: eq.ok && strict.ok,
            details: serde_json::json!({
                "equality_f1_margin": eq.f1_worst_margin,
                "equality_f2_margin": eq.f2_worst_margin,
                "strict_f1_margin": strict.f1_worst_margin,
                "strict_f2_margin": strict.f2_worst_margin,
            }),
        });
    }

    let ok = checks.iter().all(|c| c.pass);
    Ok(LemmaSuiteReport { seed, checks, ok })
}
