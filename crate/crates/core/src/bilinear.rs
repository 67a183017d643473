//! Bilinear next-token model over fixed Gaussian embeddings: logits
//! `l(y|x) = v_xᵀ Θ v_y`, cross-entropy losses over the paired dataset, the
//! exact loss gradient, gradient-flow integration, and the monitors that
//! compare a trajectory against the separation and reversal-floor claims.
//!
//! The training loss averages the negative log-probability of all `2n−1`
//! train pairs; the reversal loss is the negative log-probability of the
//! single held-out reversed pair. Because `Θ` is a general (asymmetric)
//! matrix, descending the training loss moves `l(y₁|x₁)` without moving
//! `l(x₁|y₁)`, and the reversal loss stays near its chance value.

use serde::{Deserialize, Serialize};

use crate::datasets::BilinearPairs;
use crate::error::{Error, Result};
use crate::numerics::{gauss_matrix, softmax_unchecked, Mat64, Rng, Vec64};

/// Parameters of the bilinear model: the `d×d` interaction matrix and the
/// initialization scale it was drawn with (0 for an exact zero start).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearParams {
    pub theta: Mat64,
    pub sigma0: f64,
}

/// Initialization mode: i.i.d. Gaussian entries, or a caller-supplied
/// matrix that must already predict every train pair near uniformly.
#[derive(Clone, Debug)]
pub enum ThetaInit {
    Gaussian { sigma: f64 },
    Pretrained(Mat64),
}

/// Next-token distribution `p(·|x) = softmax_j(v_xᵀ Θ v_j)` over all tokens.
pub fn bilinear_next_prob(params: &BilinearParams, pairs: &BilinearPairs, x: usize) -> Vec64 {
    let emb = pairs.embeddings.matrix();
    // w = Θᵀ v_x, logits_j = ⟨v_j, w⟩
    let w = params.theta.tr_matvec(emb.row(x));
    let logits = emb.matvec(&w);
    softmax_unchecked(&logits)
}

/// Mean negative log-probability over the `2n−1` train pairs.
pub fn forward_loss(params: &BilinearParams, pairs: &BilinearPairs) -> f64 {
    let mut total = 0.0;
    for &(input, target) in &pairs.train {
        let p = bilinear_next_prob(params, pairs, input);
        total -= p[target].ln();
    }
    total / pairs.train.len() as f64
}

/// Negative log-probability of the held-out reversed pair.
pub fn reversal_loss(params: &BilinearParams, pairs: &BilinearPairs) -> f64 {
    let (input, target) = pairs.test;
    let p = bilinear_next_prob(params, pairs, input);
    -p[target].ln()
}

/// Exact gradient of the training loss:
/// `∇L = −(1/(2n−1)) Σ v_in (v_tgt − E_{p(·|in)}[v])ᵀ`.
pub fn loss_gradient(params: &BilinearParams, pairs: &BilinearPairs) -> Mat64 {
    let emb = pairs.embeddings.matrix();
    let d = pairs.dim();
    let mut grad = Mat64::zeros(d, d);
    let scale = -1.0 / pairs.train.len() as f64;
    for &(input, target) in &pairs.train {
        let p = bilinear_next_prob(params, pairs, input);
        // E_{p}[v] as the probability-weighted sum of all embedding rows
        let expect = emb.tr_matvec(&p);
        let diff: Vec64 = emb
            .row(target)
            .iter()
            .zip(&expect)
            .map(|(&t, &e)| t - e)
            .collect();
        grad.add_outer(scale, emb.row(input), &diff);
    }
    grad
}

/// Probability window required of a pretrained start: `(1/(2m), 2/m)`.
pub fn pretrained_window(m: usize) -> (f64, f64) {
    (1.0 / (2.0 * m as f64), 2.0 / m as f64)
}

/// Draw or validate an initial `Θ`. Gaussian mode samples i.i.d. `N(0, σ²)`
/// entries (σ = 0 gives the zero matrix); pretrained mode checks that every
/// train pair's probability lies inside [`pretrained_window`] and rejects
/// the candidate otherwise.
pub fn init_theta(
    init: &ThetaInit,
    pairs: &BilinearPairs,
    rng: &mut Rng,
) -> Result<BilinearParams> {
    let d = pairs.dim();
    match init {
        ThetaInit::Gaussian { sigma } => {
            if !sigma.is_finite() || *sigma < 0.0 {
                return Err(Error::InvalidParam {
                    name: "sigma",
                    msg: format!("initialization scale must be non-negative, got {sigma}"),
                });
            }
            let theta = if *sigma == 0.0 {
                Mat64::zeros(d, d)
            } else {
                gauss_matrix(rng, d, d, sigma * sigma)?
            };
            Ok(BilinearParams {
                theta,
                sigma0: *sigma,
            })
        }
        ThetaInit::Pretrained(theta) => {
            let params = BilinearParams {
                theta: theta.clone(),
                sigma0: 0.0,
            };
            let (lo, hi) = pretrained_window(pairs.vocab());
            for &(input, target) in &pairs.train {
                let p = bilinear_next_prob(&params, pairs, input)[target];
                if p <= lo || p >= hi {
                    return Err(Error::PretrainedWindow {
                        input,
                        target,
                        prob: p,
                        lo,
                        hi,
                    });
                }
            }
            Ok(params)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMethod {
    Euler,
    Rk4,
}

/// Gradient-flow discretization options. The trajectory covers the time
/// horizon `dt · steps`; on a checkpoint-to-checkpoint loss increase the
/// integration restarts with `dt` halved (and steps doubled, keeping the
/// horizon and checkpoint times fixed) up to `max_halvings` times.
#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub dt: f64,
    pub steps: usize,
    pub checkpoint_every: usize,
    pub method: FlowMethod,
    /// Stop at the first checkpoint whose training loss is at or below this.
    pub stop_at_loss: Option<f64>,
    pub max_halvings: u32,
}

impl FlowOptions {
    pub fn euler(dt: f64, steps: usize, checkpoint_every: usize) -> Self {
        Self {
            dt,
            steps,
            checkpoint_every: checkpoint_every.max(1),
            method: FlowMethod::Euler,
            stop_at_loss: None,
            max_halvings: 8,
        }
    }
}

/// Time-indexed record of a gradient-flow run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearTrajectory {
    pub times: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub rev_loss: Vec<f64>,
    /// Per checkpoint: probability of each train pair's target.
    pub train_probs: Vec<Vec<f64>>,
    /// Per checkpoint: probability of the held-out pair's target.
    pub rev_prob: Vec<f64>,
    pub dt: f64,
    pub theta_final: Mat64,
}

impl BilinearTrajectory {
    pub fn checkpoints(&self) -> usize {
        self.times.len()
    }

    /// Wide CSV: t, train_loss, rev_loss, min_train_prob, rev_prob.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,train_loss,rev_loss,min_train_prob,rev_prob")?;
        for i in 0..self.times.len() {
            let min_p = self.train_probs[i]
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            writeln!(
                w,
                "{},{},{},{},{}",
                self.times[i], self.train_loss[i], self.rev_loss[i], min_p, self.rev_prob[i]
            )?;
        }
        Ok(())
    }
}

/// Integrate `dΘ/dt = −∇L(Θ)` and record checkpoints. The training loss must
/// be non-increasing checkpoint to checkpoint; a violation halves `dt` and
/// restarts, and persistent violation at the minimal step size is an error.
pub fn integrate_flow(
    params: &BilinearParams,
    pairs: &BilinearPairs,
    opts: &FlowOptions,
) -> Result<BilinearTrajectory> {
    if !opts.dt.is_finite() || opts.dt <= 0.0 {
        return Err(Error::InvalidParam {
            name: "dt",
            msg: format!("step size must be positive, got {}", opts.dt),
        });
    }
    let l0 = forward_loss(params, pairs);
    if !l0.is_finite() {
        return Err(Error::NonFinite("initial training loss"));
    }
    let mut dt = opts.dt;
    let mut steps = opts.steps;
    let mut every = opts.checkpoint_every;
    for _ in 0..=opts.max_halvings {
        match try_integrate(params, pairs, dt, steps, every, opts) {
            Ok(traj) => return Ok(traj),
            Err(Error::StepSizeFailure { .. }) => {
                dt *= 0.5;
                steps *= 2;
                every *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepSizeFailure { dt })
}

fn try_integrate(
    params: &BilinearParams,
    pairs: &BilinearPairs,
    dt: f64,
    steps: usize,
    every: usize,
    opts: &FlowOptions,
) -> Result<BilinearTrajectory> {
    let mut theta = params.clone();
    let mut traj = BilinearTrajectory {
        times: Vec::new(),
        train_loss: Vec::new(),
        rev_loss: Vec::new(),
        train_probs: Vec::new(),
        rev_prob: Vec::new(),
        dt,
        theta_final: params.theta.clone(),
    };
    let mut last_loss = f64::INFINITY;
    // loss increases beyond round-off indicate too coarse a step
    let tol = 1e-9;

    let mut record = |theta: &BilinearParams, t: f64, last: &mut f64| -> Result<bool> {
        let l = forward_loss(theta, pairs);
        if !l.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        if l > *last * (1.0 + tol) + tol {
            return Err(Error::StepSizeFailure { dt });
        }
        *last = l;
        let probs: Vec<f64> = pairs
            .train
            .iter()
            .map(|&(input, target)| bilinear_next_prob(theta, pairs, input)[target])
            .collect();
        let rp = bilinear_next_prob(theta, pairs, pairs.test.0)[pairs.test.1];
        traj.times.push(t);
        traj.train_loss.push(l);
        traj.rev_loss.push(reversal_loss(theta, pairs));
        traj.train_probs.push(probs);
        traj.rev_prob.push(rp);
        Ok(opts.stop_at_loss.map(|c| l <= c).unwrap_or(false))
    };

    let mut done = record(&theta, 0.0, &mut last_loss)?;
    let mut step = 0;
    while step < steps && !done {
        step += 1;
        match opts.method {
            FlowMethod::Euler => {
                let g = loss_gradient(&theta, pairs);
                theta.theta.add_scaled(-dt, &g);
            }
            FlowMethod::Rk4 => {
                let k1 = loss_gradient(&theta, pairs);
                let mut p2 = theta.clone();
                p2.theta.add_scaled(-dt / 2.0, &k1);
                let k2 = loss_gradient(&p2, pairs);
                let mut p3 = theta.clone();
                p3.theta.add_scaled(-dt / 2.0, &k2);
                let k3 = loss_gradient(&p3, pairs);
                let mut p4 = theta.clone();
                p4.theta.add_scaled(-dt, &k3);
                let k4 = loss_gradient(&p4, pairs);
                theta.theta.add_scaled(-dt / 6.0, &k1);
                theta.theta.add_scaled(-dt / 3.0, &k2);
                theta.theta.add_scaled(-dt / 3.0, &k3);
                theta.theta.add_scaled(-dt / 6.0, &k4);
            }
        }
        if !theta.theta.is_finite() {
            return Err(Error::NonFinite("theta update"));
        }
        if step % every == 0 || step == steps {
            done = record(&theta, step as f64 * dt, &mut last_loss)?;
        }
    }
    traj.theta_final = theta.theta;
    Ok(traj)
}

/// Outcome of checking the separation claim
/// `L_rev(t)/L_rev(0) ≥ (L(t)/L(0))^ε` at every checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationReport {
    pub eps: f64,
    /// Minimum over checkpoints of `lhs − rhs`.
    pub worst_margin: f64,
    pub first_violation_time: Option<f64>,
    pub ok: bool,
}

pub fn separation_check(traj: &BilinearTrajectory, eps: f64) -> SeparationReport {
    let l0 = traj.train_loss[0];
    let r0 = traj.rev_loss[0];
    let mut worst = f64::INFINITY;
    let mut first_violation = None;
    for i in 0..traj.checkpoints() {
        let lhs = traj.rev_loss[i] / r0;
        let rhs = (traj.train_loss[i] / l0).powf(eps);
        let margin = lhs - rhs;
        if margin < worst {
            worst = margin;
        }
        if margin < -1e-12 && first_violation.is_none() {
            first_violation = Some(traj.times[i]);
        }
    }
    SeparationReport {
        eps,
        worst_margin: worst,
        first_violation_time: first_violation,
        ok: first_violation.is_none(),
    }
}

/// First time `τ` with `L(Θ_τ) ≤ c` (linear interpolation between
/// checkpoints) and the reversal loss interpolated at `τ`.
pub fn stop_time_and_floor(traj: &BilinearTrajectory, c: f64) -> Result<(f64, f64)> {
    if traj.train_loss[0] <= c {
        return Ok((traj.times[0], traj.rev_loss[0]));
    }
    for i in 1..traj.checkpoints() {
        if traj.train_loss[i] <= c {
            let (l0, l1) = (traj.train_loss[i - 1], traj.train_loss[i]);
            let frac = if l0 > l1 { (l0 - c) / (l0 - l1) } else { 1.0 };
            let tau = traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1]);
            let rev = traj.rev_loss[i - 1] + frac * (traj.rev_loss[i] - traj.rev_loss[i - 1]);
            return Ok((tau, rev));
        }
    }
    Err(Error::TargetNotReached {
        target: c,
        final_loss: *traj.train_loss.last().unwrap(),
    })
}

/// Sampled scalar trajectories to test against the comparison bounds
/// `f₁(t) ≤ 1/(c₁ t + 1/f₁(0))` and `f₂(t) ≥ f₂(0)·(1 + t/c₃)^{−c₂}`.
#[derive(Clone, Debug, Default)]
pub struct OdeSamples {
    pub times: Vec<f64>,
    pub f1: Option<Vec<f64>>,
    pub f2: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OdeBoundReport {
    /// Worst signed slack of `bound − f₁` (negative means violated).
    pub f1_worst_margin: Option<f64>,
    /// Worst signed slack of `f₂ − bound`.
    pub f2_worst_margin: Option<f64>,
    pub ok: bool,
}

/// Check the comparison bounds pointwise with a small relative slack for
/// integration error in the equality cases.
pub fn ode_bound_check(samples: &OdeSamples, c1: f64, c2: f64, c3: f64) -> OdeBoundReport {
    let tol = 1e-9;
    let mut f1_margin = None;
    if let Some(f1) = &samples.f1 {
        let f10 = f1[0];
        let mut worst = f64::INFINITY;
        for (&t, &v) in samples.times.iter().zip(f1) {
            let bound = 1.0 / (c1 * t + 1.0 / f10);
            worst = worst.min(bound * (1.0 + tol) - v);
        }
        f1_margin = Some(worst);
    }
    let mut f2_margin = None;
    if let Some(f2) = &samples.f2 {
        let f20 = f2[0];
        let mut worst = f64::INFINITY;
        for (&t, &v) in samples.times.iter().zip(f2) {
            let bound = f20 * (1.0 + t / c3).powf(-c2);
            worst = worst.min(v - bound * (1.0 - tol));
        }
        f2_margin = Some(worst);
    }
    let ok =
        f1_margin.map(|m| m >= 0.0).unwrap_or(true) && f2_margin.map(|m| m >= 0.0).unwrap_or(true);
    OdeBoundReport {
        f1_worst_margin: f1_margin,
        f2_worst_margin: f2_margin,
        ok,
    }
}

/// RK4 integration of a scalar ODE `f' = deriv(t, f)`, sampled on a uniform
/// grid; the generator for the synthetic trajectories fed to
/// [`ode_bound_check`].
pub fn integrate_scalar_ode(
    f0: f64,
    t_max: f64,
    steps: usize,
    deriv: impl Fn(f64, f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let h = t_max / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut t = 0.0;
    let mut f = f0;
    times.push(t);
    values.push(f);
    for _ in 0..steps {
        let k1 = deriv(t, f);
        let k2 = deriv(t + h / 2.0, f + h / 2.0 * k1);
        let k3 = deriv(t + h / 2.0, f + h / 2.0 * k2);
        let k4 = deriv(t + h, f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        times.push(t);
        values.push(f);
    }
    (times, values)
}
