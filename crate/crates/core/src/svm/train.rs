//! Binary SVM training by coordinate-wise gradient ascent on the dual.
//!
//! Each coordinate step is `α_i ← clip(α_i + ∂W/∂α_i / K_ii, 0, C)` and takes
//! effect immediately. The equality constraint `Σ α_i y_i = 0` is enforced
//! with an augmented Lagrangian: the ascent runs on the kernel `K + ρ` with a
//! bias multiplier that is updated after every sweep, so the effective
//! decision bias is `b + ρ·Σ α_i y_i`.
//!
//! Sweeps first visit only the coefficients that currently violate the KKT
//! conditions. When that set is clean, or three consecutive violator sweeps
//! improve the objective by less than `1e-9` relative, a full sweep over all
//! coefficients follows. One full sweep is one epoch.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::dataview::View;
use crate::error::{Error, Result};

use super::kernel::{GramCache, KernelSpec};
use super::model::{BinarySvmModel, SupportVector};

/// Relative objective gain below which a violator sweep counts as stalled.
const STALL_GAIN: f64 = 1e-9;
const STALL_SWEEPS: usize = 3;
/// Augmented-Lagrangian penalty as a fraction of the mean kernel diagonal.
const RHO_SCALE: f64 = 0.3;
/// Floor for the violator tolerance used to pick chunks.
const MIN_CHUNK_TOL: f64 = 1e-12;
/// Allowed `|Σ α_i y_i|` for the KKT terminator.
pub const EQUALITY_TOL: f64 = 1e-6;

/// Termination bits: 1 = feasibility gap, 2 = KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminator(u8);

impl Terminator {
    pub const GAP: u8 = 1;
    pub const KKT: u8 = 2;

    pub fn new(bits: u8) -> Result<Self> {
        if (1..=3).contains(&bits) {
            Ok(Self(bits))
        } else {
            Err(Error::Config(format!("terminator must be 1, 2 or 3, got {bits}")))
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn uses_gap(self) -> bool {
        self.0 & Self::GAP != 0
    }

    pub fn uses_kkt(self) -> bool {
        self.0 & Self::KKT != 0
    }
}

impl Default for Terminator {
    fn default() -> Self {
        Self(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Box constraint upper bound.
    pub c: f64,
    /// Allowed feasibility gap, relative to `max(1, |primal|)`.
    pub gap_tol: f64,
    pub terminator: Terminator,
    pub max_epochs: usize,
    /// Tolerance on `y_i f(x_i)` for the KKT conditions.
    pub kkt_tol: f64,
    /// Keep the Gram matrix in memory instead of re-evaluating the kernel.
    pub cache_gram: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            gap_tol: 1e-3,
            terminator: Terminator::default(),
            max_epochs: 10_000,
            kkt_tol: 1e-3,
            cache_gram: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.gap_tol > 0.0) || !(self.kkt_tol > 0.0) || self.max_epochs == 0 {
            return Err(Error::Config(format!(
                "need C > 0, gap_tol > 0, kkt_tol > 0, max_epochs >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Objective values recorded after each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
    pub kkt_violators: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: BinarySvmModel,
    /// `α_i` for every training example, in view order.
    pub alphas: Vec<f64>,
    pub converged: bool,
    pub epochs: usize,
    pub trace: Vec<EpochRecord>,
}

/// Training examples with ±1 labels, owned by the trainer.
#[derive(Debug, Clone)]
pub struct Problem {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub ids: Vec<u64>,
}

impl Problem {
    pub fn from_view(data: &View) -> Result<Self> {
        let labels = (0..data.len())
            .map(|i| match data.label(i) {
                1 => Ok(1.0),
                -1 => Ok(-1.0),
                other => Err(Error::NonBinaryLabel(other)),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            points: (0..data.len()).map(|i| data.features(i).into_owned()).collect(),
            labels,
            ids: (0..data.len()).map(|i| data.id(i)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check_both_classes(&self) -> Result<()> {
        let pos = self.labels.iter().any(|&y| y > 0.0);
        let neg = self.labels.iter().any(|&y| y < 0.0);
        if pos && neg {
            Ok(())
        } else {
            Err(Error::SingleClass)
        }
    }
}

/// Kernel values over the training set, cached or evaluated on demand.
pub enum Gram<'a> {
    Cached(Cow<'a, GramCache>),
    Direct { spec: KernelSpec, points: &'a [Vec<f64>] },
}

impl<'a> Gram<'a> {
    pub fn new(spec: &KernelSpec, points: &'a [Vec<f64>], cache: bool) -> Result<Self> {
        if cache {
            return Ok(Gram::Cached(Cow::Owned(GramCache::build(spec, points)?)));
        }
        for i in 0..points.len() {
            for j in i..points.len() {
                let k = spec.eval_unchecked(&points[i], &points[j]);
                if !k.is_finite() {
                    return Err(Error::NonFiniteKernel { i, j, value: k });
                }
            }
        }
        Ok(Gram::Direct { spec: *spec, points })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Gram::Cached(g) => g.get(i, j),
            Gram::Direct { spec, points } => {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                spec.eval_unchecked(&points[a], &points[b])
            }
        }
    }
}

pub fn train_binary(data: &View, spec: &KernelSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    spec.validate()?;
    cfg.validate()?;
    let problem = Problem::from_view(data)?;
    problem.check_both_classes()?;
    let gram = Gram::new(spec, &problem.points, cfg.cache_gram)?;
    train_problem(&problem, &gram, spec, cfg)
}

/// Trains on an already materialized problem and Gram matrix.
pub fn train_problem(problem: &Problem, gram: &Gram<'_>, spec: &KernelSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    problem.check_both_classes()?;
    let mut state = State::new(problem, gram, cfg);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;
    let all: Vec<usize> = (0..problem.len()).collect();
    // Tightened whenever the KKT conditions hold but the gap does not, so
    // chunks keep targeting the coefficients that still move the margin.
    let mut chunk_tol = cfg.kkt_tol;

    while epochs < cfg.max_epochs {
        let mut stalled = 0;
        let mut chunk_sweeps = 0;
        loop {
            let violators = state.violators(chunk_tol);
            if violators.is_empty() || chunk_sweeps >= problem.len().max(10) {
                break;
            }
            let gain = state.sweep(&violators);
            state.update_multiplier();
            chunk_sweeps += 1;
            if gain < STALL_GAIN * state.lagrangian().abs().max(1.0) {
                stalled += 1;
                if stalled >= STALL_SWEEPS {
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        state.sweep(&all);
        state.update_multiplier();
        epochs += 1;

        let bias = state.final_bias();
        let check = state.check(bias, cfg);
        trace.push(EpochRecord {
            epoch: epochs,
            dual: check.dual,
            primal: check.primal,
            gap: check.gap,
            kkt_violators: check.kkt_violators,
        });
        if check.satisfies(cfg) {
            converged = true;
            break;
        }
        if check.kkt_violators == 0 {
            chunk_tol = (chunk_tol * 0.1).max(MIN_CHUNK_TOL);
        }
    }

    let bias = state.final_bias();
    let alphas = state.alpha.clone();
    let support = alphas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| SupportVector {
            index: i,
            alpha: a,
            label: problem.labels[i],
            features: problem.points[i].clone(),
        })
        .collect();
    Ok(TrainOutcome {
        model: BinarySvmModel {
            kernel: *spec,
            c: cfg.c,
            bias,
            support,
        },
        alphas,
        converged,
        epochs,
        trace,
    })
}

struct State<'p, 'g> {
    problem: &'p Problem,
    gram: &'g Gram<'g>,
    c: f64,
    rho: f64,
    alpha: Vec<f64>,
    /// `Σ_j α_j y_j K_ij` for every i.
    output: Vec<f64>,
    /// `Σ_j α_j y_j`
    balance: f64,
    multiplier: f64,
    diag: Vec<f64>,
}

struct Check {
    dual: f64,
    primal: f64,
    gap: f64,
    kkt_violators: usize,
    balance: f64,
}

impl Check {
    fn satisfies(&self, cfg: &TrainConfig) -> bool {
        let kkt = self.kkt_violators == 0 && self.balance.abs() <= EQUALITY_TOL;
        let gap = self.gap <= cfg.gap_tol * self.primal.abs().max(1.0);
        (!cfg.terminator.uses_kkt() || kkt) && (!cfg.terminator.uses_gap() || gap)
    }
}

/// Whether `α` with margin `y·f(x)` meets its KKT condition within `tol`.
pub(crate) fn kkt_holds(alpha: f64, c: f64, margin: f64, tol: f64) -> bool {
    if alpha <= 0.0 {
        margin >= 1.0 - tol
    } else if alpha >= c {
        margin <= 1.0 + tol
    } else {
        (margin - 1.0).abs() <= tol
    }
}

impl<'p, 'g> State<'p, 'g> {
    fn new(problem: &'p Problem, gram: &'g Gram<'g>, cfg: &TrainConfig) -> Self {
        let n = problem.len();
        let diag: Vec<f64> = (0..n).map(|i| gram.get(i, i)).collect();
        let mean_diag = diag.iter().map(|d| d.abs()).sum::<f64>() / n as f64;
        let rho = if mean_diag > 0.0 { RHO_SCALE * mean_diag } else { 1.0 };
        Self {
            problem,
            gram,
            c: cfg.c,
            rho,
            alpha: vec![0.0; n],
            output: vec![0.0; n],
            balance: 0.0,
            multiplier: 0.0,
            diag,
        }
    }

    fn effective_bias(&self) -> f64 {
        self.multiplier + self.rho * self.balance
    }

    /// Augmented Lagrangian at the current multiplier.
    fn lagrangian(&self) -> f64 {
        let y = &self.problem.labels;
        let sum_alpha: f64 = self.alpha.iter().sum();
        let quad: f64 = (0..self.alpha.len()).map(|i| self.alpha[i] * y[i] * self.output[i]).sum();
        sum_alpha - 0.5 * quad - self.multiplier * self.balance - 0.5 * self.rho * self.balance * self.balance
    }

    /// One pass of coordinate steps over `indices`; returns the gain in the
    /// augmented Lagrangian.
    fn sweep(&mut self, indices: &[usize]) -> f64 {
        let y = &self.problem.labels;
        let n = self.alpha.len();
        let mut gain = 0.0;
        for &i in indices {
            let curvature = self.diag[i] + self.rho;
            if curvature <= 0.0 {
                continue;
            }
            let grad = 1.0 - y[i] * (self.output[i] + self.rho * self.balance + self.multiplier);
            let new = (self.alpha[i] + grad / curvature).clamp(0.0, self.c);
            let delta = new - self.alpha[i];
            if delta == 0.0 {
                continue;
            }
            gain += delta * grad - 0.5 * curvature * delta * delta;
            self.alpha[i] = new;
            let step = delta * y[i];
            for j in 0..n {
                self.output[j] += step * self.gram.get(j, i);
            }
            self.balance += step;
        }
        gain
    }

    fn update_multiplier(&mut self) {
        self.multiplier += self.rho * self.balance;
    }

    fn violators(&self, tol: f64) -> Vec<usize> {
        let bias = self.effective_bias();
        let y = &self.problem.labels;
        (0..self.alpha.len())
            .filter(|&i| !kkt_holds(self.alpha[i], self.c, y[i] * (self.output[i] + bias), tol))
            .collect()
    }

    /// Mean of `y_i − Σ_j α_j y_j K_ji` over margin support vectors, or the
    /// effective bias when there are none.
    fn final_bias(&self) -> f64 {
        let y = &self.problem.labels;
        let (sum, count) = (0..self.alpha.len())
            .filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < self.c)
            .fold((0.0, 0usize), |(s, c), i| (s + y[i] - self.output[i], c + 1));
        if count == 0 {
            self.effective_bias()
        } else {
            sum / count as f64
        }
    }

    fn check(&self, bias: f64, cfg: &TrainConfig) -> Check {
        let y = &self.problem.labels;
        let n = self.alpha.len();
        let w2: f64 = (0..n).map(|i| self.alpha[i] * y[i] * self.output[i]).sum();
        let sum_alpha: f64 = self.alpha.iter().sum();
        let mut hinge = 0.0;
        let mut kkt_violators = 0;
        for i in 0..n {
            let margin = y[i] * (self.output[i] + bias);
            hinge += (1.0 - margin).max(0.0);
            if !kkt_holds(self.alpha[i], self.c, margin, cfg.kkt_tol) {
                kkt_violators += 1;
            }
        }
        let primal = 0.5 * w2 + self.c * hinge;
        let dual = sum_alpha - 0.5 * w2;
        Check {
            dual,
            primal,
            gap: primal - dual,
            kkt_violators,
            balance: self.balance,
        }
    }
}

/// Dual objective `W(α) = Σα_i − ½ΣΣ α_i α_j y_i y_j K_ij` for a full
/// coefficient vector.
pub fn dual_objective(problem: &Problem, gram: &Gram<'_>, alphas: &[f64]) -> f64 {
    let n = problem.len();
    let y = &problem.labels;
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Primal minus dual objective of `model` on `data` (labels ±1).
///
/// The primal is `½‖w‖² + C Σ max(0, 1 − y_i f(x_i))`, with `‖w‖²` expanded
/// over the support vectors.
pub fn feasibility_gap(model: &BinarySvmModel, data: &View) -> Result<f64> {
    let mut w2 = 0.0;
    for a in &model.support {
        for b in &model.support {
            w2 += a.alpha * b.alpha * a.label * b.label * model.kernel.eval(&a.features, &b.features)?;
        }
    }
    let mut hinge = 0.0;
    for i in 0..data.len() {
        let y = data.label(i) as f64;
        let margin = y * model.decision_value(&data.features(i))?;
        hinge += (1.0 - margin).max(0.0);
    }
    let sum_alpha: f64 = model.support.iter().map(|s| s.alpha).sum();
    let primal = 0.5 * w2 + model.c * hinge;
    let dual = sum_alpha - 0.5 * w2;
    Ok(primal - dual)
}
