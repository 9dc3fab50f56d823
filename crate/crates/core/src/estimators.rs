//! The estimator family: gold-only OLS/ridge, proxy-only OLS, model
//! averaging, weighted loss, the two-step joint estimator with its
//! recovered bias vector, the simultaneous joint heuristic, truncation,
//! the oracle benchmark, cross-validated λ selection, and proxy-response
//! scaling.
//!
//! Every estimator returns coefficients in the original feature space. With
//! standardization enabled, penalized fits run in the standardized space and
//! are mapped back through the recorded column scales; unpenalized fits are
//! scale-equivariant and run on the raw matrices.

use crate::linalg::{
    cholesky_solve, inf_norm, l1_norm, l2_norm_sq, standardize_columns, LinalgError, Matrix,
    SymMatrix,
};
use crate::rng::{stream_rng, Stream};
use crate::solvers::{
    fit_lasso_offset, fit_logistic, fit_logistic_l1_offset, fit_ols, fit_ridge,
    logistic_gradient, logistic_hessian, logistic_objective, FitResult, LossFamily, SolverError,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("gold Gram matrix is singular (n_gold < d or collinear columns); use ridge or the joint estimator")]
    GoldGramSingular,
    #[error("proxy sample covariance is singular; the method requires a positive-definite proxy Gram matrix")]
    ProxyGramSingular,
    #[error("invalid lambda for {kind}: {reason}")]
    InvalidLambda { kind: EstimatorKind, reason: String },
    #[error("{kind} does not support the {loss} loss")]
    UnsupportedLoss { kind: EstimatorKind, loss: LossFamily },
    #[error("oracle estimator requires the true bias vector")]
    OracleNeedsTruth,
    #[error("cross-validation: {0}")]
    CrossValidation(String),
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Gold and proxy samples over a shared feature space.
#[derive(Debug, Clone)]
pub struct TwoTaskData {
    pub gold_x: Matrix,
    pub gold_y: Vec<f64>,
    pub proxy_x: Matrix,
    pub proxy_y: Vec<f64>,
}

impl TwoTaskData {
    pub fn new(
        gold_x: Matrix,
        gold_y: Vec<f64>,
        proxy_x: Matrix,
        proxy_y: Vec<f64>,
    ) -> Result<Self, EstimatorError> {
        if gold_x.cols() != proxy_x.cols() {
            return Err(EstimatorError::Data(format!(
                "gold and proxy designs disagree on the feature count: {} vs {}",
                gold_x.cols(),
                proxy_x.cols()
            )));
        }
        if gold_x.rows() != gold_y.len() || proxy_x.rows() != proxy_y.len() {
            return Err(EstimatorError::Data("row/response count mismatch".into()));
        }
        if gold_y.iter().chain(&proxy_y).any(|v| !v.is_finite()) {
            return Err(EstimatorError::Data("non-finite response value".into()));
        }
        Ok(Self { gold_x, gold_y, proxy_x, proxy_y })
    }

    pub fn d(&self) -> usize {
        self.gold_x.cols()
    }

    pub fn n_gold(&self) -> usize {
        self.gold_x.rows()
    }

    pub fn n_proxy(&self) -> usize {
        self.proxy_x.rows()
    }

    /// Data with only the listed gold rows (proxy untouched).
    pub fn with_gold_rows(&self, idx: &[usize]) -> Self {
        Self {
            gold_x: self.gold_x.select_rows(idx),
            gold_y: idx.iter().map(|&i| self.gold_y[i]).collect(),
            proxy_x: self.proxy_x.clone(),
            proxy_y: self.proxy_y.clone(),
        }
    }
}

/// A recovered or true bias vector together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasVector {
    pub delta: Vec<f64>,
    pub support: Vec<usize>,
}

impl BiasVector {
    pub fn from_delta(delta: Vec<f64>) -> Self {
        let support = delta
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { delta, support }
    }

    pub fn zeros(d: usize) -> Self {
        Self { delta: vec![0.0; d], support: Vec::new() }
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    GoldOls,
    GoldRidge,
    ProxyOls,
    Averaging,
    Weighted,
    Joint,
    JointSimultaneous,
    Oracle,
}

impl EstimatorKind {
    /// Kinds with a tuning parameter (absent λ means: select by CV).
    pub fn is_tunable(&self) -> bool {
        matches!(
            self,
            EstimatorKind::GoldRidge
                | EstimatorKind::Averaging
                | EstimatorKind::Weighted
                | EstimatorKind::Joint
                | EstimatorKind::JointSimultaneous
        )
    }

    pub fn all() -> &'static [EstimatorKind] {
        &[
            EstimatorKind::GoldOls,
            EstimatorKind::GoldRidge,
            EstimatorKind::ProxyOls,
            EstimatorKind::Averaging,
            EstimatorKind::Weighted,
            EstimatorKind::Joint,
            EstimatorKind::JointSimultaneous,
            EstimatorKind::Oracle,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::GoldOls => "gold_ols",
            EstimatorKind::GoldRidge => "gold_ridge",
            EstimatorKind::ProxyOls => "proxy_ols",
            EstimatorKind::Averaging => "averaging",
            EstimatorKind::Weighted => "weighted",
            EstimatorKind::Joint => "joint",
            EstimatorKind::JointSimultaneous => "joint_simultaneous",
            EstimatorKind::Oracle => "oracle",
        }
    }

    fn check_lambda(&self, lambda: f64) -> Result<(), EstimatorError> {
        let bad = |reason: String| Err(EstimatorError::InvalidLambda { kind: *self, reason });
        if !lambda.is_finite() {
            return bad(format!("must be finite, got {lambda}"));
        }
        match self {
            EstimatorKind::Averaging if !(0.0..=1.0).contains(&lambda) => {
                bad(format!("must lie in [0,1], got {lambda}"))
            }
            EstimatorKind::Weighted | EstimatorKind::GoldRidge if lambda < 0.0 => {
                bad(format!("must be >= 0, got {lambda}"))
            }
            EstimatorKind::Joint | EstimatorKind::JointSimultaneous if lambda <= 0.0 => {
                bad(format!("must be > 0, got {lambda}"))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorKind::all()
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = EstimatorKind::all().iter().map(|k| k.name()).collect();
                format!("unknown estimator '{s}'; expected one of {}", names.join(", "))
            })
    }
}

/// Which estimator to run plus its hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    #[serde(default)]
    pub loss: LossFamily,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub truncation_bound: Option<f64>,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        Self { kind, loss: LossFamily::Squared, lambda: None, truncation_bound: None }
    }

    pub fn with_lambda(kind: EstimatorKind, lambda: f64) -> Self {
        Self { kind, loss: LossFamily::Squared, lambda: Some(lambda), truncation_bound: None }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if let Some(l) = self.lambda {
            if !self.kind.is_tunable() {
                return Err(EstimatorError::InvalidLambda {
                    kind: self.kind,
                    reason: "this estimator takes no tuning parameter".into(),
                });
            }
            self.kind.check_lambda(l)?;
        }
        if let Some(b) = self.truncation_bound {
            if !(b.is_finite() && b > 0.0) {
                return Err(EstimatorError::InvalidLambda {
                    kind: self.kind,
                    reason: format!("truncation bound must be > 0, got {b}"),
                });
            }
        }
        Ok(())
    }
}

/// Pipeline options shared by all fits.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions<'a> {
    /// Standardize each design to ‖col‖₂² = n before penalized fits.
    pub standardize: bool,
    /// True bias vector; required by the oracle estimator (synthetic mode).
    pub oracle_bias: Option<&'a BiasVector>,
}

/// A completed estimator fit: coefficients in the original feature space,
/// the λ actually used, and the recovered bias for the joint estimators.
#[derive(Debug, Clone)]
pub struct EstimatorFit {
    pub kind: EstimatorKind,
    pub lambda: Option<f64>,
    pub fit: FitResult,
    pub bias: Option<BiasVector>,
}

fn map_gold_err(e: SolverError) -> EstimatorError {
    match e {
        SolverError::SingularGram { .. } => EstimatorError::GoldGramSingular,
        other => EstimatorError::Solver(other),
    }
}

fn map_proxy_err(e: SolverError) -> EstimatorError {
    match e {
        SolverError::SingularGram { .. } => EstimatorError::ProxyGramSingular,
        other => EstimatorError::Solver(other),
    }
}

fn unscale(beta: &mut [f64], scales: &[f64]) {
    for (b, s) in beta.iter_mut().zip(scales) {
        *b /= s;
    }
}

fn gold_point_fit(
    data: &TwoTaskData,
    loss: LossFamily,
    ridge_lambda: Option<f64>,
    standardize: bool,
) -> Result<FitResult, EstimatorError> {
    match (loss, ridge_lambda) {
        (LossFamily::Squared, None) => {
            fit_ols(&data.gold_x, &data.gold_y).map_err(map_gold_err)
        }
        (LossFamily::Logistic, None) => {
            fit_logistic(&data.gold_x, &data.gold_y, 0.0).map_err(map_gold_err)
        }
        (loss, Some(l)) => {
            let (x, scales) = if standardize {
                let (x, s) = standardize_columns(&data.gold_x)?;
                (x, Some(s))
            } else {
                (data.gold_x.clone(), None)
            };
            let mut fit = match loss {
                LossFamily::Squared => fit_ridge(&x, &data.gold_y, l).map_err(map_gold_err)?,
                LossFamily::Logistic => {
                    fit_logistic(&x, &data.gold_y, l).map_err(map_gold_err)?
                }
            };
            if let Some(s) = scales {
                unscale(&mut fit.beta, &s);
            }
            Ok(fit)
        }
    }
}

fn proxy_point_fit(data: &TwoTaskData, loss: LossFamily) -> Result<FitResult, EstimatorError> {
    match loss {
        LossFamily::Squared => fit_ols(&data.proxy_x, &data.proxy_y).map_err(map_proxy_err),
        LossFamily::Logistic => {
            fit_logistic(&data.proxy_x, &data.proxy_y, 0.0).map_err(map_proxy_err)
        }
    }
}

/// Gold-only estimator (OLS when the spec carries no λ, ridge otherwise).
pub fn estimate_gold(data: &TwoTaskData, spec: &EstimatorSpec) -> Result<FitResult, EstimatorError> {
    match spec.kind {
        EstimatorKind::GoldOls => gold_point_fit(data, spec.loss, None, false),
        EstimatorKind::GoldRidge => {
            let l = spec.lambda.ok_or_else(|| EstimatorError::InvalidLambda {
                kind: spec.kind,
                reason: "ridge needs a lambda (or cross-validate one)".into(),
            })?;
            spec.kind.check_lambda(l)?;
            gold_point_fit(data, spec.loss, Some(l), false)
        }
        other => Err(EstimatorError::Data(format!("estimate_gold got kind {other}"))),
    }
}

/// Proxy-only estimator: OLS (or unpenalized logistic) on the proxy pair.
pub fn estimate_proxy(data: &TwoTaskData, loss: LossFamily) -> Result<FitResult, EstimatorError> {
    proxy_point_fit(data, loss)
}

/// Convex combination (1−λ)·gold OLS + λ·proxy OLS in coefficient space.
pub fn estimate_averaging(
    data: &TwoTaskData,
    lambda: f64,
    loss: LossFamily,
) -> Result<FitResult, EstimatorError> {
    EstimatorKind::Averaging.check_lambda(lambda)?;
    let gold = gold_point_fit(data, loss, None, false)?;
    let proxy = proxy_point_fit(data, loss)?;
    Ok(combine_averaging(data, &gold, &proxy, lambda, loss))
}

fn combine_averaging(
    data: &TwoTaskData,
    gold: &FitResult,
    proxy: &FitResult,
    lambda: f64,
    loss: LossFamily,
) -> FitResult {
    let beta: Vec<f64> = gold
        .beta
        .iter()
        .zip(&proxy.beta)
        .map(|(g, p)| (1.0 - lambda) * g + lambda * p)
        .collect();
    let objective = gold_data_loss(data, &beta, loss);
    FitResult { beta, iterations: 1, converged: gold.converged && proxy.converged, objective }
}

fn gold_data_loss(data: &TwoTaskData, beta: &[f64], loss: LossFamily) -> f64 {
    match loss {
        LossFamily::Squared => {
            let pred = data.gold_x.matvec(beta);
            crate::metrics::mse(&pred, &data.gold_y)
        }
        LossFamily::Logistic => logistic_objective(&data.gold_x, &data.gold_y, beta, 0.0),
    }
}

/// Weighted loss estimator. Squared loss has the closed form
/// (λ·X_gᵀX_g + X_pᵀX_p)⁻¹(λ·X_gᵀY_g + X_pᵀY_p); the logistic variant
/// minimizes λ·(gold mean log-loss) + (proxy mean log-loss) by Newton.
pub fn estimate_weighted(
    data: &TwoTaskData,
    lambda: f64,
    loss: LossFamily,
) -> Result<FitResult, EstimatorError> {
    EstimatorKind::Weighted.check_lambda(lambda)?;
    match loss {
        LossFamily::Squared => {
            let gg = data.gold_x.gram();
            let hg = data.gold_x.xt_vec(&data.gold_y);
            let gp = data.proxy_x.gram();
            let hp = data.proxy_x.xt_vec(&data.proxy_y);
            weighted_closed_form(data, &gg, &hg, &gp, &hp, lambda)
        }
        LossFamily::Logistic => weighted_logistic(data, lambda),
    }
}

fn weighted_closed_form(
    data: &TwoTaskData,
    gg: &SymMatrix,
    hg: &[f64],
    gp: &SymMatrix,
    hp: &[f64],
    lambda: f64,
) -> Result<FitResult, EstimatorError> {
    let a = gg.scaled(lambda).add(gp);
    let rhs: Vec<f64> = hg.iter().zip(hp).map(|(g, p)| lambda * g + p).collect();
    let beta = cholesky_solve(&a, &rhs).map_err(|_| EstimatorError::ProxyGramSingular)?;
    let objective = gold_data_loss(data, &beta, LossFamily::Squared);
    Ok(FitResult { beta, iterations: 1, converged: true, objective })
}

fn weighted_logistic(data: &TwoTaskData, lambda: f64) -> Result<FitResult, EstimatorError> {
    let d = data.d();
    let obj = |beta: &[f64]| {
        lambda * logistic_objective(&data.gold_x, &data.gold_y, beta, 0.0)
            + logistic_objective(&data.proxy_x, &data.proxy_y, beta, 0.0)
    };
    let mut beta = vec![0.0f64; d];
    let mut current = obj(&beta);
    let mut converged = false;
    let mut iter = 0;
    while iter < 200 {
        iter += 1;
        let gg = logistic_gradient(&data.gold_x, &data.gold_y, &beta, 0.0);
        let gp = logistic_gradient(&data.proxy_x, &data.proxy_y, &beta, 0.0);
        let grad: Vec<f64> = gg.iter().zip(&gp).map(|(a, b)| lambda * a + b).collect();
        if inf_norm(&grad) <= 1e-8 {
            converged = true;
            break;
        }
        if inf_norm(&beta) > 1e4 {
            break;
        }
        let hg = logistic_hessian(&data.gold_x, &data.gold_y, &beta, 0.0);
        let hp = logistic_hessian(&data.proxy_x, &data.proxy_y, &beta, 0.0);
        let hess = hg.scaled(lambda).add(&hp);
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = match cholesky_solve(&hess, &neg) {
            Ok(s) => s,
            Err(_) => neg,
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let c = obj(&cand);
            if c <= current {
                beta = cand;
                current = c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(FitResult { beta, iterations: iter, converged, objective: current })
}

/// Two-step joint estimator: proxy fit, then an L1-penalized gold fit on the
/// offset δ = β − β̂_proxy. Returns the combined fit and the recovered bias.
pub fn estimate_joint(
    data: &TwoTaskData,
    lambda: f64,
    loss: LossFamily,
) -> Result<(FitResult, BiasVector), EstimatorError> {
    let proxy = proxy_point_fit(data, loss)?;
    joint_second_stage(data, &proxy.beta, lambda, loss, false)
}

fn joint_second_stage(
    data: &TwoTaskData,
    proxy_beta: &[f64],
    lambda: f64,
    loss: LossFamily,
    standardize: bool,
) -> Result<(FitResult, BiasVector), EstimatorError> {
    EstimatorKind::Joint.check_lambda(lambda)?;
    let (x, scales) = if standardize {
        let (x, s) = standardize_columns(&data.gold_x)?;
        (x, Some(s))
    } else {
        (data.gold_x.clone(), None)
    };
    let offset: Vec<f64> = match &scales {
        Some(s) => proxy_beta.iter().zip(s).map(|(b, sc)| b * sc).collect(),
        None => proxy_beta.to_vec(),
    };
    let mut fit = match loss {
        LossFamily::Squared => fit_lasso_offset(&x, &data.gold_y, &offset, lambda)?,
        LossFamily::Logistic => fit_logistic_l1_offset(&x, &data.gold_y, &offset, lambda)?,
    };
    let delta_fit_space: Vec<f64> =
        fit.beta.iter().zip(&offset).map(|(b, o)| b - o).collect();
    let delta = match &scales {
        Some(s) => delta_fit_space.iter().zip(s).map(|(d, sc)| d / sc).collect(),
        None => delta_fit_space,
    };
    if let Some(s) = &scales {
        unscale(&mut fit.beta, s);
    }
    Ok((fit, BiasVector::from_delta(delta)))
}

const SIMULTANEOUS_MAX_ALTERNATIONS: usize = 1000;
const SIMULTANEOUS_REL_TOL: f64 = 1e-10;

/// Simultaneous joint heuristic:
///   min_{β,δ} ‖Y_g − X_gβ‖² + ‖Y_p − X_p(β − δ)‖² + λ·n_gold·‖δ‖₁
/// by alternating a closed-form β-step with a coordinate-descent δ-step.
/// Squared loss only.
pub fn estimate_joint_simultaneous(
    data: &TwoTaskData,
    lambda: f64,
) -> Result<(FitResult, BiasVector), EstimatorError> {
    EstimatorKind::JointSimultaneous.check_lambda(lambda)?;
    let d = data.d();
    let n_gold = data.n_gold() as f64;
    let n_proxy = data.n_proxy() as f64;

    let gram = data.gold_x.gram().add(&data.proxy_x.gram());
    let chol = crate::linalg::cholesky_factor(&gram)
        .map_err(|_| EstimatorError::ProxyGramSingular)?;
    let hg = data.gold_x.xt_vec(&data.gold_y);

    let objective = |beta: &[f64], delta: &[f64]| {
        let rg: Vec<f64> = data
            .gold_x
            .matvec(beta)
            .iter()
            .zip(&data.gold_y)
            .map(|(p, y)| y - p)
            .collect();
        let shifted: Vec<f64> = beta.iter().zip(delta).map(|(b, dl)| b - dl).collect();
        let rp: Vec<f64> = data
            .proxy_x
            .matvec(&shifted)
            .iter()
            .zip(&data.proxy_y)
            .map(|(p, y)| y - p)
            .collect();
        l2_norm_sq(&rg) + l2_norm_sq(&rp) + lambda * n_gold * l1_norm(delta)
    };

    let mut delta = vec![0.0f64; d];
    let mut beta = vec![0.0f64; d];
    let mut prev = f64::INFINITY;
    let mut iters = 0;
    let mut converged = false;
    for _ in 0..SIMULTANEOUS_MAX_ALTERNATIONS {
        iters += 1;
        // β-step: (X_gᵀX_g + X_pᵀX_p) β = X_gᵀY_g + X_pᵀ(Y_p + X_pδ)
        let shifted_y: Vec<f64> = {
            let xp_delta = data.proxy_x.matvec(&delta);
            data.proxy_y.iter().zip(&xp_delta).map(|(y, v)| y + v).collect()
        };
        let hp = data.proxy_x.xt_vec(&shifted_y);
        let rhs: Vec<f64> = hg.iter().zip(&hp).map(|(a, b)| a + b).collect();
        beta = chol.solve(&rhs);

        // δ-step: min_δ ‖(X_pβ − Y_p) + X_pδ‖² + λ·n_g‖δ‖₁, rephrased as an
        // offset LASSO on the proxy design with penalty λ·n_g/n_p
        let target: Vec<f64> = data
            .proxy_x
            .matvec(&beta)
            .iter()
            .zip(&data.proxy_y)
            .map(|(p, y)| p - y)
            .collect();
        let step = fit_lasso_offset(
            &data.proxy_x,
            &target,
            &vec![0.0; d],
            lambda * n_gold / n_proxy,
        )?;
        delta = step.beta;

        let obj = objective(&beta, &delta);
        debug_assert!(obj <= prev * (1.0 + 1e-9) + 1e-9, "alternation increased objective");
        if (prev - obj).abs() <= SIMULTANEOUS_REL_TOL * prev.abs().max(1.0) {
            prev = obj;
            converged = true;
            break;
        }
        prev = obj;
    }
    let fit = FitResult { beta, iterations: iters, converged, objective: prev };
    Ok((fit, BiasVector::from_delta(delta)))
}

/// Truncated estimator: β̂ unchanged when ‖β̂‖₁ ≤ 2b, zeroed otherwise.
pub fn truncate_estimator(fit: &FitResult, b: f64) -> FitResult {
    assert!(b > 0.0, "truncation bound must be positive");
    if l1_norm(&fit.beta) <= 2.0 * b {
        fit.clone()
    } else {
        FitResult { beta: vec![0.0; fit.beta.len()], ..fit.clone() }
    }
}

/// Oracle benchmark: proxy estimate corrected by the true bias δ*.
pub fn estimate_oracle(
    data: &TwoTaskData,
    delta_star: &BiasVector,
    loss: LossFamily,
) -> Result<FitResult, EstimatorError> {
    let mut fit = proxy_point_fit(data, loss)?;
    for (b, d) in fit.beta.iter_mut().zip(&delta_star.delta) {
        *b += d;
    }
    fit.objective = gold_data_loss(data, &fit.beta, loss);
    Ok(fit)
}

/// λ-independent work hoisted out of a CV loop.
enum Prepared {
    Generic,
    Averaging { gold: FitResult, proxy: FitResult },
    WeightedSq { gg: SymMatrix, hg: Vec<f64>, gp: SymMatrix, hp: Vec<f64> },
    Joint { proxy: FitResult },
}

fn prepare(
    data: &TwoTaskData,
    kind: EstimatorKind,
    loss: LossFamily,
) -> Result<Prepared, EstimatorError> {
    Ok(match (kind, loss) {
        (EstimatorKind::Averaging, _) => Prepared::Averaging {
            gold: gold_point_fit(data, loss, None, false)?,
            proxy: proxy_point_fit(data, loss)?,
        },
        (EstimatorKind::Weighted, LossFamily::Squared) => Prepared::WeightedSq {
            gg: data.gold_x.gram(),
            hg: data.gold_x.xt_vec(&data.gold_y),
            gp: data.proxy_x.gram(),
            hp: data.proxy_x.xt_vec(&data.proxy_y),
        },
        (EstimatorKind::Joint, _) => Prepared::Joint { proxy: proxy_point_fit(data, loss)? },
        _ => Prepared::Generic,
    })
}

fn fit_prepared(
    data: &TwoTaskData,
    spec: &EstimatorSpec,
    opts: &FitOptions,
    prepared: &Prepared,
) -> Result<EstimatorFit, EstimatorError> {
    spec.validate()?;
    let kind = spec.kind;
    let lambda = spec.lambda;
    let need_lambda = || {
        lambda.ok_or_else(|| EstimatorError::InvalidLambda {
            kind,
            reason: "lambda required here (cross-validate first)".into(),
        })
    };
    let (mut fit, bias) = match kind {
        EstimatorKind::GoldOls => (gold_point_fit(data, spec.loss, None, false)?, None),
        EstimatorKind::GoldRidge => {
            (gold_point_fit(data, spec.loss, Some(need_lambda()?), opts.standardize)?, None)
        }
        EstimatorKind::ProxyOls => (proxy_point_fit(data, spec.loss)?, None),
        EstimatorKind::Averaging => {
            let l = need_lambda()?;
            kind.check_lambda(l)?;
            match prepared {
                Prepared::Averaging { gold, proxy } => {
                    (combine_averaging(data, gold, proxy, l, spec.loss), None)
                }
                _ => (estimate_averaging(data, l, spec.loss)?, None),
            }
        }
        EstimatorKind::Weighted => {
            let l = need_lambda()?;
            kind.check_lambda(l)?;
            match (prepared, spec.loss) {
                (Prepared::WeightedSq { gg, hg, gp, hp }, LossFamily::Squared) => {
                    (weighted_closed_form(data, gg, hg, gp, hp, l)?, None)
                }
                _ => (estimate_weighted(data, l, spec.loss)?, None),
            }
        }
        EstimatorKind::Joint => {
            let l = need_lambda()?;
            let proxy_beta = match prepared {
                Prepared::Joint { proxy } => proxy.beta.clone(),
                _ => proxy_point_fit(data, spec.loss)?.beta,
            };
            let (fit, bias) =
                joint_second_stage(data, &proxy_beta, l, spec.loss, opts.standardize)?;
            (fit, Some(bias))
        }
        EstimatorKind::JointSimultaneous => {
            if spec.loss == LossFamily::Logistic {
                return Err(EstimatorError::UnsupportedLoss { kind, loss: spec.loss });
            }
            let l = need_lambda()?;
            let (fit, bias) = if opts.standardize {
                simultaneous_standardized(data, l)?
            } else {
                estimate_joint_simultaneous(data, l)?
            };
            (fit, Some(bias))
        }
        EstimatorKind::Oracle => {
            let truth = opts.oracle_bias.ok_or(EstimatorError::OracleNeedsTruth)?;
            (estimate_oracle(data, truth, spec.loss)?, None)
        }
    };
    if let Some(b) = spec.truncation_bound {
        fit = truncate_estimator(&fit, b);
    }
    Ok(EstimatorFit { kind, lambda, fit, bias })
}

/// Simultaneous joint with both designs rescaled by the gold column scales,
/// so the δ penalty lives in one standardized space; coefficients map back.
fn simultaneous_standardized(
    data: &TwoTaskData,
    lambda: f64,
) -> Result<(FitResult, BiasVector), EstimatorError> {
    let (gold_std, scales) = standardize_columns(&data.gold_x)?;
    let mut proxy_scaled = data.proxy_x.clone();
    for (j, s) in scales.iter().enumerate() {
        proxy_scaled.scale_col(j, 1.0 / s);
    }
    let std_data = TwoTaskData::new(
        gold_std,
        data.gold_y.clone(),
        proxy_scaled,
        data.proxy_y.clone(),
    )?;
    let (mut fit, bias) = estimate_joint_simultaneous(&std_data, lambda)?;
    unscale(&mut fit.beta, &scales);
    let delta: Vec<f64> = bias.delta.iter().zip(&scales).map(|(d, s)| d / s).collect();
    Ok((fit, BiasVector::from_delta(delta)))
}

/// Fit one estimator spec. The λ must already be resolved for tunable kinds;
/// use [`select_lambda_cv`] first when it is absent.
pub fn fit_estimator(
    data: &TwoTaskData,
    spec: &EstimatorSpec,
    opts: &FitOptions,
) -> Result<EstimatorFit, EstimatorError> {
    let prepared = Prepared::Generic;
    fit_prepared(data, spec, opts, &prepared)
}

/// Outcome of a cross-validated λ search.
#[derive(Debug, Clone)]
pub struct CvSelection {
    pub lambda: f64,
    /// (λ, validation score) per grid point, in grid order.
    pub scores: Vec<(f64, f64)>,
    /// Final model refit on all gold rows at the chosen λ.
    pub fit: EstimatorFit,
}

/// 70/30 train/validation split of the GOLD rows (proxy data fully available
/// to every candidate), validation-MSE (or mean log-loss) selection, ties
/// broken toward larger λ, final refit on all gold rows.
pub fn select_lambda_cv(
    data: &TwoTaskData,
    spec: &EstimatorSpec,
    opts: &FitOptions,
    grid: &[f64],
    split_seed: u64,
) -> Result<CvSelection, EstimatorError> {
    if grid.is_empty() {
        return Err(EstimatorError::CrossValidation("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(EstimatorError::CrossValidation("grid must be sorted ascending".into()));
    }
    if !spec.kind.is_tunable() {
        return Err(EstimatorError::CrossValidation(format!(
            "{} takes no tuning parameter",
            spec.kind
        )));
    }
    let n = data.n_gold();
    if n < 10 {
        return Err(EstimatorError::CrossValidation(format!(
            "need at least 10 gold rows for the 70/30 split, have {n}"
        )));
    }
    let n_train = ((0.7 * n as f64).round() as usize).clamp(1, n - 1);
    let n_val = n - n_train;
    if n_val < 2 {
        return Err(EstimatorError::CrossValidation(format!(
            "70/30 split leaves only {n_val} validation row(s)"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(split_seed, Stream::CvSplit);
    idx.shuffle(&mut rng);
    let (train_idx, val_idx) = idx.split_at(n_train);

    let train = data.with_gold_rows(train_idx);
    let val_x = data.gold_x.select_rows(val_idx);
    let val_y: Vec<f64> = val_idx.iter().map(|&i| data.gold_y[i]).collect();

    let prepared = prepare(&train, spec.kind, spec.loss)?;
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &l in grid {
        let cand = EstimatorSpec { lambda: Some(l), ..*spec };
        let fitted = fit_prepared(&train, &cand, opts, &prepared)?;
        let score = match spec.loss {
            LossFamily::Squared => {
                crate::metrics::mse(&val_x.matvec(&fitted.fit.beta), &val_y)
            }
            LossFamily::Logistic => logistic_objective(&val_x, &val_y, &fitted.fit.beta, 0.0),
        };
        scores.push((l, score));
        // `<=` so later (larger) λ wins ties
        if best.map_or(true, |(_, s)| score <= s) {
            best = Some((l, score));
        }
    }
    let (lambda, _) = best.expect("nonempty grid");
    let final_spec = EstimatorSpec { lambda: Some(lambda), ..*spec };
    let fit = fit_estimator(data, &final_spec, opts)?;
    Ok(CvSelection { lambda, scores, fit })
}

/// Grid helpers for λ selection.
pub fn log_spaced_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points >= 2);
    let (a, b) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn linear_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(max > min && points >= 2);
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Rescale the proxy responses by `factor`; with `factor` absent, estimate
/// it as mean(|Y_gold|)/mean(|Y_proxy|) on a random half of each cohort
/// ("hold-out slice") drawn from the given generator.
pub fn scale_proxy_responses<R: Rng>(
    data: &TwoTaskData,
    factor: Option<f64>,
    rng: &mut R,
) -> Result<(TwoTaskData, f64), EstimatorError> {
    let factor = match factor {
        Some(f) => {
            if !(f.is_finite() && f != 0.0) {
                return Err(EstimatorError::DegenerateScale(format!(
                    "scale factor must be finite and nonzero, got {f}"
                )));
            }
            f
        }
        None => {
            let half = |y: &[f64], rng: &mut R| -> Vec<f64> {
                let mut idx: Vec<usize> = (0..y.len()).collect();
                idx.shuffle(rng);
                idx.truncate((y.len() / 2).max(1));
                idx.into_iter().map(|i| y[i]).collect()
            };
            let g = half(&data.gold_y, rng);
            let p = half(&data.proxy_y, rng);
            let mg = l1_norm(&g) / g.len() as f64;
            let mp = l1_norm(&p) / p.len() as f64;
            if mp == 0.0 {
                return Err(EstimatorError::DegenerateScale(
                    "held-out proxy responses are identically zero".into(),
                ));
            }
            mg / mp
        }
    };
    let proxy_y: Vec<f64> = data.proxy_y.iter().map(|v| v * factor).collect();
    let scaled = TwoTaskData::new(
        data.gold_x.clone(),
        data.gold_y.clone(),
        data.proxy_x.clone(),
        proxy_y,
    )?;
    Ok((scaled, factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::orthonormal_design;

    fn toy_data() -> TwoTaskData {
        // gold: 6 rows over 2 features; proxy: 12 rows, related coefficients
        let gold_x = Matrix::from_rows(&[
            vec![1.0, 0.2],
            vec![-0.5, 1.1],
            vec![0.3, -0.7],
            vec![1.2, 0.4],
            vec![-0.8, -0.3],
            vec![0.6, 0.9],
        ])
        .unwrap();
        let beta_g = [1.0, -2.0];
        let gold_y: Vec<f64> = (0..6).map(|i| {
            let r = gold_x.row(i);
            r[0] * beta_g[0] + r[1] * beta_g[1] + 0.01 * (i as f64 - 2.5)
        }).collect();
        let proxy_x = Matrix::from_rows(&[
            vec![0.9, 0.1],
            vec![-0.4, 1.0],
            vec![0.2, -0.9],
            vec![1.1, 0.3],
            vec![-0.7, -0.2],
            vec![0.5, 0.8],
            vec![0.3, 0.6],
            vec![-1.0, 0.4],
            vec![0.8, -0.5],
            vec![-0.2, -1.1],
            vec![1.3, 0.7],
            vec![-0.6, 0.2],
        ])
        .unwrap();
        let beta_p = [0.7, -2.0];
        let proxy_y: Vec<f64> = (0..12).map(|i| {
            let r = proxy_x.row(i);
            r[0] * beta_p[0] + r[1] * beta_p[1] - 0.01 * (i as f64 - 5.5)
        }).collect();
        TwoTaskData::new(gold_x, gold_y, proxy_x, proxy_y).unwrap()
    }

    #[test]
    fn averaging_endpoints_match_components() {
        let data = toy_data();
        let gold = estimate_gold(&data, &EstimatorSpec::new(EstimatorKind::GoldOls)).unwrap();
        let proxy = estimate_proxy(&data, LossFamily::Squared).unwrap();
        let a0 = estimate_averaging(&data, 0.0, LossFamily::Squared).unwrap();
        let a1 = estimate_averaging(&data, 1.0, LossFamily::Squared).unwrap();
        for j in 0..2 {
            assert!((a0.beta[j] - gold.beta[j]).abs() <= 1e-10);
            assert!((a1.beta[j] - proxy.beta[j]).abs() <= 1e-10);
        }
    }

    #[test]
    fn averaging_midpoint() {
        let gold = FitResult { beta: vec![2.0, 0.0], iterations: 1, converged: true, objective: 0.0 };
        let proxy = FitResult { beta: vec![0.0, 2.0], iterations: 1, converged: true, objective: 0.0 };
        let data = toy_data();
        let mid = combine_averaging(&data, &gold, &proxy, 0.5, LossFamily::Squared);
        assert_eq!(mid.beta, vec![1.0, 1.0]);
    }

    #[test]
    fn weighted_endpoints() {
        let data = toy_data();
        let proxy = estimate_proxy(&data, LossFamily::Squared).unwrap();
        let w0 = estimate_weighted(&data, 0.0, LossFamily::Squared).unwrap();
        for j in 0..2 {
            assert!((w0.beta[j] - proxy.beta[j]).abs() <= 1e-10);
        }
        let gold = estimate_gold(&data, &EstimatorSpec::new(EstimatorKind::GoldOls)).unwrap();
        let w_inf = estimate_weighted(&data, 1e12, LossFamily::Squared).unwrap();
        for j in 0..2 {
            assert!((w_inf.beta[j] - gold.beta[j]).abs() <= 1e-4);
        }
    }

    #[test]
    fn weighted_equals_averaging_on_identity_designs() {
        // Σ_gold = Σ_proxy = I exactly: weighted(λ) must equal
        // averaging(λ') with λ' = n_proxy/(λ·n_gold + n_proxy)
        let mut rng = stream_rng(13, Stream::Design);
        let n_g = 20;
        let n_p = 50;
        let d = 4;
        let gx = orthonormal_design(n_g, d, &mut rng);
        let px = orthonormal_design(n_p, d, &mut rng);
        let gy: Vec<f64> = (0..n_g).map(|i| gx.row(i)[0] - 0.5 * gx.row(i)[2] + 0.1 * (i as f64).sin()).collect();
        let py: Vec<f64> = (0..n_p).map(|i| px.row(i)[0] + 0.3 * px.row(i)[1] - 0.2 * (i as f64).cos()).collect();
        let data = TwoTaskData::new(gx, gy, px, py).unwrap();
        for &lambda in &[0.0, 0.3, 1.0, 4.0, 50.0] {
            let w = estimate_weighted(&data, lambda, LossFamily::Squared).unwrap();
            let lp = n_p as f64 / (lambda * n_g as f64 + n_p as f64);
            let a = estimate_averaging(&data, lp, LossFamily::Squared).unwrap();
            for j in 0..d {
                assert!(
                    (w.beta[j] - a.beta[j]).abs() <= 1e-10,
                    "lambda {lambda}: {} vs {}",
                    w.beta[j],
                    a.beta[j]
                );
            }
        }
    }

    #[test]
    fn joint_penalty_dominates_returns_proxy() {
        let data = toy_data();
        let proxy = estimate_proxy(&data, LossFamily::Squared).unwrap();
        let n = data.n_gold() as f64;
        let pred = data.gold_x.matvec(&proxy.beta);
        let r0: Vec<f64> = data.gold_y.iter().zip(&pred).map(|(y, p)| y - p).collect();
        let lambda = 2.0 * inf_norm(&data.gold_x.xt_vec(&r0)) * 2.0 / n;
        let (fit, bias) = estimate_joint(&data, lambda, LossFamily::Squared).unwrap();
        assert!(bias.support.is_empty());
        for j in 0..2 {
            assert_eq!(fit.beta[j], proxy.beta[j]);
        }
    }

    #[test]
    fn joint_vanishing_penalty_matches_gold_ols() {
        let data = toy_data();
        let gold = estimate_gold(&data, &EstimatorSpec::new(EstimatorKind::GoldOls)).unwrap();
        let (fit, _) = estimate_joint(&data, 1e-10, LossFamily::Squared).unwrap();
        for j in 0..2 {
            assert!((fit.beta[j] - gold.beta[j]).abs() <= 1e-5);
        }
    }

    #[test]
    fn simultaneous_heavy_penalty_is_weighted_at_one() {
        let data = toy_data();
        let (fit, bias) = estimate_joint_simultaneous(&data, 1e6).unwrap();
        assert!(bias.support.is_empty());
        let w1 = estimate_weighted(&data, 1.0, LossFamily::Squared).unwrap();
        for j in 0..2 {
            assert!((fit.beta[j] - w1.beta[j]).abs() <= 1e-8);
        }
    }

    #[test]
    fn truncation_rules() {
        let fit = FitResult { beta: vec![1.0, 0.5], iterations: 1, converged: true, objective: 0.0 };
        // ‖β‖₁ = 1.5 ≤ 2·1
        assert_eq!(truncate_estimator(&fit, 1.0).beta, vec![1.0, 0.5]);
        let big = FitResult { beta: vec![1.6, 0.5], iterations: 1, converged: true, objective: 0.0 };
        assert_eq!(truncate_estimator(&big, 1.0).beta, vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_zero_bias_is_proxy() {
        let data = toy_data();
        let proxy = estimate_proxy(&data, LossFamily::Squared).unwrap();
        let oracle = estimate_oracle(&data, &BiasVector::zeros(2), LossFamily::Squared).unwrap();
        assert_eq!(oracle.beta, proxy.beta);
    }

    #[test]
    fn cv_singleton_grid_returns_it() {
        let data = big_toy_data();
        let spec = EstimatorSpec::new(EstimatorKind::Joint);
        let sel = select_lambda_cv(&data, &spec, &FitOptions::default(), &[0.37], 5).unwrap();
        assert_eq!(sel.lambda, 0.37);
    }

    #[test]
    fn cv_noiseless_gold_prefers_interpolation() {
        // noiseless gold data: tiny λ attains ~zero validation error
        let mut rng = stream_rng(3, Stream::Design);
        let gx = orthonormal_design(24, 3, &mut rng);
        let beta = [1.0, -0.7, 0.4];
        let gy: Vec<f64> = (0..24).map(|i| crate::linalg::dot(gx.row(i), &beta)).collect();
        let px = orthonormal_design(40, 3, &mut rng);
        let py: Vec<f64> = (0..40).map(|i| crate::linalg::dot(px.row(i), &[0.5, -0.7, 0.4])).collect();
        let data = TwoTaskData::new(gx, gy, px, py).unwrap();
        let spec = EstimatorSpec::new(EstimatorKind::Joint);
        let sel =
            select_lambda_cv(&data, &spec, &FitOptions::default(), &[1e-6, 1e3], 11).unwrap();
        assert_eq!(sel.lambda, 1e-6);
    }

    #[test]
    fn cv_is_deterministic() {
        let data = big_toy_data();
        let spec = EstimatorSpec::new(EstimatorKind::Weighted);
        let grid = log_spaced_grid(1e-4, 10.0, 12);
        let a = select_lambda_cv(&data, &spec, &FitOptions::default(), &grid, 9).unwrap();
        let b = select_lambda_cv(&data, &spec, &FitOptions::default(), &grid, 9).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn cv_rejects_bad_inputs() {
        let data = big_toy_data();
        let spec = EstimatorSpec::new(EstimatorKind::Joint);
        assert!(select_lambda_cv(&data, &spec, &FitOptions::default(), &[], 0).is_err());
        assert!(
            select_lambda_cv(&data, &spec, &FitOptions::default(), &[1.0, 0.5], 0).is_err()
        );
        let small = data.with_gold_rows(&[0, 1, 2, 3, 4]);
        assert!(select_lambda_cv(&small, &spec, &FitOptions::default(), &[0.1], 0).is_err());
    }

    #[test]
    fn proxy_scaling_identity_and_guard() {
        let data = toy_data();
        let mut rng = stream_rng(0, Stream::ScaleSplit);
        let (same, f) = scale_proxy_responses(&data, Some(1.0), &mut rng).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(same.proxy_y, data.proxy_y);
        assert!(scale_proxy_responses(&data, Some(0.0), &mut rng).is_err());
    }

    #[test]
    fn proxy_scaling_estimates_magnitude_ratio() {
        // proxy responses uniformly 10× the gold magnitude; the estimate is
        // within ±20% across random hold-out splits once the cohorts are
        // large enough for the half-means to stabilize
        let mut rng = stream_rng(4, Stream::Design);
        let gx = orthonormal_design(60, 2, &mut rng);
        let px = orthonormal_design(120, 2, &mut rng);
        let gy: Vec<f64> = (0..60).map(|i| 1.5 + (i as f64 * 0.37).sin()).collect();
        let py: Vec<f64> = (0..120).map(|i| 10.0 * (1.5 + (i as f64 * 0.37).sin())).collect();
        let data = TwoTaskData::new(gx, gy, px, py).unwrap();
        for seed in 0..5 {
            let mut rng = stream_rng(seed, Stream::ScaleSplit);
            let (_, f) = scale_proxy_responses(&data, None, &mut rng).unwrap();
            assert!((f - 0.1).abs() <= 0.02, "estimated factor {f} (seed {seed})");
        }
    }

    #[test]
    fn gold_ols_underdetermined_errors() {
        // 2 gold rows over 3 features
        let gx = Matrix::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, -0.5]]).unwrap();
        let px = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let data =
            TwoTaskData::new(gx, vec![1.0, 2.0], px, vec![0.5, 1.0, -0.5, 1.0]).unwrap();
        match estimate_gold(&data, &EstimatorSpec::new(EstimatorKind::GoldOls)) {
            Err(EstimatorError::GoldGramSingular) => {}
            other => panic!("expected gold-singular error, got {other:?}"),
        }
        // the joint estimator still works there
        let (fit, _) = estimate_joint(&data, 0.5, LossFamily::Squared).unwrap();
        assert!(fit.beta.iter().all(|v| v.is_finite()));
    }

    fn big_toy_data() -> TwoTaskData {
        let mut rng = stream_rng(21, Stream::Design);
        let gx = orthonormal_design(30, 3, &mut rng);
        let gy: Vec<f64> =
            (0..30).map(|i| gx.row(i)[0] * 2.0 - gx.row(i)[1] + (i as f64 * 0.7).sin() * 0.3).collect();
        let px = orthonormal_design(60, 3, &mut rng);
        let py: Vec<f64> =
            (0..60).map(|i| px.row(i)[0] * 1.8 - px.row(i)[1] + (i as f64 * 0.9).cos() * 0.3).collect();
        TwoTaskData::new(gx, gy, px, py).unwrap()
    }
}
