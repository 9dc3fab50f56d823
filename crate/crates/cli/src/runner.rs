//! Seeded multi-trial experiment runner.
//!
//! Trials are independent jobs derived from (base_seed, trial index); they
//! may run concurrently under a --jobs limit, and outputs are buffered and
//! written in trial order so concurrency never changes the output bytes.

use crate::config::{ExperimentConfig, Mode, PlotFormat, ProxyScale};
use crate::ingest::{check_schema_match, ingest_csv, IngestedData};
use anyhow::{Context, Result};
use proxyreg::estimators::{
    select_lambda_cv, fit_estimator, EstimatorError, EstimatorFit, EstimatorKind, EstimatorSpec,
    FitOptions, TwoTaskData,
};
use proxyreg::linalg::Matrix;
use proxyreg::metrics::{auc, mse, param_error};
use proxyreg::rng::{derive_trial_seed, stream_rng, Stream};
use proxyreg::solvers::{logistic_objective, LossFamily};
use proxyreg::synthgen::{generate_scenario, ScenarioInstance};
use proxyreg::BiasVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

/// One (trial, estimator) cell of the results table.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub estimator: EstimatorKind,
    pub lambda: Option<f64>,
    pub l1_error: Option<f64>,
    pub l2sq_error: Option<f64>,
    pub auc: Option<f64>,
    pub n_support_recovered: Option<usize>,
    pub runtime_ms: u64,
    pub skip_reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub estimator: EstimatorKind,
    pub trials_used: usize,
    pub skipped: usize,
    pub mean_l1: Option<f64>,
    pub ci95_l1: Option<f64>,
    pub mean_l2sq: Option<f64>,
    pub ci95_l2sq: Option<f64>,
    pub mean_auc: Option<f64>,
    pub ci95_auc: Option<f64>,
    pub mean_lambda: Option<f64>,
    pub mean_runtime_ms: f64,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<TrialRow>,
    pub aggregate: Vec<AggregateRow>,
    pub trials_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub plot_svg: Option<PathBuf>,
}

enum ModeInputs {
    Synthetic,
    Csv { gold: IngestedData, proxy: IngestedData },
}

/// Run the configured experiment: per-trial seeded data, CV where λ is
/// unset, per-estimator metrics, and deterministic CSV outputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let specs = config.specs()?;
    if config.loss == LossFamily::Logistic && config.scale_proxy != ProxyScale::Off {
        anyhow::bail!("proxy-response scaling applies to continuous responses; disable it in logistic mode");
    }

    let inputs = match config.mode {
        Mode::Synthetic => ModeInputs::Synthetic,
        Mode::Csv => {
            let csv_cfg = config.csv.as_ref().expect("validated");
            let gold = ingest_csv(&csv_cfg.gold_path, &csv_cfg.target, config.loss)?;
            let proxy = ingest_csv(&csv_cfg.proxy_path, &csv_cfg.target, config.loss)?;
            check_schema_match(&gold, &proxy)?;
            if gold.dropped_rows + proxy.dropped_rows > 0 {
                eprintln!(
                    "dropped rows with missing values: gold {}, proxy {}",
                    gold.dropped_rows, proxy.dropped_rows
                );
            }
            ModeInputs::Csv { gold, proxy }
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let rows: Vec<Vec<TrialRow>> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(t, config, &specs, &inputs))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<TrialRow> = rows.into_iter().flatten().collect();
    let aggregate = aggregate_rows(&specs, &rows);

    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;
    let trials_csv = config.output_dir.join("trials.csv");
    write_trials_csv(&trials_csv, &rows)?;
    let aggregate_csv = config.output_dir.join("aggregate.csv");
    write_aggregate_csv(&aggregate_csv, &aggregate)?;
    let plot_svg = match config.plot {
        PlotFormat::Off => None,
        PlotFormat::Svg => {
            let path = config.output_dir.join("errors.svg");
            let svg = crate::plot::error_bars_svg(&aggregate, config.loss);
            std::fs::write(&path, svg)?;
            Some(path)
        }
    };
    Ok(ExperimentOutput { rows, aggregate, trials_csv, aggregate_csv, plot_svg })
}

fn run_trial(
    trial: usize,
    config: &ExperimentConfig,
    specs: &[EstimatorSpec],
    inputs: &ModeInputs,
) -> Result<Vec<TrialRow>> {
    let seed = derive_trial_seed(config.base_seed, trial as u64);
    let prepared = match inputs {
        ModeInputs::Synthetic => prepare_synthetic_trial(config, seed)?,
        ModeInputs::Csv { gold, proxy } => prepare_csv_trial(config, seed, gold, proxy)?,
    };
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        rows.push(run_estimator_cell(trial, seed, config, spec, &prepared));
    }
    Ok(rows)
}

/// Everything one trial's estimator fits share.
struct PreparedTrial {
    data: TwoTaskData,
    truth: Option<TrialTruth>,
    /// held-out gold rows for predictive scoring (logistic AUC / test MSE)
    test: Option<(Matrix, Vec<f64>)>,
}

struct TrialTruth {
    beta_star: Vec<f64>,
    delta_star: BiasVector,
}

fn prepare_synthetic_trial(config: &ExperimentConfig, seed: u64) -> Result<PreparedTrial> {
    let mut scenario = config.scenario.expect("validated");
    scenario.seed = seed;
    let instance = generate_scenario(&scenario).map_err(|e| anyhow::anyhow!("{e}"))?;
    match config.loss {
        LossFamily::Squared => {
            let data = apply_proxy_scaling(config, seed, instance.data.clone())?;
            Ok(PreparedTrial {
                data,
                truth: Some(TrialTruth {
                    beta_star: instance.beta_gold_star.clone(),
                    delta_star: instance.delta_star.clone(),
                }),
                test: None,
            })
        }
        LossFamily::Logistic => prepare_synthetic_logistic(config, seed, &instance),
    }
}

/// Logistic synthetic mode: Bernoulli labels from the linear scores, and a
/// held-out slice of gold rows for AUC scoring. Because the gold design is a
/// prefix of the proxy design, held-out rows are removed from BOTH training
/// cohorts.
fn prepare_synthetic_logistic(
    config: &ExperimentConfig,
    seed: u64,
    instance: &ScenarioInstance,
) -> Result<PreparedTrial> {
    let data = &instance.data;
    let n_gold = data.n_gold();
    let n_proxy = data.n_proxy();
    let beta_star = &instance.beta_gold_star;
    let beta_proxy_star: Vec<f64> = beta_star
        .iter()
        .zip(&instance.delta_star.delta)
        .map(|(b, d)| b - d)
        .collect();

    let mut label_rng = stream_rng(seed, Stream::Labels);
    let gold_labels: Vec<f64> = data
        .gold_x
        .matvec(beta_star)
        .iter()
        .map(|&z| {
            let p = 1.0 / (1.0 + (-z).exp());
            if label_rng.random_range(0.0..1.0) < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let proxy_labels: Vec<f64> = data
        .proxy_x
        .matvec(&beta_proxy_star)
        .iter()
        .map(|&z| {
            let p = 1.0 / (1.0 + (-z).exp());
            if label_rng.random_range(0.0..1.0) < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    let mut idx: Vec<usize> = (0..n_gold).collect();
    idx.shuffle(&mut stream_rng(seed, Stream::TestSplit));
    let n_test = ((config.test_frac * n_gold as f64).round() as usize).clamp(1, n_gold - 2);
    let (test_idx, train_idx) = idx.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut test_sorted = test_idx.to_vec();
    test_sorted.sort_unstable();

    let test_x = data.gold_x.select_rows(&test_sorted);
    let test_y: Vec<f64> = test_sorted.iter().map(|&i| gold_labels[i]).collect();

    let gold_x = data.gold_x.select_rows(&train_idx);
    let gold_y: Vec<f64> = train_idx.iter().map(|&i| gold_labels[i]).collect();
    let keep_proxy: Vec<usize> =
        (0..n_proxy).filter(|i| !test_sorted.binary_search(i).is_ok()).collect();
    let proxy_x = data.proxy_x.select_rows(&keep_proxy);
    let proxy_y: Vec<f64> = keep_proxy.iter().map(|&i| proxy_labels[i]).collect();

    Ok(PreparedTrial {
        data: TwoTaskData::new(gold_x, gold_y, proxy_x, proxy_y)
            .map_err(|e| anyhow::anyhow!("{e}"))?,
        truth: Some(TrialTruth {
            beta_star: beta_star.clone(),
            delta_star: instance.delta_star.clone(),
        }),
        test: Some((test_x, test_y)),
    })
}

fn prepare_csv_trial(
    config: &ExperimentConfig,
    seed: u64,
    gold: &IngestedData,
    proxy: &IngestedData,
) -> Result<PreparedTrial> {
    let n_gold = gold.x.rows();
    anyhow::ensure!(n_gold >= 10, "need at least 10 gold rows, have {n_gold}");
    let mut idx: Vec<usize> = (0..n_gold).collect();
    idx.shuffle(&mut stream_rng(seed, Stream::TestSplit));
    let n_test = ((config.test_frac * n_gold as f64).round() as usize).clamp(1, n_gold - 2);
    let (test_idx, train_idx) = idx.split_at(n_test);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut test_sorted = test_idx.to_vec();
    test_sorted.sort_unstable();

    let test_x = gold.x.select_rows(&test_sorted);
    let test_y: Vec<f64> = test_sorted.iter().map(|&i| gold.y[i]).collect();
    let data = TwoTaskData::new(
        gold.x.select_rows(&train_idx),
        train_idx.iter().map(|&i| gold.y[i]).collect(),
        proxy.x.clone(),
        proxy.y.clone(),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    let data = apply_proxy_scaling(config, seed, data)?;
    Ok(PreparedTrial { data, truth: None, test: Some((test_x, test_y)) })
}

fn apply_proxy_scaling(
    config: &ExperimentConfig,
    seed: u64,
    data: TwoTaskData,
) -> Result<TwoTaskData> {
    let factor = match config.scale_proxy {
        ProxyScale::Off => return Ok(data),
        ProxyScale::Auto => None,
        ProxyScale::Factor(f) => Some(f),
    };
    let mut rng = stream_rng(seed, Stream::ScaleSplit);
    let (scaled, _) = proxyreg::estimators::scale_proxy_responses(&data, factor, &mut rng)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(scaled)
}

fn run_estimator_cell(
    trial: usize,
    seed: u64,
    config: &ExperimentConfig,
    spec: &EstimatorSpec,
    prepared: &PreparedTrial,
) -> TrialRow {
    let start = Instant::now();
    let opts = FitOptions {
        standardize: config.standardize,
        oracle_bias: prepared.truth.as_ref().map(|t| &t.delta_star),
    };
    let outcome: Result<EstimatorFit, EstimatorError> =
        if spec.lambda.is_none() && spec.kind.is_tunable() {
            let grid = if spec.kind == EstimatorKind::Averaging {
                config.cv.averaging_values()
            } else {
                config.cv.values()
            };
            select_lambda_cv(&prepared.data, spec, &opts, &grid, seed).map(|sel| sel.fit)
        } else {
            fit_estimator(&prepared.data, spec, &opts)
        };
    let runtime_ms = start.elapsed().as_millis() as u64;

    match outcome {
        Ok(fit) => {
            let (l1_error, l2sq_error) = match &prepared.truth {
                Some(t) => {
                    let (l1, l2sq) = param_error(&fit.fit.beta, &t.beta_star);
                    (Some(l1), Some(l2sq))
                }
                None => (None, None),
            };
            let auc_value = prepared.test.as_ref().and_then(|(tx, ty)| {
                if config.loss == LossFamily::Logistic {
                    auc(&tx.matvec(&fit.fit.beta), ty).ok()
                } else {
                    None
                }
            });
            TrialRow {
                trial,
                estimator: spec.kind,
                lambda: fit.lambda,
                l1_error,
                l2sq_error,
                auc: auc_value,
                n_support_recovered: fit.bias.as_ref().map(|b| b.support.len()),
                runtime_ms,
                skip_reason: None,
            }
        }
        Err(e) => TrialRow {
            trial,
            estimator: spec.kind,
            lambda: spec.lambda,
            l1_error: None,
            l2sq_error: None,
            auc: None,
            n_support_recovered: None,
            runtime_ms,
            skip_reason: Some(skip_code(&e)),
        },
    }
}

/// Machine-readable reason codes for skipped estimator cells.
fn skip_code(e: &EstimatorError) -> String {
    use proxyreg::solvers::SolverError;
    match e {
        EstimatorError::GoldGramSingular => "gold_gram_singular".into(),
        EstimatorError::ProxyGramSingular => "proxy_gram_singular".into(),
        EstimatorError::UnsupportedLoss { .. } => "unsupported_loss".into(),
        EstimatorError::OracleNeedsTruth => "oracle_needs_truth".into(),
        EstimatorError::Solver(SolverError::DegenerateLabels) => "degenerate_labels".into(),
        EstimatorError::Solver(SolverError::SingularGram { .. }) => "singular_gram".into(),
        EstimatorError::CrossValidation(_) => "cv_infeasible".into(),
        EstimatorError::InvalidLambda { .. } => "invalid_lambda".into(),
        EstimatorError::DegenerateScale(_) => "degenerate_scale".into(),
        _ => "error".into(),
    }
}

fn mean_and_ci(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(1.96 * var.sqrt() / n.sqrt()))
}

fn aggregate_rows(specs: &[EstimatorSpec], rows: &[TrialRow]) -> Vec<AggregateRow> {
    specs
        .iter()
        .map(|spec| {
            let cells: Vec<&TrialRow> =
                rows.iter().filter(|r| r.estimator == spec.kind).collect();
            let used: Vec<&&TrialRow> =
                cells.iter().filter(|r| r.skip_reason.is_none()).collect();
            let collect = |f: fn(&TrialRow) -> Option<f64>| -> Vec<f64> {
                used.iter().filter_map(|r| f(r)).collect()
            };
            let l1 = collect(|r| r.l1_error);
            let l2 = collect(|r| r.l2sq_error);
            let auc_v = collect(|r| r.auc);
            let lambdas = collect(|r| r.lambda);
            let (mean_l1, ci95_l1) = mean_and_ci(&l1);
            let (mean_l2sq, ci95_l2sq) = mean_and_ci(&l2);
            let (mean_auc, ci95_auc) = mean_and_ci(&auc_v);
            let mean_lambda = if lambdas.is_empty() {
                None
            } else {
                Some(lambdas.iter().sum::<f64>() / lambdas.len() as f64)
            };
            let mean_runtime_ms = if used.is_empty() {
                0.0
            } else {
                used.iter().map(|r| r.runtime_ms as f64).sum::<f64>() / used.len() as f64
            };
            AggregateRow {
                estimator: spec.kind,
                trials_used: used.len(),
                skipped: cells.len() - used.len(),
                mean_l1,
                ci95_l1,
                mean_l2sq,
                ci95_l2sq,
                mean_auc,
                ci95_auc,
                mean_lambda,
                mean_runtime_ms,
            }
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_trials_csv(path: &PathBuf, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "trial",
        "estimator",
        "lambda",
        "l1_error",
        "l2sq_error",
        "auc",
        "n_support_recovered",
        "runtime_ms",
        "skip_reason",
    ])?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.estimator.to_string(),
            fmt_opt(r.lambda),
            fmt_opt(r.l1_error),
            fmt_opt(r.l2sq_error),
            fmt_opt(r.auc),
            r.n_support_recovered.map(|v| v.to_string()).unwrap_or_default(),
            r.runtime_ms.to_string(),
            r.skip_reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_aggregate_csv(path: &PathBuf, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "estimator",
        "trials_used",
        "skipped",
        "mean_l1",
        "ci95_l1",
        "mean_l2sq",
        "ci95_l2sq",
        "mean_auc",
        "ci95_auc",
        "mean_lambda",
        "mean_runtime_ms",
    ])?;
    for r in rows {
        w.write_record([
            r.estimator.to_string(),
            r.trials_used.to_string(),
            r.skipped.to_string(),
            fmt_opt(r.mean_l1),
            fmt_opt(r.ci95_l1),
            fmt_opt(r.mean_l2sq),
            fmt_opt(r.ci95_l2sq),
            fmt_opt(r.mean_auc),
            fmt_opt(r.ci95_auc),
            fmt_opt(r.mean_lambda),
            r.mean_runtime_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Render the aggregate table for the terminal.
pub fn format_aggregate(rows: &[AggregateRow], loss: LossFamily) -> String {
    let mut out = String::new();
    let header = match loss {
        LossFamily::Squared => format!(
            "{:<20} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "estimator", "trials", "mean_l1", "mean_l2sq", "ci95_l2sq", "mean_lambda", "skipped"
        ),
        LossFamily::Logistic => format!(
            "{:<20} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "estimator", "trials", "mean_auc", "ci95_auc", "mean_l2sq", "mean_lambda", "skipped"
        ),
    };
    out.push_str(&header);
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
    for r in rows {
        let line = match loss {
            LossFamily::Squared => format!(
                "{:<20} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
                r.estimator.to_string(),
                r.trials_used,
                fmt(r.mean_l1),
                fmt(r.mean_l2sq),
                fmt(r.ci95_l2sq),
                fmt(r.mean_lambda),
                r.skipped
            ),
            LossFamily::Logistic => format!(
                "{:<20} {:>7} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
                r.estimator.to_string(),
                r.trials_used,
                fmt(r.mean_auc),
                fmt(r.ci95_auc),
                fmt(r.mean_l2sq),
                fmt(r.mean_lambda),
                r.skipped
            ),
        };
        out.push_str(&line);
    }
    out
}

