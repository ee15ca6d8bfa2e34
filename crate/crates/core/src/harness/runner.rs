//! Experiment dispatch, artifact writing, and per-run criterion checks.
//!
//! Every run writes under `out/<experiment>/`:
//! `manifest.json` (config, config hash, code version), `results.csv`
//! (fixed columns per experiment), `summary.json` (the typed result) and
//! `series.jsonl` (raw per-replica records). Identical configurations
//! produce byte-identical `results.csv`.

use crate::error::{Result, SimError};
use crate::fields::TestFunction;
use crate::harness::config::ExperimentConfig;
use crate::harness::criteria::{self, CriterionOutcome};
use crate::stats::experiments::{self as exp, ModelContext, RawRecord};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub experiment: String,
    pub out_dir: PathBuf,
    pub criteria: Vec<CriterionOutcome>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

/// Initialize the worker pool once from `SIMLAB_WORKERS` (default: all
/// available parallelism). Replica reduction is order-deterministic, so the
/// worker count never changes any emitted number.
pub fn init_workers() {
    if let Ok(v) = std::env::var("SIMLAB_WORKERS") {
        if let Ok(workers) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build_global();
        }
    }
}

fn first_test_function(cfg: &ExperimentConfig, default: &str) -> Result<TestFunction> {
    let name = cfg.test_functions.first().map(String::as_str).unwrap_or(default);
    TestFunction::parse(name)
}

/// The even, exactly mass-zero default test function
/// `sqrt(2) her_2 - her_0`; safe for every energy/Wick precondition.
pub fn balanced_bump() -> TestFunction {
    TestFunction::combination(
        2f64.sqrt(),
        TestFunction::hermite(2),
        -1.0,
        TestFunction::hermite(0),
    )
}

fn grid_or<T: Clone>(grid: &[T], default: &[T]) -> Vec<T> {
    if grid.is_empty() {
        default.to_vec()
    } else {
        grid.to_vec()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    init_workers();
    let spec = cfg.model.to_spec()?;
    let seed = cfg.master_seed;
    let dir = out_root.join(&cfg.experiment);
    std::fs::create_dir_all(&dir)?;

    let mut criteria_out: Vec<CriterionOutcome> = Vec::new();
    let mut raw: Vec<RawRecord> = Vec::new();
    let (header, rows, summary): (Vec<String>, Vec<Vec<String>>, serde_json::Value) =
        match cfg.experiment.as_str() {
            "verify-model" => {
                let r = exp::verify_model(&spec)?;
                let header = cols(&[
                    "ellipticity",
                    "reversible",
                    "finite_range",
                    "window_size",
                    "gradient",
                    "diffusivity",
                    "flux",
                    "flux_second",
                ]);
                let rows = vec![vec![
                    fmt(r.ellipticity),
                    r.reversible.to_string(),
                    r.finite_range.to_string(),
                    r.window_size.to_string(),
                    r.gradient.to_string(),
                    fmt(r.diffusivity),
                    fmt(r.flux),
                    fmt(r.flux_second),
                ]];
                (header, rows, serde_json::to_value(&r)?)
            }
            "stationarity" => {
                let mctx = ModelContext::build(spec)?;
                let params = exp::StationarityParams {
                    replicas: cfg.replicas,
                    ..Default::default()
                };
                let r = exp::stationarity(&mctx, &params, seed)?;
                criteria_out.push(criteria::c01_exact_oracle(&r));
                criteria_out.push(criteria::c02_conservation(&r));
                raw = r.raw.clone();
                let header = cols(&["observable", "estimate", "std_error", "target", "sigmas"]);
                let rows = vec![
                    stat_row("occupation", &r.occupation, r.occupation_target),
                    stat_row("pair", &r.pair_correlation, r.pair_target),
                    stat_row("chi", &r.chi_hat, r.chi_target),
                    vec![
                        "oracle_tv".into(),
                        fmt(r.oracle_tv),
                        String::new(),
                        fmt(criteria::ORACLE_TV_MAX),
                        String::new(),
                    ],
                ];
                (header, rows, serde_json::to_value(&r)?)
            }
            "whitenoise" => {
                let mctx = ModelContext::build(spec)?;
                let r = exp::whitenoise(&mctx, cfg.replicas, seed)?;
                criteria_out.push(criteria::c03_whitenoise(&r));
                raw = r.raw.clone();
                let header = cols(&[
                    "variance",
                    "target",
                    "rel_err",
                    "ks",
                    "skewness",
                    "excess_kurtosis",
                    "cross_corr",
                    "cross_corr_se",
                ]);
                let rows = vec![vec![
                    fmt(r.variance),
                    fmt(r.variance_target),
                    fmt(r.variance_rel_err),
                    fmt(r.gaussianity.ks_distance),
                    fmt(r.gaussianity.skewness),
                    fmt(r.gaussianity.excess_kurtosis),
                    fmt(r.cross_correlation),
                    fmt(r.cross_correlation_se),
                ]];
                (header, rows, serde_json::to_value(&r)?)
            }
            "eoe" => {
                let residual = grid_or(
                    &cfg.grids.ell.iter().map(|&l| l as i64).collect::<Vec<_>>(),
                    &[8, 16, 32, 64, 128, 256, 512],
                );
                let decay: Vec<i64> = vec![8, 16, 32, 64, 128];
                let r = exp::eoe(&residual, &decay)?;
                criteria_out.push(criteria::c04_equivalence_of_ensembles(&r));
                let header = cols(&["ell", "residual_minus_sign"]);
                let rows = r
                    .residual_grid
                    .iter()
                    .zip(&r.minus_residuals)
                    .map(|(&l, &v)| vec![l.to_string(), fmt(v)])
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "gap" => {
                let r = exp::gap_experiment(&cfg.model.rate, seed)?;
                criteria_out.push(criteria::c05_spectral_gap(&r));
                let header = cols(&["l", "gap_times_l_squared"]);
                let rows = r
                    .scaled_gaps
                    .iter()
                    .map(|(l, g)| vec![l.to_string(), fmt(*g)])
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "bg1" => {
                let u = first_test_function(cfg, "hermite:0")?;
                let params = exp::Bg1Params {
                    n_grid: grid_or(&cfg.grids.n, &[16, 32, 64, 128]),
                    ring_mult: cfg.model.ring_mult,
                    t: cfg.model.horizon,
                    replicas: cfg.replicas,
                };
                let r = exp::bg1(
                    &cfg.model.rate,
                    cfg.model.asymmetry,
                    cfg.model.density,
                    &u,
                    &params,
                    seed,
                )?;
                criteria_out.push(criteria::c07_first_order_bg(&r));
                raw = r.raw.clone();
                let header = cols(&["n", "variance", "slope"]);
                let rows = r
                    .n_grid
                    .iter()
                    .zip(&r.variances)
                    .map(|(&n, &v)| vec![n.to_string(), fmt(v), fmt(r.fit.slope)])
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "bg2" => {
                let mctx = ModelContext::build(spec)?;
                let u = first_test_function(cfg, "hermite:2")?;
                let default_ells: Vec<usize> = (4..=64).collect();
                let params = exp::Bg2Params {
                    ell_grid: grid_or(&cfg.grids.ell, &default_ells),
                    t: cfg.model.horizon,
                    replicas: cfg.replicas,
                    refinement_n: grid_or(&cfg.grids.n, &[16, 32, 64]),
                    refinement_replicas: cfg.replicas * 3,
                    refinement_eps: cfg.grids.eps.first().copied().unwrap_or(0.25),
                    ring_mult: cfg.model.ring_mult,
                };
                let r = exp::bg2(&mctx, &u, &params, seed)?;
                criteria_out.push(criteria::c06_second_order_bg(&r));
                raw = r.raw.clone();
                let header = cols(&["ell", "measured", "std_error", "envelope", "ratio"]);
                let rows = r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            row.ell.to_string(),
                            fmt(row.measured),
                            fmt(row.measured_se),
                            fmt(row.envelope),
                            fmt(row.ratio),
                        ]
                    })
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "qv" => {
                let u = first_test_function(cfg, "hermite:0")?;
                let params = exp::QvParams {
                    n_grid: grid_or(&cfg.grids.n, &[16, 32, 64]),
                    ring_mult: cfg.model.ring_mult,
                    t: cfg.model.horizon,
                    replicas: cfg.replicas,
                };
                let r = exp::qv_convergence(
                    &cfg.model.rate,
                    cfg.model.asymmetry,
                    cfg.model.density,
                    &u,
                    &params,
                    seed,
                )?;
                criteria_out.push(criteria::c09_quadratic_variation(&r));
                raw = r.raw.clone();
                let header = cols(&["n", "qv_over_t", "target", "rel_err"]);
                let rows = r
                    .n_grid
                    .iter()
                    .zip(&r.qv_by_n)
                    .map(|(&n, &v)| {
                        vec![n.to_string(), fmt(v), fmt(r.qv_target), fmt(r.qv_rel_err)]
                    })
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "energy" | "holder" => {
                let mctx = ModelContext::build(spec)?;
                let u = match cfg.test_functions.first() {
                    Some(name) => TestFunction::parse(name)?,
                    None => balanced_bump(),
                };
                let params = exp::EnergyParams {
                    t_grid: grid_or(&cfg.grids.t, &[0.05, 0.1, 0.2, 0.4]),
                    eps_grid: grid_or(&cfg.grids.eps, &[0.25, 0.125, 0.0625]),
                    replicas: cfg.replicas,
                };
                let r = exp::energy_conditions(&mctx, &u, &params, seed)?;
                criteria_out.push(criteria::c08_energy_holder(&r));
                raw = r.raw.clone();
                let header = cols(&["t", "b_second_moment", "holder_slope"]);
                let rows = r
                    .t_grid
                    .iter()
                    .zip(&r.b_second_moments)
                    .map(|(&t, &m)| vec![fmt(t), fmt(m), fmt(r.holder_fit.slope)])
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "fm" => {
                let mctx = ModelContext::build(spec)?;
                let m_grid = grid_or(&cfg.grids.m, &[1.0, 2.0, 4.0]);
                let r = exp::fm_convergence(&mctx, &m_grid, cfg.replicas, seed)?;
                raw = r.raw.clone();
                let header =
                    cols(&["M", "variance", "energy_diff", "variance_ratio", "energy_ratio"]);
                let rows = r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            fmt(row.m),
                            fmt(row.variance),
                            fmt(row.energy_diff),
                            fmt(row.variance_ratio),
                            fmt(row.energy_ratio),
                        ]
                    })
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "height" => {
                let mctx = ModelContext::build(spec)?;
                let u = match cfg.test_functions.first() {
                    Some(name) => TestFunction::parse(name)?,
                    None => balanced_bump(),
                };
                let params = exp::HeightParams {
                    static_replicas: cfg.replicas.max(4000),
                    dynamic_replicas: cfg.replicas.min(512),
                    eps: cfg.grids.eps.first().copied().unwrap_or(0.25),
                    x_macro: grid_or(&cfg.grids.x, &[1.0, 2.0, 4.0]),
                };
                let r = exp::height_experiment(&mctx, &u, &params, seed)?;
                criteria_out.push(criteria::c12_height(&r));
                raw = r.raw.clone();
                let header = cols(&["x_macro", "variance", "target"]);
                let rows = r
                    .variance_points
                    .iter()
                    .map(|(x, v, t)| vec![fmt(*x), fmt(*v), fmt(*t)])
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            "she-compare" => {
                let mctx = ModelContext::build(spec)?;
                let u = match cfg.test_functions.first() {
                    Some(name) => TestFunction::parse(name)?,
                    None => balanced_bump(),
                };
                let length = mctx.spec.macro_length();
                let dx = cfg.spde.dx.unwrap_or(1.0 / 16.0);
                let cells = (length / dx).round() as usize;
                let dt = cfg.spde.dt.unwrap_or(0.8 * dx * dx / 4.0);
                let params = exp::SheCompareParams { replicas: cfg.replicas, cells, dt };
                let r = exp::she_compare(&mctx, &u, &params, seed)?;
                criteria_out.push(criteria::c10_cole_hopf(&r));
                raw = r.raw.clone();
                let header = cols(&[
                    "ks",
                    "particle_mean",
                    "particle_var",
                    "reference_mean",
                    "reference_var",
                ]);
                let rows = vec![vec![
                    fmt(r.ks_distance),
                    fmt(r.particle_mean),
                    fmt(r.particle_var),
                    fmt(r.reference_mean),
                    fmt(r.reference_var),
                ]];
                (header, rows, serde_json::to_value(&r)?)
            }
            "ou-compare" => {
                let mctx = ModelContext::build(spec)?;
                let params = exp::OuCompareParams {
                    t_grid: grid_or(&cfg.grids.t, &[0.05, 0.1]),
                    replicas: cfg.replicas,
                    max_mode: cfg.spde.modes.unwrap_or(8),
                };
                let r = exp::ou_compare(&mctx, &params, seed)?;
                criteria_out.push(criteria::c11_ou_autocovariance(&r));
                raw = r.raw.clone();
                let header = cols(&["t", "particle_autocov", "reference", "rel_err"]);
                let rows = r
                    .t_grid
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        vec![
                            fmt(t),
                            fmt(r.particle_autocov[i]),
                            fmt(r.reference[i]),
                            fmt((r.particle_autocov[i] - r.reference[i]).abs()
                                / r.reference[i].abs()),
                        ]
                    })
                    .collect();
                (header, rows, serde_json::to_value(&r)?)
            }
            other => {
                return Err(SimError::Config(format!("experiment {other:?} not wired")));
            }
        };

    write_manifest(cfg, &dir)?;
    write_csv(&dir, &header, &rows)?;
    write_summary(&dir, &cfg.experiment, &summary, &criteria_out)?;
    write_series(&dir, &raw)?;

    Ok(RunOutcome { experiment: cfg.experiment.clone(), out_dir: dir, criteria: criteria_out })
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn stat_row(
    name: &str,
    est: &crate::stats::EstimateWithError,
    target: f64,
) -> Vec<String> {
    vec![
        name.to_string(),
        fmt(est.estimate),
        fmt(est.std_error),
        fmt(target),
        fmt(est.sigmas_from(target)),
    ]
}

fn write_manifest(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    let manifest = serde_json::json!({
        "config": cfg,
        "config_hash": cfg.config_hash(),
        "code_version": env!("CARGO_PKG_VERSION"),
    });
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn write_csv(dir: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::fs::File::create(dir.join("results.csv"))?;
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

fn write_summary(
    dir: &Path,
    experiment: &str,
    summary: &serde_json::Value,
    criteria: &[CriterionOutcome],
) -> Result<()> {
    let doc = serde_json::json!({
        "experiment": experiment,
        "result": summary,
        "criteria": criteria,
    });
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

fn write_series(dir: &Path, raw: &[RawRecord]) -> Result<()> {
    let mut f = std::fs::File::create(dir.join("series.jsonl"))?;
    for rec in raw {
        writeln!(f, "{}", serde_json::to_string(rec)?)?;
    }
    Ok(())
}
