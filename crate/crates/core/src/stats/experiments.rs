//! Experiment drivers: each function runs one named experiment end to end
//! and returns a typed result that the CLI serializes and the acceptance
//! suite asserts on.

use crate::canonical::{
    canonical_expectation, canonical_variance_decay, eoe_expansion_residual, CorrectionSign,
};
use crate::engine::{
    evolve_distribution, exact_generator, replica_rng, run_from,
    sample_initial, LatticeState, NullMonitor,
};
use crate::error::{Result, SimError};
use crate::fields::{
    centered_height, height_profiles, FieldContext, FieldSeries, ObserverSet, TestFunction,
};
use crate::gradient::verify_gradient;
use crate::local_fn::LocalFunction;
use crate::model::{verify_conditions, ConditionReport, ModelSpec};
use crate::sector::{h_minus_one_norm, sector_states, spectral_gap, Gap};
use crate::spde::{cole_hopf_field, SheGrid, SpectralOu};
use crate::stats::estimate::{mean, variance, EstimateWithError, ScalingFit};
use crate::stats::gaussian::{
    correlation_with_se, gaussianity_suite, ks_two_sample, GaussianityReport,
};
use crate::thermo::{chi, ThermoPolynomial, TransportCoefficients};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Everything derived from a `ModelSpec` that experiments share: gradient
/// witness, transport constants, the centered asymmetric current `f`, and
/// the quadratic-variation kernel `zeta_n`.
#[derive(Debug, Clone)]
pub struct ModelContext {
    pub spec: ModelSpec,
    pub report: ConditionReport,
    pub omega: LocalFunction,
    pub omega_centered: LocalFunction,
    pub tc: TransportCoefficients,
    pub f_asym: LocalFunction,
    pub phi_f: ThermoPolynomial,
    pub zeta: LocalFunction,
    pub field_ctx: FieldContext,
}

impl ModelContext {
    pub fn build(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let report = verify_conditions(&spec.rate)?;
        let omega = find_gradient_witness(&spec.rate)?;
        let tc = TransportCoefficients::from_omega(&omega, spec.asymmetry, spec.density);
        let phi_omega = ThermoPolynomial::grand_canonical(&omega);
        let omega_centered = omega.shift(-phi_omega.eval(spec.density));

        let a = spec.asymmetry;
        let rho = spec.density;
        // f = a r eta(0)(1 - eta(1)) - a D(rho) chi(rho): the centered
        // asymmetric part of the instantaneous current.
        let pair_right = LocalFunction::new(vec![0, 1], vec![0.0, 1.0, 0.0, 0.0])?;
        let f_asym = spec
            .rate
            .product(&pair_right)?
            .scale(a)
            .shift(-a * tc.diffusivity * chi(rho));
        let phi_f = ThermoPolynomial::grand_canonical(&f_asym);

        // zeta_n = r { eta(1)(1-eta(0)) + (1 + a/sqrt n) eta(0)(1-eta(1)) }:
        // the total jump-rate kernel entering the quadratic variation.
        let drift = a / (spec.scale as f64).sqrt();
        let pair_kernel =
            LocalFunction::new(vec![0, 1], vec![0.0, 1.0 + drift, 1.0, 0.0])?;
        let zeta = spec.rate.product(&pair_kernel)?;

        let field_ctx = FieldContext::new(&spec, &tc);
        Ok(ModelContext {
            spec,
            report,
            omega,
            omega_centered,
            tc,
            f_asym,
            phi_f,
            zeta,
            field_ctx,
        })
    }

    fn observer(&self, replica: u64) -> ObserverSet {
        ObserverSet::new(self.field_ctx.clone(), replica)
    }
}

/// Solve for the gradient witness, widening the window twice before giving
/// up on the model.
pub fn find_gradient_witness(rate: &LocalFunction) -> Result<LocalFunction> {
    let mut window: Vec<i32> = rate.window.clone();
    window.extend_from_slice(&[0, 1]);
    window.sort_unstable();
    window.dedup();
    for _ in 0..3 {
        match verify_gradient(rate, &window) {
            Ok(omega) => return Ok(omega),
            Err(SimError::Model(_)) => {
                let lo = window.iter().min().unwrap() - 1;
                let hi = window.iter().max().unwrap() + 1;
                window.push(lo);
                window.push(hi);
                window.sort_unstable();
            }
            Err(e) => return Err(e),
        }
    }
    Err(SimError::UnsupportedModel(
        "rate function is not gradient on the widened search windows".into(),
    ))
}

/// Run `replicas` independent trajectories with per-replica observers.
pub fn farm_series(
    mctx: &ModelContext,
    sample_times: &[f64],
    replicas: u64,
    master_seed: u64,
    configure: impl Fn(&mut ObserverSet) + Sync,
) -> Result<Vec<Vec<FieldSeries>>> {
    (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed, rep);
            let init = sample_initial(&mctx.spec, &mut rng);
            let mut obs = mctx.observer(rep);
            configure(&mut obs);
            run_from(&mctx.spec, init, &mut rng, sample_times, &mut obs)?;
            Ok(obs.into_series())
        })
        .collect()
}

fn series_value(series: &[FieldSeries], name: &str, sample_idx: usize) -> f64 {
    series
        .iter()
        .find(|s| s.name == name)
        .map(|s| s.samples[sample_idx].1)
        .expect("series present")
}

/// One raw sample retained for offline recomputation; serialized as a
/// JSON-lines record `{replica, t, name, value}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub replica: u64,
    pub t: f64,
    pub name: String,
    pub value: f64,
}

fn raw_column(name: &str, t: f64, values: &[f64]) -> Vec<RawRecord> {
    values
        .iter()
        .enumerate()
        .map(|(rep, &value)| RawRecord { replica: rep as u64, t, name: name.to_string(), value })
        .collect()
}

// ---------------------------------------------------------------------------
// verify-model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyModelResult {
    pub ellipticity: f64,
    pub reversible: bool,
    pub finite_range: bool,
    pub window_size: usize,
    pub gradient: bool,
    pub omega_window: Vec<i32>,
    pub omega_table: Vec<f64>,
    pub diffusivity: f64,
    pub flux: f64,
    pub flux_second: f64,
}

pub fn verify_model(spec: &ModelSpec) -> Result<VerifyModelResult> {
    let report = verify_conditions(&spec.rate)?;
    if !report.reversible {
        return Err(SimError::Model(
            "rate depends on the exchanged pair; reversibility fails".into(),
        ));
    }
    let mctx = ModelContext::build(spec.clone())?;
    Ok(VerifyModelResult {
        ellipticity: report.ellipticity,
        reversible: report.reversible,
        finite_range: report.finite_range,
        window_size: report.window_size,
        gradient: true,
        omega_window: mctx.omega.window.clone(),
        omega_table: mctx.omega.table.clone(),
        diffusivity: mctx.tc.diffusivity,
        flux: mctx.tc.flux,
        flux_second: mctx.tc.flux_second,
    })
}

// ---------------------------------------------------------------------------
// stationarity (+ engine-vs-exact-oracle checks)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub occupation: EstimateWithError,
    pub occupation_target: f64,
    pub pair_correlation: EstimateWithError,
    pub pair_target: f64,
    pub chi_hat: EstimateWithError,
    pub chi_target: f64,
    pub conservation_ok: bool,
    pub continuity_ok: bool,
    pub crossing_balance_sigmas: Option<f64>,
    pub oracle_tv: f64,
    pub oracle_replicas: u64,
}

pub struct StationarityParams {
    pub replicas: u64,
    pub oracle_replicas: u64,
    pub oracle_ring: usize,
    pub oracle_time: f64,
}

impl Default for StationarityParams {
    fn default() -> Self {
        StationarityParams {
            replicas: 64,
            oracle_replicas: 100_000,
            oracle_ring: 6,
            oracle_time: 1.0,
        }
    }
}

pub fn stationarity(
    mctx: &ModelContext,
    params: &StationarityParams,
    master_seed: u64,
) -> Result<StationarityResult> {
    let spec = &mctx.spec;
    let n_sites = spec.ring_size as f64;
    let horizon = spec.horizon;
    let rho = spec.density;

    // Time-averaged observables via exact integrals; uniform site weights.
    let uniform = vec![1.0 / n_sites; spec.ring_size];
    let occ_fn = LocalFunction::occupation(0);
    let pair_fn = occ_fn.product(&LocalFunction::occupation(1))?;
    let sq_fn = LocalFunction::new(vec![0], vec![rho * rho, (1.0 - rho) * (1.0 - rho)])?;

    struct RepOut {
        occ: f64,
        pair: f64,
        chi_hat: f64,
        conserved: bool,
        continuous: bool,
        fwd: u64,
        bwd: u64,
    }

    let outs: Vec<Result<RepOut>> = (0..params.replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed, rep);
            let init = sample_initial(spec, &mut rng);
            let count0 = init.particle_count;
            let mut obs = mctx.observer(rep);
            obs.integrate_local("occ", &occ_fn, uniform.clone(), 1.0 / horizon);
            obs.integrate_local("pair", &pair_fn, uniform.clone(), 1.0 / horizon);
            obs.integrate_local("sq", &sq_fn, uniform.clone(), 1.0 / horizon);
            let out = run_from(spec, init.clone(), &mut rng, &[horizon], &mut obs)?;
            let conserved = out.final_state.particle_count == count0;
            let continuous = out.final_state.continuity_holds(&init);
            let (fwd, bwd) = obs.crossings();
            let series = obs.into_series();
            Ok(RepOut {
                occ: series_value(&series, "occ", 0),
                pair: series_value(&series, "pair", 0),
                chi_hat: series_value(&series, "sq", 0),
                conserved,
                continuous,
                fwd,
                bwd,
            })
        })
        .collect();
    let outs: Vec<RepOut> = outs.into_iter().collect::<Result<_>>()?;

    let occ = EstimateWithError::from_samples(&outs.iter().map(|o| o.occ).collect::<Vec<_>>());
    let pair =
        EstimateWithError::from_samples(&outs.iter().map(|o| o.pair).collect::<Vec<_>>());
    let chi_hat =
        EstimateWithError::from_samples(&outs.iter().map(|o| o.chi_hat).collect::<Vec<_>>());

    let crossing_balance_sigmas = if spec.asymmetry == 0.0 {
        let fwd: u64 = outs.iter().map(|o| o.fwd).sum();
        let bwd: u64 = outs.iter().map(|o| o.bwd).sum();
        let total = (fwd + bwd) as f64;
        Some((fwd as f64 - bwd as f64).abs() / total.sqrt().max(1.0))
    } else {
        None
    };

    let (oracle_tv, oracle_replicas) = tiny_ring_total_variation(
        &spec.rate,
        spec.asymmetry,
        params.oracle_ring,
        params.oracle_time,
        params.oracle_replicas,
        master_seed ^ 0x5eed_0011,
    )?;

    let mut raw = raw_column("occupation", horizon, &outs.iter().map(|o| o.occ).collect::<Vec<_>>());
    raw.extend(raw_column("pair", horizon, &outs.iter().map(|o| o.pair).collect::<Vec<_>>()));
    raw.extend(raw_column("chi_hat", horizon, &outs.iter().map(|o| o.chi_hat).collect::<Vec<_>>()));
    Ok(StationarityResult {
        raw,
        occupation: occ,
        occupation_target: rho,
        pair_correlation: pair,
        pair_target: rho * rho,
        chi_hat,
        chi_target: chi(rho),
        conservation_ok: outs.iter().all(|o| o.conserved),
        continuity_ok: outs.iter().all(|o| o.continuous),
        crossing_balance_sigmas,
        oracle_tv,
        oracle_replicas,
    })
}

/// Tiny-ring engine-vs-exact-generator check: total variation between the
/// empirical pattern distribution at time `t` (from a fixed alternating
/// initial state) and `delta_init exp(tQ)`.
pub fn tiny_ring_total_variation(
    rate: &LocalFunction,
    asymmetry: f64,
    ring: usize,
    t: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<(f64, u64)> {
    let spec = ModelSpec::new(rate.clone(), asymmetry, 1, 0.5, ring, t)?;
    let q = exact_generator(&spec)?;
    let dim = 1usize << ring;
    // Alternating initial pattern 0101...; fixed so the reference is a
    // single matrix exponential row.
    let mut init_occ = vec![false; ring];
    for (x, o) in init_occ.iter_mut().enumerate() {
        *o = x % 2 == 1;
    }
    let init_state = LatticeState::new(init_occ.clone());
    let init_index: usize =
        init_occ.iter().enumerate().map(|(x, &b)| (b as usize) << x).sum();
    let mut p0 = nalgebra::DVector::zeros(dim);
    p0[init_index] = 1.0;
    let pt = evolve_distribution(&q, &p0, t);

    let counts: Vec<u64> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed, rep);
            let out = run_from(&spec, init_state.clone(), &mut rng, &[], &mut NullMonitor)
                .expect("tiny ring run");
            out.final_state
                .occupancy
                .iter()
                .enumerate()
                .map(|(x, &b)| (b as u64) << x)
                .sum::<u64>()
        })
        .fold(
            || vec![0u64; dim],
            |mut acc, s| {
                acc[s as usize] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; dim],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let total: u64 = counts.iter().sum();
    let tv: f64 = counts
        .iter()
        .enumerate()
        .map(|(s, &c)| (c as f64 / total as f64 - pt[s]).abs())
        .sum::<f64>()
        / 2.0;
    Ok((tv, replicas))
}

// ---------------------------------------------------------------------------
// whitenoise
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitenoiseResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub variance: f64,
    pub variance_target: f64,
    pub variance_rel_err: f64,
    pub gaussianity: GaussianityReport,
    pub cross_correlation: f64,
    pub cross_correlation_se: f64,
    pub replicas: u64,
}

pub fn whitenoise(
    mctx: &ModelContext,
    replicas: u64,
    master_seed: u64,
) -> Result<WhitenoiseResult> {
    let t = mctx.spec.horizon;
    let all = farm_series(mctx, &[t], replicas, master_seed, |obs| {
        obs.probe_density("y0", TestFunction::hermite(0));
        obs.probe_density("y1", TestFunction::hermite(1));
    })?;
    let y0: Vec<f64> = all.iter().map(|s| series_value(s, "y0", 0)).collect();
    let y1: Vec<f64> = all.iter().map(|s| series_value(s, "y1", 0)).collect();
    let var = variance(&y0);
    let target = chi(mctx.spec.density);
    let (r, se) = correlation_with_se(&y0, &y1);
    let mut raw = raw_column("Y(her0)", t, &y0);
    raw.extend(raw_column("Y(her1)", t, &y1));
    Ok(WhitenoiseResult {
        raw,
        variance: var,
        variance_target: target,
        variance_rel_err: (var - target).abs() / target,
        gaussianity: gaussianity_suite(&y0),
        cross_correlation: r,
        cross_correlation_se: se,
        replicas,
    })
}

// ---------------------------------------------------------------------------
// eoe (equivalence of ensembles, exact)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EoeResult {
    pub psi_pair_4_2_error: f64,
    pub minus_sign_slope: f64,
    pub plus_sign_slope: f64,
    pub residual_grid: Vec<i64>,
    pub minus_residuals: Vec<f64>,
    pub decay_slopes: [f64; 3],
}

pub fn eoe(residual_grid: &[i64], decay_grid: &[i64]) -> Result<EoeResult> {
    let pair = LocalFunction::occupation(1).product(&LocalFunction::occupation(2))?;
    let psi = canonical_expectation(&pair, 4, 2)?;
    let psi_err = (psi - 1.0 / 6.0).abs();

    let minus: Vec<f64> = residual_grid
        .iter()
        .map(|&l| eoe_expansion_residual(&pair, l, CorrectionSign::Minus))
        .collect::<Result<_>>()?;
    let plus: Vec<f64> = residual_grid
        .iter()
        .map(|&l| eoe_expansion_residual(&pair, l, CorrectionSign::Plus))
        .collect::<Result<_>>()?;
    let grid_f: Vec<f64> = residual_grid.iter().map(|&l| l as f64).collect();
    let minus_slope = ScalingFit::log_log(&grid_f, &minus).slope;
    let plus_slope = ScalingFit::log_log(&grid_f, &plus).slope;

    let rho = BigRational::new(BigInt::from(1), BigInt::from(2));
    // Case i: phi(rho) = 0 only.
    let f1 = LocalFunction::occupation(1).shift(-0.5);
    // Case ii: phi = phi' = 0 (the asymmetric-current shape at rho = 1/2).
    let f2 = LocalFunction::new(vec![1, 2], vec![0.0, 1.0, 0.0, 0.0])?.shift(-0.25);
    // Case iii: phi = phi' = phi'' = 0 (centered triple product).
    let c: Vec<LocalFunction> =
        (1..=3).map(|i| LocalFunction::occupation(i).shift(-0.5)).collect();
    let f3 = c[0].product(&c[1])?.product(&c[2])?;
    let mut slopes = [0.0f64; 3];
    for (i, f) in [f1, f2, f3].iter().enumerate() {
        let (_, slope) = canonical_variance_decay(f, &rho, decay_grid)?;
        slopes[i] = slope;
    }

    Ok(EoeResult {
        psi_pair_4_2_error: psi_err,
        minus_sign_slope: minus_slope,
        plus_sign_slope: plus_slope,
        residual_grid: residual_grid.to_vec(),
        minus_residuals: minus,
        decay_slopes: slopes,
    })
}

// ---------------------------------------------------------------------------
// gap (spectral gap and H_{-1})
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapResult {
    pub scaled_gaps: Vec<(usize, f64)>,
    pub scaled_gap_min: f64,
    pub scaled_gap_max: f64,
    pub hminus_ratio_max: f64,
    pub hminus_cases: usize,
}

pub fn gap_experiment(rate: &LocalFunction, master_seed: u64) -> Result<GapResult> {
    let mut scaled = Vec::new();
    for l in 2..=12usize {
        let k = l / 2;
        match spectral_gap(l, k, rate)? {
            Gap::Value(g) => scaled.push((l, g * (l * l) as f64)),
            Gap::Degenerate => {
                return Err(SimError::Numerical(format!("degenerate sector at l = {l}")))
            }
        }
    }
    let min = scaled.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max = scaled.iter().map(|p| p.1).fold(0.0f64, f64::max);

    // Random centered functions on each sector; the H_{-1} bound of the
    // sector eigensolver gives ratio <= 1 / min(gap l^2).
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    let mut rng = replica_rng(master_seed, 424_242);
    use rand::Rng;
    for l in 2..=10usize {
        let k = l / 2;
        let states = sector_states(l, k);
        if states.len() < 2 {
            continue;
        }
        for _ in 0..100 {
            let mut f: Vec<f64> = (0..states.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let m = f.iter().sum::<f64>() / f.len() as f64;
            for v in &mut f {
                *v -= m;
            }
            let h = h_minus_one_norm(l, k, rate, &f)?;
            let ff: f64 = f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
            worst = worst.max(h / ((l * l) as f64 * ff));
            cases += 1;
        }
    }
    Ok(GapResult {
        scaled_gaps: scaled,
        scaled_gap_min: min,
        scaled_gap_max: max,
        hminus_ratio_max: worst,
        hminus_cases: cases,
    })
}

// ---------------------------------------------------------------------------
// bg1 (first-order Boltzmann-Gibbs rate)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bg1Result {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub n_grid: Vec<u32>,
    pub variances: Vec<f64>,
    pub fit: ScalingFit,
}

pub struct Bg1Params {
    pub n_grid: Vec<u32>,
    pub ring_mult: usize,
    pub t: f64,
    pub replicas: u64,
}

pub fn bg1(
    rate: &LocalFunction,
    asymmetry: f64,
    rho: f64,
    u: &TestFunction,
    params: &Bg1Params,
    master_seed: u64,
) -> Result<Bg1Result> {
    // f = eta(0) eta(1) with its first-order Boltzmann-Gibbs replacement
    // subtracted: f - phi(rho) - phi'(rho)(eta(0) - rho).
    let f = LocalFunction::occupation(0).product(&LocalFunction::occupation(1))?;
    let phi = ThermoPolynomial::grand_canonical(&f);
    let linear = LocalFunction::occupation(0).shift(-rho).scale(phi.eval_derivative(1, rho));
    let centered = f.shift(-phi.eval(rho)).linear_combination(1.0, &linear, -1.0)?;

    let mut variances = Vec::new();
    let mut raw = Vec::new();
    for &n in &params.n_grid {
        let spec = ModelSpec::new(
            rate.clone(),
            asymmetry,
            n,
            rho,
            params.ring_mult * n as usize,
            params.t,
        )?;
        let mctx = ModelContext::build(spec)?;
        let weights = mctx.field_ctx.geom.point_weights(u);
        let scale = 1.0 / (n as f64).sqrt();
        let all = farm_series(&mctx, &[params.t], params.replicas, master_seed, |obs| {
            obs.integrate_local("v", &centered, weights.clone(), scale);
        })?;
        let vs: Vec<f64> = all.iter().map(|s| series_value(s, "v", 0)).collect();
        raw.extend(raw_column(&format!("bg1:n={n}"), params.t, &vs));
        variances.push(mean(&vs.iter().map(|v| v * v).collect::<Vec<_>>()));
    }
    let xs: Vec<f64> = params.n_grid.iter().map(|&n| n as f64).collect();
    let fit = ScalingFit::log_log(&xs, &variances);
    Ok(Bg1Result { raw, n_grid: params.n_grid.clone(), variances, fit })
}

// ---------------------------------------------------------------------------
// bg2 (second-order Boltzmann-Gibbs)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bg2Row {
    pub ell: usize,
    pub measured: f64,
    pub measured_se: f64,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bg2Result {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub rows: Vec<Bg2Row>,
    pub k_hat: f64,
    pub max_adjacent_drift: f64,
    pub refinement_n: Vec<u32>,
    pub refinement_measured: Vec<f64>,
}

pub struct Bg2Params {
    pub ell_grid: Vec<usize>,
    pub t: f64,
    pub replicas: u64,
    pub refinement_n: Vec<u32>,
    pub refinement_replicas: u64,
    pub refinement_eps: f64,
    pub ring_mult: usize,
}

pub fn bg2(
    mctx: &ModelContext,
    u: &TestFunction,
    params: &Bg2Params,
    master_seed: u64,
) -> Result<Bg2Result> {
    // Theorem hypothesis: exact centering of f at rho.
    let rho = mctx.spec.density;
    if mctx.phi_f.eval(rho).abs() > 1e-12 || mctx.phi_f.eval_derivative(1, rho).abs() > 1e-12 {
        return Err(SimError::Config(format!(
            "bg2 requires phi_f(rho) = phi_f'(rho) = 0; got {} and {}",
            mctx.phi_f.eval(rho),
            mctx.phi_f.eval_derivative(1, rho)
        )));
    }
    let phi2 = mctx.phi_f.eval_derivative(2, rho);
    let t = params.t;

    let (rows, raw) =
        bg2_measure(mctx, u, &params.ell_grid, t, params.replicas, master_seed, phi2)?;

    // Upward drift only: a falling ratio just means the envelope is loose
    // there, which the theorem allows.
    let mut max_drift: f64 = 0.0;
    for w in rows.windows(2) {
        max_drift = max_drift.max(w[1].ratio / w[0].ratio);
    }
    let k_hat = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);

    // Refinement clause: fixed eps, increasing n.
    let mut refinement_measured = Vec::new();
    for &n in &params.refinement_n {
        let spec = ModelSpec::new(
            mctx.spec.rate.clone(),
            mctx.spec.asymmetry,
            n,
            rho,
            params.ring_mult * n as usize,
            t,
        )?;
        let sub = ModelContext::build(spec)?;
        let ell = ((params.refinement_eps * n as f64).round() as usize).max(1);
        let (rows_n, _) = bg2_measure(
            &sub,
            u,
            &[ell],
            t,
            params.refinement_replicas,
            master_seed ^ n as u64,
            phi2,
        )?;
        refinement_measured.push(rows_n[0].measured);
    }

    Ok(Bg2Result {
        raw,
        rows,
        k_hat,
        max_adjacent_drift: max_drift,
        refinement_n: params.refinement_n.clone(),
        refinement_measured,
    })
}

fn bg2_measure(
    mctx: &ModelContext,
    u: &TestFunction,
    ell_grid: &[usize],
    t: f64,
    replicas: u64,
    master_seed: u64,
    phi2: f64,
) -> Result<(Vec<Bg2Row>, Vec<RawRecord>)> {
    let v = mctx.field_ctx.geom.grad_weights(u);
    let v_norm2: f64 = v.iter().map(|x| x * x).sum();
    let n = mctx.spec.scale as f64;
    let ells: Vec<usize> = ell_grid.to_vec();
    // The replacement theorem conditions on the block {1..l}, so f's
    // support must sit inside it: translate {0,1} -> {1,2}.
    let f_in_block = mctx.f_asym.translate(1);
    let all = farm_series(mctx, &[t], replicas, master_seed, |obs| {
        obs.integrate_local("f", &f_in_block, v.clone(), 1.0);
        for &ell in &ells {
            obs.integrate_block_quadratic(&format!("q{ell}"), ell, true, v.clone());
        }
    })?;
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for &ell in ell_grid {
        let functional: Vec<f64> = all
            .iter()
            .map(|s| {
                let f = series_value(s, "f", 0);
                let q = series_value(s, &format!("q{ell}"), 0);
                f - 0.5 * phi2 * q
            })
            .collect();
        raw.extend(raw_column(&format!("bg2:ell={ell}"), t, &functional));
        let samples: Vec<f64> = functional.iter().map(|x| x * x).collect();
        let est = EstimateWithError::from_samples(&samples);
        let envelope = (ell as f64 / (n * n) + t / (ell * ell) as f64) * t * v_norm2;
        rows.push(Bg2Row {
            ell,
            measured: est.estimate,
            measured_se: est.std_error,
            envelope,
            ratio: est.estimate / envelope,
        });
    }
    Ok((rows, raw))
}

// ---------------------------------------------------------------------------
// qv (martingale decomposition and quadratic variation)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QvResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub qv_over_t: f64,
    pub qv_target: f64,
    pub qv_rel_err: f64,
    pub martingale_mean_sigmas: f64,
    pub qv_identity_sigmas: f64,
    pub n_grid: Vec<u32>,
    pub qv_by_n: Vec<f64>,
    pub continuum_target: f64,
}

pub struct QvParams {
    pub n_grid: Vec<u32>,
    pub ring_mult: usize,
    pub t: f64,
    pub replicas: u64,
}

pub fn qv_convergence(
    rate: &LocalFunction,
    asymmetry: f64,
    rho: f64,
    u: &TestFunction,
    params: &QvParams,
    master_seed: u64,
) -> Result<QvResult> {
    let mut qv_by_n = Vec::new();
    let mut headline: Option<(f64, f64, f64, f64)> = None;
    let mut raw = Vec::new();
    let t = params.t;
    for &n in &params.n_grid {
        let spec = ModelSpec::new(
            rate.clone(),
            asymmetry,
            n,
            rho,
            params.ring_mult * n as usize,
            t,
        )?;
        let mctx = ModelContext::build(spec)?;
        let (m_samples, qv_samples) = martingale_samples(&mctx, u, t, params.replicas, master_seed)?;
        let qv_mean = mean(&qv_samples);
        qv_by_n.push(qv_mean / t);
        if Some(&n) == params.n_grid.last() {
            raw.extend(raw_column(&format!("M:n={n}"), t, &m_samples));
            raw.extend(raw_column(&format!("QV:n={n}"), t, &qv_samples));
            let m_est = EstimateWithError::from_samples(&m_samples);
            let paired: Vec<f64> = m_samples
                .iter()
                .zip(&qv_samples)
                .map(|(m, q)| m * m - q)
                .collect();
            let id_est = EstimateWithError::from_samples(&paired);
            let en_u = mctx.field_ctx.geom.energy_n(u);
            let target = 2.0 * chi(rho) * mctx.tc.diffusivity * en_u;
            headline = Some((
                qv_mean / t,
                target,
                m_est.sigmas_from(0.0),
                id_est.sigmas_from(0.0),
            ));
        }
    }
    let (qv_over_t, qv_target, m_sig, id_sig) = headline.expect("n grid nonempty");
    let continuum_target = 2.0 * chi(rho) * 1.0 * u.energy();
    Ok(QvResult {
        raw,
        qv_over_t,
        qv_target,
        qv_rel_err: (qv_over_t - qv_target).abs() / qv_target,
        martingale_mean_sigmas: m_sig,
        qv_identity_sigmas: id_sig,
        n_grid: params.n_grid.clone(),
        qv_by_n,
        continuum_target,
    })
}

/// Per-replica `(M_t(u), predicted QV_t(u))` pairs.
pub fn martingale_samples(
    mctx: &ModelContext,
    u: &TestFunction,
    t: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = mctx.spec.scale as f64;
    let geom = mctx.field_ctx.geom;
    let grad_w = geom.grad_weights(u);
    let lap_w = geom.lap_weights(u);
    let qv_w: Vec<f64> = grad_w.iter().map(|g| g * g / n).collect();
    let all = farm_series(mctx, &[0.0, t], replicas, master_seed, |obs| {
        obs.probe_density("y", u.clone());
        obs.integrate_local("i", &mctx.omega_centered, lap_w.clone(), 1.0 / n.sqrt());
        obs.integrate_local("b", &mctx.f_asym, grad_w.clone(), 1.0);
        obs.integrate_local("qv", &mctx.zeta, qv_w.clone(), 1.0);
    })?;
    let mut ms = Vec::with_capacity(all.len());
    let mut qvs = Vec::with_capacity(all.len());
    for s in &all {
        let y0 = series_value(s, "y", 0);
        let yt = series_value(s, "y", 1);
        let i_t = series_value(s, "i", 1);
        let b_t = series_value(s, "b", 1);
        ms.push(yt - y0 - i_t - b_t);
        qvs.push(series_value(s, "qv", 1));
    }
    Ok((ms, qvs))
}

// ---------------------------------------------------------------------------
// energy / holder (nonlinear field moments and energy conditions)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub t_grid: Vec<f64>,
    pub b_second_moments: Vec<f64>,
    pub holder_fit: ScalingFit,
    pub ec1_ratios: Vec<f64>,
    pub ec1_kappa: f64,
    pub ec1_max_drift: f64,
    pub eps_grid: Vec<f64>,
    /// Moments divided by the continuum envelope `(t-s) eps E(u)`.
    pub ec2_ratios: Vec<f64>,
    pub ec2_kappa: f64,
    /// Moments divided by the finite-n envelope
    /// `((t-s) eps + (t-s)^2/(delta^2 n)) E(u)`, the second-order
    /// Boltzmann-Gibbs error shape at fixed lattice scale; this is the
    /// quantity whose eps-stability is gated.
    pub ec2_ratios_corrected: Vec<f64>,
    pub ec2_max_drift: f64,
    pub ec2p_ratios: Vec<f64>,
    pub ec2p_kappa: f64,
    pub ec2p_ratios_corrected: Vec<f64>,
    pub wick_mean_sigmas: f64,
}

pub struct EnergyParams {
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub replicas: u64,
}

pub fn energy_conditions(
    mctx: &ModelContext,
    u: &TestFunction,
    params: &EnergyParams,
    master_seed: u64,
) -> Result<EnergyResult> {
    let n = mctx.spec.scale as f64;
    let geom = mctx.field_ctx.geom;
    let grad_w = geom.grad_weights(u);
    let exact_lap_w: Vec<f64> =
        (0..mctx.spec.ring_size as i64).map(|x| u.lap(geom.coord(x))).collect();
    let exact_grad_w = geom.exact_grad_weights(u);
    let point_w = geom.point_weights(u);
    let center = LocalFunction::occupation(0).shift(-mctx.spec.density);

    // EC2' needs a mean-zero test function.
    let mass = u.mass().unwrap_or(f64::NAN);
    if !mass.is_finite() || mass.abs() > 1e-6 {
        return Err(SimError::Config(format!(
            "energy-condition suite needs int u = 0; got {mass}"
        )));
    }

    let eps_grid = params.eps_grid.clone();
    let ells: Vec<usize> = eps_grid
        .iter()
        .flat_map(|&e| {
            let l = (e * n).round() as usize;
            [l, l / 2]
        })
        .collect();
    let mut ells_sorted = ells.clone();
    ells_sorted.sort_unstable();
    ells_sorted.dedup();
    for &l in &ells_sorted {
        if l == 0 {
            return Err(SimError::Input("eps below the lattice spacing".into()));
        }
    }

    let t_grid = params.t_grid.clone();
    let all = farm_series(mctx, &t_grid, params.replicas, master_seed, |obs| {
        obs.integrate_local("b", &mctx.f_asym, grad_w.clone(), 1.0);
        obs.integrate_local("ec1", &center, exact_lap_w.clone(), 1.0 / n.sqrt());
        for &l in &ells_sorted {
            // A^eps uses grad u weights, the Wick field uses u weights.
            obs.integrate_block_quadratic(&format!("a{l}"), l, true, exact_grad_w.clone());
            obs.integrate_block_quadratic(&format!("w{l}"), l, true, point_w.clone());
        }
    })?;

    let e_u = u.energy();
    let u_norm2 = crate::fields::inner_product(u, u);
    let last = t_grid.len() - 1;
    let t_last = t_grid[last];

    // Holder clause: E[B_t^2] against t.
    let b_second_moments: Vec<f64> = (0..t_grid.len())
        .map(|ti| mean(&all.iter().map(|s| series_value(s, "b", ti).powi(2)).collect::<Vec<_>>()))
        .collect();
    let holder_fit = ScalingFit::log_log(&t_grid, &b_second_moments);

    // EC1: E[(int_0^t Y_s(lap u) ds)^2] <= kappa t E(u).
    let ec1_ratios: Vec<f64> = (0..t_grid.len())
        .map(|ti| {
            let m2 = mean(
                &all.iter().map(|s| series_value(s, "ec1", ti).powi(2)).collect::<Vec<_>>(),
            );
            m2 / (t_grid[ti] * e_u)
        })
        .collect();
    let ec1_kappa = ec1_ratios.iter().cloned().fold(0.0f64, f64::max);
    let ec1_max_drift = max_adjacent_drift(&ec1_ratios);

    // EC2 and EC2' at the final time, ratios across the eps grid. The
    // continuum envelope is (t-s) eps E(u); at fixed n the difference
    // moment also carries the (t-s)^2/(delta^2 n) term of the second-order
    // Boltzmann-Gibbs bound, so stability is judged against the two-term
    // envelope (the limits are n -> infinity first, then eps -> 0).
    let mut ec2_ratios = Vec::new();
    let mut ec2_ratios_corrected = Vec::new();
    let mut ec2p_ratios = Vec::new();
    let mut ec2p_ratios_corrected = Vec::new();
    for &eps in &eps_grid {
        let l = (eps * n).round() as usize;
        let l2 = l / 2;
        let delta = l2 as f64 / n;
        let finite_n = t_last * eps + t_last * t_last / (delta * delta * n);
        // Deterministic Riemann-sum tails of A^eps - A^{eps/2}.
        let det = |ell: usize| -> f64 {
            let e = ell as f64 / n;
            (chi(mctx.spec.density) / e) * exact_grad_w.iter().sum::<f64>() / n * t_last
        };
        let diff_a: Vec<f64> = all
            .iter()
            .map(|s| {
                (series_value(s, &format!("a{l}"), last) + det(l))
                    - (series_value(s, &format!("a{l2}"), last) + det(l2))
            })
            .collect();
        let m2 = mean(&diff_a.iter().map(|d| d * d).collect::<Vec<_>>());
        ec2_ratios.push(m2 / (t_last * eps * e_u));
        ec2_ratios_corrected.push(m2 / (finite_n * e_u));

        let diff_w: Vec<f64> = all
            .iter()
            .map(|s| {
                series_value(s, &format!("w{l}"), last) - series_value(s, &format!("w{l2}"), last)
            })
            .collect();
        let m2w = mean(&diff_w.iter().map(|d| d * d).collect::<Vec<_>>());
        ec2p_ratios.push(m2w / (t_last * eps * u_norm2));
        ec2p_ratios_corrected.push(m2w / (finite_n * u_norm2));
    }
    let ec2_kappa = ec2_ratios.iter().cloned().fold(0.0f64, f64::max);
    let ec2_max_drift = max_adjacent_drift(&ec2_ratios_corrected);
    let ec2p_kappa = ec2p_ratios.iter().cloned().fold(0.0f64, f64::max);

    // Wick mean: E[A~^eps(u)] = 0 for the finest eps.
    let l_fine = (eps_grid.last().unwrap() * n).round() as usize;
    let wick: Vec<f64> =
        all.iter().map(|s| series_value(s, &format!("w{l_fine}"), last)).collect();
    let wick_mean_sigmas = EstimateWithError::from_samples(&wick).sigmas_from(0.0);

    let mut raw = Vec::new();
    for (ti, &tv) in t_grid.iter().enumerate() {
        let b: Vec<f64> = all.iter().map(|s| series_value(s, "b", ti)).collect();
        raw.extend(raw_column("B", tv, &b));
    }
    raw.extend(raw_column("wick", t_last, &wick));

    Ok(EnergyResult {
        raw,
        t_grid,
        b_second_moments,
        holder_fit,
        ec1_ratios,
        ec1_kappa,
        ec1_max_drift,
        eps_grid,
        ec2_ratios,
        ec2_kappa,
        ec2_ratios_corrected,
        ec2_max_drift,
        ec2p_ratios,
        ec2p_kappa,
        ec2p_ratios_corrected,
        wick_mean_sigmas,
    })
}

fn max_adjacent_drift(ratios: &[f64]) -> f64 {
    // Upward drift along the grid; dips only mean the envelope is loose.
    let mut worst: f64 = 1.0;
    for w in ratios.windows(2) {
        if w[0] > 0.0 && w[1] > 0.0 {
            worst = worst.max(w[1] / w[0]);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// fm (height integration-constant recovery)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FmRow {
    pub m: f64,
    pub variance: f64,
    pub energy_diff: f64,
    pub variance_ratio: f64,
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FmResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub rows: Vec<FmRow>,
    pub ratios_within_factor: f64,
}

pub fn fm_convergence(
    mctx: &ModelContext,
    m_grid: &[f64],
    replicas: u64,
    master_seed: u64,
) -> Result<FmResult> {
    let t = mctx.spec.horizon;
    let names: Vec<String> = m_grid.iter().map(|m| format!("fm{m}")).collect();
    let all = farm_series(mctx, &[0.0, t], replicas, master_seed, |obs| {
        for (m, name) in m_grid.iter().zip(&names) {
            let diff = TestFunction::combination(
                1.0,
                TestFunction::fm(*m),
                -1.0,
                TestFunction::fm(2.0 * m),
            );
            obs.probe_density(name, diff);
        }
    })?;
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for (i, &m) in m_grid.iter().enumerate() {
        let incr: Vec<f64> = all
            .iter()
            .map(|s| series_value(s, &names[i], 1) - series_value(s, &names[i], 0))
            .collect();
        raw.extend(raw_column(&format!("fm-increment:M={m}"), t, &incr));
        let var = variance(&incr);
        let diff = TestFunction::combination(
            1.0,
            TestFunction::fm(m),
            -1.0,
            TestFunction::fm(2.0 * m),
        );
        let e = diff.energy();
        rows.push(FmRow { m, variance: var, energy_diff: e, variance_ratio: 0.0, energy_ratio: 0.0 });
    }
    for i in 1..rows.len() {
        rows[i].variance_ratio = rows[i].variance / rows[i - 1].variance;
        rows[i].energy_ratio = rows[i].energy_diff / rows[i - 1].energy_diff;
    }
    let ratios_within_factor = rows
        .iter()
        .skip(1)
        .map(|r| {
            let q = r.variance_ratio / r.energy_ratio;
            q.max(1.0 / q)
        })
        .fold(1.0f64, f64::max);
    Ok(FmResult { raw, rows, ratios_within_factor })
}

// ---------------------------------------------------------------------------
// height
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeightResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub definitions_agree: bool,
    pub variance_points: Vec<(f64, f64, f64)>,
    pub variance_max_rel_err: f64,
    pub wick_mean_sigmas: f64,
}

pub struct HeightParams {
    pub static_replicas: u64,
    pub dynamic_replicas: u64,
    pub eps: f64,
    pub x_macro: Vec<f64>,
}

pub fn height_experiment(
    mctx: &ModelContext,
    u: &TestFunction,
    params: &HeightParams,
    master_seed: u64,
) -> Result<HeightResult> {
    let spec = &mctx.spec;
    let n = spec.scale as f64;
    let rho = spec.density;

    // Static clause: Var(H_0(x) - H_0(0)) = chi |x| from i.i.d. initial data.
    let sums: Vec<Vec<f64>> = (0..params.static_replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed ^ 0xabcd, rep);
            let init = sample_initial(spec, &mut rng);
            let hp = height_profiles(&init, &init, spec.ring_size);
            assert!(hp.definitions_agree());
            let h = centered_height(&mctx.field_ctx, &hp.from_current, 0.0);
            params
                .x_macro
                .iter()
                .map(|&xm| h[(xm * n) as usize] - h[0])
                .collect()
        })
        .collect();
    let mut variance_points = Vec::new();
    let mut worst: f64 = 0.0;
    for (j, &xm) in params.x_macro.iter().enumerate() {
        let col: Vec<f64> = sums.iter().map(|s| s[j]).collect();
        let var = variance(&col);
        let target = chi(rho) * xm;
        worst = worst.max((var - target).abs() / target);
        variance_points.push((xm, var, target));
    }

    // Dynamic clause: definitions agree along trajectories, Wick mean zero.
    let ell = (params.eps * n).round() as usize;
    let point_w = mctx.field_ctx.geom.point_weights(u);
    let t = spec.horizon;
    struct RepOut {
        agree: bool,
        wick: f64,
    }
    let outs: Vec<Result<RepOut>> = (0..params.dynamic_replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed, rep);
            let init = sample_initial(spec, &mut rng);
            let mut obs = mctx.observer(rep);
            obs.integrate_block_quadratic("wick", ell, true, point_w.clone());
            let out = run_from(spec, init.clone(), &mut rng, &[t], &mut obs)?;
            let hp = height_profiles(&init, &out.final_state, spec.ring_size);
            let series = obs.into_series();
            Ok(RepOut {
                agree: hp.definitions_agree(),
                wick: series_value(&series, "wick", 0),
            })
        })
        .collect();
    let outs: Vec<RepOut> = outs.into_iter().collect::<Result<_>>()?;
    let wick: Vec<f64> = outs.iter().map(|o| o.wick).collect();
    let raw = raw_column("wick", t, &wick);

    Ok(HeightResult {
        raw,
        definitions_agree: outs.iter().all(|o| o.agree),
        variance_points,
        variance_max_rel_err: worst,
        wick_mean_sigmas: EstimateWithError::from_samples(&wick).sigmas_from(0.0),
    })
}

// ---------------------------------------------------------------------------
// she-compare (Cole-Hopf cross-validation)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SheCompareResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub ks_distance: f64,
    pub particle_mean: f64,
    pub particle_var: f64,
    pub reference_mean: f64,
    pub reference_var: f64,
    pub replicas: u64,
}

pub struct SheCompareParams {
    pub replicas: u64,
    pub cells: usize,
    pub dt: f64,
}

pub fn she_compare(
    mctx: &ModelContext,
    u: &TestFunction,
    params: &SheCompareParams,
    master_seed: u64,
) -> Result<SheCompareResult> {
    let t = mctx.spec.horizon;
    let a = mctx.spec.asymmetry;
    let chi_rho = chi(mctx.spec.density);
    let length = mctx.spec.macro_length();

    let all = farm_series(mctx, &[t], params.replicas, master_seed, |obs| {
        obs.probe_density("y", u.clone());
    })?;
    let particle: Vec<f64> = all.iter().map(|s| series_value(s, "y", 0)).collect();

    let reference: Vec<Result<f64>> = (0..params.replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replica_rng(master_seed ^ 0x51de, rep);
            let mut grid = SheGrid::from_brownian_initial(
                params.cells,
                length,
                params.dt,
                1.0,
                a,
                chi_rho,
                &mut rng,
            )?;
            grid.run_until(t, &mut rng)?;
            cole_hopf_field(&grid, u, a)
        })
        .collect();
    let reference: Vec<f64> = reference.into_iter().collect::<Result<_>>()?;

    let mut raw = raw_column("Y:particle", t, &particle);
    raw.extend(raw_column("Y:cole-hopf", t, &reference));
    Ok(SheCompareResult {
        raw,
        ks_distance: ks_two_sample(&particle, &reference),
        particle_mean: mean(&particle),
        particle_var: variance(&particle),
        reference_mean: mean(&reference),
        reference_var: variance(&reference),
        replicas: params.replicas,
    })
}

// ---------------------------------------------------------------------------
// ou-compare (symmetric-case autocovariance)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuCompareResult {
    #[serde(skip)]
    pub raw: Vec<RawRecord>,
    pub t_grid: Vec<f64>,
    pub particle_autocov: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_rel_err: f64,
}

pub struct OuCompareParams {
    pub t_grid: Vec<f64>,
    pub replicas: u64,
    pub max_mode: usize,
}

/// Build the torus-mode projection of `her_0`: a finite cosine sum that the
/// spectral OU reference can propagate exactly.
pub fn hermite_torus_projection(length: f64, max_mode: usize) -> TestFunction {
    let her0 = TestFunction::hermite(0);
    let mut coefficients = Vec::new();
    for m in 1..=max_mode {
        let k = 2.0 * std::f64::consts::PI * m as f64 / length;
        let f = |x: f64| her0.eval(x) * (k * x).cos() * (2.0 / length).sqrt();
        let c = crate::fields::quad::adaptive_simpson(&f, -length / 2.0, length / 2.0, 1e-12);
        coefficients.push((m, c));
    }
    TestFunction::FourierSum { coefficients: std::sync::Arc::new(coefficients), circumference: length }
}

pub fn ou_compare(
    mctx: &ModelContext,
    params: &OuCompareParams,
    master_seed: u64,
) -> Result<OuCompareResult> {
    if mctx.spec.asymmetry != 0.0 {
        return Err(SimError::Config("ou-compare runs the symmetric model (a = 0)".into()));
    }
    let length = mctx.spec.macro_length();
    let u = hermite_torus_projection(length, params.max_mode);
    let mut times = vec![0.0];
    times.extend_from_slice(&params.t_grid);

    let all = farm_series(mctx, &times, params.replicas, master_seed, |obs| {
        obs.probe_density("y", u.clone());
    })?;

    let reference_model =
        SpectralOu::zero(params.max_mode, length, mctx.tc.diffusivity, chi(mctx.spec.density));
    let mut particle_autocov = Vec::new();
    let mut reference = Vec::new();
    let mut raw = Vec::new();
    let mut max_rel: f64 = 0.0;
    for (ti, &t) in params.t_grid.iter().enumerate() {
        let prods: Vec<f64> = all
            .iter()
            .map(|s| series_value(s, "y", 0) * series_value(s, "y", ti + 1))
            .collect();
        raw.extend(raw_column("Y0*Yt", t, &prods));
        let got = mean(&prods);
        let want = reference_model.stationary_autocovariance(&u, t);
        particle_autocov.push(got);
        reference.push(want);
        max_rel = max_rel.max((got - want).abs() / want.abs());
    }
    Ok(OuCompareResult {
        raw,
        t_grid: params.t_grid.clone(),
        particle_autocov,
        reference,
        max_rel_err: max_rel,
    })
}
