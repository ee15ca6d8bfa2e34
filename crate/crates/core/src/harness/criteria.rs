//! The acceptance criteria, pinned in code.
//!
//! Every tolerance lives here, in one place, shared by the CLI report and
//! the acceptance test suite. Each criterion consumes the typed result of
//! the experiment that measures it.

use crate::stats::experiments::{
    Bg1Result, Bg2Result, EnergyResult, EoeResult, GapResult, HeightResult, OuCompareResult,
    QvResult, SheCompareResult, StationarityResult, WhitenoiseResult,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub measured: String,
    pub expected: String,
}

fn outcome(id: usize, name: &str, pass: bool, measured: String, expected: String) -> CriterionOutcome {
    CriterionOutcome { id, name: name.to_string(), pass, measured, expected }
}

/// 1. Tiny-ring dynamics against `exp(tQ)`: total variation below 0.01.
pub const ORACLE_TV_MAX: f64 = 0.01;

pub fn c01_exact_oracle(r: &StationarityResult) -> CriterionOutcome {
    outcome(
        1,
        "exact-oracle dynamics (tiny ring vs exp(tQ))",
        r.oracle_tv <= ORACLE_TV_MAX,
        format!("TV = {:.5} over {} replicas", r.oracle_tv, r.oracle_replicas),
        format!("TV <= {ORACLE_TV_MAX}"),
    )
}

/// 2. Conservation and the integer continuity relation, exactly.
pub fn c02_conservation(r: &StationarityResult) -> CriterionOutcome {
    outcome(
        2,
        "conservation & continuity (exact integers)",
        r.conservation_ok && r.continuity_ok,
        format!("conservation {}, continuity {}", r.conservation_ok, r.continuity_ok),
        "both exact on every trajectory".into(),
    )
}

/// 3. Stationary white-noise marginal of the density field.
pub const WHITENOISE_VAR_RTOL: f64 = 0.05;
pub const WHITENOISE_KS_MAX: f64 = 0.05;
pub const CROSS_COV_SIGMAS: f64 = 4.0;

pub fn c03_whitenoise(r: &WhitenoiseResult) -> CriterionOutcome {
    let corr_ok = r.cross_correlation.abs() <= CROSS_COV_SIGMAS * r.cross_correlation_se;
    let pass = r.variance_rel_err <= WHITENOISE_VAR_RTOL
        && r.gaussianity.ks_distance <= WHITENOISE_KS_MAX
        && corr_ok;
    outcome(
        3,
        "stationary white noise (variance, KS, cross-covariance)",
        pass,
        format!(
            "var {:.4} vs {:.4} ({:.1}%), KS {:.4}, corr {:.4} (se {:.4})",
            r.variance,
            r.variance_target,
            100.0 * r.variance_rel_err,
            r.gaussianity.ks_distance,
            r.cross_correlation,
            r.cross_correlation_se
        ),
        format!(
            "|var/chi - 1| <= {WHITENOISE_VAR_RTOL}, KS <= {WHITENOISE_KS_MAX}, |corr| <= {CROSS_COV_SIGMAS} se"
        ),
    )
}

/// 4. Equivalence of ensembles: exact oracle value, expansion-residual
/// decay with the oracle-fixed sign, and the three variance-decay slopes.
pub const EOE_PSI_ATOL: f64 = 1e-12;
pub const EOE_SLOPE_TOL: f64 = 0.3;

pub fn c04_equivalence_of_ensembles(r: &EoeResult) -> CriterionOutcome {
    let slopes_ok = (r.decay_slopes[0] + 1.0).abs() <= EOE_SLOPE_TOL
        && (r.decay_slopes[1] + 2.0).abs() <= EOE_SLOPE_TOL
        && (r.decay_slopes[2] + 3.0).abs() <= EOE_SLOPE_TOL;
    let pass = r.psi_pair_4_2_error <= EOE_PSI_ATOL
        && (r.minus_sign_slope + 2.0).abs() <= EOE_SLOPE_TOL
        && slopes_ok;
    outcome(
        4,
        "equivalence of ensembles (exact oracle)",
        pass,
        format!(
            "psi err {:.1e}, residual slope {:.3} (minus sign), decay slopes {:.2}/{:.2}/{:.2}",
            r.psi_pair_4_2_error,
            r.minus_sign_slope,
            r.decay_slopes[0],
            r.decay_slopes[1],
            r.decay_slopes[2]
        ),
        format!(
            "psi(4,2) = 1/6 to {EOE_PSI_ATOL}, slopes -2/-1/-2/-3 within {EOE_SLOPE_TOL}"
        ),
    )
}

/// 5. Spectral gap scaling and the `H_{-1}` bound.
pub const GAP_SCALED_MIN: f64 = 4.0;
pub const GAP_SCALED_MAX: f64 = 16.0;
pub const HMINUS_RATIO_MAX: f64 = 0.25;

pub fn c05_spectral_gap(r: &GapResult) -> CriterionOutcome {
    let pass = r.scaled_gap_min >= GAP_SCALED_MIN
        && r.scaled_gap_max <= GAP_SCALED_MAX
        && r.hminus_ratio_max <= HMINUS_RATIO_MAX;
    outcome(
        5,
        "spectral gap l^2 window & H_{-1} bound",
        pass,
        format!(
            "gap*l^2 in [{:.3}, {:.3}], H-1 ratio max {:.4} over {} cases",
            r.scaled_gap_min, r.scaled_gap_max, r.hminus_ratio_max, r.hminus_cases
        ),
        format!(
            "gap*l^2 in [{GAP_SCALED_MIN}, {GAP_SCALED_MAX}], ratio <= {HMINUS_RATIO_MAX}"
        ),
    )
}

/// 6. Second-order Boltzmann-Gibbs: bounded ratio without adjacent drift,
/// and the fixed-eps error decreasing in n.
pub const BG2_MAX_DRIFT: f64 = 2.0;

pub fn c06_second_order_bg(r: &Bg2Result) -> CriterionOutcome {
    let decreasing = r.refinement_measured.windows(2).all(|w| w[1] < w[0]);
    let pass = r.max_adjacent_drift <= BG2_MAX_DRIFT && decreasing;
    outcome(
        6,
        "second-order Boltzmann-Gibbs envelope",
        pass,
        format!(
            "K-hat {:.3}, max adjacent drift {:.2}x, refinement {:?}",
            r.k_hat, r.max_adjacent_drift, r.refinement_measured
        ),
        format!("drift <= {BG2_MAX_DRIFT}x between adjacent l; error decreasing in n"),
    )
}

/// 7. First-order Boltzmann-Gibbs rate: variance slope vs n.
pub const BG1_SLOPE_MIN: f64 = -1.4;
pub const BG1_SLOPE_MAX: f64 = -0.6;

pub fn c07_first_order_bg(r: &Bg1Result) -> CriterionOutcome {
    let pass = r.fit.slope >= BG1_SLOPE_MIN && r.fit.slope <= BG1_SLOPE_MAX;
    outcome(
        7,
        "first-order Boltzmann-Gibbs rate",
        pass,
        format!("slope {:.3} (R^2 {:.3})", r.fit.slope, r.fit.r_squared),
        format!("slope in [{BG1_SLOPE_MIN}, {BG1_SLOPE_MAX}]"),
    )
}

/// 8. Energy/Hoelder scaling of the nonlinear field, and EC2 stability.
pub const HOLDER_SLOPE_MIN: f64 = 1.35;
pub const HOLDER_SLOPE_MAX: f64 = 1.65;
pub const EC2_MAX_DRIFT: f64 = 2.0;

pub fn c08_energy_holder(r: &EnergyResult) -> CriterionOutcome {
    let pass = r.holder_fit.slope >= HOLDER_SLOPE_MIN
        && r.holder_fit.slope <= HOLDER_SLOPE_MAX
        && r.ec2_max_drift <= EC2_MAX_DRIFT;
    outcome(
        8,
        "energy estimate: E[B_t^2] ~ t^{3/2}, EC2 eps-stability",
        pass,
        format!(
            "holder slope {:.3}, EC2 ratios {:?} (finite-n corrected {:?}, drift {:.2}x)",
            r.holder_fit.slope, r.ec2_ratios, r.ec2_ratios_corrected, r.ec2_max_drift
        ),
        format!(
            "slope in [{HOLDER_SLOPE_MIN}, {HOLDER_SLOPE_MAX}], EC2 drift <= {EC2_MAX_DRIFT}x"
        ),
    )
}

/// 9. Quadratic variation convergence and the compensator identity.
pub const QV_RTOL: f64 = 0.10;
pub const QV_IDENTITY_SIGMAS: f64 = 4.0;

pub fn c09_quadratic_variation(r: &QvResult) -> CriterionOutcome {
    let pass = r.qv_rel_err <= QV_RTOL && r.qv_identity_sigmas <= QV_IDENTITY_SIGMAS;
    outcome(
        9,
        "quadratic variation: <M>/t -> 2 chi D E_n(u)",
        pass,
        format!(
            "qv/t {:.4} vs {:.4} ({:.1}%), E[M^2]-E[<M>] at {:.2} se, E[M] at {:.2} se",
            r.qv_over_t,
            r.qv_target,
            100.0 * r.qv_rel_err,
            r.qv_identity_sigmas,
            r.martingale_mean_sigmas
        ),
        format!("rel err <= {QV_RTOL}, identity within {QV_IDENTITY_SIGMAS} se"),
    )
}

/// 10. Cole-Hopf cross-validation at desk scale.
pub const SHE_KS_MAX: f64 = 0.1;

pub fn c10_cole_hopf(r: &SheCompareResult) -> CriterionOutcome {
    outcome(
        10,
        "Cole-Hopf cross-validation (two-sample KS)",
        r.ks_distance <= SHE_KS_MAX,
        format!(
            "KS {:.4} ({} samples/side; vars {:.4} vs {:.4})",
            r.ks_distance, r.replicas, r.particle_var, r.reference_var
        ),
        format!("KS <= {SHE_KS_MAX}"),
    )
}

/// 11. Symmetric-case autocovariance against the spectral OU reference.
pub const OU_RTOL: f64 = 0.10;

pub fn c11_ou_autocovariance(r: &OuCompareResult) -> CriterionOutcome {
    outcome(
        11,
        "OU autocovariance (a = 0) vs chi <u, e^{tD Lap} u>",
        r.max_rel_err <= OU_RTOL,
        format!(
            "max rel err {:.3} over t grid {:?}",
            r.max_rel_err, r.t_grid
        ),
        format!("rel err <= {OU_RTOL}"),
    )
}

/// 12. Height field: exact definition agreement, Brownian variance profile,
/// Wick-centered quadratic mean zero.
pub const HEIGHT_VAR_RTOL: f64 = 0.05;
pub const WICK_SIGMAS: f64 = 4.0;

pub fn c12_height(r: &HeightResult) -> CriterionOutcome {
    let pass = r.definitions_agree
        && r.variance_max_rel_err <= HEIGHT_VAR_RTOL
        && r.wick_mean_sigmas <= WICK_SIGMAS;
    outcome(
        12,
        "height field: definitions, Brownian profile, Wick mean",
        pass,
        format!(
            "definitions {}, var rel err {:.3}, wick at {:.2} se",
            r.definitions_agree, r.variance_max_rel_err, r.wick_mean_sigmas
        ),
        format!("exact agreement, var within {HEIGHT_VAR_RTOL}, wick within {WICK_SIGMAS} se"),
    )
}

/// Render one pass/fail line per criterion.
pub fn render_line(c: &CriterionOutcome) -> String {
    format!(
        "[{}] criterion {:>2}: {} | measured: {} | expected: {}",
        if c.pass { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        c.measured,
        c.expected
    )
}
