//! Exact canonical-ensemble oracle.
//!
//! Expectations under the uniform measure on configurations of a box
//! `{1..l}` with exactly `k` particles are multivariate hypergeometric sums
//! over the function's support patterns. Everything here runs in exact
//! rational arithmetic; floats appear only at the output boundary, so the
//! `O(l^-2)` and `O(l^-3)` residuals probed by the equivalence-of-ensembles
//! experiments survive cancellation.

use crate::error::{Result, SimError};
use crate::gradient::rational_from_f64;
use crate::local_fn::LocalFunction;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn big(b: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(b))
}

/// Exact binomial coefficient; zero out of range.
pub fn binomial(n: i64, k: i64) -> BigRational {
    if k < 0 || n < 0 || k > n {
        return BigRational::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    let k = k.min(n - k);
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    BigRational::new(num, den)
}

/// A local function prepared for box oracles: support translated into
/// `{1..extent}` and the table lifted to exact rationals.
pub struct BoxFunction {
    window: Vec<i32>,
    table: Vec<BigRational>,
    extent: i64,
}

impl BoxFunction {
    pub fn new(f: &LocalFunction) -> Result<Self> {
        if f.window_len() == 0 {
            return Ok(BoxFunction {
                window: vec![],
                table: vec![rational_from_f64(f.table[0])],
                extent: 0,
            });
        }
        let g = f.normalized_to_positive();
        let extent = *g.window.iter().max().unwrap() as i64;
        Ok(BoxFunction {
            window: g.window.clone(),
            table: g.table.iter().map(|&v| rational_from_f64(v)).collect(),
            extent,
        })
    }

    /// Extent of the (translated) support: the oracle needs `l >= extent`.
    pub fn extent(&self) -> i64 {
        self.extent
    }

    /// Exact conditional expectation `psi_f(l; k)` under the uniform measure
    /// on `{1..l}` configurations with `k` particles.
    pub fn canonical_expectation(&self, l: i64, k: i64) -> Result<BigRational> {
        if l < self.extent {
            return Err(SimError::Input(format!(
                "box size {l} smaller than the support extent {}",
                self.extent
            )));
        }
        if k < 0 || k > l {
            return Err(SimError::Input(format!("particle count {k} outside [0, {l}]")));
        }
        let w = self.window.len() as i64;
        let total = binomial(l, k);
        let mut acc = BigRational::zero();
        for (pattern, value) in self.table.iter().enumerate() {
            if value.is_zero() {
                continue;
            }
            let occupied = pattern.count_ones() as i64;
            let ways = binomial(l - w, k - occupied);
            acc += value * ways;
        }
        Ok(acc / total)
    }

    /// Exact grand-canonical polynomial value at a rational density.
    pub fn phi(&self, sigma: &BigRational) -> BigRational {
        let w = self.window.len();
        let one = BigRational::one();
        let mut acc = BigRational::zero();
        for (pattern, value) in self.table.iter().enumerate() {
            if value.is_zero() {
                continue;
            }
            let occ = pattern.count_ones() as usize;
            let mut term = value.clone();
            for _ in 0..occ {
                term *= sigma.clone();
            }
            for _ in 0..(w - occ) {
                term *= one.clone() - sigma.clone();
            }
            acc += term;
        }
        acc
    }

    /// Exact second derivative of the grand-canonical polynomial.
    pub fn phi_second(&self, sigma: &BigRational) -> BigRational {
        let coeffs = self.phi_coefficients();
        let mut acc = BigRational::zero();
        let mut power = BigRational::one();
        for (deg, c) in coeffs.iter().enumerate().skip(2) {
            let factor = big((deg * (deg - 1)) as i64);
            acc += c * factor * power.clone();
            power *= sigma.clone();
        }
        acc
    }

    /// Coefficients of `sigma -> phi_f(sigma)` as exact rationals.
    pub fn phi_coefficients(&self) -> Vec<BigRational> {
        let w = self.window.len();
        let mut coeffs = vec![BigRational::zero(); w + 1];
        for (pattern, value) in self.table.iter().enumerate() {
            if value.is_zero() {
                continue;
            }
            let k = pattern.count_ones() as usize;
            let m = w - k;
            let mut binom = BigRational::one();
            for j in 0..=m {
                let signed = if j % 2 == 0 { binom.clone() } else { -binom.clone() };
                coeffs[k + j] += value * signed;
                binom = binom * big((m - j) as i64) / big((j + 1) as i64);
            }
        }
        coeffs
    }
}

/// `psi_f(l, k)` with float output; exact internally.
pub fn canonical_expectation(f: &LocalFunction, l: i64, k: i64) -> Result<f64> {
    let bf = BoxFunction::new(f)?;
    Ok(bf.canonical_expectation(l, k)?.to_f64().unwrap())
}

/// Which sign the second-order equivalence-of-ensembles correction carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CorrectionSign {
    /// Subtract `+ chi phi'' / (2 l)` (the additive form).
    Plus,
    /// Subtract `- chi phi'' / (2 l)` (the subtractive form).
    Minus,
}

/// Max-over-`k` residual of the second-order expansion
/// `psi_f(l,k) - phi_f(k/l) -+ (1/2l) chi(k/l) phi_f''(k/l)`.
///
/// Both signs are exposed; the exact oracle itself decides which one is the
/// genuine second-order expansion (the residual of the right sign decays
/// like `l^-2`, the other like `l^-1`).
pub fn eoe_expansion_residual(f: &LocalFunction, l: i64, sign: CorrectionSign) -> Result<f64> {
    let bf = BoxFunction::new(f)?;
    if l < bf.extent() {
        return Err(SimError::Input("box smaller than support".into()));
    }
    let two_l = big(2 * l);
    let mut worst = BigRational::zero();
    for k in 0..=l {
        let sigma = BigRational::new(BigInt::from(k), BigInt::from(l));
        let chi = sigma.clone() * (BigRational::one() - sigma.clone());
        let correction = chi * bf.phi_second(&sigma) / two_l.clone();
        let expansion = match sign {
            CorrectionSign::Plus => bf.phi(&sigma) + correction,
            CorrectionSign::Minus => bf.phi(&sigma) - correction,
        };
        let residual = (bf.canonical_expectation(l, k)? - expansion).abs();
        if residual > worst {
            worst = residual;
        }
    }
    Ok(worst.to_f64().unwrap())
}

/// Exact canonical variance `sum_k Binom(l,k,rho) psi_f(l,k)^2`.
///
/// The caller supplies `f` already centered for the case under study
/// (`phi(rho) = 0`, optionally higher derivatives); the decay exponent in
/// `l` is what the equivalence-of-ensembles estimates predict.
pub fn canonical_variance(f: &LocalFunction, rho: &BigRational, l: i64) -> Result<f64> {
    let bf = BoxFunction::new(f)?;
    if l < bf.extent() {
        return Err(SimError::Input("box smaller than support".into()));
    }
    let one = BigRational::one();
    let mut acc = BigRational::zero();
    for k in 0..=l {
        let psi = bf.canonical_expectation(l, k)?;
        let mut weight = binomial(l, k);
        for _ in 0..k {
            weight *= rho.clone();
        }
        for _ in 0..(l - k) {
            weight *= one.clone() - rho.clone();
        }
        acc += weight * psi.clone() * psi;
    }
    Ok(acc.to_f64().unwrap())
}

/// Exact tower identity value `sum_k Binom(l,k,rho) psi_f(l,k)`; equals
/// `phi_f(rho)` for every `f` and `l`.
pub fn canonical_mean(f: &LocalFunction, rho: &BigRational, l: i64) -> Result<BigRational> {
    let bf = BoxFunction::new(f)?;
    let one = BigRational::one();
    let mut acc = BigRational::zero();
    for k in 0..=l {
        let psi = bf.canonical_expectation(l, k)?;
        let mut weight = binomial(l, k);
        for _ in 0..k {
            weight *= rho.clone();
        }
        for _ in 0..(l - k) {
            weight *= one.clone() - rho.clone();
        }
        acc += weight * psi;
    }
    Ok(acc)
}

/// Log-log slope of `values` against `grid` by least squares.
pub fn log_log_slope(grid: &[i64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&l, &v)| ((l as f64).ln(), v.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Variance-decay experiment: exact values over an `l` grid plus the fitted
/// log-log slope.
pub fn canonical_variance_decay(
    f: &LocalFunction,
    rho: &BigRational,
    grid: &[i64],
) -> Result<(Vec<f64>, f64)> {
    let mut values = Vec::with_capacity(grid.len());
    for &l in grid {
        values.push(canonical_variance(f, rho, l)?);
    }
    let slope = log_log_slope(grid, &values);
    Ok((values, slope))
}
