//! Grand-canonical expectations as exact polynomials in the density.
//!
//! For a table-backed local function `f`, the map
//! `sigma -> E_{nu_sigma}[f] = sum_p f(p) sigma^{occ(p)} (1-sigma)^{empty(p)}`
//! is a polynomial of degree at most `|window|`. Storing it by coefficients
//! makes derivatives exact, which is what the centering checks and the
//! diffusivity/flux constants need.

use crate::local_fn::LocalFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoPolynomial {
    /// Coefficients in increasing degree: `c[0] + c[1] sigma + ...`.
    pub coefficients: Vec<f64>,
}

impl ThermoPolynomial {
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        ThermoPolynomial { coefficients }
    }

    /// Exact expansion of `sigma -> E_sigma[f]`.
    ///
    /// Each pattern contributes `f(p) * sigma^k (1-sigma)^(w-k)`; the
    /// binomial expansion is accumulated coefficient-wise.
    pub fn grand_canonical(f: &LocalFunction) -> Self {
        let w = f.window_len();
        let mut coeffs = vec![0.0f64; w + 1];
        for (pattern, &value) in f.table.iter().enumerate() {
            if value == 0.0 {
                continue;
            }
            let k = LocalFunction::pattern_weight(pattern) as usize;
            let m = w - k;
            // sigma^k (1-sigma)^m = sum_j C(m,j) (-1)^j sigma^(k+j)
            let mut binom = 1.0f64;
            for j in 0..=m {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[k + j] += value * sign * binom;
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        ThermoPolynomial { coefficients: coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, sigma: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * sigma + c)
    }

    /// Exact derivative polynomial.
    pub fn derivative(&self) -> ThermoPolynomial {
        if self.coefficients.len() <= 1 {
            return ThermoPolynomial { coefficients: vec![0.0] };
        }
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
        ThermoPolynomial { coefficients }
    }

    pub fn nth_derivative(&self, order: usize) -> ThermoPolynomial {
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative();
        }
        p
    }

    pub fn eval_derivative(&self, order: usize, sigma: f64) -> f64 {
        self.nth_derivative(order).eval(sigma)
    }
}

/// Static compressibility `chi(sigma) = sigma (1 - sigma)`.
pub fn chi(sigma: f64) -> f64 {
    sigma * (1.0 - sigma)
}

/// Thermodynamic constants of a gradient model at density `rho`.
///
/// `diffusivity = phi_omega'(rho)`, `flux = a chi(rho) D(rho)` and the
/// derivatives of the flux drive the recentering frame and the nonlinearity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransportCoefficients {
    pub diffusivity: f64,
    pub chi: f64,
    pub flux: f64,
    pub flux_prime: f64,
    pub flux_second: f64,
}

impl TransportCoefficients {
    /// Build from the gradient witness `omega` (so `D = phi_omega'`).
    pub fn from_omega(omega: &LocalFunction, asymmetry: f64, rho: f64) -> Self {
        let phi = ThermoPolynomial::grand_canonical(omega);
        Self::from_phi_omega(&phi, asymmetry, rho)
    }

    pub fn from_phi_omega(phi_omega: &ThermoPolynomial, asymmetry: f64, rho: f64) -> Self {
        // H(sigma) = a chi(sigma) phi_omega'(sigma)
        let d = phi_omega.derivative();
        let chi_poly = ThermoPolynomial::from_coefficients(vec![0.0, 1.0, -1.0]);
        let h = polynomial_product(&scale(&chi_poly, asymmetry), &d);
        TransportCoefficients {
            diffusivity: d.eval(rho),
            chi: chi(rho),
            flux: h.eval(rho),
            flux_prime: h.eval_derivative(1, rho),
            flux_second: h.eval_derivative(2, rho),
        }
    }
}

fn scale(p: &ThermoPolynomial, a: f64) -> ThermoPolynomial {
    ThermoPolynomial {
        coefficients: p.coefficients.iter().map(|c| a * c).collect(),
    }
}

fn polynomial_product(p: &ThermoPolynomial, q: &ThermoPolynomial) -> ThermoPolynomial {
    let mut coefficients = vec![0.0; p.coefficients.len() + q.coefficients.len() - 1];
    for (i, a) in p.coefficients.iter().enumerate() {
        for (j, b) in q.coefficients.iter().enumerate() {
            coefficients[i + j] += a * b;
        }
    }
    ThermoPolynomial { coefficients }
}
