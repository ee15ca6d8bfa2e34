//! Exact spectral Ornstein-Uhlenbeck solver on a torus.
//!
//! In Fourier modes the conservative OU equation
//! `dY = D Lap Y dt + sqrt(2 chi D) grad dB` decouples: each mode is a
//! one-dimensional complex OU process, so the transition over any `dt` can
//! be sampled exactly. Statistics are therefore `dt`-independent.
//!
//! Modes are taken against the orthonormal basis `e_k(x) = e^{ikx}/sqrt(L)`,
//! `k = 2 pi m / L`, so spatial white noise of variance `chi` has per-mode
//! variance `chi`, flat in `m`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::fields::testfn::TestFunction;

#[derive(Debug, Clone)]
pub struct SpectralOu {
    /// Amplitudes for `m = 0..=max_mode`; negative modes by conjugation.
    pub modes: Vec<Complex64>,
    pub circumference: f64,
    pub diffusivity: f64,
    pub chi: f64,
}

impl SpectralOu {
    /// Start from the stationary law: complex Gaussian modes of variance
    /// `chi`. The `m = 0` mass mode is real Gaussian and frozen by the
    /// dynamics (`grad` kills constants), mirroring the conserved particle
    /// count of the lattice gas.
    pub fn stationary(
        max_mode: usize,
        circumference: f64,
        diffusivity: f64,
        chi: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut modes = vec![Complex64::new(0.0, 0.0); max_mode + 1];
        let g0: f64 = rng.sample(StandardNormal);
        modes[0] = Complex64::new(g0 * chi.sqrt(), 0.0);
        for m in modes.iter_mut().skip(1) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *m = Complex64::new(re, im) * (chi / 2.0).sqrt();
        }
        SpectralOu { modes, circumference, diffusivity, chi }
    }

    pub fn zero(max_mode: usize, circumference: f64, diffusivity: f64, chi: f64) -> Self {
        SpectralOu {
            modes: vec![Complex64::new(0.0, 0.0); max_mode + 1],
            circumference,
            diffusivity,
            chi,
        }
    }

    #[inline]
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.circumference
    }

    /// Exact-in-distribution OU transition over `dt` for every mode.
    pub fn step(&mut self, dt: f64, rng: &mut impl Rng) {
        for m in 1..self.modes.len() {
            let k = self.wavenumber(m);
            let decay = (-self.diffusivity * k * k * dt).exp();
            let var = self.chi * (1.0 - decay * decay);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            self.modes[m] =
                self.modes[m] * decay + Complex64::new(re, im) * (var / 2.0).sqrt();
        }
    }

    /// Pair the field with a real test function:
    /// `Y(u) = sum_k Yhat_k conj(uhat_k)` over all modes.
    pub fn pair(&self, u: &TestFunction) -> f64 {
        let coeffs = self.mode_coefficients(u);
        self.pair_with_coefficients(&coeffs)
    }

    /// `<u, e_m>` for `m = 0..=max_mode`, by composite Simpson on the torus
    /// window `[-L/2, L/2]`.
    pub fn mode_coefficients(&self, u: &TestFunction) -> Vec<Complex64> {
        let l = self.circumference;
        let panels = 4096usize;
        let h = l / panels as f64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.modes.len()];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let k = self.wavenumber(m);
            let f = |x: f64| {
                let v = u.eval(x);
                Complex64::new(v * (k * x).cos(), -v * (k * x).sin())
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..panels {
                let x0 = -l / 2.0 + i as f64 * h;
                acc += (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h)) * (h / 6.0);
            }
            *c = acc / l.sqrt();
        }
        coeffs
    }

    /// `Y(u)` given precomputed mode coefficients of `u`.
    pub fn pair_with_coefficients(&self, coeffs: &[Complex64]) -> f64 {
        let mut acc = self.modes[0].re * coeffs[0].re;
        for m in 1..self.modes.len() {
            // m and -m contribute conjugate pairs: 2 Re(Yhat conj(uhat)).
            acc += 2.0 * (self.modes[m] * coeffs[m].conj()).re;
        }
        acc
    }

    /// Stationary autocovariance `E[Y_t(u) Y_0(u)] = chi <u, e^{tD Lap} u>`
    /// restricted to the represented modes (the analytic reference). The
    /// mass mode contributes a frozen `chi |<u, e_0>|^2` term.
    pub fn stationary_autocovariance(&self, u: &TestFunction, t: f64) -> f64 {
        let coeffs = self.mode_coefficients(u);
        let mut acc = coeffs[0].norm_sqr();
        for (m, c) in coeffs.iter().enumerate().skip(1) {
            let k = self.wavenumber(m);
            acc += 2.0 * c.norm_sqr() * (-self.diffusivity * k * k * t).exp();
        }
        self.chi * acc
    }

    /// `chi <u, u>` restricted to the represented modes.
    pub fn projected_variance(&self, u: &TestFunction) -> f64 {
        self.stationary_autocovariance(u, 0.0)
    }
}
