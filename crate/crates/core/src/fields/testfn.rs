//! Test functions: Hermite basis, the sigmoid cutoff family, primitives and
//! tabulated data.
//!
//! Hermite functions are normalized to be orthonormal in L^2; with the
//! probabilists' polynomials this forces the constant `(l! sqrt(2 pi))^(-1/2)`
//! in front of `He_l(x) e^{-x^2/4}`, and the family then satisfies
//! `(-Lap + x^2/4) her_l = (l + 1/2) her_l`.

use crate::error::{Result, SimError};
use crate::fields::quad::{adaptive_simpson, gauss_hermite};
use std::sync::Arc;

/// Normalization factor of the bump used by the cutoff family:
/// `Z = int_0^1 exp(-1/(y(1-y))) dy`.
fn bump(y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        (-1.0 / (y * (1.0 - y))).exp()
    }
}

fn bump_normalizer() -> f64 {
    // Cached: smooth integrand, tiny support.
    static Z: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *Z.get_or_init(|| adaptive_simpson(&bump, 0.0, 1.0, 1e-14))
}

/// Smooth decreasing cutoff: 1 below 0, 0 above 1.
pub fn theta(z: f64) -> f64 {
    if z <= 0.0 {
        1.0
    } else if z >= 1.0 {
        0.0
    } else {
        adaptive_simpson(&bump, z, 1.0, 1e-13) / bump_normalizer()
    }
}

/// First derivative of `theta`.
pub fn theta_prime(z: f64) -> f64 {
    -bump(z) / bump_normalizer()
}

/// Second derivative of `theta`.
pub fn theta_second(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        return 0.0;
    }
    let w = z * (1.0 - z);
    // d/dz exp(-1/w) = exp(-1/w) * (1 - 2z) / w^2.
    -bump(z) * (1.0 - 2.0 * z) / (w * w) / bump_normalizer()
}

/// Logistic sigmoid (the height-recovery pivot `F`).
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn he_polys(l: usize, x: f64) -> (f64, f64, f64) {
    // Returns (He_l, He_{l-1}, He_{l-2}); probabilists' recurrence.
    let mut prev2 = 0.0; // He_{-1}
    let mut prev = 1.0; // He_0
    if l == 0 {
        return (prev, 0.0, 0.0);
    }
    let mut cur = x; // He_1
    if l == 1 {
        return (cur, prev, 0.0);
    }
    for k in 1..l {
        let next = x * cur - k as f64 * prev;
        prev2 = prev;
        prev = cur;
        cur = next;
    }
    (cur, prev, prev2)
}

fn hermite_norm(l: usize) -> f64 {
    let mut fact = 1.0f64;
    for k in 2..=l {
        fact *= k as f64;
    }
    1.0 / (fact * (2.0 * std::f64::consts::PI).sqrt()).sqrt()
}

/// An evaluable test function with exact first and second derivatives.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// `her_l(x) = (l! sqrt(2 pi))^(-1/2) He_l(x) e^(-x^2/4)`.
    Hermite { index: usize },
    /// `F_M = F(x) theta(x / M)`: the sigmoid with a smooth right cutoff.
    Fm { cutoff: f64 },
    /// `x -> u'(x)` of the sigmoid: `e^x (1 + e^x)^{-2}`, mass one.
    SigmoidDerivative,
    /// Running integral `U(x) = int_{-inf}^x u(y) dy` of another function.
    Primitive { inner: Arc<TestFunction>, table: Arc<CumulativeTable> },
    /// Piecewise-linear interpolation of sampled values.
    Tabulated { xs: Arc<Vec<f64>>, values: Arc<Vec<f64>> },
    /// Pointwise combination `a u + b v` of two test functions.
    Combination { a: f64, u: Arc<TestFunction>, b: f64, v: Arc<TestFunction> },
    /// Finite cosine sum on a torus: `sum_m a_m sqrt(2/L) cos(2 pi m x / L)`.
    FourierSum { coefficients: Arc<Vec<(usize, f64)>>, circumference: f64 },
    /// `x -> u(x - offset)`.
    Shifted { inner: Arc<TestFunction>, offset: f64 },
}

#[derive(Debug)]
pub struct CumulativeTable {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl TestFunction {
    pub fn hermite(index: usize) -> Self {
        TestFunction::Hermite { index }
    }

    pub fn fm(cutoff: f64) -> Self {
        TestFunction::Fm { cutoff }
    }

    pub fn combination(a: f64, u: TestFunction, b: f64, v: TestFunction) -> Self {
        TestFunction::Combination { a, u: Arc::new(u), b, v: Arc::new(v) }
    }

    /// Interval outside which the function is numerically negligible.
    pub fn effective_support(&self) -> (f64, f64) {
        match self {
            TestFunction::Hermite { index } => {
                let r = 14.0 + 2.0 * (*index as f64).sqrt() * 2.0;
                (-r, r)
            }
            TestFunction::Fm { cutoff } => (-45.0, cutoff + 1.0),
            TestFunction::SigmoidDerivative => (-45.0, 45.0),
            TestFunction::Primitive { inner, .. } => {
                let (a, b) = inner.effective_support();
                (a, b.max(a))
            }
            TestFunction::Tabulated { xs, .. } => (
                xs.first().copied().unwrap_or(0.0),
                xs.last().copied().unwrap_or(0.0),
            ),
            TestFunction::Combination { u, v, .. } => {
                let (a1, b1) = u.effective_support();
                let (a2, b2) = v.effective_support();
                (a1.min(a2), b1.max(b2))
            }
            TestFunction::FourierSum { circumference, .. } => {
                (-circumference / 2.0, circumference / 2.0)
            }
            TestFunction::Shifted { inner, offset } => {
                let (a, b) = inner.effective_support();
                (a + offset, b + offset)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Hermite { index } => {
                let (he, _, _) = he_polys(*index, x);
                hermite_norm(*index) * he * (-x * x / 4.0).exp()
            }
            TestFunction::Fm { cutoff } => sigmoid(x) * theta(x / cutoff),
            TestFunction::SigmoidDerivative => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            TestFunction::Primitive { table, .. } => table.eval(x),
            TestFunction::Tabulated { xs, values } => interp(xs, values, x),
            TestFunction::Combination { a, u, b, v } => a * u.eval(x) + b * v.eval(x),
            TestFunction::FourierSum { coefficients, circumference } => {
                let norm = (2.0 / circumference).sqrt();
                coefficients
                    .iter()
                    .map(|&(m, a)| {
                        let k = 2.0 * std::f64::consts::PI * m as f64 / circumference;
                        a * norm * (k * x).cos()
                    })
                    .sum()
            }
            TestFunction::Shifted { inner, offset } => inner.eval(x - offset),
        }
    }

    /// Exact first derivative.
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            TestFunction::Hermite { index } => {
                let l = *index;
                let (he, he1, _) = he_polys(l, x);
                let dhe = l as f64 * he1;
                hermite_norm(l) * (dhe - 0.5 * x * he) * (-x * x / 4.0).exp()
            }
            TestFunction::Fm { cutoff } => {
                let m = *cutoff;
                let s = sigmoid(x);
                let ds = s * (1.0 - s);
                ds * theta(x / m) + s * theta_prime(x / m) / m
            }
            TestFunction::SigmoidDerivative => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            TestFunction::Primitive { inner, .. } => inner.eval(x),
            TestFunction::Tabulated { xs, values } => interp_slope(xs, values, x),
            TestFunction::Combination { a, u, b, v } => a * u.grad(x) + b * v.grad(x),
            TestFunction::FourierSum { coefficients, circumference } => {
                let norm = (2.0 / circumference).sqrt();
                coefficients
                    .iter()
                    .map(|&(m, a)| {
                        let k = 2.0 * std::f64::consts::PI * m as f64 / circumference;
                        -a * norm * k * (k * x).sin()
                    })
                    .sum()
            }
            TestFunction::Shifted { inner, offset } => inner.grad(x - offset),
        }
    }

    /// Exact second derivative.
    pub fn lap(&self, x: f64) -> f64 {
        match self {
            TestFunction::Hermite { index } => {
                let l = *index;
                let (he, he1, he2) = he_polys(l, x);
                let dhe = l as f64 * he1;
                let d2he = (l * l.saturating_sub(1)) as f64 * he2;
                hermite_norm(l)
                    * (d2he - x * dhe + (x * x / 4.0 - 0.5) * he)
                    * (-x * x / 4.0).exp()
            }
            TestFunction::Fm { cutoff } => {
                let m = *cutoff;
                let s = sigmoid(x);
                let ds = s * (1.0 - s);
                let d2s = ds * (1.0 - 2.0 * s);
                d2s * theta(x / m)
                    + 2.0 * ds * theta_prime(x / m) / m
                    + s * theta_second(x / m) / (m * m)
            }
            TestFunction::SigmoidDerivative => {
                let s = sigmoid(x);
                let ds = s * (1.0 - s);
                ds * (1.0 - 6.0 * ds)
            }
            TestFunction::Primitive { inner, .. } => inner.grad(x),
            TestFunction::Tabulated { xs, values } => interp_lap(xs, values, x),
            TestFunction::Combination { a, u, b, v } => a * u.lap(x) + b * v.lap(x),
            TestFunction::FourierSum { coefficients, circumference } => {
                let norm = (2.0 / circumference).sqrt();
                coefficients
                    .iter()
                    .map(|&(m, a)| {
                        let k = 2.0 * std::f64::consts::PI * m as f64 / circumference;
                        -a * norm * k * k * (k * x).cos()
                    })
                    .sum()
            }
            TestFunction::Shifted { inner, offset } => inner.lap(x - offset),
        }
    }

    /// Total mass `int u`; `None` when the integral does not converge
    /// (primitives of functions with nonzero mass).
    pub fn mass(&self) -> Option<f64> {
        match self {
            TestFunction::Primitive { inner, .. } => {
                let m = inner.mass()?;
                if m.abs() > 1e-9 {
                    None
                } else {
                    let (a, b) = self.effective_support();
                    Some(adaptive_simpson(&|x| self.eval(x), a, b, 1e-10))
                }
            }
            TestFunction::SigmoidDerivative => Some(1.0),
            TestFunction::FourierSum { .. } => Some(0.0),
            TestFunction::Shifted { inner, .. } => inner.mass(),
            _ => {
                let (a, b) = self.effective_support();
                Some(adaptive_simpson(&|x| self.eval(x), a, b, 1e-10))
            }
        }
    }

    /// Energy `E(u) = int (u')^2 dx`.
    pub fn energy(&self) -> f64 {
        let (a, b) = self.effective_support();
        adaptive_simpson(&|x| self.grad(x) * self.grad(x), a, b, 1e-11)
    }

    /// The primitive `U(x) = int_{-inf}^x u`, precomputed on a dense grid.
    pub fn primitive(self) -> TestFunction {
        let (a, b) = self.effective_support();
        let h = 1.0 / 512.0;
        let n = ((b - a) / h).ceil() as usize + 1;
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        // Per-cell Simpson keeps the cumulative error at O(h^4).
        for i in 0..n {
            let x0 = a + i as f64 * h;
            let x1 = x0 + h;
            let xm = 0.5 * (x0 + x1);
            acc += h / 6.0 * (self.eval(x0) + 4.0 * self.eval(xm) + self.eval(x1));
            values.push(acc);
        }
        TestFunction::Primitive {
            inner: Arc::new(self),
            table: Arc::new(CumulativeTable { x0: a, h, values }),
        }
    }

    /// Name under the string grammar
    /// `hermite:<l> | FM:<M> | dF | primitive:<name> | tabulated:<file>`.
    pub fn parse(name: &str) -> Result<TestFunction> {
        if let Some(rest) = name.strip_prefix("primitive:") {
            return Ok(TestFunction::parse(rest)?.primitive());
        }
        if let Some(rest) = name.strip_prefix("shift:") {
            let (off, inner) = rest
                .split_once(':')
                .ok_or_else(|| SimError::Input(format!("bad shift spec in {name:?}")))?;
            let offset: f64 = off
                .parse()
                .map_err(|_| SimError::Input(format!("bad shift offset in {name:?}")))?;
            return Ok(TestFunction::parse(inner)?.shifted(offset));
        }
        if let Some(l) = name.strip_prefix("hermite:") {
            let index: usize = l
                .parse()
                .map_err(|_| SimError::Input(format!("bad hermite index in {name:?}")))?;
            return Ok(TestFunction::hermite(index));
        }
        if let Some(m) = name.strip_prefix("FM:") {
            let cutoff: f64 = m
                .parse()
                .map_err(|_| SimError::Input(format!("bad FM cutoff in {name:?}")))?;
            if cutoff <= 0.0 {
                return Err(SimError::Input("FM cutoff must be positive".into()));
            }
            return Ok(TestFunction::fm(cutoff));
        }
        if name == "dF" {
            return Ok(TestFunction::SigmoidDerivative);
        }
        if let Some(path) = name.strip_prefix("tabulated:") {
            let text = std::fs::read_to_string(path)?;
            let parsed: TabulatedFile = serde_json::from_str(&text)?;
            if parsed.xs.len() != parsed.values.len() || parsed.xs.len() < 2 {
                return Err(SimError::Input("tabulated file needs matching xs/values".into()));
            }
            return Ok(TestFunction::Tabulated {
                xs: Arc::new(parsed.xs),
                values: Arc::new(parsed.values),
            });
        }
        Err(SimError::Input(format!("unknown test function {name:?}")))
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Hermite { index } => format!("hermite:{index}"),
            TestFunction::Fm { cutoff } => format!("FM:{cutoff}"),
            TestFunction::SigmoidDerivative => "dF".into(),
            TestFunction::Primitive { inner, .. } => format!("primitive:{}", inner.name()),
            TestFunction::Tabulated { .. } => "tabulated:<data>".into(),
            TestFunction::Combination { a, u, b, v } => {
                format!("combo:{a}*{}+{b}*{}", u.name(), v.name())
            }
            TestFunction::FourierSum { coefficients, .. } => {
                format!("fourier:{}", coefficients.len())
            }
            TestFunction::Shifted { inner, offset } => {
                format!("shift:{offset}:{}", inner.name())
            }
        }
    }

    pub fn shifted(self, offset: f64) -> TestFunction {
        TestFunction::Shifted { inner: Arc::new(self), offset }
    }
}

#[derive(serde::Deserialize)]
struct TabulatedFile {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl CumulativeTable {
    fn eval(&self, x: f64) -> f64 {
        let last = *self.values.last().unwrap();
        let pos = (x - self.x0) / self.h;
        if pos <= 0.0 {
            return 0.0;
        }
        if pos >= (self.values.len() - 1) as f64 {
            return last;
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

fn bracket(xs: &[f64], x: f64) -> Option<usize> {
    if x < xs[0] || x > *xs.last().unwrap() {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x);
    Some(i.clamp(1, xs.len() - 1) - 1)
}

fn interp(xs: &[f64], values: &[f64], x: f64) -> f64 {
    match bracket(xs, x) {
        None => 0.0,
        Some(i) => {
            let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
            values[i] * (1.0 - t) + values[i + 1] * t
        }
    }
}

fn interp_slope(xs: &[f64], values: &[f64], x: f64) -> f64 {
    match bracket(xs, x) {
        None => 0.0,
        Some(i) => (values[i + 1] - values[i]) / (xs[i + 1] - xs[i]),
    }
}

fn interp_lap(xs: &[f64], values: &[f64], x: f64) -> f64 {
    // Central second difference on the sample spacing.
    match bracket(xs, x) {
        None => 0.0,
        Some(i) if i == 0 || i + 2 >= xs.len() => 0.0,
        Some(i) => {
            let h = xs[i + 1] - xs[i];
            (values[i + 2] - values[i + 1] - values[i] + values[i - 1]) / (2.0 * h * h)
        }
    }
}

/// L^2 inner product of two test functions by quadrature.
pub fn inner_product(u: &TestFunction, v: &TestFunction) -> f64 {
    let (a1, b1) = u.effective_support();
    let (a2, b2) = v.effective_support();
    adaptive_simpson(&|x| u.eval(x) * v.eval(x), a1.min(a2), b1.max(b2), 1e-12)
}

/// Exact Hermite-basis inner product via Gauss-Hermite quadrature: used as
/// an independent oracle for the normalization.
pub fn hermite_inner_exact(i: usize, j: usize) -> f64 {
    // <her_i, her_j> = c_i c_j sqrt(2) int He_i(sqrt2 y) He_j(sqrt2 y) e^{-y^2} dy
    let (nodes, weights) = gauss_hermite(((i + j) / 2 + 4).max(8));
    let ci = hermite_norm(i);
    let cj = hermite_norm(j);
    let s2 = 2f64.sqrt();
    let mut acc = 0.0;
    for (y, w) in nodes.iter().zip(&weights) {
        let (hi, _, _) = he_polys(i, s2 * y);
        let (hj, _, _) = he_polys(j, s2 * y);
        acc += w * hi * hj;
    }
    ci * cj * s2 * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_orthonormal_up_to_twelve() {
        for i in 0..=12 {
            for j in i..=12 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = hermite_inner_exact(i, j);
                assert!((got - want).abs() < 1e-10, "<her_{i}, her_{j}> = {got}");
            }
        }
    }

    #[test]
    fn hermite_eigenrelation() {
        // (-Lap + x^2/4) her_l = (l + 1/2) her_l pointwise on [-10, 10].
        for l in 0..=12 {
            let u = TestFunction::hermite(l);
            let mut x = -10.0;
            while x <= 10.0 {
                let lhs = -u.lap(x) + x * x / 4.0 * u.eval(x);
                let rhs = (l as f64 + 0.5) * u.eval(x);
                assert!((lhs - rhs).abs() < 1e-8, "l={l} x={x}: {lhs} vs {rhs}");
                x += 0.37;
            }
        }
    }

    #[test]
    fn hermite_zero_energy_is_quarter() {
        let e = TestFunction::hermite(0).energy();
        assert!((e - 0.25).abs() < 1e-8, "E(her_0) = {e}");
    }

    #[test]
    fn theta_is_a_smooth_cutoff() {
        assert_eq!(theta(-0.5), 1.0);
        assert_eq!(theta(1.5), 0.0);
        assert!(theta(0.5) > 0.0 && theta(0.5) < 1.0);
        // derivative consistency by central differences
        for z in [0.2, 0.5, 0.8] {
            let h = 1e-5;
            let fd = (theta(z + h) - theta(z - h)) / (2.0 * h);
            assert!((fd - theta_prime(z)).abs() < 1e-7);
            let fd2 = (theta_prime(z + h) - theta_prime(z - h)) / (2.0 * h);
            assert!((fd2 - theta_second(z)).abs() < 1e-6);
        }
    }

    #[test]
    fn cutoff_energy_differences_decrease() {
        // E(F - F_M) decreasing in M.
        let f = |x: f64| sigmoid(x);
        let df = |x: f64| {
            let s = f(x);
            s * (1.0 - s)
        };
        let mut last = f64::INFINITY;
        for m in [2.0, 4.0, 8.0, 16.0] {
            let fm = TestFunction::fm(m);
            let e = adaptive_simpson(&|x| (df(x) - fm.grad(x)).powi(2), -45.0, m + 1.0, 1e-12);
            assert!(e < last, "E(F - F_{m}) = {e} not below {last}");
            last = e;
        }
    }

    #[test]
    fn fm_derivatives_match_finite_differences() {
        let fm = TestFunction::fm(4.0);
        for x in [-3.0, 0.0, 1.7, 2.9, 3.7] {
            let h = 1e-5;
            let fd = (fm.eval(x + h) - fm.eval(x - h)) / (2.0 * h);
            assert!((fd - fm.grad(x)).abs() < 1e-7, "x={x}");
            let fd2 = (fm.eval(x + h) + fm.eval(x - h) - 2.0 * fm.eval(x)) / (h * h);
            assert!((fd2 - fm.lap(x)).abs() < 1e-4, "x={x}");
        }
    }

    #[test]
    fn primitive_reproduces_integral() {
        let u = TestFunction::hermite(0);
        let total = u.mass().unwrap();
        let prim = u.primitive();
        assert!((prim.eval(40.0) - total).abs() < 1e-8);
        assert!(prim.eval(-40.0).abs() < 1e-12);
        // d/dx U = u.
        let x = 0.7;
        assert!((prim.grad(x) - prim_inner_eval(&prim, x)).abs() < 1e-12);
        fn prim_inner_eval(p: &TestFunction, x: f64) -> f64 {
            match p {
                TestFunction::Primitive { inner, .. } => inner.eval(x),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for name in ["hermite:3", "FM:8", "dF", "primitive:hermite:2"] {
            let f = TestFunction::parse(name).unwrap();
            assert_eq!(f.name(), name);
        }
        assert!(TestFunction::parse("nope:1").is_err());
    }
}
