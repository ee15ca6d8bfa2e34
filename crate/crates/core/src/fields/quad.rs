//! Quadrature helpers: Gauss-Hermite rules and adaptive Simpson.

use nalgebra::DMatrix;

/// Nodes and weights for `int e^{-y^2} g(y) dy`, exact for polynomials of
/// degree `2m - 1`, via Golub-Welsch on the Hermite Jacobi matrix.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut j = DMatrix::zeros(m, m);
    for k in 1..m {
        let b = (k as f64 / 2.0).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eigen = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let node = eigen.eigenvalues[i];
            let v0 = eigen.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    // Seed the recursion from a few panels so narrow features are not
    // missed by the first coarse estimate.
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let x0 = a + i as f64 * h;
        let x1 = x0 + h;
        let f0 = f(x0);
        let f1 = f(x1);
        let (w, mm, fmm) = simpson(f, x0, f0, x1, f1);
        acc += recurse(f, x0, f0, x1, f1, w, mm, fmm, tol / panels as f64, 40);
    }
    let _ = (whole, m, fm, fa, fb);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((m2 - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
        // Degree-38 monomial is still exact with 20 nodes.
        let m38: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(38) * w).sum();
        let exact = gamma_half_integer(39);
        assert!((m38 / exact - 1.0).abs() < 1e-9);
    }

    // Gamma((k+1)/2) style closed form for int e^{-y^2} y^(k-1) dy, k odd.
    fn gamma_half_integer(k: u32) -> f64 {
        // int_{-inf}^{inf} y^(2m) e^{-y^2} dy = sqrt(pi) (2m-1)!! / 2^m.
        let m = (k - 1) / 2;
        let mut dd = 1.0;
        let mut i = 2 * m as i64 - 1;
        while i > 1 {
            dd *= i as f64;
            i -= 2;
        }
        std::f64::consts::PI.sqrt() * dd / 2f64.powi(m as i32)
    }

    #[test]
    fn simpson_integrates_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -12.0, 12.0, 1e-12);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }
}
