//! Dense eigensolver checks on small particle-number sectors.
//!
//! The symmetric generator restricted to a segment `{1..l}` conserves the
//! particle number, so it block-diagonalizes over sectors of fixed `k`. For
//! `l <= 14` the sectors are small enough for dense symmetric
//! diagonalization, which turns the spectral-gap and `H_{-1}` statements
//! into exact finite computations.
//!
//! Convention: rates read occupancies outside the segment as empty. The
//! exchange rate of bond `x` may not depend on the swapped pair (that is the
//! reversibility condition), so the sector generator is a symmetric matrix.

use crate::error::{Result, SimError};
use crate::local_fn::LocalFunction;
use nalgebra::{DMatrix, DVector};

/// Cap on the segment length for dense diagonalization.
pub const MAX_SECTOR_SITES: usize = 14;

/// All occupancy bitmasks of `l` sites with `k` particles, ascending.
pub fn sector_states(l: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << l) {
        if mask.count_ones() as usize == k {
            out.push(mask);
        }
    }
    out
}

/// The matrix of `-S` on the `(l, k)` sector, bonds `x = 1..l-1`.
///
/// Site `x` of the segment `{1..l}` is bit `x-1` of the mask. Entry
/// conventions: `m[i][j] = -rate(i -> j)` off the diagonal, row sums zero.
pub fn sector_minus_generator(l: usize, k: usize, rate: &LocalFunction) -> Result<DMatrix<f64>> {
    if l > MAX_SECTOR_SITES {
        return Err(SimError::Resource(format!(
            "segment of {l} sites exceeds the dense-eigensolver cap {MAX_SECTOR_SITES}"
        )));
    }
    if k > l {
        return Err(SimError::Input("more particles than sites".into()));
    }
    let states = sector_states(l, k);
    let index_of = |mask: u32| states.binary_search(&mask).unwrap();
    let m = states.len();
    let mut mat = DMatrix::zeros(m, m);
    for (i, &mask) in states.iter().enumerate() {
        // Bonds between segment sites x and x+1 for x in 1..l-1 (1-indexed).
        for x in 1..l {
            let b0 = (mask >> (x - 1)) & 1;
            let b1 = (mask >> x) & 1;
            if b0 == b1 {
                continue;
            }
            // r_x reads eta(x + o); sites outside {1..l} are empty.
            let r = rate.eval_with(|o| {
                let site = x as i32 + o;
                if site >= 1 && site <= l as i32 {
                    (mask >> (site - 1)) & 1 == 1
                } else {
                    false
                }
            });
            let swapped = mask ^ (1 << (x - 1)) ^ (1 << x);
            let j = index_of(swapped);
            mat[(i, j)] -= r;
            mat[(i, i)] += r;
        }
    }
    Ok(mat)
}

/// Result of a spectral-gap computation on one sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    /// Sector has a single state (or no mixing): no gap to report.
    Degenerate,
    Value(f64),
}

/// Smallest nonzero eigenvalue of `-S` on the `(l, k)` sector.
pub fn spectral_gap(l: usize, k: usize, rate: &LocalFunction) -> Result<Gap> {
    let mat = sector_minus_generator(l, k, rate)?;
    if mat.nrows() <= 1 {
        return Ok(Gap::Degenerate);
    }
    let eigen = mat.symmetric_eigen();
    let mut vals: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = vals.last().copied().unwrap_or(0.0).max(1.0);
    match vals.iter().find(|&&v| v > 1e-10 * scale) {
        Some(&gap) => Ok(Gap::Value(gap)),
        None => Ok(Gap::Degenerate),
    }
}

/// `||f||_{-1}^2 = <f, (-S)^+ f>` on the sector, inner products taken with
/// respect to the uniform (canonical) measure.
///
/// `f` is a vector of values aligned with `sector_states(l, k)` and must be
/// centered (mean zero over the sector).
pub fn h_minus_one_norm(l: usize, k: usize, rate: &LocalFunction, f: &[f64]) -> Result<f64> {
    let states = sector_states(l, k);
    if f.len() != states.len() {
        return Err(SimError::Input(format!(
            "function vector has {} entries, sector has {}",
            f.len(),
            states.len()
        )));
    }
    let m = states.len() as f64;
    let mean: f64 = f.iter().sum::<f64>() / m;
    let scale = f.iter().map(|v| v * v).sum::<f64>().sqrt() / m.sqrt();
    if mean.abs() > 1e-9 * scale.max(1e-300) {
        return Err(SimError::Input(
            "function is not centered in the sector".into(),
        ));
    }
    let mat = sector_minus_generator(l, k, rate)?;
    let eigen = mat.symmetric_eigen();
    let fv = DVector::from_column_slice(f);
    let top = eigen.eigenvalues.iter().cloned().fold(1.0f64, f64::max);
    let mut acc = 0.0;
    for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda <= 1e-10 * top {
            continue;
        }
        let c = eigen.eigenvectors.column(i).dot(&fv);
        acc += c * c / lambda;
    }
    Ok(acc / m)
}

/// Uniform-measure inner product on the sector.
pub fn sector_inner(f: &[f64], g: &[f64]) -> f64 {
    let m = f.len() as f64;
    f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / m
}

/// Evaluate a local function on every sector state (support inside the
/// segment after normalization; outside sites read as empty).
pub fn local_on_sector(f: &LocalFunction, l: usize, k: usize) -> Vec<f64> {
    let g = f.normalized_to_positive();
    sector_states(l, k)
        .iter()
        .map(|&mask| {
            g.eval_with(|o| {
                if o >= 1 && o <= l as i32 {
                    (mask >> (o - 1)) & 1 == 1
                } else {
                    false
                }
            })
        })
        .collect()
}
