//! Exact generator of the dynamics on tiny rings.
//!
//! For `N <= 12` the full `2^N`-state rate matrix is dense and small, and
//! `exp(tQ)` via uniformization gives the distribution at any time to
//! machine precision. This is the oracle the event-driven engine is checked
//! against.

use crate::engine::rates::RateKernel;
use crate::error::{Result, SimError};
use crate::model::ModelSpec;
use nalgebra::{DMatrix, DVector};

/// Hard cap: dense `2^N x 2^N` matrices only stay cheap up to here.
pub const MAX_EXACT_RING: usize = 12;

/// Dense rate matrix `Q` over all `2^N` occupancy states of the ring.
///
/// State bitmask convention: bit `x` is the occupancy of site `x`. Row =
/// source state, `Q[s, s'] >= 0` off the diagonal, rows sum to zero.
pub fn exact_generator(spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let n_sites = spec.ring_size;
    if n_sites > MAX_EXACT_RING {
        return Err(SimError::Resource(format!(
            "exact generator needs ring size <= {MAX_EXACT_RING}, got {n_sites}"
        )));
    }
    let kernel = RateKernel::new(spec);
    let dim = 1usize << n_sites;
    let mut q = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let occ = |site: i64| -> bool {
            let x = site.rem_euclid(n_sites as i64) as usize;
            s & (1 << x) != 0
        };
        for bond in 0..n_sites {
            let rate = kernel.bond_rate_with(bond as i64, &occ);
            if rate == 0.0 {
                continue;
            }
            let other = (bond + 1) % n_sites;
            let target = s ^ (1 << bond) ^ (1 << other);
            q[(s, target)] += rate;
            q[(s, s)] -= rate;
        }
    }
    Ok(q)
}

/// Distribution at time `t`: `p_0 exp(tQ)` by uniformization.
///
/// Uniformization is exact for generators up to the truncated Poisson tail,
/// which is driven below 1e-13 here.
pub fn evolve_distribution(q: &DMatrix<f64>, p0: &DVector<f64>, t: f64) -> DVector<f64> {
    let dim = q.nrows();
    let lambda = (0..dim).map(|i| -q[(i, i)]).fold(0.0f64, f64::max);
    if lambda * t == 0.0 {
        return p0.clone();
    }
    // Row-stochastic P = I + Q / lambda, applied from the left.
    let p_mat = DMatrix::identity(dim, dim) + q / lambda;
    let lt = lambda * t;
    let kmax = (lt + 40.0 * lt.sqrt() + 60.0).ceil() as usize;
    let mut term = p0.clone();
    let mut acc = DVector::zeros(dim);
    // Poisson weights computed iteratively in log space for stability.
    let mut log_weight = -lt; // log of e^{-lt} (lt)^0 / 0!
    for k in 0..=kmax {
        if k > 0 {
            term = (term.transpose() * &p_mat).transpose();
            log_weight += lt.ln() - (k as f64).ln();
        }
        let w = log_weight.exp();
        if w > 0.0 {
            acc += &term * w;
        }
        if k as f64 > lt && w < 1e-16 {
            break;
        }
    }
    acc
}

/// Bernoulli product measure as a distribution vector over bitmask states.
pub fn bernoulli_vector(n_sites: usize, rho: f64) -> DVector<f64> {
    let dim = 1usize << n_sites;
    DVector::from_iterator(
        dim,
        (0..dim).map(|s| {
            let k = (s as u64).count_ones() as i32;
            rho.powi(k) * (1.0 - rho).powi(n_sites as i32 - k)
        }),
    )
}
