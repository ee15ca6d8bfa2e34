//! Microscopic configuration of the periodic ring.

use serde::{Deserialize, Serialize};

/// Occupancies, per-bond signed crossing counters and the macroscopic clock.
///
/// Bond `x` joins sites `x` and `(x+1) mod N`. `currents[x]` counts right
/// crossings minus left crossings of that bond, which makes the continuity
/// relation `eta_t(x) - eta_0(x) = J_t(x-1) - J_t(x)` an integer identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeState {
    pub occupancy: Vec<bool>,
    pub particle_count: usize,
    pub currents: Vec<i64>,
    pub clock: f64,
}

impl LatticeState {
    pub fn new(occupancy: Vec<bool>) -> Self {
        let particle_count = occupancy.iter().filter(|&&b| b).count();
        let n = occupancy.len();
        LatticeState { occupancy, particle_count, currents: vec![0; n], clock: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn occ(&self, site: usize) -> bool {
        self.occupancy[site]
    }

    /// Occupancy with periodic wrapping of any signed index.
    #[inline]
    pub fn occ_wrapped(&self, site: i64) -> bool {
        let n = self.occupancy.len() as i64;
        self.occupancy[site.rem_euclid(n) as usize]
    }

    /// Swap the occupancies across bond `x` and book the crossing.
    ///
    /// Caller guarantees the bond is active (different occupancies).
    pub fn apply_swap(&mut self, bond: usize) {
        let n = self.occupancy.len();
        let a = bond;
        let b = (bond + 1) % n;
        debug_assert_ne!(self.occupancy[a], self.occupancy[b]);
        let right_move = self.occupancy[a];
        self.occupancy.swap(a, b);
        self.currents[bond] += if right_move { 1 } else { -1 };
    }

    /// Exact integer continuity check against an initial state.
    pub fn continuity_holds(&self, initial: &LatticeState) -> bool {
        let n = self.occupancy.len();
        (0..n).all(|x| {
            let lhs = self.occupancy[x] as i64 - initial.occupancy[x] as i64;
            let prev = (x + n - 1) % n;
            lhs == self.currents[prev] - self.currents[x]
        })
    }

    /// Run-length encoding of the occupancy: first bit, then run lengths.
    pub fn occupancy_rle(&self) -> String {
        if self.occupancy.is_empty() {
            return String::new();
        }
        let mut out = String::new();
        out.push(if self.occupancy[0] { '1' } else { '0' });
        let mut run = 1usize;
        for w in self.occupancy.windows(2) {
            if w[1] == w[0] {
                run += 1;
            } else {
                out.push_str(&format!(":{run}"));
                run = 1;
            }
        }
        out.push_str(&format!(":{run}"));
        out
    }

    pub fn from_rle(rle: &str) -> Option<Self> {
        let mut parts = rle.split(':');
        let first = match parts.next()? {
            "1" => true,
            "0" => false,
            _ => return None,
        };
        let mut occ = Vec::new();
        let mut bit = first;
        for run in parts {
            let len: usize = run.parse().ok()?;
            occ.extend(std::iter::repeat(bit).take(len));
            bit = !bit;
        }
        if occ.is_empty() {
            return None;
        }
        Some(LatticeState::new(occ))
    }
}
