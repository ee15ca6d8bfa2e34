//! Functions of finitely many sites, stored as exhaustive value tables.
//!
//! A `LocalFunction` is determined by an ordered window of site offsets and
//! one real value per occupancy pattern of that window. Patterns are encoded
//! as bitmasks in window order: bit `j` of the pattern index is the occupancy
//! at `window[j]`. All exact condition checks (ellipticity, reversibility,
//! gradient) reduce to finite sweeps over this table.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Hard cap on window size; tables are 2^|window| entries.
pub const MAX_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFunction {
    /// Ordered list of integer site offsets, e.g. `[-1, 0, 1, 2]`.
    pub window: Vec<i32>,
    /// Value for each of the `2^window.len()` patterns, lexicographic in
    /// window order (bit 0 = first offset).
    pub table: Vec<f64>,
}

impl LocalFunction {
    pub fn new(window: Vec<i32>, table: Vec<f64>) -> Result<Self> {
        if window.len() > MAX_WINDOW {
            return Err(SimError::Input(format!(
                "window has {} offsets, cap is {MAX_WINDOW}",
                window.len()
            )));
        }
        let mut sorted = window.clone();
        sorted.dedup();
        if sorted.len() != window.len() {
            return Err(SimError::Input("window offsets must be distinct".into()));
        }
        if table.len() != 1usize << window.len() {
            return Err(SimError::Input(format!(
                "table length {} does not equal 2^{}",
                table.len(),
                window.len()
            )));
        }
        Ok(LocalFunction { window, table })
    }

    /// The constant function `c` (empty window).
    pub fn constant(c: f64) -> Self {
        LocalFunction { window: vec![], table: vec![c] }
    }

    /// Indicator of occupation at a single offset: `eta(offset)`.
    pub fn occupation(offset: i32) -> Self {
        LocalFunction { window: vec![offset], table: vec![0.0, 1.0] }
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn patterns(&self) -> usize {
        self.table.len()
    }

    /// Value on the pattern encoded as a bitmask in window order.
    pub fn value(&self, pattern: usize) -> f64 {
        self.table[pattern]
    }

    /// Evaluate on an explicit (offset, occupancy) assignment. Every window
    /// offset must be supplied; occupancies elsewhere are ignored.
    pub fn evaluate(&self, assignment: &[(i32, bool)]) -> Result<f64> {
        let mut pattern = 0usize;
        for (j, &off) in self.window.iter().enumerate() {
            let occ = assignment
                .iter()
                .find(|(o, _)| *o == off)
                .map(|(_, b)| *b)
                .ok_or_else(|| {
                    SimError::Input(format!("assignment is missing window offset {off}"))
                })?;
            if occ {
                pattern |= 1 << j;
            }
        }
        Ok(self.table[pattern])
    }

    /// Evaluate against a full configuration given by a lookup closure
    /// (`site offset -> occupancy`).
    pub fn eval_with(&self, occ: impl Fn(i32) -> bool) -> f64 {
        let mut pattern = 0usize;
        for (j, &off) in self.window.iter().enumerate() {
            if occ(off) {
                pattern |= 1 << j;
            }
        }
        self.table[pattern]
    }

    /// Smallest and largest window offset; `(0, 0)` for constants.
    pub fn offset_range(&self) -> (i32, i32) {
        let lo = self.window.iter().copied().min().unwrap_or(0);
        let hi = self.window.iter().copied().max().unwrap_or(0);
        (lo, hi)
    }

    /// Translate by `x`: the returned function satisfies
    /// `tau_x f(eta) = f(tau_x eta)`, i.e. offsets shift by `+x`.
    pub fn translate(&self, x: i32) -> Self {
        LocalFunction {
            window: self.window.iter().map(|o| o + x).collect(),
            table: self.table.clone(),
        }
    }

    /// Translate so the support becomes `{1, ..., w}` (oracle convention).
    pub fn normalized_to_positive(&self) -> Self {
        let (lo, _) = self.offset_range();
        self.translate(1 - lo)
    }

    /// Number of occupied window sites in a pattern.
    pub fn pattern_weight(pattern: usize) -> u32 {
        pattern.count_ones()
    }

    /// True when the table genuinely depends on the occupancy at `offset`.
    pub fn depends_on(&self, offset: i32) -> bool {
        let Some(j) = self.window.iter().position(|&o| o == offset) else {
            return false;
        };
        let bit = 1usize << j;
        (0..self.table.len())
            .filter(|p| p & bit == 0)
            .any(|p| self.table[p] != self.table[p | bit])
    }

    /// Pointwise linear combination `a*self + b*other` on the joint window.
    pub fn linear_combination(&self, a: f64, other: &LocalFunction, b: f64) -> Result<Self> {
        let mut window = self.window.clone();
        for &o in &other.window {
            if !window.contains(&o) {
                window.push(o);
            }
        }
        window.sort_unstable();
        if window.len() > MAX_WINDOW {
            return Err(SimError::Input("joint window exceeds cap".into()));
        }
        let n = window.len();
        let mut table = vec![0.0; 1 << n];
        for (p, slot) in table.iter_mut().enumerate() {
            let occ = |off: i32| -> bool {
                let j = window.iter().position(|&o| o == off).unwrap();
                p & (1 << j) != 0
            };
            *slot = a * self.eval_with(occ) + b * other.eval_with(occ);
        }
        LocalFunction::new(window, table)
    }

    /// Pointwise product on the joint window.
    pub fn product(&self, other: &LocalFunction) -> Result<Self> {
        let mut window = self.window.clone();
        for &o in &other.window {
            if !window.contains(&o) {
                window.push(o);
            }
        }
        window.sort_unstable();
        if window.len() > MAX_WINDOW {
            return Err(SimError::Input("joint window exceeds cap".into()));
        }
        let n = window.len();
        let mut table = vec![0.0; 1 << n];
        for (p, slot) in table.iter_mut().enumerate() {
            let occ = |off: i32| -> bool {
                let j = window.iter().position(|&o| o == off).unwrap();
                p & (1 << j) != 0
            };
            *slot = self.eval_with(&occ) * other.eval_with(&occ);
        }
        LocalFunction::new(window, table)
    }

    /// Add a constant.
    pub fn shift(&self, c: f64) -> Self {
        LocalFunction {
            window: self.window.clone(),
            table: self.table.iter().map(|v| v + c).collect(),
        }
    }

    /// Multiply by a constant.
    pub fn scale(&self, c: f64) -> Self {
        LocalFunction {
            window: self.window.clone(),
            table: self.table.iter().map(|v| v * c).collect(),
        }
    }
}
