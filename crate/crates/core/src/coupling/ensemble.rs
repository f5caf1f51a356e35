//! Threshold-weighted orientational average of the coupling over a field map.
//!
//! Emitters sit at grid points inside a box region. A point contributes with
//! weight `max(|E| − t·E_max, 0)`, so weak-field regions where emitters are
//! neither excited nor collected drop out. Each emitter's dipole is taken as
//! randomly oriented, contributing `|f|²/3` to the mean squared coupling.

use serde::{Deserialize, Serialize};

use super::FieldGrid;
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

/// Axis-aligned box in meters. Bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Region {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        if (0..3).any(|a| !(min[a] <= max[a])) {
            return Err(Error::domain(format!("region min {min:?} not below max {max:?}")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, r: [f64; 3]) -> bool {
        (0..3).all(|a| r[a] >= self.min[a] && r[a] <= self.max[a])
    }
}

impl Default for Region {
    /// ±400 nm × ±150 nm × ±100 nm around the origin.
    fn default() -> Self {
        Self {
            min: [-400e-9, -150e-9, -100e-9],
            max: [400e-9, 150e-9, 100e-9],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    /// |E_threshold| / |E_max|, in [0, 1).
    pub threshold_fraction: f64,
    pub region: Region,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.2,
            region: Region::default(),
        }
    }
}

impl WeightingConfig {
    pub fn with_threshold(threshold_fraction: f64) -> Self {
        Self {
            threshold_fraction,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightingResult {
    pub factor: f64,
    pub threshold_fraction: f64,
    pub points_in_region: usize,
    pub points_above_threshold: usize,
    /// Index of the ε|E|² maximum inside the region.
    pub max_index: usize,
    pub max_position: [f64; 3],
}

/// Ensemble weighting factor 𝓕.
pub fn ensemble_weighting_factor(grid: &FieldGrid, cfg: &WeightingConfig) -> Result<WeightingResult> {
    let t = cfg.threshold_fraction;
    if !(0.0..1.0).contains(&t) {
        return Err(Error::domain(format!("threshold fraction {t} outside [0, 1)")));
    }
    let inside: Vec<usize> = (0..grid.len()).filter(|&i| cfg.region.contains(grid.position(i))).collect();
    if inside.is_empty() {
        return Err(Error::domain("weighting region does not intersect the grid"));
    }
    let imax = grid
        .argmax_by(inside.iter().copied(), |i| grid.energy_density(i))
        .expect("non-empty region");
    let e_max = grid.magnitude_sq(imax).sqrt();
    if !(e_max > 0.0) {
        return Err(Error::domain("field is zero throughout the weighting region"));
    }

    let mut w_sum = CompensatedSum::default();
    let mut wf_sum = CompensatedSum::default();
    let mut above = 0;
    for &i in &inside {
        let mag = grid.magnitude_sq(i).sqrt();
        let w = (mag - t * e_max).max(0.0) / e_max;
        if w > 0.0 {
            above += 1;
            let f_sq = grid.magnitude_sq(i) / (e_max * e_max);
            w_sum.add(w);
            wf_sum.add(w * f_sq / 3.0);
        }
    }
    if above == 0 {
        return Err(Error::domain("threshold excludes all emitters"));
    }
    Ok(WeightingResult {
        factor: (wf_sum.value() / w_sum.value()).sqrt(),
        threshold_fraction: t,
        points_in_region: inside.len(),
        points_above_threshold: above,
        max_index: imax,
        max_position: grid.position(imax),
    })
}
