//! Inequality checks and log-concavity / log-convexity scans.
//!
//! Every check yields a [`CheckReport`] whose `margin` is oriented so that a
//! non-negative margin means the inequality holds. Exact paths (n ≤ 3 volumes)
//! use a tolerance of [`EXACT_TOL`] relative to the compared magnitudes, which
//! is the same as an absolute tolerance on log-scale quantities to first order.
//! Stochastic paths use [`SIGMA_TOL`] propagated standard errors.

mod dual;
mod hunt;
mod isotropy;
mod primal;

pub use dual::{
    check_dual_log_bm, check_dual_quermass, check_dual_quermass_dim, check_section_containment,
    check_simplex_lower_bound, check_triangle_logbm, scan_dual_b, triangle_centroid,
};
pub use hunt::{generate_instance, hunt, HuntEntry, HuntParams, HuntSummary, Instance, HUNT_CHECKS};
pub use isotropy::{
    check_isotropy_derivative, check_moment_gap, check_variance_bound, scan_dual_family, SL_ITERATIONS,
};
pub use primal::{check_gaussian_dilates, check_log_bm, check_strip_b, scan_b};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::sample::SeedSpec;

/// Relative tolerance on exact paths.
pub const EXACT_TOL: f64 = 1e-9;
/// Standard errors allowed on stochastic paths.
pub const SIGMA_TOL: f64 = 4.0;
/// Scan points need value > `NOISE_FLOOR`·stderr to be usable.
pub const NOISE_FLOOR: f64 = 10.0;

/// Monte-Carlo budget for a stochastic check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub n_samples: usize,
    pub seed: SeedSpec,
}

impl Sampling {
    pub fn new(n_samples: usize, root_seed: u64) -> Sampling {
        Sampling { n_samples, seed: SeedSpec::new(root_seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs; the inequality reads lhs ≤ rhs.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub stderr: Option<f64>,
    pub seed: Option<SeedSpec>,
    pub n_samples: usize,
    pub params: BTreeMap<String, Value>,
}

impl CheckReport {
    /// Report for `lhs ≤ rhs` on an exact path.
    pub fn exact(name: &str, lhs: f64, rhs: f64) -> CheckReport {
        let tol = EXACT_TOL * lhs.abs().max(rhs.abs());
        CheckReport::with_tolerance(name, lhs, rhs, tol)
    }

    pub fn with_tolerance(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> CheckReport {
        let margin = rhs - lhs;
        CheckReport {
            check_name: name.to_string(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            stderr: None,
            seed: None,
            n_samples: 0,
            params: BTreeMap::new(),
        }
    }

    /// Report for `lhs ≤ rhs` where `stderr` is the propagated standard
    /// error of rhs − lhs.
    pub fn stochastic(name: &str, lhs: f64, rhs: f64, stderr: f64, sampling: &Sampling) -> CheckReport {
        let tol = SIGMA_TOL * stderr + EXACT_TOL * lhs.abs().max(rhs.abs());
        let mut r = CheckReport::with_tolerance(name, lhs, rhs, tol);
        r.stderr = Some(stderr);
        r.seed = Some(sampling.seed.clone());
        r.n_samples = sampling.n_samples;
        r
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> CheckReport {
        self.params.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    /// True when an exact-path report fails beyond tolerance + 6σ.
    pub fn is_confirmed_violation(&self) -> bool {
        let exact = self.params.get("exact").and_then(Value::as_bool).unwrap_or(false);
        exact && self.margin < -(self.tolerance + 6.0 * self.stderr.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Concave,
    Convex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub check_name: String,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub log_values: Vec<f64>,
    /// Centred second differences of `log_values` (None at the window ends
    /// and at unusable points).
    pub second_diffs: Vec<Option<f64>>,
    /// Minimum over the window of the oriented second difference
    /// (−Δ² for concave scans, +Δ² for convex ones).
    pub min_second_diff: f64,
    pub orientation: Orientation,
    pub tolerance: f64,
    pub pass: bool,
    pub stderr_per_point: Option<Vec<f64>>,
    /// Inclusive index range of the points used.
    pub window: (usize, usize),
    pub seed: Option<SeedSpec>,
    pub n_samples: usize,
    pub params: BTreeMap<String, Value>,
}

impl ScanReport {
    /// Builds a scan from values on a uniform grid. With `stderr`, points
    /// not above the noise floor are dropped by shrinking to the longest
    /// usable run, and the tolerance is `SIGMA_TOL` times the largest
    /// propagated second-difference stderr; otherwise it is `exact_tol`.
    pub fn build(
        name: &str,
        t_grid: Vec<f64>,
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
        orientation: Orientation,
        exact_tol: f64,
    ) -> Result<ScanReport> {
        let m = values.len();
        if t_grid.len() != m {
            return Err(Error::DimensionMismatch { expected: t_grid.len(), found: m });
        }
        let usable: Vec<bool> = (0..m)
            .map(|j| match &stderr {
                Some(s) => values[j] > NOISE_FLOOR * s[j],
                None => values[j] > 0.0,
            })
            .collect();
        if stderr.is_none() && usable.iter().any(|u| !u) {
            return Err(Error::InvalidParameter("scan values must be positive".into()));
        }
        let (mut best, mut start) = ((0, 0), None::<usize>);
        let mut best_len = 0;
        for j in 0..=m {
            if j < m && usable[j] {
                start.get_or_insert(j);
            } else if let Some(s) = start.take() {
                if j - s > best_len {
                    best_len = j - s;
                    best = (s, j - 1);
                }
            }
        }
        if best_len < 3 {
            return Err(Error::InsufficientPrecision { usable: best_len });
        }
        let log_values: Vec<f64> = values.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
        let rel: Option<Vec<f64>> = stderr.as_ref().map(|s| (0..m).map(|j| s[j] / values[j]).collect());
        let mut second_diffs = vec![None; m];
        let mut min_second_diff = f64::INFINITY;
        let mut worst_sd: f64 = 0.0;
        let sign = if orientation == Orientation::Concave { -1.0 } else { 1.0 };
        for j in best.0 + 1..best.1 {
            let d = log_values[j - 1] - 2.0 * log_values[j] + log_values[j + 1];
            second_diffs[j] = Some(d);
            min_second_diff = min_second_diff.min(sign * d);
            if let Some(r) = &rel {
                worst_sd = worst_sd.max((r[j - 1].powi(2) + 4.0 * r[j].powi(2) + r[j + 1].powi(2)).sqrt());
            }
        }
        let tolerance = if stderr.is_some() { SIGMA_TOL * worst_sd + exact_tol } else { exact_tol };
        Ok(ScanReport {
            check_name: name.to_string(),
            t_grid,
            values,
            log_values,
            second_diffs,
            min_second_diff,
            orientation,
            tolerance,
            pass: min_second_diff >= -tolerance,
            stderr_per_point: stderr,
            window: best,
            seed: None,
            n_samples: 0,
            params: BTreeMap::new(),
        })
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> ScanReport {
        self.params.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    fn sampled(mut self, sampling: &Sampling) -> ScanReport {
        self.seed = Some(sampling.seed.clone());
        self.n_samples = sampling.n_samples;
        self
    }

    /// `t,value,log_value,second_diff` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,log_value,second_diff\n");
        for j in 0..self.t_grid.len() {
            let sd = self.second_diffs[j].map(|d| format!("{d:e}")).unwrap_or_default();
            out.push_str(&format!("{:e},{:e},{:e},{}\n", self.t_grid[j], self.values[j], self.log_values[j], sd));
        }
        out
    }
}

/// `steps` equally spaced points on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 3 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("need steps ≥ 3 and lo < hi (got {steps}, [{lo}, {hi}])")));
    }
    Ok((0..steps).map(|j| lo + (hi - lo) * j as f64 / (steps - 1) as f64).collect())
}

/// Checks that `t` is uniformly spaced (second differences assume it).
fn check_uniform(t: &[f64]) -> Result<()> {
    if t.len() < 3 {
        return Err(Error::InvalidParameter("scan grid needs at least 3 points".into()));
    }
    let h = t[1] - t[0];
    let ok = h > 0.0 && t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter("scan grid must be uniformly spaced and increasing".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_affine_scan_has_zero_second_differences() {
        let t = uniform_grid(-1.0, 1.0, 21).unwrap();
        let v: Vec<f64> = t.iter().map(|t| (2.0 * t).exp() * 3.0).collect();
        let r = ScanReport::build("x", t, v, None, Orientation::Concave, EXACT_TOL).unwrap();
        assert!(r.pass);
        assert!(r.min_second_diff.abs() < 1e-12);
        assert_eq!(r.window, (0, 20));
        assert_eq!(r.to_csv().lines().count(), 22);
    }

    #[test]
    fn noisy_points_shrink_the_window() {
        let t = uniform_grid(0.0, 1.0, 7).unwrap();
        let v = vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.05, 1.0];
        let s = vec![0.01; 7];
        let r = ScanReport::build("x", t.clone(), v, Some(s.clone()), Orientation::Convex, 0.0).unwrap();
        assert_eq!(r.window, (0, 4));
        let err = ScanReport::build("x", t, vec![0.05; 7], Some(s), Orientation::Convex, 0.0).unwrap_err();
        assert_eq!(err, Error::InsufficientPrecision { usable: 0 });
    }

    #[test]
    fn margin_orientation() {
        let r = CheckReport::exact("x", 1.0, 1.0 - 1e-12);
        assert!(r.pass && r.margin < 0.0);
        let r = CheckReport::exact("x", 1.0, 0.9);
        assert!(!r.pass);
        assert!(!r.clone().param("exact", false).is_confirmed_violation());
        assert!(r.param("exact", true).is_confirmed_violation());
    }

    #[test]
    fn nonuniform_grid_rejected() {
        assert!(check_uniform(&[0.0, 1.0, 3.0]).is_err());
        assert!(check_uniform(&uniform_grid(-2.0, 2.0, 41).unwrap()).is_ok());
    }
}
