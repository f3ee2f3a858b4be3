use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{unit_ball_volume, volume, Accumulator, Estimate};
use crate::combine::{lp_sum, DirectionGrid};
use crate::error::{Error, Result};
use crate::geom::{Ball, Body};
use crate::hull::convex_hull;
use crate::sample::{grassmann_with, SeedSpec};
use crate::vector::{cross3, norm, sub};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// W_i(K) = (ω_n/ω_{n−i}) ∫ |K|H| dH over Haar-random (n−i)-subspaces.
pub fn quermass(body: &Body, i: usize, n_subspaces: usize, seed: &SeedSpec) -> Result<Estimate> {
    let n = body.dim();
    if i > n {
        return Err(Error::InvalidParameter(format!("quermassintegral index {i} exceeds dimension {n}")));
    }
    if i == 0 {
        return Ok(Estimate::exact(volume(body)?));
    }
    if i == n {
        return Ok(Estimate::exact(unit_ball_volume(n)));
    }
    if n_subspaces == 0 {
        return Err(Error::InvalidParameter("n_subspaces must be positive".into()));
    }
    let k = n - i;
    if k > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let c = unit_ball_volume(n) / unit_ball_volume(k);
    let vols: Vec<Result<f64>> = (0..n_subspaces)
        .into_par_iter()
        .map(|j| {
            let mut rng = seed.child(j as u64).rng();
            let h = grassmann_with(n, k, &mut rng)?;
            volume(&body.project(&h)?)
        })
        .collect();
    let mut acc = Accumulator::new(1);
    for v in vols {
        acc.push(&[v?]);
    }
    Ok(Estimate { value: c * acc.mean[0], stderr: c * acc.stderr(0), n_samples: n_subspaces, seed: Some(seed.clone()) })
}

/// Exact W_i where a closed form is available: i ∈ {0, n}, and i = 1 for
/// n = 2 (half the perimeter) and n = 3 (a third of the surface area).
pub fn quermass_exact(body: &Body, i: usize) -> Result<f64> {
    let n = body.dim();
    if i == 0 {
        return volume(body);
    }
    if i == n {
        return Ok(unit_ball_volume(n));
    }
    match (n, i) {
        (2, 1) => {
            let v = body.vertices()?;
            let m = v.len();
            Ok((0..m).map(|k| norm(&sub(&v[(k + 1) % m], &v[k]))).sum::<f64>() / 2.0)
        }
        (3, 1) => {
            let v = body.vertices()?;
            let hull = convex_hull(v)?;
            let mut area = 0.0;
            for f in &hull.facets {
                let a = &v[f.vertices[0]];
                let mut acc = [0.0; 3];
                for w in f.vertices[1..].windows(2) {
                    let c = cross3(&sub(&v[w[0]], a), &sub(&v[w[1]], a));
                    for j in 0..3 {
                        acc[j] += c[j];
                    }
                }
                area += norm(&acc) / 2.0;
            }
            Ok(area / 3.0)
        }
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerFit {
    /// Coefficients c_0..c_n of |K + tB| ≈ Σ c_i tⁱ.
    pub coefficients: Vec<f64>,
    /// W_i = c_i / binomial(n, i).
    pub quermass: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub volumes: Vec<f64>,
}

/// Least-squares Steiner polynomial from exact volumes of the outer Wulff
/// shapes of K + tB on `grid` (n ≤ 3).
pub fn steiner_fit(body: &Body, t_grid: &[f64], grid: &DirectionGrid) -> Result<SteinerFit> {
    let n = body.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if t_grid.len() < n + 1 || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(format!("need at least {} positive t values", n + 1)));
    }
    let ball = Ball { dim: n, radius: 1.0 };
    let volumes = t_grid
        .iter()
        .map(|&t| volume(&lp_sum(body, &ball, 1.0, t, 1.0, grid)?))
        .collect::<Result<Vec<f64>>>()?;
    let a = DMatrix::from_fn(t_grid.len(), n + 1, |r, c| t_grid[r].powi(c as i32));
    let svd = a.clone().svd(true, true);
    let (smax, smin) = svd.singular_values.iter().fold((0.0_f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let cond = smax / smin;
    if !(cond < 1e12) {
        return Err(Error::IllConditionedFit(cond));
    }
    let y = DVector::from_vec(volumes.clone());
    let coef = svd.solve(&y, 1e-14).map_err(|_| Error::IllConditionedFit(cond))?;
    let coefficients: Vec<f64> = coef.iter().copied().collect();
    let quermass = coefficients.iter().enumerate().map(|(i, c)| c / binomial(n, i)).collect();
    Ok(SteinerFit { coefficients, quermass, t_grid: t_grid.to_vec(), volumes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cube, regular_polygon};

    #[test]
    fn square_quermass() {
        assert!((quermass_exact(&cube(2), 1).unwrap() - 4.0).abs() < 1e-14);
        assert!((quermass_exact(&cube(3), 1).unwrap() - 8.0).abs() < 1e-14);
        let e = quermass(&cube(2), 1, 4000, &SeedSpec::new(1)).unwrap();
        assert!((e.value - 4.0).abs() < 4.0 * e.stderr, "{e:?}");
        assert_eq!(quermass(&cube(2), 0, 1, &SeedSpec::new(1)).unwrap().value, 4.0);
    }

    #[test]
    fn steiner_of_square() {
        let t: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
        let fit = steiner_fit(&cube(2), &t, &DirectionGrid::planar(720)).unwrap();
        assert!((fit.quermass[0] - 4.0).abs() < 1e-6);
        assert!((fit.quermass[1] - 4.0).abs() < 1e-4);
        assert!((fit.quermass[2] - std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn ball_polygon_mean_width() {
        let p = regular_polygon(64, 1.0, 0.0);
        let e = quermass(&p, 1, 2000, &SeedSpec::new(2)).unwrap();
        assert!((e.value - std::f64::consts::PI).abs() < 0.01 * std::f64::consts::PI);
    }

    #[test]
    fn fit_rejects_short_grid() {
        assert!(steiner_fit(&cube(2), &[0.1, 0.2], &DirectionGrid::planar(16)).is_err());
    }
}
