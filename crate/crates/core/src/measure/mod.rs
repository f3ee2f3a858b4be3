//! Volumes, measures, quermassintegrals and moment functionals.
//!
//! Exact paths (n ≤ 3) triangulate the body into simplices coned at the
//! origin. Stochastic paths return an [`Estimate`] carrying its standard
//! error, sample count and seed.

mod density;
mod moments;
mod quermass;

pub use density::{density_norm_constant, measure_of, DensitySpec};
pub use moments::{
    exact_moments, isotropic_constant, isotropic_map, moments, sigma2, ExactMoments, GaugeMoments, MomentSummary,
};
pub use quermass::{quermass, quermass_exact, steiner_fit, SteinerFit};

pub(crate) use density::{integrate, simpson};
pub(crate) use moments::to_matrix;


use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::combine::DirectionGrid;
use crate::error::{Error, Result};
use crate::geom::Body;
use crate::hull::convex_hull;
use crate::sample::{chunked, sphere_point, Oracle, SeedSpec};
use crate::vector::{cross3, det3, norm, Vector};

/// A Monte-Carlo (or exact, with zero stderr) estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: Option<SeedSpec>,
}

impl Estimate {
    pub fn exact(value: f64) -> Estimate {
        Estimate { value, stderr: 0.0, n_samples: 0, seed: None }
    }
}

/// Streaming mean and co-moment accumulator (Welford / Chan merge).
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    pub n: usize,
    pub mean: Vec<f64>,
    /// Row-major k×k sum of centred outer products.
    pub comoment: Vec<f64>,
    scratch: Vec<f64>,
}

impl Accumulator {
    pub fn new(k: usize) -> Accumulator {
        Accumulator { n: 0, mean: vec![0.0; k], comoment: vec![0.0; k * k], scratch: vec![0.0; k] }
    }

    pub fn push(&mut self, x: &[f64]) {
        let k = self.mean.len();
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for i in 0..k {
            self.scratch[i] = x[i] - self.mean[i];
            self.mean[i] += self.scratch[i] * inv;
        }
        for i in 0..k {
            let di = x[i] - self.mean[i];
            let row = &mut self.comoment[i * k..(i + 1) * k];
            for (c, d) in row.iter_mut().zip(&self.scratch) {
                *c += d * di;
            }
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let k = self.mean.len();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..k {
            for j in 0..k {
                self.comoment[i * k + j] += other.comoment[i * k + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    /// Covariance matrix of the sample means.
    pub fn mean_covariance(&self) -> Vec<Vec<f64>> {
        let k = self.mean.len();
        let d = (self.n.max(2) - 1) as f64 * self.n as f64;
        (0..k).map(|i| (0..k).map(|j| self.comoment[i * k + j] / d).collect()).collect()
    }

    pub fn stderr(&self, i: usize) -> f64 {
        let k = self.mean.len();
        (self.comoment[i * k + i].max(0.0) / ((self.n.max(2) - 1) as f64 * self.n as f64)).sqrt()
    }
}

/// ω_n, the volume of the Euclidean unit ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Surface area of S^{n−1}.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Exact volume for n ≤ 3.
pub fn volume(body: &Body) -> Result<f64> {
    let n = body.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let v = body.vertices()?;
    Ok(match n {
        1 => {
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
            hi - lo
        }
        2 => shoelace(v).abs(),
        _ => {
            let hull = convex_hull(v)?;
            let mut total = 0.0;
            for f in &hull.facets {
                let a = &v[f.vertices[0]];
                for w in f.vertices[1..].windows(2) {
                    total += det3(a, &v[w[0]], &v[w[1]]);
                }
            }
            total / 6.0
        }
    })
}

/// Signed shoelace area of a planar vertex ring.
pub(crate) fn shoelace(v: &[Vector]) -> f64 {
    let m = v.len();
    (0..m)
        .map(|k| {
            let (a, b) = (&v[k], &v[(k + 1) % m]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

/// One facet's share of the cone-volume measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetMass {
    pub normal: Vector,
    /// h_K(normal).
    pub support: f64,
    /// (n−1)-dimensional area of the facet.
    pub area: f64,
    /// support · area / n.
    pub mass: f64,
}

/// Cone-volume measure h_K(u)·area(F)/n per facet (n = 2, 3).
pub fn cone_volume(body: &Body) -> Result<Vec<FacetMass>> {
    let n = body.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let v = body.vertices()?;
    let hull = convex_hull(v)?;
    Ok(hull
        .facets
        .iter()
        .map(|f| {
            let area = if n == 2 {
                norm(&crate::vector::sub(&v[f.vertices[1]], &v[f.vertices[0]]))
            } else {
                let a = &v[f.vertices[0]];
                let mut acc = [0.0; 3];
                for w in f.vertices[1..].windows(2) {
                    let c = cross3(&crate::vector::sub(&v[w[0]], a), &crate::vector::sub(&v[w[1]], a));
                    for i in 0..3 {
                        acc[i] += c[i];
                    }
                }
                norm(&acc) / 2.0
            };
            FacetMass { normal: f.normal.clone(), support: f.offset, area, mass: f.offset * area / n as f64 }
        })
        .collect())
}

/// Hit-or-miss volume estimate from the bounding box.
pub fn volume_mc(body: &Body, n_samples: usize, seed: &SeedSpec) -> Estimate {
    let oracle = Oracle::new(body);
    let (lo, hi) = body.bounding_box();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let hits: usize = chunked(n_samples, seed, |count, rng| {
        let mut x = vec![0.0; lo.len()];
        let mut h = 0usize;
        for _ in 0..count {
            for i in 0..x.len() {
                x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
            }
            if oracle.contains(&x) {
                h += 1;
            }
        }
        h
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n_samples.max(1) as f64;
    Estimate {
        value: box_vol * p,
        stderr: box_vol * (p * (1.0 - p) / n_samples.max(1) as f64).sqrt(),
        n_samples,
        seed: Some(seed.clone()),
    }
}

/// Sphere quadrature rule for polar-coordinate integrals.
#[derive(Debug, Clone)]
pub enum SphereQuad {
    /// Equal weights on a grid (trapezoid rule on a planar grid).
    Grid(DirectionGrid),
    MonteCarlo { n_samples: usize, seed: SeedSpec },
}

/// |{x : g(x) ≤ 1}| = (1/n)∫_{S^{n−1}} g(θ)^{−n} dθ for a gauge-like g.
pub fn volume_sphere<G>(n: usize, gauge: G, quad: &SphereQuad) -> Estimate
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let area = sphere_area(n);
    match quad {
        SphereQuad::Grid(grid) => {
            let s: f64 = grid.directions().iter().map(|u| gauge(u).powi(-(n as i32))).sum();
            Estimate::exact(area / n as f64 * s / grid.len() as f64)
        }
        SphereQuad::MonteCarlo { n_samples, seed } => {
            let parts = chunked(*n_samples, seed, |count, rng| {
                let mut acc = Accumulator::new(1);
                for _ in 0..count {
                    let u = sphere_point(n, rng);
                    acc.push(&[gauge(&u).powi(-(n as i32))]);
                }
                acc
            });
            let mut acc = Accumulator::new(1);
            for p in &parts {
                acc.merge(p);
            }
            let c = area / n as f64;
            Estimate { value: c * acc.mean[0], stderr: c * acc.stderr(0), n_samples: *n_samples, seed: Some(seed.clone()) }
        }
    }
}
