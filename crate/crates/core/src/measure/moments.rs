use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::density::integrate;
use super::{DensitySpec, Estimate};
use crate::error::{Error, Result};
use crate::geom::Body;
use crate::hull::convex_hull;
use crate::sample::SeedSpec;
use crate::vector::{det_rows, dot, factorial, Vector};

/// Exact Lebesgue moments of a polytope (n ≤ 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub volume: f64,
    /// ∫ x dx.
    pub first: Vector,
    /// ∫ x xᵀ dx.
    pub second: Vec<Vector>,
    /// ∫ ‖x‖₂⁴ dx.
    pub fourth_radial: f64,
}

impl ExactMoments {
    pub fn second_radial(&self) -> f64 {
        (0..self.second.len()).map(|i| self.second[i][i]).sum()
    }

    /// n(|K|·∫‖x‖⁴ / (∫‖x‖²)² − 1); invariant under dilation.
    pub fn sigma2(&self) -> f64 {
        let n = self.second.len() as f64;
        let m2 = self.second_radial();
        n * (self.volume * self.fourth_radial / (m2 * m2) - 1.0)
    }

    /// det(∫xxᵀ)^{1/(2n)} / |K|^{(n+2)/(2n)}.
    pub fn isotropic_constant(&self) -> Result<f64> {
        let n = self.second.len() as f64;
        let det = to_matrix(&self.second).determinant();
        if !(det > 0.0) {
            return Err(Error::SingularCovariance);
        }
        Ok(det.powf(1.0 / (2.0 * n)) / self.volume.powf((n + 2.0) / (2.0 * n)))
    }
}

/// Simplices conv{0, w_1..w_n} covering the body, with signed orientation
/// irrelevant (volumes are taken in absolute value).
fn cone_simplices(body: &Body) -> Result<Vec<Vec<Vector>>> {
    let n = body.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let v = body.vertices()?;
    Ok(match n {
        1 => v.iter().map(|p| vec![p.clone()]).collect(),
        2 => (0..v.len()).map(|k| vec![v[k].clone(), v[(k + 1) % v.len()].clone()]).collect(),
        _ => {
            let hull = convex_hull(v)?;
            let mut out = Vec::new();
            for f in &hull.facets {
                let a = &v[f.vertices[0]];
                for w in f.vertices[1..].windows(2) {
                    out.push(vec![a.clone(), v[w[0]].clone(), v[w[1]].clone()]);
                }
            }
            out
        }
    })
}

/// Exact volume, first, second and fourth radial moments (n ≤ 3).
pub fn exact_moments(body: &Body) -> Result<ExactMoments> {
    let n = body.dim();
    let simplices = cone_simplices(body)?;
    let nf = factorial(n);
    let mut volume = 0.0;
    let mut first = vec![0.0; n];
    let mut second = vec![vec![0.0; n]; n];
    let mut fourth = 0.0;
    for w in &simplices {
        let rows: Vec<&[f64]> = w.iter().map(|p| p.as_slice()).collect();
        let vol = det_rows(&rows).abs() / nf;
        if vol == 0.0 {
            continue;
        }
        volume += vol;
        let mut s = vec![0.0; n];
        for p in w {
            for i in 0..n {
                s[i] += p[i];
            }
        }
        let c2 = vol / ((n + 1) * (n + 2)) as f64;
        for i in 0..n {
            first[i] += vol / (n + 1) as f64 * s[i];
            for j in 0..n {
                let ww: f64 = w.iter().map(|p| p[i] * p[j]).sum();
                second[i][j] += c2 * (ww + s[i] * s[j]);
            }
        }
        // ‖Σλ_i w_i‖⁴ = Σ λ_aλ_bλ_cλ_d g_ab g_cd with ∫λ^α = n!|Δ|α!/(n+4)!.
        let g: Vec<Vec<f64>> = w.iter().map(|a| w.iter().map(|b| dot(a, b)).collect()).collect();
        let c4 = nf * vol / factorial(n + 4);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut alpha = [0usize; 3];
                        for idx in [a, b, c, d] {
                            alpha[idx] += 1;
                        }
                        let af: f64 = alpha.iter().map(|&k| factorial(k)).product();
                        fourth += c4 * af * g[a][b] * g[c][d];
                    }
                }
            }
        }
    }
    Ok(ExactMoments { volume, first, second, fourth_radial: fourth })
}

/// Pair (∫‖x‖_L^p, ∫‖x‖_L^{2p}) with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeMoments {
    pub p: f64,
    pub first: f64,
    pub first_stderr: f64,
    pub second: f64,
    pub second_stderr: f64,
}

/// Unnormalized moment integrals over a body against a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// ∫ρ.
    pub mass: f64,
    pub mass_stderr: f64,
    /// ∫ x xᵀ ρ(x) dx.
    pub covariance: Vec<Vector>,
    pub covariance_stderr: Vec<Vector>,
    pub second_radial: f64,
    pub second_radial_stderr: f64,
    pub fourth_radial: f64,
    pub fourth_radial_stderr: f64,
    pub gauge_moments: Option<GaugeMoments>,
    pub n_samples: usize,
    pub seed: SeedSpec,
}

/// Monte-Carlo moments of `body` against `density`, optionally with gauge
/// moments of ‖·‖_L^p.
pub fn moments(
    body: &Body,
    density: &DensitySpec,
    gauge: Option<(&Body, f64)>,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<MomentSummary> {
    let n = body.dim();
    if let Some((l, p)) = gauge {
        if l.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: l.dim() });
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidP(p));
        }
    }
    let npair = n * (n + 1) / 2;
    let k = 1 + npair + 2 + if gauge.is_some() { 2 } else { 0 };
    let r = integrate(
        body,
        density,
        k,
        |x, out| {
            out[0] = 1.0;
            let mut idx = 1;
            for i in 0..n {
                for j in i..n {
                    out[idx] = x[i] * x[j];
                    idx += 1;
                }
            }
            let r2 = dot(x, x);
            out[idx] = r2;
            out[idx + 1] = r2 * r2;
            if let Some((l, p)) = gauge {
                let g = l.gauge(x).powf(p);
                out[idx + 2] = g;
                out[idx + 3] = g * g;
            }
        },
        n_samples,
        seed,
    )?;
    let mut covariance = vec![vec![0.0; n]; n];
    let mut covariance_stderr = vec![vec![0.0; n]; n];
    let mut idx = 1;
    for i in 0..n {
        for j in i..n {
            covariance[i][j] = r.values[idx];
            covariance[j][i] = r.values[idx];
            covariance_stderr[i][j] = r.stderr(idx);
            covariance_stderr[j][i] = r.stderr(idx);
            idx += 1;
        }
    }
    let gauge_moments = gauge.map(|(_, p)| GaugeMoments {
        p,
        first: r.values[idx + 2],
        first_stderr: r.stderr(idx + 2),
        second: r.values[idx + 3],
        second_stderr: r.stderr(idx + 3),
    });
    Ok(MomentSummary {
        mass: r.values[0],
        mass_stderr: r.stderr(0),
        covariance,
        covariance_stderr,
        second_radial: r.values[idx],
        second_radial_stderr: r.stderr(idx),
        fourth_radial: r.values[idx + 1],
        fourth_radial_stderr: r.stderr(idx + 1),
        gauge_moments,
        n_samples,
        seed: seed.clone(),
    })
}

pub(crate) fn to_matrix(rows: &[Vector]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vector> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Second-moment matrix ∫xxᵀ and volume: exact for n ≤ 3, otherwise sampled.
/// The returned covariance (over the parameters volume, then the upper
/// triangle of ∫xxᵀ row by row) is zero on the exact path.
fn second_moments(body: &Body, n_samples: usize, seed: &SeedSpec) -> Result<(f64, Vec<Vector>, Vec<Vec<f64>>)> {
    let n = body.dim();
    let npair = n * (n + 1) / 2;
    if n <= 3 {
        let e = exact_moments(body)?;
        return Ok((e.volume, e.second, vec![vec![0.0; npair + 1]; npair + 1]));
    }
    let r = integrate(
        body,
        &DensitySpec::Lebesgue,
        1 + npair,
        |x, out| {
            out[0] = 1.0;
            let mut idx = 1;
            for i in 0..n {
                for j in i..n {
                    out[idx] = x[i] * x[j];
                    idx += 1;
                }
            }
        },
        n_samples,
        seed,
    )?;
    let mut m = vec![vec![0.0; n]; n];
    let mut idx = 1;
    for i in 0..n {
        for j in i..n {
            m[i][j] = r.values[idx];
            m[j][i] = r.values[idx];
            idx += 1;
        }
    }
    Ok((r.values[0], m, r.cov))
}

fn inverse_sqrt_unit_det(m: &[Vector]) -> Result<DMatrix<f64>> {
    let n = m.len();
    let eig = to_matrix(m).symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || eig.eigenvalues.iter().any(|&l| !(l > 1e-14 * max)) {
        return Err(Error::SingularCovariance);
    }
    let log_det: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    let c = (log_det / (2.0 * n as f64)).exp();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| c / l.sqrt()));
    let q = &eig.eigenvectors;
    Ok(q * d * q.transpose())
}

/// T ∈ SL_n with TK isotropic: T = c·M^{−1/2} for M = ∫_K xxᵀ. Exact for
/// n ≤ 3; sampled with `n_samples` otherwise.
pub fn isotropic_map(body: &Body, n_samples: usize, seed: &SeedSpec) -> Result<Vec<Vector>> {
    let (_, m, _) = second_moments(body, n_samples, seed)?;
    Ok(from_matrix(&inverse_sqrt_unit_det(&m)?))
}

/// L_K with a delta-method standard error (zero on the exact path).
pub fn isotropic_constant(body: &Body, n_samples: usize, seed: &SeedSpec) -> Result<Estimate> {
    let n = body.dim();
    let (vol, m, cov) = second_moments(body, n_samples, seed)?;
    let mm = to_matrix(&m);
    let det = mm.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let nf = n as f64;
    let value = det.powf(1.0 / (2.0 * nf)) / vol.powf((nf + 2.0) / (2.0 * nf));
    let inv = mm.try_inverse().ok_or(Error::SingularCovariance)?;
    // ∇ ln L over (volume, upper triangle of M).
    let mut grad = vec![-(nf + 2.0) / (2.0 * nf * vol)];
    for i in 0..n {
        for j in i..n {
            let w = if i == j { 1.0 } else { 2.0 };
            grad.push(w * inv[(i, j)] / (2.0 * nf));
        }
    }
    let var: f64 = (0..grad.len()).map(|a| (0..grad.len()).map(|b| grad[a] * cov[a][b] * grad[b]).sum::<f64>()).sum();
    let exact = n <= 3;
    Ok(Estimate {
        value,
        stderr: value * var.max(0.0).sqrt(),
        n_samples: if exact { 0 } else { n_samples },
        seed: if exact { None } else { Some(seed.clone()) },
    })
}

/// σ²(K) = n(|K|∫‖x‖⁴/(∫‖x‖²)² − 1) for K in isotropic position.
///
/// Fails with `NotIsotropic` when the sampled second-moment matrix is
/// anisotropic beyond four standard errors.
pub fn sigma2(body: &Body, n_samples: usize, seed: &SeedSpec) -> Result<Estimate> {
    let n = body.dim();
    let npair = n * (n + 1) / 2;
    let k = 1 + npair + 2;
    let r = integrate(
        body,
        &DensitySpec::Lebesgue,
        k,
        |x, out| {
            out[0] = 1.0;
            let mut idx = 1;
            for i in 0..n {
                for j in i..n {
                    out[idx] = x[i] * x[j];
                    idx += 1;
                }
            }
            let r2 = dot(x, x);
            out[idx] = r2;
            out[idx + 1] = r2 * r2;
        },
        n_samples,
        seed,
    )?;
    let mut m = DMatrix::zeros(n, n);
    let mut max_se: f64 = 0.0;
    let mut idx = 1;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = r.values[idx];
            m[(j, i)] = r.values[idx];
            max_se = max_se.max(r.stderr(idx));
            idx += 1;
        }
    }
    let eig = m.symmetric_eigen().eigenvalues;
    let (lmin, lmax) = eig.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &l| (a.min(l), b.max(l)));
    if !(lmin > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let anisotropy = lmax / lmin - 1.0;
    let allowed = 8.0 * max_se / lmin;
    if anisotropy > allowed {
        return Err(Error::NotIsotropic { anisotropy, allowed });
    }
    let (iv, i2, i4) = (0, idx, idx + 1);
    let (v, m2, m4) = (r.values[iv], r.values[i2], r.values[i4]);
    let nf = n as f64;
    let value = nf * (v * m4 / (m2 * m2) - 1.0);
    let mut grad = vec![0.0; k];
    grad[iv] = nf * m4 / (m2 * m2);
    grad[i4] = nf * v / (m2 * m2);
    grad[i2] = -2.0 * nf * v * m4 / (m2 * m2 * m2);
    let var: f64 = (0..k).map(|a| (0..k).map(|b| grad[a] * r.cov[a][b] * grad[b]).sum::<f64>()).sum();
    Ok(Estimate { value, stderr: var.max(0.0).sqrt(), n_samples, seed: Some(seed.clone()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{box_body, cross_polytope, cube, regular_polygon};

    #[test]
    fn exact_cube_moments() {
        let e = exact_moments(&cube(2)).unwrap();
        assert!((e.volume - 4.0).abs() < 1e-14);
        assert!((e.second[0][0] - 4.0 / 3.0).abs() < 1e-14);
        assert!(e.second[0][1].abs() < 1e-14);
        // ∫(x²+y²)² over [−1,1]² = 4(1/5 + 2/9 + 1/5)
        assert!((e.fourth_radial - 4.0 * (0.4 + 2.0 / 9.0)).abs() < 1e-13);
        assert!((e.sigma2() - 0.8).abs() < 1e-12);
        let e3 = exact_moments(&cube(3)).unwrap();
        assert!((e3.sigma2() - 0.8).abs() < 1e-12);
        assert!((e3.isotropic_constant().unwrap() - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        let e1 = exact_moments(&cube(1)).unwrap();
        assert!((e1.sigma2() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn octahedron_second_moment() {
        // E x₁² = 2/((n+1)(n+2)) on B₁ⁿ
        let e = exact_moments(&cross_polytope(3)).unwrap();
        assert!((e.second[0][0] - 4.0 / 30.0).abs() < 1e-14);
        assert!(e.first.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn box_isotropic_map() {
        let k = box_body(&[2.0, 1.0]);
        let t = isotropic_map(&k, 0, &SeedSpec::new(0)).unwrap();
        let rows: Vec<&[f64]> = t.iter().map(|p| p.as_slice()).collect();
        assert!((det_rows(&rows) - 1.0).abs() < 1e-12);
        assert!((t[0][0] - 0.5f64.sqrt()).abs() < 1e-12 && (t[1][1] - 2f64.sqrt()).abs() < 1e-12);
        let c = isotropic_map(&cube(3), 0, &SeedSpec::new(0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disc_moments_mc() {
        let p = regular_polygon(256, 1.0, 0.0);
        let s = moments(&p, &DensitySpec::Lebesgue, None, 400_000, &SeedSpec::new(5)).unwrap();
        let exact = exact_moments(&p).unwrap();
        assert!((s.second_radial - exact.second_radial()).abs() < 4.0 * s.second_radial_stderr);
        assert!((exact.second_radial() - std::f64::consts::PI / 2.0).abs() < 1e-3);
        assert!(s.covariance[0][1].abs() < 4.0 * s.covariance_stderr[0][1]);
        assert!(s.fourth_radial >= s.second_radial.powi(2) / s.mass);
    }

    #[test]
    fn sigma2_cube_mc_and_anisotropy() {
        let e = sigma2(&cube(2), 400_000, &SeedSpec::new(6)).unwrap();
        assert!((e.value - 0.8).abs() < 4.0 * e.stderr, "{e:?}");
        let err = sigma2(&box_body(&[2.0, 1.0]), 100_000, &SeedSpec::new(6)).unwrap_err();
        assert!(matches!(err, Error::NotIsotropic { .. }));
    }

    #[test]
    fn isotropic_constant_of_cube() {
        let l = isotropic_constant(&cube(2), 0, &SeedSpec::new(0)).unwrap();
        assert!((l.value - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        let l4 = isotropic_constant(&cube(4), 400_000, &SeedSpec::new(7)).unwrap();
        assert!((l4.value - 1.0 / 12f64.sqrt()).abs() < 4.0 * l4.stderr.max(1e-9), "{l4:?}");
    }
}
