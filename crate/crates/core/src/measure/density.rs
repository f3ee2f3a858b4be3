use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{sphere_area, volume, volume_mc, Accumulator, Estimate};
use crate::error::{Error, Result};
use crate::geom::Body;
use crate::sample::{chunked, gaussian_vector, hit_and_run, sphere_point, Oracle, SeedSpec};
use crate::vector::{dot, factorial};

/// Density of a measure on ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Lebesgue,
    /// Centred normal law with covariance σ²·I (a probability measure).
    Gaussian { sigma: f64 },
    /// exp(−‖x‖_M^p).
    GaugeExp { m: Body, p: f64 },
    /// Indicator of W.
    UniformOn { w: Body },
    /// exp(−max(‖x‖_M^p, s)) where ‖x‖_M^p ≤ t, zero beyond.
    TruncatedConvex { m: Body, p: f64, s: f64, t: f64 },
}

impl DensitySpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let dim = |b: &Body| {
            if b.dim() == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: n, found: b.dim() })
            }
        };
        match self {
            DensitySpec::Lebesgue => Ok(()),
            DensitySpec::Gaussian { sigma } => {
                if *sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("gaussian sigma must be positive, got {sigma}")))
                }
            }
            DensitySpec::GaugeExp { m, p } => {
                dim(m)?;
                if *p >= 1.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidP(*p))
                }
            }
            DensitySpec::UniformOn { w } => dim(w),
            DensitySpec::TruncatedConvex { m, p, s, t } => {
                dim(m)?;
                if !(*p >= 1.0) {
                    return Err(Error::InvalidP(*p));
                }
                if !(*s > 0.0 && t > s && t.is_finite()) {
                    return Err(Error::NonIntegrable(format!("truncation needs t > s > 0, got s = {s}, t = {t}")));
                }
                Ok(())
            }
        }
    }

    /// Whether the density is invariant under x ↦ −x.
    pub fn is_even(&self) -> bool {
        match self {
            DensitySpec::Lebesgue | DensitySpec::Gaussian { .. } => true,
            DensitySpec::GaugeExp { m, .. } | DensitySpec::TruncatedConvex { m, .. } => m.is_symmetric(),
            DensitySpec::UniformOn { w } => w.is_symmetric(),
        }
    }
}

pub(crate) struct DensityEval<'a> {
    spec: &'a DensitySpec,
    oracle: Option<Oracle<'a>>,
    gauss_norm: f64,
}

impl<'a> DensityEval<'a> {
    pub(crate) fn new(spec: &'a DensitySpec, n: usize) -> DensityEval<'a> {
        let oracle = match spec {
            DensitySpec::GaugeExp { m, .. } | DensitySpec::TruncatedConvex { m, .. } => Some(Oracle::new(m)),
            DensitySpec::UniformOn { w } => Some(Oracle::new(w)),
            _ => None,
        };
        let gauss_norm = match spec {
            DensitySpec::Gaussian { sigma } => (2.0 * std::f64::consts::PI * sigma * sigma).powf(-(n as f64) / 2.0),
            _ => 1.0,
        };
        DensityEval { spec, oracle, gauss_norm }
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match self.spec {
            DensitySpec::Lebesgue => 1.0,
            DensitySpec::Gaussian { sigma } => self.gauss_norm * (-dot(x, x) / (2.0 * sigma * sigma)).exp(),
            DensitySpec::GaugeExp { p, .. } => (-self.oracle.as_ref().unwrap().gauge(x).powf(*p)).exp(),
            DensitySpec::UniformOn { .. } => {
                if self.oracle.as_ref().unwrap().contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            DensitySpec::TruncatedConvex { p, s, t, .. } => {
                let v = self.oracle.as_ref().unwrap().gauge(x).powf(*p);
                if v > *t {
                    0.0
                } else {
                    (-v.max(*s)).exp()
                }
            }
        }
    }
}

/// Vector of integrals ∫_K ρ(x) g(x) dx with the covariance of the estimates.
#[derive(Debug, Clone)]
pub(crate) struct Integrals {
    pub values: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl Integrals {
    pub fn stderr(&self, i: usize) -> f64 {
        self.cov[i][i].max(0.0).sqrt()
    }
}

/// Monte-Carlo integration of `k` functions against `density` over `body`.
///
/// Points are uniform in the bounding box (weights box-volume · ρ · 1_K).
/// Thin bodies, where the box acceptance falls below 1e-3, are sampled by
/// hit-and-run instead and weighted by the exact volume (n ≤ 3).
pub(crate) fn integrate<G>(
    body: &Body,
    density: &DensitySpec,
    k: usize,
    g: G,
    n_samples: usize,
    seed: &SeedSpec,
) -> Result<Integrals>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = body.dim();
    density.validate(n)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let oracle = Oracle::new(body);
    let eval = DensityEval::new(density, n);
    let (lo, hi) = body.bounding_box();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();

    // Pilot acceptance on an independent stream.
    let mut pilot = seed.child(u64::MAX).rng();
    let mut hits = 0usize;
    let mut x = vec![0.0; n];
    for _ in 0..4000 {
        for i in 0..n {
            x[i] = lo[i] + (hi[i] - lo[i]) * pilot.random::<f64>();
        }
        if oracle.contains(&x) {
            hits += 1;
        }
    }
    let thin = hits < 4;
    let body_vol = if thin {
        if n > 3 {
            return Err(Error::AcceptanceTooLow);
        }
        volume(body)?
    } else {
        0.0
    };

    let parts = chunked(n_samples, seed, |count, rng| -> Result<Accumulator> {
        let mut acc = Accumulator::new(k);
        let mut out = vec![0.0; k];
        if thin {
            let pts = hit_and_run(&oracle, &lo, &hi, count, rng)?;
            for x in &pts {
                g(x, &mut out);
                let w = body_vol * eval.value(x);
                for o in out.iter_mut() {
                    *o *= w;
                }
                acc.push(&out);
            }
        } else {
            let mut x = vec![0.0; n];
            for _ in 0..count {
                for i in 0..n {
                    x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                }
                if oracle.contains(&x) {
                    let w = box_vol * eval.value(&x);
                    g(&x, &mut out);
                    for o in out.iter_mut() {
                        *o *= w;
                    }
                } else {
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
                acc.push(&out);
            }
        }
        Ok(acc)
    });
    let mut acc = Accumulator::new(k);
    for p in parts {
        acc.merge(&p?);
    }
    Ok(Integrals { values: acc.mean.clone(), cov: acc.mean_covariance() })
}

/// μ(K) for the given density.
pub fn measure_of(body: &Body, density: &DensitySpec, n_samples: usize, seed: &SeedSpec) -> Result<Estimate> {
    let n = body.dim();
    density.validate(n)?;
    match density {
        DensitySpec::Lebesgue => {
            if n <= 3 {
                Ok(Estimate::exact(volume(body)?))
            } else {
                Ok(volume_mc(body, n_samples, seed))
            }
        }
        DensitySpec::Gaussian { sigma } => {
            let oracle = Oracle::new(body);
            let hits: usize = chunked(n_samples, seed, |count, rng| {
                let mut h = 0usize;
                for _ in 0..count {
                    let z = gaussian_vector(n, rng);
                    let x: Vec<f64> = z.iter().map(|v| v * sigma).collect();
                    if oracle.contains(&x) {
                        h += 1;
                    }
                }
                h
            })
            .into_iter()
            .sum();
            let p = hits as f64 / n_samples as f64;
            Ok(Estimate {
                value: p,
                stderr: (p * (1.0 - p) / n_samples as f64).sqrt(),
                n_samples,
                seed: Some(seed.clone()),
            })
        }
        _ => {
            let r = integrate(body, density, 1, |_, out| out[0] = 1.0, n_samples, seed)?;
            Ok(Estimate { value: r.values[0], stderr: r.stderr(0), n_samples, seed: Some(seed.clone()) })
        }
    }
}

/// Adaptive Simpson quadrature.
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// ∫_{ℝⁿ} exp(−‖x‖_M^p) dx / |M|.
///
/// In one dimension this is deterministic quadrature. Otherwise points are
/// drawn as r·θ with θ uniform on the sphere and r ~ Gamma(n, R), R the
/// outradius of M, which keeps the importance weights bounded for p ≥ 1.
pub fn density_norm_constant(m: &Body, p: f64, n_samples: usize, seed: &SeedSpec) -> Result<Estimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    let n = m.dim();
    if n == 1 {
        let f = |x: f64| (-m.gauge(&[x]).powf(p)).exp();
        let (bp, bm) = (m.support(&[1.0]), m.support(&[-1.0]));
        // exp(−50) ≈ 2e-22 bounds the neglected tails
        let (xp, xm) = (bp * 50f64.powf(1.0 / p), bm * 50f64.powf(1.0 / p));
        let total = simpson(&f, 0.0, xp, 1e-14) + simpson(&f, -xm, 0.0, 1e-14);
        return Ok(Estimate::exact(total / volume(m)?));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let (lo, hi) = m.bounding_box();
    let reach = lo.iter().zip(&hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt();
    let r_scale = match m.vertices() {
        Ok(v) => v.iter().map(|w| crate::vector::norm(w)).fold(0.0, f64::max),
        Err(_) => reach,
    };
    let oracle = Oracle::new(m);
    let gamma = Gamma::new(n as f64, r_scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let log_c = (factorial(n - 1) * sphere_area(n)).ln() + n as f64 * r_scale.ln();
    let parts = chunked(n_samples, seed, |count, rng| {
        let mut acc = Accumulator::new(1);
        for _ in 0..count {
            let theta = sphere_point(n, rng);
            let r: f64 = gamma.sample(rng);
            let g = r * oracle.gauge(&theta);
            acc.push(&[(log_c + r / r_scale - g.powf(p)).exp()]);
        }
        acc
    });
    let mut acc = Accumulator::new(1);
    for part in &parts {
        acc.merge(part);
    }
    let (integral, se) = (acc.mean[0], acc.stderr(0));
    let (vol, vol_se) = if n <= 3 {
        (volume(m)?, 0.0)
    } else {
        let e = volume_mc(m, n_samples, &seed.child(1 << 40));
        (e.value, e.stderr)
    };
    let value = integral / vol;
    let stderr = value * ((se / integral).powi(2) + (vol_se / vol).powi(2)).sqrt();
    Ok(Estimate { value, stderr, n_samples, seed: Some(seed.clone()) })
}
