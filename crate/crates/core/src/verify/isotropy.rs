
use super::{check_uniform, CheckReport, Orientation, Sampling, ScanReport, EXACT_TOL};
use crate::combine::{lp_sum, DirectionGrid};
use crate::error::{Error, Result};
use crate::geom::{Ball, Body};
use crate::measure::{
    exact_moments, integrate, isotropic_map, simpson, sphere_area, to_matrix, volume_sphere, Accumulator, DensitySpec,
    SphereQuad,
};
use crate::sample::{chunked, sphere_point, SeedSpec};
use crate::vector::{dot, normalize, Vector};

/// Iteration cap for the isotropic fixed point in [`check_variance_bound`].
pub const SL_ITERATIONS: usize = 200;

/// t ↦ |(K° +_p e^t a·L°)°| = (1/n)∫(‖θ‖_K^p + e^t a‖θ‖_L^p)^{−n/p} dθ is
/// log-concave. Grid quadrature is deterministic; Monte-Carlo quadrature
/// reuses the same directions at every t.
pub fn scan_dual_family(
    k: &Body,
    l: &Body,
    p: f64,
    a: f64,
    t_grid: &[f64],
    quad: &SphereQuad,
) -> Result<ScanReport> {
    if !(k.is_symmetric() && l.is_symmetric()) {
        return Err(Error::InvalidParameter("bodies must be origin-symmetric".into()));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonpositiveFactor(a));
    }
    check_uniform(t_grid)?;
    let n = k.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: l.dim() });
    }
    let mut values = Vec::with_capacity(t_grid.len());
    let mut errs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let c = t.exp() * a;
        let e = volume_sphere(n, |x| (k.gauge(x).powf(p) + c * l.gauge(x).powf(p)).powf(1.0 / p), quad);
        values.push(e.value);
        errs.push(e.stderr);
    }
    let (stderr, sampling) = match quad {
        SphereQuad::Grid(_) => (None, None),
        SphereQuad::MonteCarlo { n_samples, seed } => {
            (Some(errs), Some(Sampling { n_samples: *n_samples, seed: seed.clone() }))
        }
    };
    let exact = stderr.is_none();
    let mut r = ScanReport::build("dual_family", t_grid.to_vec(), values, stderr, Orientation::Concave, EXACT_TOL)?
        .param("exact", exact)
        .param("p", p)
        .param("a", a);
    if let Some(s) = &sampling {
        r = r.sampled(s);
    }
    Ok(r)
}

/// T = (K° +_p a·L°)° on `grid`: the polar of the outer Wulff shape, i.e.
/// conv{θᵢ/(‖θᵢ‖_K^p + a‖θᵢ‖_L^p)^{1/p}}.
fn dual_family_body(k: &Body, l: &Body, p: f64, a: f64, grid: &DirectionGrid) -> Result<Body> {
    Ok(lp_sum(&k.polar_dual(), &l.polar_dual(), 1.0, a, p, grid)?.polar_dual())
}

/// |T|∫_T‖x‖_L^{2p} − (∫_T‖x‖_L^p)² ≤ p/(a(n+p))·|T|∫_T‖x‖_L^p for
/// T = (K° +_p a·L°)°. The inequality is guaranteed when the dual family is
/// log-concave; elsewhere the report is informational.
pub fn check_moment_gap(
    k: &Body,
    l: &Body,
    p: f64,
    a: f64,
    grid: &DirectionGrid,
    sampling: &Sampling,
) -> Result<CheckReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonpositiveFactor(a));
    }
    let n = k.dim();
    let t = dual_family_body(k, l, p, a, grid)?;
    let r = integrate(
        &t,
        &DensitySpec::Lebesgue,
        3,
        |x, out| {
            let g = l.gauge(x).powf(p);
            out[0] = 1.0;
            out[1] = g;
            out[2] = g * g;
        },
        sampling.n_samples,
        &sampling.seed,
    )?;
    let (v, g1, g2) = (r.values[0], r.values[1], r.values[2]);
    let c = p / (a * (n as f64 + p));
    let lhs = v * g2 - g1 * g1;
    let rhs = c * v * g1;
    // Gradient of rhs − lhs with respect to (V, G1, G2).
    let grad = [c * g1 - g2, c * v + 2.0 * g1, -v];
    let var: f64 = (0..3).map(|i| (0..3).map(|j| grad[i] * r.cov[i][j] * grad[j]).sum::<f64>()).sum();
    Ok(CheckReport::stochastic("moment_gap", lhs, rhs, var.max(0.0).sqrt(), sampling)
        .param("exact", false)
        .param("p", p)
        .param("a", a)
        .param("volume", v)
        .param("gauge_moment_p", g1)
        .param("gauge_moment_2p", g2))
}

/// T_t^{−1} = exp(−t(vvᵀ − I/n)) applied to x.
fn inv_flow(v: &[f64], t: f64, x: &[f64]) -> Vector {
    let n = v.len() as f64;
    let s = (t / n).exp();
    let c = ((-t).exp() - 1.0) * dot(v, x);
    x.iter().zip(v).map(|(xi, vi)| s * (xi + c * vi)).collect()
}

/// ∫ over the unit circle of f(θ), split at the given angles where f may
/// have kinks.
fn circle_integral<F: Fn(f64) -> f64>(breaks: &mut Vec<f64>, f: F) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    for b in breaks.iter_mut() {
        *b = b.rem_euclid(two_pi);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    if breaks.is_empty() {
        breaks.push(0.0);
    }
    let m = breaks.len();
    (0..m)
        .map(|j| {
            let lo = breaks[j];
            let hi = if j + 1 < m { breaks[j + 1] } else { breaks[0] + two_pi };
            if hi - lo > 0.0 { simpson(&f, lo, hi, 1e-15) } else { 0.0 }
        })
        .sum()
}

/// d/dt |(T_t^{−1}K +₂ a·B)°| at t = 0 against
/// (n+2)a[−∫_{(K+₂aB)°}(x·v)² + (1/n)∫_{(K+₂aB)°}‖x‖²], with
/// T_t = exp(t(vvᵀ − I/n)).
///
/// Both sides are sphere integrals of ρ_t(θ) = (h_K(T_t^{−1}θ)² + a)^{1/2}:
/// piecewise-adaptive quadrature in the plane, common-direction Monte Carlo
/// in 3-D. The report's lhs is |D(h) − formula| against rhs 0 with tolerance
/// (8/3)|D(h) − D(h/2)| (twice the Richardson truncation estimate) plus
/// 4 standard errors; `params.richardson_ratio` should be ≈ 4.
pub fn check_isotropy_derivative(k: &Body, a: f64, v: &[f64], h: f64, sampling: &Sampling) -> Result<CheckReport> {
    let n = k.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !k.is_symmetric() {
        return Err(Error::InvalidParameter("body must be origin-symmetric".into()));
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len() });
    }
    if !(a > 0.0) || !(h > 0.0) {
        return Err(Error::NonpositiveFactor(a.min(h)));
    }
    let v = normalize(v).ok_or_else(|| Error::InvalidParameter("zero direction".into()))?;
    let nf = n as f64;
    let rho = |t: f64, theta: &[f64]| (k.support(&inv_flow(&v, t, theta)).powi(2) + a).sqrt();
    let formula_integrand = |theta: &[f64]| a * (1.0 / nf - dot(theta, &v).powi(2)) * rho(0.0, theta).powf(-nf - 2.0);
    let steps = [h, h / 2.0, h / 4.0];

    let (d, formula, stderr, exact) = if n == 2 {
        let (normals, _) = k.halfspaces()?;
        let breaks_at = |t: f64| -> Vec<f64> {
            // Kinks of θ ↦ h_K(T_t^{−1}θ) sit at θ ∝ T_t n_j.
            normals
                .iter()
                .map(|nj| {
                    let w = inv_flow(&v, -t, nj);
                    w[1].atan2(w[0])
                })
                .collect()
        };
        let f = |t: f64| circle_integral(&mut breaks_at(t), |phi| rho(t, &[phi.cos(), phi.sin()]).powf(-nf)) / nf;
        let d: Vec<f64> = steps.iter().map(|&s| (f(s) - f(-s)) / (2.0 * s)).collect();
        let formula = circle_integral(&mut breaks_at(0.0), |phi| formula_integrand(&[phi.cos(), phi.sin()]));
        (d, formula, 0.0, true)
    } else {
        let area = sphere_area(n);
        let parts = chunked(sampling.n_samples, &sampling.seed, |count, rng| {
            let mut acc = Accumulator::new(5);
            let mut out = [0.0; 5];
            for _ in 0..count {
                let theta = sphere_point(n, rng);
                for (j, &s) in steps.iter().enumerate() {
                    out[j] = area * (rho(s, &theta).powf(-nf) - rho(-s, &theta).powf(-nf)) / (2.0 * s * nf);
                }
                out[3] = area * formula_integrand(&theta);
                out[4] = out[0] - out[3];
                acc.push(&out);
            }
            acc
        });
        let mut acc = Accumulator::new(5);
        for p in &parts {
            acc.merge(p);
        }
        (acc.mean[..3].to_vec(), acc.mean[3], acc.stderr(4), false)
    };
    let trunc = (d[0] - d[1]).abs();
    let ratio = trunc / (d[1] - d[2]).abs();
    let tol = 8.0 / 3.0 * trunc + 1e-12 * formula.abs().max(1.0) + 4.0 * stderr;
    let mut r = CheckReport::with_tolerance("isotropy_derivative", (d[0] - formula).abs(), 0.0, tol)
        .param("exact", exact)
        .param("finite_difference", d[0])
        .param("finite_difference_half", d[1])
        .param("finite_difference_quarter", d[2])
        .param("richardson_ratio", ratio)
        .param("extrapolated", (4.0 * d[1] - d[0]) / 3.0)
        .param("formula", formula)
        .param("h", h)
        .param("a", a)
        .param("v", &v);
    if !exact {
        r.stderr = Some(stderr);
        r.seed = Some(sampling.seed.clone());
        r.n_samples = sampling.n_samples;
    }
    Ok(r)
}

/// σ²(T) ≤ 2/(a(n+2)L_T²) for T = (K° +₂ a·B)° in isotropic position.
///
/// Isotropy is reached by the fixed-point iteration K° ← S⁻¹K° with S the
/// isotropic map of the current T, so T stays in the class while becoming
/// isotropic. Rescaling T to unit volume turns a into a·|T|^{2/n}; σ² and
/// L_T are computed exactly (n ≤ 3) and are scale invariant.
pub fn check_variance_bound(k: &Body, a: f64, grid: &DirectionGrid) -> Result<CheckReport> {
    let n = k.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !k.is_symmetric() {
        return Err(Error::InvalidParameter("body must be origin-symmetric".into()));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonpositiveFactor(a));
    }
    let ball = Ball { dim: n, radius: 1.0 };
    let mut q = k.polar_dual();
    let mut iterations = 0;
    let (moments, anisotropy) = loop {
        let t = lp_sum(&q, &ball, 1.0, a, 2.0, grid)?.polar_dual();
        let e = exact_moments(&t)?;
        let eig = to_matrix(&e.second).symmetric_eigen().eigenvalues;
        let (lmin, lmax) = eig.iter().fold((f64::INFINITY, 0.0_f64), |(x, y), &l| (x.min(l), y.max(l)));
        let anisotropy = lmax / lmin - 1.0;
        if anisotropy < 1e-11 {
            break (e, anisotropy);
        }
        iterations += 1;
        if iterations > SL_ITERATIONS {
            return Err(Error::NotIsotropic { anisotropy, allowed: 1e-11 });
        }
        let s = isotropic_map(&t, 0, &SeedSpec::new(0))?;
        let s_inv = to_matrix(&s).try_inverse().ok_or(Error::SingularCovariance)?;
        let rows: Vec<Vector> = (0..n).map(|i| (0..n).map(|j| s_inv[(i, j)]).collect()).collect();
        q = q.linear_image(&rows)?;
    };
    let a_eff = a * moments.volume.powf(2.0 / n as f64);
    let sigma2 = moments.sigma2();
    let l_t = moments.isotropic_constant()?;
    let bound = 2.0 / (a_eff * (n as f64 + 2.0) * l_t * l_t);
    Ok(CheckReport::exact("variance_bound", sigma2, bound)
        .param("exact", true)
        .param("a", a)
        .param("a_effective", a_eff)
        .param("isotropic_constant", l_t)
        .param("iterations", iterations)
        .param("anisotropy", anisotropy)
        .param("vacuous", bound > 1e3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{box_body, cube, regular_polygon};
    use crate::sample::{random_sym_vpoly, RadiusLaw};
    use crate::verify::uniform_grid;

    #[test]
    fn dual_family_identity_closed_form() {
        let k = regular_polygon(8, 1.0, 0.0);
        let t = uniform_grid(-2.0, 2.0, 21).unwrap();
        let quad = SphereQuad::Grid(DirectionGrid::planar(720));
        let r = scan_dual_family(&k, &k, 2.0, 1.0, &t, &quad).unwrap();
        assert!(r.pass);
        // values ∝ (1 + e^t)^{−n/p}
        let g = |t: f64| -(1.0 + t.exp()).ln();
        for j in 1..t.len() - 1 {
            let expect = g(t[j - 1]) - 2.0 * g(t[j]) + g(t[j + 1]);
            assert!((r.second_diffs[j].unwrap() - expect).abs() < 1e-9);
        }
        let r = scan_dual_family(&cube(2), &regular_polygon(64, 1.0, 0.0), 2.0, 1.0, &t, &quad).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn moment_gap_on_discs() {
        let disc = regular_polygon(256, 1.0, 0.0);
        let r = check_moment_gap(&disc, &disc, 2.0, 1.0, &DirectionGrid::planar(720), &Sampling::new(400_000, 2)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((r.lhs - pi2 / 192.0).abs() < 0.01 * pi2 / 192.0 + 4.0 * r.stderr.unwrap(), "{r:?}");
        assert!((r.rhs - pi2 / 32.0).abs() < 0.01 * pi2 / 32.0, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn isotropy_derivative_planar() {
        let s = Sampling::new(1, 0);
        let r = check_isotropy_derivative(&box_body(&[2.0, 1.0]), 1.0, &[1.0, 0.0], 1e-2, &s).unwrap();
        assert!(r.pass, "{r:?}");
        let f = r.params["formula"].as_f64().unwrap();
        assert!((f - 0.0808697355037).abs() < 1e-9, "{f}");
        let ratio = r.params["richardson_ratio"].as_f64().unwrap();
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
        let ball = regular_polygon(64, 1.0, 0.0);
        let r = check_isotropy_derivative(&ball, 1.0, &[0.6, 0.8], 1e-2, &s).unwrap();
        assert!(r.params["formula"].as_f64().unwrap().abs() < 1e-10);
        assert!(r.params["finite_difference"].as_f64().unwrap().abs() < 1e-10);
    }

    #[test]
    fn isotropy_derivative_spatial() {
        let s = Sampling::new(200_000, 4);
        let r = check_isotropy_derivative(&box_body(&[1.5, 1.0, 0.8]), 1.0, &[1.0, 0.0, 0.0], 1e-2, &s).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn variance_bound_cases() {
        let g = DirectionGrid::planar(720);
        let r = check_variance_bound(&regular_polygon(64, 1.0, 0.0), 1.0, &g).unwrap();
        assert!(r.pass && (r.lhs - 2.0 / 3.0).abs() < 1e-2, "{r:?}");
        let r = check_variance_bound(&cube(2), 1.0, &g).unwrap();
        assert!(r.pass, "{r:?}");
        let k = random_sym_vpoly(2, 3, RadiusLaw::default(), &SeedSpec::new(3)).unwrap();
        let r = check_variance_bound(&k, 0.5, &g).unwrap();
        assert!(r.pass && r.params["anisotropy"].as_f64().unwrap() < 1e-11, "{r:?}");
        let r = check_variance_bound(&cube(2), 1e-4, &g).unwrap();
        assert!(r.params["vacuous"].as_bool().unwrap());
    }
}
