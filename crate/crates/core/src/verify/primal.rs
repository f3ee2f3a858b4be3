use super::{check_uniform, CheckReport, Orientation, Sampling, ScanReport, EXACT_TOL};
use crate::combine::{dilate, log_combine, DirectionGrid, FlowSpec};
use crate::error::{Error, Result};
use crate::geom::{make_hpoly, Body};
use crate::measure::{measure_of, volume, DensitySpec, Estimate};
use crate::vector::{normalize, scale};

fn is_exact(density: &DensitySpec, n: usize) -> bool {
    matches!(density, DensitySpec::Lebesgue) && n <= 3
}

fn require_symmetric(bodies: &[&Body]) -> Result<()> {
    if bodies.iter().all(|b| b.is_symmetric()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("body must be origin-symmetric".into()))
    }
}

/// Standard error of x^λ y^{1−λ} from those of x and y.
fn geometric_mean_stderr(x: &Estimate, y: &Estimate, lambda: f64, value: f64) -> f64 {
    let rx = if x.value > 0.0 { lambda * x.stderr / x.value } else { 0.0 };
    let ry = if y.value > 0.0 { (1.0 - lambda) * y.stderr / y.value } else { 0.0 };
    value * rx.hypot(ry)
}

/// μ(λ·K +₀ (1−λ)·L) ≥ μ(K)^λ μ(L)^{1−λ}.
///
/// K and L enter through their Wulff shapes on `grid` (the λ = 1 and λ = 0
/// members of the discrete family), so the tested statement is exactly the
/// inequality for the discretized pair; the combination is an outer Wulff
/// shape and can only over-estimate the right-hand side.
pub fn check_log_bm(
    k: &Body,
    l: &Body,
    lambda: f64,
    density: &DensitySpec,
    grid: &DirectionGrid,
    sampling: &Sampling,
) -> Result<CheckReport> {
    require_symmetric(&[k, l])?;
    let n = k.dim();
    let kg = log_combine(k, l, 1.0, grid)?;
    let lg = log_combine(k, l, 0.0, grid)?;
    let c = log_combine(k, l, lambda, grid)?;
    let seed = &sampling.seed;
    let (mk, ml, mc) = (
        measure_of(&kg, density, sampling.n_samples, seed)?,
        measure_of(&lg, density, sampling.n_samples, seed)?,
        measure_of(&c, density, sampling.n_samples, seed)?,
    );
    let lhs = mk.value.powf(lambda) * ml.value.powf(1.0 - lambda);
    let rhs = mc.value;
    let exact = is_exact(density, n);
    let report = if exact {
        CheckReport::exact("log_bm", lhs, rhs)
    } else {
        let se = geometric_mean_stderr(&mk, &ml, lambda, lhs).hypot(mc.stderr);
        CheckReport::stochastic("log_bm", lhs, rhs, se, sampling)
    };
    Ok(report
        .param("exact", exact)
        .param("lambda", lambda)
        .param("dim", n)
        .param("grid_len", grid.len())
        .param("grid_mesh", grid.mesh())
        .param("density", density)
        .param("mu_k", mk.value)
        .param("mu_l", ml.value))
}

/// t ↦ μ(e^{At}K) is log-concave.
///
/// All grid points share the sampling seed, so the stochastic estimates are
/// positively coupled and second differences are far less noisy than their
/// (independent-error) tolerance assumes.
pub fn scan_b(density: &DensitySpec, k: &Body, flow: &FlowSpec, t_grid: &[f64], sampling: &Sampling) -> Result<ScanReport> {
    require_symmetric(&[k])?;
    check_uniform(t_grid)?;
    let n = k.dim();
    if flow.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: flow.dim() });
    }
    let mut values = Vec::with_capacity(t_grid.len());
    let mut errs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let body = k.linear_image(&flow.matrix(t))?;
        let e = measure_of(&body, density, sampling.n_samples, &sampling.seed)?;
        values.push(e.value);
        errs.push(e.stderr);
    }
    let exact = is_exact(density, n);
    let stderr = if exact { None } else { Some(errs) };
    Ok(ScanReport::build("b", t_grid.to_vec(), values, stderr, Orientation::Concave, EXACT_TOL)?
        .param("exact", exact)
        .param("density", density)
        .param("flow", &flow.exponents)
        .sampled(sampling))
}

/// t ↦ |E ∩ e^tK| is log-concave for the symmetric strip E = {|x·u| ≤ a}.
pub fn check_strip_b(k: &Body, u: &[f64], a: f64, t_grid: &[f64]) -> Result<ScanReport> {
    require_symmetric(&[k])?;
    check_uniform(t_grid)?;
    let n = k.dim();
    if n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.len() });
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonpositiveFactor(a));
    }
    let u = normalize(u).ok_or_else(|| Error::InvalidParameter("zero strip direction".into()))?;
    let (normals, offsets) = k.halfspaces()?;
    let values = t_grid
        .iter()
        .map(|&t| {
            let f = t.exp();
            let mut nv = normals.to_vec();
            let mut ob: Vec<f64> = offsets.iter().map(|b| b * f).collect();
            nv.push(u.clone());
            nv.push(scale(&u, -1.0));
            ob.push(a);
            ob.push(a);
            volume(&make_hpoly(nv, ob, false)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScanReport::build("strip_b", t_grid.to_vec(), values, None, Orientation::Concave, EXACT_TOL)?
        .param("exact", true)
        .param("u", &u)
        .param("a", a))
}

/// μ(λK + (1−λ)L)^{1/2} ≥ λμ(K)^{1/2} + (1−λ)μ(L)^{1/2} for planar dilates
/// K = αM, L = βM.
pub fn check_gaussian_dilates(
    density: &DensitySpec,
    m: &Body,
    alpha: f64,
    beta: f64,
    lambda: f64,
    sampling: &Sampling,
) -> Result<CheckReport> {
    let n = m.dim();
    if n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    require_symmetric(&[m])?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    if !density.is_even() {
        return Err(Error::InvalidParameter("density must be even".into()));
    }
    let k = dilate(m, alpha)?;
    let l = dilate(m, beta)?;
    let c = dilate(m, lambda * alpha + (1.0 - lambda) * beta)?;
    let seed = &sampling.seed;
    let (mk, ml, mc) = (
        measure_of(&k, density, sampling.n_samples, seed)?,
        measure_of(&l, density, sampling.n_samples, seed)?,
        measure_of(&c, density, sampling.n_samples, seed)?,
    );
    let half_se = |e: &Estimate| if e.value > 0.0 { e.stderr / (2.0 * e.value.sqrt()) } else { 0.0 };
    let lhs = lambda * mk.value.sqrt() + (1.0 - lambda) * ml.value.sqrt();
    let rhs = mc.value.sqrt();
    let exact = is_exact(density, n);
    let report = if exact {
        CheckReport::exact("gaussian_dilates", lhs, rhs)
    } else {
        let se = (lambda * half_se(&mk)).hypot((1.0 - lambda) * half_se(&ml)).hypot(half_se(&mc));
        CheckReport::stochastic("gaussian_dilates", lhs, rhs, se, sampling)
    };
    Ok(report.param("exact", exact).param("alpha", alpha).param("beta", beta).param("lambda", lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{box_body, cube, regular_polygon};
    use crate::sample::{random_sym_vpoly, RadiusLaw, SeedSpec};
    use crate::verify::uniform_grid;

    #[test]
    fn log_bm_identity_and_planar_pairs() {
        let g = DirectionGrid::planar(720);
        let s = Sampling::new(1000, 1);
        let k = regular_polygon(6, 1.0, 0.2);
        let r = check_log_bm(&k, &k, 0.3, &DensitySpec::Lebesgue, &g, &s).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-12, "{r:?}");
        for j in 0..5 {
            let a = random_sym_vpoly(2, 4, RadiusLaw::default(), &SeedSpec::new(j)).unwrap();
            let b = random_sym_vpoly(2, 5, RadiusLaw::default(), &SeedSpec::new(100 + j)).unwrap();
            let r = check_log_bm(&a, &b, 0.5, &DensitySpec::Lebesgue, &g, &s).unwrap();
            assert!(r.margin >= -1e-6, "{r:?}");
        }
    }

    #[test]
    fn lebesgue_scan_is_log_affine() {
        let t = uniform_grid(-1.0, 1.0, 11).unwrap();
        let f = FlowSpec::new(vec![1.0, 2.0]).unwrap();
        let r = scan_b(&DensitySpec::Lebesgue, &cube(2), &f, &t, &Sampling::new(10, 0)).unwrap();
        assert!(r.pass);
        assert!(r.second_diffs.iter().flatten().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn gaussian_scan_is_log_concave() {
        let t = uniform_grid(-2.0, 2.0, 11).unwrap();
        let f = FlowSpec::new(vec![1.0, 1.0]).unwrap();
        let r = scan_b(&DensitySpec::Gaussian { sigma: 1.0 }, &cube(2), &f, &t, &Sampling::new(100_000, 3)).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.stderr_per_point.is_some());
    }

    #[test]
    fn strip_scan_against_segment_formula() {
        // Disc of radius r = e^t against the strip |x₂| ≤ 1.
        let t = uniform_grid(-0.5, 1.5, 21).unwrap();
        let disc = regular_polygon(512, 1.0, 0.0);
        let r = check_strip_b(&disc, &[0.0, 1.0], 1.0, &t).unwrap();
        assert!(r.min_second_diff >= -1e-8, "{r:?}");
        for (tj, v) in t.iter().zip(&r.values) {
            let rad = tj.exp();
            let exact = if rad <= 1.0 {
                std::f64::consts::PI * rad * rad
            } else {
                2.0 * rad * rad * (1.0 / rad).asin() + 2.0 * (rad * rad - 1.0).sqrt()
            };
            assert!((v - exact).abs() < 1e-3 * exact);
        }
        let bx = box_body(&[2.0, 0.5]);
        let r = check_strip_b(&bx, &[0.0, 1.0], 1.0, &t).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn dilates_lebesgue_equality_and_gaussian() {
        let s = Sampling::new(200_000, 9);
        let r = check_gaussian_dilates(&DensitySpec::Lebesgue, &cube(2), 0.5, 2.0, 0.3, &s).unwrap();
        assert!(r.margin.abs() < 1e-12);
        let r = check_gaussian_dilates(&DensitySpec::Gaussian { sigma: 1.0 }, &cube(2), 0.5, 2.0, 0.3, &s).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_gaussian_dilates(&DensitySpec::Lebesgue, &cube(3), 1.0, 2.0, 0.5, &s).is_err());
    }
}
