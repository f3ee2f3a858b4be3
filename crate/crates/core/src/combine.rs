//! L^p and logarithmic Minkowski combinations via Wulff shapes.
//!
//! A combination is represented by the halfspaces `{x·v ≤ f(v)}` over a
//! finite direction grid, which is always a superset of the true Wulff shape
//! and shrinks monotonically as the grid is refined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{box_body, make_hpoly, make_vpoly, Body, HPolytope, Rep, Support, VPolytope};
use crate::sample::{sphere_uniform, SeedSpec};
use crate::vector::{basis, dot, normalize, scale, Vector};

/// Finite set of unit directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGrid {
    directions: Vec<Vector>,
    /// Largest angular gap (radians) between neighbouring directions; in
    /// 3-D and above, twice the probed covering radius.
    mesh: f64,
    symmetric: bool,
}

impl DirectionGrid {
    pub fn new(directions: Vec<Vector>) -> Result<DirectionGrid> {
        let Some(first) = directions.first() else {
            return Err(Error::InvalidParameter("empty direction grid".into()));
        };
        let n = first.len();
        let mut dirs = Vec::with_capacity(directions.len());
        for d in &directions {
            if d.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: d.len() });
            }
            dirs.push(normalize(d).ok_or_else(|| Error::InvalidParameter("zero direction".into()))?);
        }
        let symmetric = is_negation_closed(&dirs);
        let mesh = estimate_mesh(&dirs);
        Ok(DirectionGrid { directions: dirs, mesh, symmetric })
    }

    /// `m` equally spaced planar directions, starting at angle 0.
    pub fn planar(m: usize) -> DirectionGrid {
        let directions = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        DirectionGrid { directions, mesh: 2.0 * std::f64::consts::PI / m as f64, symmetric: m.is_multiple_of(2) }
    }

    /// Fibonacci lattice of `half` points on S², together with its antipodes.
    pub fn fibonacci(half: usize) -> DirectionGrid {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut directions = Vec::with_capacity(2 * half);
        for i in 0..half {
            let z = 1.0 - (2 * i + 1) as f64 / half as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            directions.push(vec![r * phi.cos(), r * phi.sin(), z]);
        }
        let negs: Vec<Vector> = directions.iter().map(|d| scale(d, -1.0)).collect();
        directions.extend(negs);
        let mesh = estimate_mesh(&directions);
        DirectionGrid { directions, mesh, symmetric: true }
    }

    /// 720 planar directions, 2000 spherical ones in 3-D.
    pub fn default_for(n: usize) -> DirectionGrid {
        match n {
            1 => DirectionGrid { directions: vec![vec![1.0], vec![-1.0]], mesh: std::f64::consts::PI, symmetric: true },
            2 => DirectionGrid::planar(720),
            3 => DirectionGrid::fibonacci(1000),
            _ => {
                let mut dirs = sphere_uniform(n, 1000 * n, &SeedSpec { root_seed: 0, stream_path: vec![n as u64] });
                for i in 0..n {
                    dirs.push(basis(n, i));
                }
                let negs: Vec<Vector> = dirs.iter().map(|d| scale(d, -1.0)).collect();
                dirs.extend(negs);
                DirectionGrid::new(dirs).expect("nonempty")
            }
        }
    }

    /// Grid sized by a direction count: planar grids get `count` angles,
    /// spherical grids `count / 2` Fibonacci points plus antipodes.
    pub fn with_count(n: usize, count: usize) -> DirectionGrid {
        match n {
            2 => DirectionGrid::planar(count),
            3 => DirectionGrid::fibonacci(count.div_ceil(2)),
            _ => DirectionGrid::default_for(n),
        }
    }

    /// This grid plus extra directions (normalized, duplicates skipped).
    pub fn with_extra(&self, extra: &[Vector]) -> DirectionGrid {
        let mut dirs = self.directions.clone();
        for e in extra {
            if let Some(u) = normalize(e) {
                if !dirs.iter().any(|d| d.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-15)) {
                    dirs.push(u);
                }
            }
        }
        let symmetric = is_negation_closed(&dirs);
        DirectionGrid { mesh: self.mesh.min(estimate_mesh(&dirs)), directions: dirs, symmetric }
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

fn is_negation_closed(dirs: &[Vector]) -> bool {
    dirs.iter().all(|d| dirs.iter().any(|e| d.iter().zip(e).all(|(a, b)| (a + b).abs() <= 1e-12)))
}

fn estimate_mesh(dirs: &[Vector]) -> f64 {
    let n = dirs[0].len();
    match n {
        1 => {
            if dirs.iter().any(|d| d[0] > 0.0) && dirs.iter().any(|d| d[0] < 0.0) {
                std::f64::consts::PI
            } else {
                2.0 * std::f64::consts::PI
            }
        }
        2 => {
            let mut angles: Vec<f64> = dirs.iter().map(|d| d[1].atan2(d[0])).collect();
            angles.sort_by(f64::total_cmp);
            let m = angles.len();
            (0..m)
                .map(|k| {
                    if k + 1 < m {
                        angles[k + 1] - angles[k]
                    } else {
                        angles[0] + 2.0 * std::f64::consts::PI - angles[m - 1]
                    }
                })
                .fold(0.0, f64::max)
        }
        _ => {
            // Covering radius probed on random directions.
            let probes = sphere_uniform(n, 4000, &SeedSpec { root_seed: 0x6d65_7368, stream_path: vec![n as u64] });
            let cover = probes
                .iter()
                .map(|p| {
                    let best = dirs.iter().map(|d| dot(d, p)).fold(-1.0, f64::max);
                    best.clamp(-1.0, 1.0).acos()
                })
                .fold(0.0, f64::max);
            2.0 * cover
        }
    }
}

/// Diagonal exponent vector (a_1, …, a_n) of the flow x ↦ e^{At}x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub exponents: Vec<f64>,
}

impl FlowSpec {
    pub fn new(exponents: Vec<f64>) -> Result<FlowSpec> {
        if exponents.is_empty() {
            return Err(Error::InvalidParameter("empty exponent vector".into()));
        }
        if !exponents.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FlowSpec { exponents })
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Rows of the diagonal matrix e^{At}.
    pub fn matrix(&self, t: f64) -> Vec<Vector> {
        let n = self.dim();
        (0..n).map(|i| scale(&basis(n, i), (self.exponents[i] * t).exp())).collect()
    }

    pub fn trace(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// Points x_i moving as e^{a_i t} x_i; P_t is their convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VertexFlowJson")]
pub struct VertexFlow {
    pub points: Vec<Vector>,
    pub exponents: Vec<f64>,
    pub window: (f64, f64),
}

#[derive(Deserialize)]
struct VertexFlowJson {
    points: Vec<Vector>,
    exponents: Vec<f64>,
    window: (f64, f64),
}

impl TryFrom<VertexFlowJson> for VertexFlow {
    type Error = Error;
    fn try_from(j: VertexFlowJson) -> Result<VertexFlow> {
        VertexFlow::new(j.points, j.exponents, j.window)
    }
}

impl VertexFlow {
    /// Checks that P_t contains the origin in its interior on 32 sample
    /// times spanning the window.
    pub fn new(points: Vec<Vector>, exponents: Vec<f64>, window: (f64, f64)) -> Result<VertexFlow> {
        if points.len() != exponents.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: exponents.len() });
        }
        let Some(first) = points.first() else {
            return Err(Error::DegenerateBody);
        };
        let n = first.len();
        if points.len() < n + 1 {
            return Err(Error::DegenerateBody);
        }
        if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
            return Err(Error::InvalidParameter(format!("empty window ({}, {})", window.0, window.1)));
        }
        if !exponents.iter().all(|a| a.is_finite()) {
            return Err(Error::NonFinite);
        }
        let flow = VertexFlow { points, exponents, window };
        for k in 0..32 {
            let t = window.0 + (window.1 - window.0) * k as f64 / 31.0;
            flow.body_at(t)?;
        }
        Ok(flow)
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// The moved points e^{a_i t} x_i.
    pub fn points_at(&self, t: f64) -> Vec<Vector> {
        self.points.iter().zip(&self.exponents).map(|(x, &a)| scale(x, (a * t).exp())).collect()
    }

    fn body_at(&self, t: f64) -> Result<Body> {
        make_vpoly(self.points_at(t))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidLambda(lambda))
    }
}

fn same_dim(k: &dyn Support, l: &dyn Support, grid: &DirectionGrid) -> Result<usize> {
    let n = k.dim();
    for d in [l.dim(), grid.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    Ok(n)
}

/// Body with support (a·h_K^p + b·h_L^p)^{1/p} on the grid (outer Wulff shape).
pub fn lp_sum<K: Support + ?Sized, L: Support + ?Sized>(
    k: &K,
    l: &L,
    a: f64,
    b: f64,
    p: f64,
    grid: &DirectionGrid,
) -> Result<Body> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(Error::NonpositiveFactor(a.min(b)));
    }
    let n = k.dim();
    for d in [l.dim(), grid.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    let offsets: Vec<f64> = grid
        .directions()
        .iter()
        .map(|u| {
            let (hk, hl) = (k.support(u), l.support(u));
            if p == 1.0 {
                a * hk + b * hl
            } else {
                (a * hk.powf(p) + b * hl.powf(p)).powf(1.0 / p)
            }
        })
        .collect();
    wulff(grid, &offsets)
}

/// λ·K +_p (1−λ)·L for p ≥ 1. The planar p = 1 case is the exact
/// Minkowski sum; otherwise the outer Wulff shape on `grid`.
pub fn lp_combine(k: &Body, l: &Body, lambda: f64, p: f64, grid: &DirectionGrid) -> Result<Body> {
    check_lambda(lambda)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    let n = same_dim(k, l, grid)?;
    if p == 1.0 && n == 2 {
        return minkowski_sum(k, l, lambda, 1.0 - lambda);
    }
    lp_sum(k, l, lambda, 1.0 - lambda, p, grid)
}

/// a·K + b·L from pairwise vertex sums (n ≤ 3).
pub fn minkowski_sum(k: &Body, l: &Body, a: f64, b: f64) -> Result<Body> {
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(Error::NonpositiveFactor(a.min(b)));
    }
    let (vk, vl) = (k.vertices()?, l.vertices()?);
    let mut pts = Vec::with_capacity(vk.len() * vl.len());
    for v in vk {
        for w in vl {
            pts.push(v.iter().zip(w).map(|(x, y)| a * x + b * y).collect());
        }
    }
    make_vpoly(pts)
}

/// Offsets h_K(v)^λ h_L(v)^{1−λ} of the logarithmic combination on `grid`.
pub fn log_offsets<K: Support + ?Sized, L: Support + ?Sized>(k: &K, l: &L, lambda: f64, grid: &DirectionGrid) -> Vec<f64> {
    grid.directions()
        .iter()
        .map(|u| {
            let (r, s) = (k.support(u), l.support(u));
            if lambda == 1.0 {
                r
            } else if lambda == 0.0 {
                s
            } else {
                r.powf(lambda) * s.powf(1.0 - lambda)
            }
        })
        .collect()
}

/// λ·K +_0 (1−λ)·L as the outer Wulff shape `{x·v_i ≤ r_i^λ s_i^{1−λ}}`.
///
/// The result contains the true logarithmic combination, so its volume is an
/// upper bound that decreases under grid refinement.
pub fn log_combine(k: &Body, l: &Body, lambda: f64, grid: &DirectionGrid) -> Result<Body> {
    check_lambda(lambda)?;
    same_dim(k, l, grid)?;
    let offsets = log_offsets(k, l, lambda, grid);
    let slab = k.is_symmetric() && l.is_symmetric() && grid.is_symmetric();
    make_hpoly(grid.directions().to_vec(), offsets, slab)
}

/// Box Π[−e^{a_i t}, e^{a_i t}].
pub fn cube_flow(flow: &FlowSpec, t: f64) -> Body {
    box_body(&flow.exponents.iter().map(|a| (a * t).exp()).collect::<Vec<_>>())
}

/// Intersection of `{x·v_i ≤ offsets[i]}` over the grid.
pub fn wulff(grid: &DirectionGrid, offsets: &[f64]) -> Result<Body> {
    if offsets.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: offsets.len() });
    }
    make_hpoly(grid.directions().to_vec(), offsets.to_vec(), false)
}

/// P_t = conv{e^{a_i t} x_i}.
pub fn vertex_flow_body(flow: &VertexFlow, t: f64) -> Result<Body> {
    flow.body_at(t)
}

/// c·K.
pub fn dilate(body: &Body, factor: f64) -> Result<Body> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::NonpositiveFactor(factor));
    }
    Ok(match body.rep() {
        Rep::H(h) => Body::from_rep(Rep::H(HPolytope {
            normals: h.normals.clone(),
            offsets: h.offsets.iter().map(|b| b * factor).collect(),
            symmetric: h.symmetric,
        })),
        Rep::V(v) => Body::from_rep(Rep::V(VPolytope { vertices: v.vertices.iter().map(|w| scale(w, factor)).collect() })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cross_polytope, cube};
    use crate::measure::volume;

    #[test]
    fn planar_grid_basics() {
        let g = DirectionGrid::planar(720);
        assert_eq!(g.len(), 720);
        assert!(g.is_symmetric());
        assert!((g.mesh() - std::f64::consts::PI / 360.0).abs() < 1e-15);
        let g = DirectionGrid::new(vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, -1.0]]).unwrap();
        assert!(!g.is_symmetric());
        assert!((g.mesh() - 0.75 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_grid() {
        let g = DirectionGrid::default_for(3);
        assert_eq!(g.len(), 2000);
        assert!(g.is_symmetric());
        assert!(g.mesh() > 0.0 && g.mesh() < 0.2, "mesh {}", g.mesh());
    }

    #[test]
    fn exact_planar_minkowski_octagon() {
        let b = lp_combine(&cube(2), &cross_polytope(2), 0.5, 1.0, &DirectionGrid::planar(720)).unwrap();
        assert_eq!(b.vertices().unwrap().len(), 8);
        assert!((volume(&b).unwrap() - 3.5).abs() < 1e-14);
    }

    #[test]
    fn idempotent_on_equal_bodies() {
        let g = DirectionGrid::planar(90);
        let k = cross_polytope(2);
        let c = log_combine(&k, &k, 0.3, &g).unwrap();
        let d = lp_combine(&k, &k, 0.3, 2.0, &g).unwrap();
        for u in g.directions() {
            assert!((c.support(u) - k.support(u)).abs() < 1e-12, "{u:?} {} {}", c.support(u), k.support(u));
            assert!((d.support(u) - k.support(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_identity_on_facet_grid() {
        let a = FlowSpec::new(vec![1.0, 2.0]).unwrap();
        let g = DirectionGrid::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let c = log_combine(&cube_flow(&a, 0.0), &cube_flow(&a, 1.0), 0.5, &g).unwrap();
        let e = cube_flow(&a, 0.5);
        assert!((c.support(&[1.0, 0.0]) - 0.5f64.exp()).abs() < 1e-15);
        for u in g.directions() {
            assert!((c.support(u) - e.support(u)).abs() < 1e-12);
        }
        assert!((volume(&cube_flow(&a, 0.7)).unwrap() - 4.0 * (3.0f64 * 0.7).exp()).abs() < 1e-12);
        assert_eq!(cube_flow(&a, 0.0), cube(2));
    }

    #[test]
    fn wulff_triangle() {
        let g = DirectionGrid::planar(3);
        let t = wulff(&g, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.vertices().unwrap().len(), 3);
        // inradius 1 ⇒ area 3√3
        assert!((volume(&t).unwrap() - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        let e = wulff(&DirectionGrid::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap(), &[1.0, 1.0]);
        assert_eq!(e.unwrap_err(), Error::UnboundedBody);
    }

    #[test]
    fn vertex_flow_dilation_and_simplex() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let f = VertexFlow::new(pts.clone(), vec![0.3; 4], (-1.0, 1.0)).unwrap();
        let v = volume(&vertex_flow_body(&f, 0.5).unwrap()).unwrap();
        assert!((v - 2.0 * (2.0f64 * 0.3 * 0.5).exp()).abs() < 1e-13);
        let f = VertexFlow::new(pts, vec![1.0, 2.0, 1.0, 2.0], (-1.0, 1.0)).unwrap();
        // rhombus with half-diagonals e^t, e^{2t}
        let v = volume(&vertex_flow_body(&f, 0.4).unwrap()).unwrap();
        assert!((v - 2.0 * (0.4f64).exp() * (0.8f64).exp()).abs() < 1e-13);
        let bad = VertexFlow::new(vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![2.0, -1.0]], vec![0.0; 3], (0.0, 1.0));
        assert_eq!(bad.unwrap_err(), Error::OriginNotInterior);
    }

    #[test]
    fn dilation() {
        let k = cross_polytope(2);
        assert_eq!(dilate(&k, 1.0).unwrap(), k);
        assert!((volume(&dilate(&k, 3.0).unwrap()).unwrap() - 18.0).abs() < 1e-13);
        let a = FlowSpec::new(vec![1.0, 1.0]).unwrap();
        let d = dilate(&cube(2), std::f64::consts::E).unwrap();
        assert_eq!(d, cube_flow(&a, 1.0));
        assert_eq!(dilate(&k, 0.0).unwrap_err(), Error::NonpositiveFactor(0.0));
    }

    #[test]
    fn lambda_and_p_validation() {
        let g = DirectionGrid::planar(8);
        let k = cube(2);
        assert_eq!(log_combine(&k, &k, 1.5, &g).unwrap_err(), Error::InvalidLambda(1.5));
        assert_eq!(lp_combine(&k, &k, 0.5, 0.5, &g).unwrap_err(), Error::InvalidP(0.5));
        // endpoints accepted
        assert!(log_combine(&k, &k, 0.0, &g).is_ok());
    }
}
