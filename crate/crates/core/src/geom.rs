//! Convex bodies in H- or V-representation.
//!
//! Every body contains the origin in its interior, so polarity, gauges and
//! support functions are always defined. Representations are kept
//! irredundant: non-extreme vertices and dominated halfspaces are removed at
//! construction. Exact conversion between the two forms is available for
//! n ≤ 3; higher dimensions fall back to linear programming.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::convex_hull;
use crate::lp::{maximize, LpOutcome};
use crate::vector::{all_finite, basis, dot, norm, scale, Vector};

/// Tolerance used for unit-normal checks and symmetry detection.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPolytope {
    pub vertices: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rep {
    H(HPolytope),
    V(VPolytope),
}

/// A convex body with the origin in its interior.
///
/// The polar body and (for n ≤ 3) the opposite representation are cached on
/// first use; concurrent first uses may compute twice but store once.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "BodyJson", into = "BodyJson")]
pub struct Body {
    rep: Rep,
    dim: usize,
    dual: OnceLock<Arc<Body>>,
    alt: OnceLock<Arc<Body>>,
}

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Body").field("dim", &self.dim).field("rep", &self.rep).finish()
    }
}

impl PartialEq for Body {
    fn eq(&self, other: &Self) -> bool {
        self.rep == other.rep
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "rep")]
enum BodyJson {
    #[serde(rename = "H")]
    H {
        normals: Vec<Vector>,
        offsets: Vec<f64>,
        #[serde(default)]
        symmetric: bool,
    },
    #[serde(rename = "V")]
    V { vertices: Vec<Vector> },
}

impl TryFrom<BodyJson> for Body {
    type Error = Error;
    fn try_from(j: BodyJson) -> Result<Body> {
        match j {
            BodyJson::H { normals, offsets, symmetric } => make_hpoly(normals, offsets, symmetric),
            BodyJson::V { vertices } => make_vpoly(vertices),
        }
    }
}

impl From<Body> for BodyJson {
    fn from(b: Body) -> BodyJson {
        match b.rep {
            Rep::H(h) => BodyJson::H { normals: h.normals, offsets: h.offsets, symmetric: h.symmetric },
            Rep::V(v) => BodyJson::V { vertices: v.vertices },
        }
    }
}

/// Anything with a support function.
pub trait Support: Sync {
    fn dim(&self) -> usize;
    fn support(&self, u: &[f64]) -> f64;
}

impl Support for Body {
    fn dim(&self) -> usize {
        self.dim
    }
    fn support(&self, u: &[f64]) -> f64 {
        Body::support(self, u)
    }
}

/// Euclidean ball of the given radius centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub dim: usize,
    pub radius: f64,
}

impl Support for Ball {
    fn dim(&self) -> usize {
        self.dim
    }
    fn support(&self, u: &[f64]) -> f64 {
        self.radius * norm(u)
    }
}

/// Orthonormal basis of a linear subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    basis: Vec<Vector>,
}

impl Subspace {
    /// Validates orthonormality to within `UNIT_TOL`.
    pub fn new(basis: Vec<Vector>) -> Result<Subspace> {
        let Some(first) = basis.first() else {
            return Err(Error::InvalidParameter("empty subspace basis".into()));
        };
        let n = first.len();
        if basis.len() > n {
            return Err(Error::DimensionMismatch { expected: n, found: basis.len() });
        }
        for (i, a) in basis.iter().enumerate() {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.len() });
            }
            if !all_finite(a) {
                return Err(Error::NonFinite);
            }
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(a, b) - target).abs() > UNIT_TOL {
                    return Err(Error::InvalidParameter("subspace basis is not orthonormal".into()));
                }
            }
        }
        Ok(Subspace { basis })
    }

    /// Gram–Schmidt orthonormalization of a spanning set.
    pub fn span(vectors: &[Vector]) -> Result<Subspace> {
        let mut out: Vec<Vector> = Vec::new();
        for v in vectors {
            let mut w = v.clone();
            // two passes for stability
            for _ in 0..2 {
                for q in &out {
                    let c = dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let l = norm(&w);
            if l <= 1e-12 * norm(v).max(1.0) {
                return Err(Error::DegenerateBody);
            }
            out.push(scale(&w, 1.0 / l));
        }
        Subspace::new(out)
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Subspace {
        Subspace { basis: axes.iter().map(|&i| basis(n, i)).collect() }
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis[0].len()
    }

    /// Coordinates of `x`'s orthogonal projection in this basis.
    pub fn coords(&self, x: &[f64]) -> Vector {
        self.basis.iter().map(|b| dot(b, x)).collect()
    }

    /// Ambient point with the given coordinates.
    pub fn embed(&self, y: &[f64]) -> Vector {
        let mut x = vec![0.0; self.ambient_dim()];
        for (b, &c) in self.basis.iter().zip(y) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        x
    }
}

/// Rescale to unit length, leaving vectors that are already unit up to
/// rounding untouched so that normalization is idempotent.
fn unit(v: &[f64]) -> Option<(Vector, f64)> {
    let l = norm(v);
    if !(l > 0.0 && l.is_finite()) {
        return None;
    }
    if (l - 1.0).abs() <= 4.0 * f64::EPSILON {
        Some((v.to_vec(), 1.0))
    } else {
        Some((scale(v, 1.0 / l), l))
    }
}

fn check_dims(points: &[Vector]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::DegenerateBody);
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::DegenerateBody);
    }
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.len() });
        }
        if !all_finite(p) {
            return Err(Error::NonFinite);
        }
    }
    Ok(n)
}

fn detect_symmetric_h(normals: &[Vector], offsets: &[f64]) -> bool {
    normals.iter().zip(offsets).all(|(v, &b)| {
        normals.iter().zip(offsets).any(|(w, &c)| {
            (b - c).abs() <= UNIT_TOL * b.max(1.0) && v.iter().zip(w).all(|(x, y)| (x + y).abs() <= UNIT_TOL)
        })
    })
}

fn detect_symmetric_v(vertices: &[Vector]) -> bool {
    let s = vertices.iter().flat_map(|v| v.iter()).fold(1.0_f64, |m, x| m.max(x.abs()));
    vertices
        .iter()
        .all(|v| vertices.iter().any(|w| v.iter().zip(w).all(|(x, y)| (x + y).abs() <= UNIT_TOL * s)))
}

/// H-polytope `{x : normals[i]·x ≤ offsets[i]}`.
///
/// Normals are rescaled to unit length (offsets with them), dominated
/// constraints are dropped, and boundedness is verified.
pub fn make_hpoly(normals: Vec<Vector>, offsets: Vec<f64>, symmetrize: bool) -> Result<Body> {
    if normals.len() != offsets.len() {
        return Err(Error::DimensionMismatch { expected: normals.len(), found: offsets.len() });
    }
    let n = check_dims(&normals).map_err(|e| match e {
        Error::DegenerateBody => Error::UnboundedBody,
        e => e,
    })?;
    let mut nv = Vec::with_capacity(normals.len());
    let mut ob = Vec::with_capacity(normals.len());
    for (v, &b) in normals.iter().zip(&offsets) {
        if !b.is_finite() {
            return Err(Error::NonFinite);
        }
        if b <= 0.0 {
            return Err(Error::NonpositiveOffset(b));
        }
        let Some((u, l)) = unit(v) else {
            return Err(Error::InvalidParameter("zero normal vector".into()));
        };
        nv.push(u);
        ob.push(b / l);
    }
    if symmetrize {
        let m = nv.len();
        for i in 0..m {
            let neg: Vector = nv[i].iter().map(|x| -x).collect();
            let present = (0..nv.len()).any(|j| {
                (ob[j] - ob[i]).abs() <= UNIT_TOL * ob[i].max(1.0)
                    && nv[j].iter().zip(&neg).all(|(a, b)| (a - b).abs() <= UNIT_TOL)
            });
            if !present {
                nv.push(neg);
                ob.push(ob[i]);
            }
        }
    }
    let keep = irredundant_halfspaces(n, &nv, &ob)?;
    let normals: Vec<Vector> = keep.iter().map(|&i| nv[i].clone()).collect();
    let offsets: Vec<f64> = keep.iter().map(|&i| ob[i]).collect();
    let symmetric = detect_symmetric_h(&normals, &offsets);
    Ok(Body::from_rep(Rep::H(HPolytope { normals, offsets, symmetric })))
}

/// Indices of the irredundant constraints, in canonical order. Fails with
/// `UnboundedBody` if the intersection is unbounded.
fn irredundant_halfspaces(n: usize, normals: &[Vector], offsets: &[f64]) -> Result<Vec<usize>> {
    if n <= 3 {
        // Constraint i is irredundant iff v_i / b_i is a vertex of the dual hull;
        // the body is bounded iff the origin is interior to that hull.
        let pts: Vec<Vector> = normals.iter().zip(offsets).map(|(v, &b)| scale(v, 1.0 / b)).collect();
        let hull = convex_hull(&pts).map_err(|e| match e {
            Error::DegenerateBody => Error::UnboundedBody,
            e => e,
        })?;
        let s = crate::vector::max_abs(&pts);
        if hull.facets.iter().any(|f| f.offset <= UNIT_TOL * s) {
            return Err(Error::UnboundedBody);
        }
        return Ok(hull.vertices);
    }
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            let dir = scale(&basis(n, i), sgn);
            if maximize(&dir, normals, offsets) == LpOutcome::Unbounded {
                return Err(Error::UnboundedBody);
            }
        }
    }
    let mut active: Vec<bool> = vec![true; normals.len()];
    for i in 0..normals.len() {
        active[i] = false;
        let rows: Vec<Vector> = (0..normals.len()).filter(|&j| active[j]).map(|j| normals[j].clone()).collect();
        let rhs: Vec<f64> = (0..normals.len()).filter(|&j| active[j]).map(|j| offsets[j]).collect();
        let needed = match maximize(&normals[i], &rows, &rhs) {
            LpOutcome::Unbounded => true,
            LpOutcome::Optimal { value, .. } => value > offsets[i] * (1.0 + 1e-10),
        };
        active[i] = needed;
    }
    Ok((0..normals.len()).filter(|&i| active[i]).collect())
}

/// V-polytope `conv(vertices)`; non-extreme points are dropped.
pub fn make_vpoly(vertices: Vec<Vector>) -> Result<Body> {
    let n = check_dims(&vertices)?;
    if vertices.len() < n + 1 {
        return Err(Error::DegenerateBody);
    }
    if n <= 3 {
        let hull = convex_hull(&vertices)?;
        let s = crate::vector::max_abs(&vertices);
        if hull.facets.iter().any(|f| f.offset <= UNIT_TOL * s) {
            return Err(Error::OriginNotInterior);
        }
        let verts: Vec<Vector> = hull.vertices.iter().map(|&i| vertices[i].clone()).collect();
        return Ok(Body::from_rep(Rep::V(VPolytope { vertices: verts })));
    }
    // Rank test for full dimension.
    let m = DMatrix::from_fn(vertices.len(), n, |i, j| vertices[i][j] - vertices[0][j]);
    if m.rank(1e-12 * crate::vector::max_abs(&vertices).max(1.0)) < n {
        return Err(Error::DegenerateBody);
    }
    let ones = vec![1.0; vertices.len()];
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            if maximize(&scale(&basis(n, i), sgn), &vertices, &ones) == LpOutcome::Unbounded {
                return Err(Error::OriginNotInterior);
            }
        }
    }
    let mut active = vec![true; vertices.len()];
    for i in 0..vertices.len() {
        active[i] = false;
        let rows: Vec<Vector> = (0..vertices.len()).filter(|&j| active[j]).map(|j| vertices[j].clone()).collect();
        let rhs = vec![1.0; rows.len()];
        active[i] = match maximize(&vertices[i], &rows, &rhs) {
            LpOutcome::Unbounded => true,
            LpOutcome::Optimal { value, .. } => value > 1.0 + 1e-10,
        };
    }
    let verts = (0..vertices.len()).filter(|&i| active[i]).map(|i| vertices[i].clone()).collect();
    Ok(Body::from_rep(Rep::V(VPolytope { vertices: verts })))
}

impl Body {
    pub(crate) fn from_rep(rep: Rep) -> Body {
        let dim = match &rep {
            Rep::H(h) => h.normals[0].len(),
            Rep::V(v) => v.vertices[0].len(),
        };
        Body { rep, dim, dual: OnceLock::new(), alt: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> &Rep {
        &self.rep
    }

    pub fn is_hrep(&self) -> bool {
        matches!(self.rep, Rep::H(_))
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.rep {
            Rep::H(h) => h.symmetric,
            Rep::V(v) => detect_symmetric_v(&v.vertices),
        }
    }

    /// The opposite representation, exact for n ≤ 3.
    fn alt(&self) -> Result<&Body> {
        if self.dim > 3 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if let Some(b) = self.alt.get() {
            return Ok(b);
        }
        let b = match &self.rep {
            Rep::H(h) => hrep_to_vrep(h, self.dim),
            Rep::V(v) => vrep_to_hrep(v)?,
        };
        Ok(self.alt.get_or_init(|| Arc::new(b)))
    }

    pub fn to_vrep(&self) -> Result<Body> {
        match &self.rep {
            Rep::V(_) => Ok(self.clone()),
            Rep::H(_) => Ok(self.alt()?.clone()),
        }
    }

    pub fn to_hrep(&self) -> Result<Body> {
        match &self.rep {
            Rep::H(_) => Ok(self.clone()),
            Rep::V(_) => Ok(self.alt()?.clone()),
        }
    }

    /// Vertex list (exact enumeration for H-bodies with n ≤ 3).
    pub fn vertices(&self) -> Result<&[Vector]> {
        match &self.rep {
            Rep::V(v) => Ok(&v.vertices),
            Rep::H(_) => match &self.alt()?.rep {
                Rep::V(v) => Ok(&v.vertices),
                Rep::H(_) => unreachable!(),
            },
        }
    }

    /// Irredundant halfspaces `(unit normals, offsets)`.
    pub fn halfspaces(&self) -> Result<(&[Vector], &[f64])> {
        match &self.rep {
            Rep::H(h) => Ok((&h.normals, &h.offsets)),
            Rep::V(_) => match &self.alt()?.rep {
                Rep::H(h) => Ok((&h.normals, &h.offsets)),
                Rep::V(_) => unreachable!(),
            },
        }
    }

    /// h_K(u) = max over K of x·u.
    pub fn support(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        let verts = match &self.rep {
            Rep::V(v) => &v.vertices,
            Rep::H(h) => match self.alt().map(|b| &b.rep) {
                Ok(Rep::V(v)) => &v.vertices,
                _ => {
                    return match maximize(u, &h.normals, &h.offsets) {
                        LpOutcome::Optimal { value, .. } => value.max(0.0),
                        LpOutcome::Unbounded => f64::INFINITY,
                    }
                }
            },
        };
        verts.iter().map(|w| dot(w, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minkowski gauge ‖x‖_K.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let (normals, offsets) = match &self.rep {
            Rep::H(h) => (&h.normals, &h.offsets),
            Rep::V(v) => match self.alt().map(|b| &b.rep) {
                Ok(Rep::H(h)) => (&h.normals, &h.offsets),
                _ => {
                    let ones = vec![1.0; v.vertices.len()];
                    return match maximize(x, &v.vertices, &ones) {
                        LpOutcome::Optimal { value, .. } => value.max(0.0),
                        LpOutcome::Unbounded => f64::INFINITY,
                    };
                }
            },
        };
        normals
            .iter()
            .zip(offsets)
            .map(|(v, b)| dot(v, x) / b)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0 + 1e-12
    }

    /// K° = {y : x·y ≤ 1 for all x ∈ K}.
    pub fn polar_dual(&self) -> Body {
        self.dual
            .get_or_init(|| {
                Arc::new(match &self.rep {
                    Rep::H(h) => {
                        let vertices = h.normals.iter().zip(&h.offsets).map(|(v, &b)| scale(v, 1.0 / b)).collect();
                        Body::from_rep(Rep::V(VPolytope { vertices }))
                    }
                    Rep::V(v) => {
                        let mut normals = Vec::with_capacity(v.vertices.len());
                        let mut offsets = Vec::with_capacity(v.vertices.len());
                        for w in &v.vertices {
                            let (u, l) = unit(w).expect("vertex at origin");
                            normals.push(u);
                            offsets.push(1.0 / l);
                        }
                        let symmetric = detect_symmetric_h(&normals, &offsets);
                        Body::from_rep(Rep::H(HPolytope { normals, offsets, symmetric }))
                    }
                })
            })
            .as_ref()
            .clone()
    }

    /// Image under the matrix with the given rows.
    pub fn linear_image(&self, t: &[Vector]) -> Result<Body> {
        let n = self.dim;
        if t.len() != n || t.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: t.len() });
        }
        let m = DMatrix::from_fn(n, n, |i, j| t[i][j]);
        let det = m.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::SingularMatrix(det.abs()));
        }
        match &self.rep {
            Rep::V(v) => {
                let verts = v.vertices.iter().map(|w| mat_vec(t, w)).collect();
                make_vpoly(verts)
            }
            Rep::H(h) => {
                let inv = m.try_inverse().ok_or(Error::SingularMatrix(det.abs()))?;
                // x ∈ TK ⇔ T⁻¹x ∈ K ⇔ (T⁻ᵀ v)·x ≤ b
                let normals = h
                    .normals
                    .iter()
                    .map(|v| (0..n).map(|j| (0..n).map(|i| inv[(i, j)] * v[i]).sum()).collect())
                    .collect();
                make_hpoly(normals, h.offsets.clone(), false)
            }
        }
    }

    /// K ∩ H in the coordinates of `h`.
    pub fn section(&self, h: &Subspace) -> Result<Body> {
        if h.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: h.ambient_dim() });
        }
        let (normals, offsets) = self.halfspaces()?;
        let mut nv = Vec::new();
        let mut ob = Vec::new();
        for (v, &b) in normals.iter().zip(offsets) {
            let c = h.coords(v);
            if norm(&c) > 1e-14 {
                nv.push(c);
                ob.push(b);
            }
        }
        if nv.is_empty() {
            return Err(Error::EmptySection);
        }
        make_hpoly(nv, ob, false)
    }

    /// Orthogonal projection K|H in the coordinates of `h`.
    pub fn project(&self, h: &Subspace) -> Result<Body> {
        if h.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: h.ambient_dim() });
        }
        let verts = self.vertices()?;
        make_vpoly(verts.iter().map(|w| h.coords(w)).collect())
    }

    /// (inradius about the origin, outradius about the origin).
    pub fn in_out_radius(&self) -> Result<(f64, f64)> {
        let (_, offsets) = self.halfspaces()?;
        let r = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        let big = self.vertices()?.iter().map(|w| norm(w)).fold(0.0, f64::max);
        Ok((r, big))
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        let n = self.dim;
        let lo = (0..n).map(|i| -self.support(&scale(&basis(n, i), -1.0))).collect();
        let hi = (0..n).map(|i| self.support(&basis(n, i))).collect();
        (lo, hi)
    }

    /// Radii r(s) of the balls replacing the slices `{x·u = s}` (n = 2, 3).
    pub fn schwartz_profile(&self, u: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let u = unit(u).ok_or_else(|| Error::InvalidParameter("zero direction".into()))?.0;
        let (normals, offsets) = self.halfspaces()?;
        // orthonormal complement of u
        let mut frame = vec![u.clone()];
        for i in 0..n {
            if frame.len() == n {
                break;
            }
            let mut w = basis(n, i);
            for q in &frame {
                let c = dot(&w, q);
                w = crate::vector::axpy(&w, -c, q);
            }
            if norm(&w) > 0.5 {
                frame.push(scale(&w, 1.0 / norm(&w)));
            } else if norm(&w) > 1e-6 {
                let l = norm(&w);
                frame.push(scale(&w, 1.0 / l));
            }
        }
        let reach = self.vertices()?.iter().map(|w| norm(w)).fold(0.0, f64::max) * 2.0 + 1.0;
        let mut out = Vec::with_capacity(grid.len());
        for &s in grid {
            let cons: Vec<(Vector, f64)> = normals
                .iter()
                .zip(offsets)
                .map(|(v, &b)| (frame[1..].iter().map(|f| dot(v, f)).collect(), b - s * dot(v, &u)))
                .collect();
            let r = if n == 2 {
                let (mut lo, mut hi) = (-reach, reach);
                for (a, c) in &cons {
                    let a = a[0];
                    if a > 1e-15 {
                        hi = hi.min(c / a);
                    } else if a < -1e-15 {
                        lo = lo.max(c / a);
                    } else if *c < 0.0 {
                        hi = lo;
                    }
                }
                (hi - lo).max(0.0) / 2.0
            } else {
                let mut poly = vec![[-reach, -reach], [reach, -reach], [reach, reach], [-reach, reach]];
                for (a, c) in &cons {
                    poly = clip_halfplane(&poly, [a[0], a[1]], *c);
                    if poly.is_empty() {
                        break;
                    }
                }
                (polygon_area(&poly).max(0.0) / std::f64::consts::PI).sqrt()
            };
            out.push(r);
        }
        Ok(out)
    }
}

pub(crate) fn mat_vec(t: &[Vector], x: &[f64]) -> Vector {
    t.iter().map(|row| dot(row, x)).collect()
}

/// Keep the part of a convex polygon with `a·y ≤ c`.
pub(crate) fn clip_halfplane(poly: &[[f64; 2]], a: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let val = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - c;
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (fp, fq) = (val(&p), val(&q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Shoelace area of a counter-clockwise polygon.
pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let m = poly.len();
    if m < 3 {
        return 0.0;
    }
    (0..m)
        .map(|k| {
            let a = poly[k];
            let b = poly[(k + 1) % m];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0
}

fn hrep_to_vrep(h: &HPolytope, n: usize) -> Body {
    let pts: Vec<Vector> = h.normals.iter().zip(&h.offsets).map(|(v, &b)| scale(v, 1.0 / b)).collect();
    let vertices: Vec<Vector> = if n == 2 {
        // Constraints are stored in counter-clockwise order of their normals;
        // consecutive pairs meet at the vertices.
        let m = h.normals.len();
        (0..m)
            .map(|k| {
                let (v, w) = (&h.normals[k], &h.normals[(k + 1) % m]);
                let (b, c) = (h.offsets[k], h.offsets[(k + 1) % m]);
                let det = v[0] * w[1] - v[1] * w[0];
                vec![(b * w[1] - c * v[1]) / det, (v[0] * c - w[0] * b) / det]
            })
            .collect()
    } else {
        let hull = convex_hull(&pts).expect("validated at construction");
        hull.facets.iter().map(|f| scale(&f.normal, 1.0 / f.offset)).collect()
    };
    Body::from_rep(Rep::V(VPolytope { vertices }))
}

fn vrep_to_hrep(v: &VPolytope) -> Result<Body> {
    let hull = convex_hull(&v.vertices)?;
    let normals: Vec<Vector> = hull.facets.iter().map(|f| f.normal.clone()).collect();
    let offsets: Vec<f64> = hull.facets.iter().map(|f| f.offset).collect();
    let symmetric = detect_symmetric_h(&normals, &offsets);
    Ok(Body::from_rep(Rep::H(HPolytope { normals, offsets, symmetric })))
}

/// `[-1, 1]^n` as an H-polytope.
pub fn cube(n: usize) -> Body {
    box_body(&vec![1.0; n])
}

/// `Π [-a_i, a_i]`.
pub fn box_body(half_widths: &[f64]) -> Body {
    let n = half_widths.len();
    let mut normals = Vec::with_capacity(2 * n);
    let mut offsets = Vec::with_capacity(2 * n);
    for (i, &a) in half_widths.iter().enumerate() {
        normals.push(basis(n, i));
        offsets.push(a);
        normals.push(scale(&basis(n, i), -1.0));
        offsets.push(a);
    }
    make_hpoly(normals, offsets, false).expect("box with positive half-widths")
}

/// Cross-polytope conv{±e_i}.
pub fn cross_polytope(n: usize) -> Body {
    let mut v = Vec::with_capacity(2 * n);
    for i in 0..n {
        v.push(basis(n, i));
        v.push(scale(&basis(n, i), -1.0));
    }
    make_vpoly(v).expect("cross-polytope")
}

/// Regular m-gon inscribed in the circle of radius `r`, first vertex at angle `phase`.
pub fn regular_polygon(m: usize, r: f64, phase: f64) -> Body {
    let v = (0..m)
        .map(|k| {
            let a = phase + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    make_vpoly(v).expect("regular polygon")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn square_support_and_gauge() {
        let c = cube(2);
        let s = 0.5f64.sqrt();
        assert!(close(c.support(&[s, s]), 2f64.sqrt(), 1e-15));
        assert_eq!(c.support(&[0.0, 0.0]), 0.0);
        assert_eq!(c.gauge(&[2.0, 0.0]), 2.0);
        assert_eq!(c.gauge(&[0.0, 0.0]), 0.0);
        let b = cross_polytope(2);
        assert!(close(b.support(&[1.0, 0.0]), 1.0, 1e-15));
        assert!(close(b.gauge(&[0.5, 0.5]), 1.0, 1e-15));
    }

    #[test]
    fn strips_are_unbounded() {
        let e = make_hpoly(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0], false);
        assert_eq!(e.unwrap_err(), Error::UnboundedBody);
        let e = make_hpoly(vec![vec![1.0, 0.0]], vec![1.0], true);
        assert_eq!(e.unwrap_err(), Error::UnboundedBody);
        let e = make_hpoly(vec![vec![1.0, 0.0]], vec![-1.0], false);
        assert_eq!(e.unwrap_err(), Error::NonpositiveOffset(-1.0));
    }

    #[test]
    fn redundant_constraints_dropped() {
        let mut normals = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let mut offsets = vec![1.0; 4];
        normals.push(vec![1.0, 1.0]);
        offsets.push(10.0);
        normals.push(vec![2.0, 0.0]);
        offsets.push(2.0);
        let b = make_hpoly(normals, offsets, false).unwrap();
        assert_eq!(b.halfspaces().unwrap().0.len(), 4);
        assert!(b.is_symmetric());
    }

    #[test]
    fn vpoly_drops_interior() {
        let b = make_vpoly(vec![
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![0.0, 0.5],
        ])
        .unwrap();
        assert_eq!(b.vertices().unwrap().len(), 4);
        let e = make_vpoly(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert_eq!(e.unwrap_err(), Error::DegenerateBody);
        let e = make_vpoly(vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![2.0, -1.0]]);
        assert_eq!(e.unwrap_err(), Error::OriginNotInterior);
    }

    #[test]
    fn cube_polar_is_cross_polytope() {
        let d = cube(3).polar_dual();
        let mut v: Vec<Vector> = d.vertices().unwrap().to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v.len(), 6);
        let x = cross_polytope(3).to_hrep().unwrap();
        let (normals, offsets) = x.halfspaces().unwrap();
        assert_eq!(normals.len(), 8);
        for (n, b) in normals.iter().zip(offsets) {
            assert!(close(*b, 1.0 / 3f64.sqrt(), 1e-14));
            assert!(n.iter().all(|c| close(c.abs(), 1.0 / 3f64.sqrt(), 1e-14)));
        }
    }

    #[test]
    fn cube_vertices_3d() {
        let v = cube(3).to_vrep().unwrap();
        let verts = v.vertices().unwrap();
        assert_eq!(verts.len(), 8);
        assert!(verts.iter().all(|w| w.iter().all(|c| close(c.abs(), 1.0, 1e-14))));
    }

    #[test]
    fn five_cube_conversion_unsupported() {
        let c = cube(5);
        assert_eq!(c.to_vrep().unwrap_err(), Error::UnsupportedDimension(5));
        // LP paths still work
        assert!(close(c.support(&[1.0, 1.0, 0.0, 0.0, -1.0]), 3.0, 1e-12));
        let x = cross_polytope(5);
        assert!(close(x.gauge(&[0.5, 0.5, 0.0, 0.0, 0.0]), 1.0, 1e-12));
    }

    #[test]
    fn linear_image_box() {
        let t = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        let b = cube(2).linear_image(&t).unwrap();
        assert!(close(b.support(&[1.0, 0.0]), 2.0, 1e-15));
        assert!(close(b.support(&[0.0, 1.0]), 1.0, 1e-15));
        let (r, big) = cube(2).linear_image(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap().in_out_radius().unwrap();
        assert!(close(r, 1.0, 1e-15) && close(big, 10f64.sqrt(), 1e-14));
        let e = cube(2).linear_image(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(e, Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn sections_and_projections() {
        let c3 = cube(3);
        let s = c3.section(&Subspace::coordinate(3, &[0, 1])).unwrap();
        assert_eq!(s.halfspaces().unwrap().0.len(), 4);
        assert!(close(s.support(&[1.0, 1.0]), 2.0, 1e-14));
        let p = c3.project(&Subspace::coordinate(3, &[0])).unwrap();
        assert!(close(p.support(&[1.0]), 1.0, 0.0) && close(p.support(&[-1.0]), 1.0, 0.0));
        let q = cross_polytope(3).project(&Subspace::coordinate(3, &[0, 1])).unwrap();
        assert_eq!(q.vertices().unwrap().len(), 4);
    }

    #[test]
    fn radii_of_polygon() {
        let (r, big) = cube(2).in_out_radius().unwrap();
        assert_eq!((r, big), (1.0, 2f64.sqrt()));
        let (r, big) = regular_polygon(64, 1.0, 0.0).in_out_radius().unwrap();
        assert!(close(r, 1.0, 2e-3) && close(big, 1.0, 2e-3));
    }

    #[test]
    fn schwartz_profile_square() {
        let r = cube(2).schwartz_profile(&[1.0, 0.0], &[0.0, 0.5, 1.5]).unwrap();
        assert!(close(r[0], 1.0, 1e-14) && close(r[1], 1.0, 1e-14) && r[2] == 0.0);
        let r = cube(3).schwartz_profile(&[0.0, 0.0, 1.0], &[0.0]).unwrap();
        assert!(close(r[0], (4.0 / std::f64::consts::PI).sqrt(), 1e-12));
    }

    #[test]
    fn json_round_trip() {
        let b = regular_polygon(7, 1.3, 0.2).polar_dual();
        let s = serde_json::to_string(&b).unwrap();
        let c: Body = serde_json::from_str(&s).unwrap();
        assert_eq!(b, c);
        let bad: std::result::Result<Body, _> =
            serde_json::from_str(r#"{"rep":"H","normals":[[1,0],[-1,0]],"offsets":[1,1]}"#);
        assert!(bad.is_err());
    }
}
