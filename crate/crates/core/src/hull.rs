//! Exact convex hulls in dimensions 1 to 3.
//!
//! 2-D uses Andrew's monotone chain with strict turns; 3-D an incremental
//! beneath-beyond construction whose triangles are merged into planar facets.
//! Distances below `1e-10 · scale` count as coplanar. Collinear and coplanar
//! non-extreme points never appear in the output.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::vector::{cross3, dot, max_abs, norm, sub, Vector};

/// Relative coplanarity tolerance.
pub const COPLANAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HullFacet {
    /// Outward unit normal.
    pub normal: Vector,
    /// `normal · x` for points on the facet.
    pub offset: f64,
    /// Extreme points on the facet. In 3-D ordered counter-clockwise when
    /// seen from outside; in 2-D the edge runs from `vertices[0]` to `vertices[1]`
    /// in counter-clockwise order.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub dim: usize,
    /// Indices of extreme points. In 2-D listed counter-clockwise; otherwise ascending.
    pub vertices: Vec<usize>,
    pub facets: Vec<HullFacet>,
}

pub fn convex_hull(points: &[Vector]) -> Result<Hull> {
    let Some(first) = points.first() else {
        return Err(Error::DegenerateBody);
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: points.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
        });
    }
    match dim {
        1 => hull1(points),
        2 => hull2(points),
        3 => hull3(points),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn hull1(points: &[Vector]) -> Result<Hull> {
    let (mut lo, mut hi) = (0, 0);
    for (i, p) in points.iter().enumerate() {
        if p[0] < points[lo][0] {
            lo = i;
        }
        if p[0] > points[hi][0] {
            hi = i;
        }
    }
    let scale = max_abs(points).max(f64::MIN_POSITIVE);
    if points[hi][0] - points[lo][0] <= COPLANAR_TOL * scale {
        return Err(Error::DegenerateBody);
    }
    let mut vertices = vec![lo, hi];
    vertices.sort_unstable();
    Ok(Hull {
        dim: 1,
        vertices,
        facets: vec![
            HullFacet { normal: vec![-1.0], offset: -points[lo][0], vertices: vec![lo] },
            HullFacet { normal: vec![1.0], offset: points[hi][0], vertices: vec![hi] },
        ],
    })
}

#[inline]
fn turn(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Strict counter-clockwise hull of planar points; returns indices, starting
/// from the lexicographically smallest point.
///
/// The chain is built with exact sign tests; vertices whose turn area is at
/// most `eps_area` are pruned afterwards, so rounding noise in the sort order
/// of nearly collinear runs cannot evict a true extreme point.
pub(crate) fn monotone_chain(points: &[[f64; 2]], eps_area: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let lex = |i: &usize, j: &usize| {
        points[*i][0]
            .total_cmp(&points[*j][0])
            .then(points[*i][1].total_cmp(&points[*j][1]))
            .then(i.cmp(j))
    };
    idx.sort_by(lex);
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let chain = |order: &mut dyn Iterator<Item = usize>| {
        let mut out: Vec<usize> = Vec::with_capacity(idx.len());
        for i in order {
            while out.len() >= 2 && turn(&points[out[out.len() - 2]], &points[out[out.len() - 1]], &points[i]) <= 0.0 {
                out.pop();
            }
            out.push(i);
        }
        out.pop();
        out
    };
    let mut ring = chain(&mut idx.iter().copied());
    ring.extend(chain(&mut idx.iter().rev().copied()));
    loop {
        let m = ring.len();
        if m < 3 {
            return ring;
        }
        let (k, t) = (0..m)
            .map(|k| (k, turn(&points[ring[(k + m - 1) % m]], &points[ring[k]], &points[ring[(k + 1) % m]])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty ring");
        if t > eps_area {
            break;
        }
        ring.remove(k);
    }
    let start = (0..ring.len()).min_by(|&a, &b| lex(&ring[a], &ring[b])).expect("nonempty ring");
    ring.rotate_left(start);
    ring
}

fn hull2(points: &[Vector]) -> Result<Hull> {
    let scale = max_abs(points).max(f64::MIN_POSITIVE);
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    let ring = monotone_chain(&pts, COPLANAR_TOL * scale * scale * 1e-2);
    if ring.len() < 3 {
        return Err(Error::DegenerateBody);
    }
    let area: f64 = (0..ring.len())
        .map(|k| {
            let a = &pts[ring[k]];
            let b = &pts[ring[(k + 1) % ring.len()]];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        / 2.0;
    if area <= COPLANAR_TOL * scale * scale {
        return Err(Error::DegenerateBody);
    }
    let facets = (0..ring.len())
        .map(|k| {
            let i = ring[k];
            let j = ring[(k + 1) % ring.len()];
            let d = sub(&points[j], &points[i]);
            let len = norm(&d);
            let normal = vec![d[1] / len, -d[0] / len];
            let offset = 0.5 * (dot(&normal, &points[i]) + dot(&normal, &points[j]));
            HullFacet { normal, offset, vertices: vec![i, j] }
        })
        .collect();
    Ok(Hull { dim: 2, vertices: ring, facets })
}

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    normal: [f64; 3],
    offset: f64,
    alive: bool,
}

fn make_tri(points: &[Vector], v: [usize; 3]) -> Tri {
    let a = &points[v[0]];
    let e1 = sub(&points[v[1]], a);
    let e2 = sub(&points[v[2]], a);
    let c = cross3(&e1, &e2);
    let len = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let normal = if len > 0.0 { [c[0] / len, c[1] / len, c[2] / len] } else { [0.0; 3] };
    let offset = normal[0] * a[0] + normal[1] * a[1] + normal[2] * a[2];
    Tri { v, normal, offset, alive: true }
}

#[inline]
fn height(t: &Tri, p: &[f64]) -> f64 {
    t.normal[0] * p[0] + t.normal[1] * p[1] + t.normal[2] * p[2] - t.offset
}

fn hull3(points: &[Vector]) -> Result<Hull> {
    let scale = max_abs(points).max(f64::MIN_POSITIVE);
    let eps = COPLANAR_TOL * scale;

    // Initial simplex from extreme points.
    let p0 = (0..points.len())
        .min_by(|&i, &j| points[i][0].total_cmp(&points[j][0]).then(i.cmp(&j)))
        .unwrap();
    let far = |score: &dyn Fn(&Vector) -> f64| -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in points.iter().enumerate() {
            let s = score(p);
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    };
    let (p1, d1) = far(&|p| norm(&sub(p, &points[p0])));
    if d1 <= eps {
        return Err(Error::DegenerateBody);
    }
    let axis = sub(&points[p1], &points[p0]);
    let (p2, d2) = far(&|p| {
        let c = cross3(&axis, &sub(p, &points[p0]));
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / d1
    });
    if d2 <= eps {
        return Err(Error::DegenerateBody);
    }
    let base = make_tri(points, [p0, p1, p2]);
    let (p3, d3) = far(&|p| height(&base, p).abs());
    if d3 <= eps {
        return Err(Error::DegenerateBody);
    }
    let inner: Vec<f64> = (0..3)
        .map(|k| (points[p0][k] + points[p1][k] + points[p2][k] + points[p3][k]) / 4.0)
        .collect();

    let mut tris: Vec<Tri> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let add_tri = |tris: &mut Vec<Tri>, edges: &mut HashMap<(usize, usize), usize>, v: [usize; 3]| {
        let mut t = make_tri(points, v);
        if height(&t, &inner) > 0.0 {
            t = make_tri(points, [v[0], v[2], v[1]]);
        }
        let id = tris.len();
        for k in 0..3 {
            edges.insert((t.v[k], t.v[(k + 1) % 3]), id);
        }
        tris.push(t);
    };
    for v in [[p0, p1, p2], [p0, p1, p3], [p0, p2, p3], [p1, p2, p3]] {
        add_tri(&mut tris, &mut edges, v);
    }

    let seeds = [p0, p1, p2, p3];
    let mut visible = vec![false; 0];
    let mut stack = Vec::new();
    let mut horizon = Vec::new();
    for (q, qp) in points.iter().enumerate() {
        if seeds.contains(&q) {
            continue;
        }
        // Most visible face seeds the flood fill.
        let mut start = None;
        let mut best = eps;
        for (id, t) in tris.iter().enumerate() {
            if t.alive {
                let h = height(t, qp);
                if h > best {
                    best = h;
                    start = Some(id);
                }
            }
        }
        let Some(start) = start else { continue };
        visible.clear();
        visible.resize(tris.len(), false);
        visible[start] = true;
        stack.clear();
        stack.push(start);
        // Grow through faces that q is at least nearly above; a stricter test lets a
        // nearly coplanar face survive inside the region and tear the mesh.
        let mut region = Vec::new();
        while let Some(id) = stack.pop() {
            region.push(id);
            let v = tris[id].v;
            for k in 0..3 {
                if let Some(&nb) = edges.get(&(v[(k + 1) % 3], v[k])) {
                    if !visible[nb] && tris[nb].alive && height(&tris[nb], qp) > -eps {
                        visible[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        horizon.clear();
        for &id in &region {
            let v = tris[id].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let twin_visible = edges.get(&(b, a)).is_some_and(|&nb| visible[nb]);
                if !twin_visible {
                    horizon.push((a, b));
                }
            }
        }
        for &id in &region {
            tris[id].alive = false;
            let v = tris[id].v;
            for k in 0..3 {
                let key = (v[k], v[(k + 1) % 3]);
                if edges.get(&key) == Some(&id) {
                    edges.remove(&key);
                }
            }
        }
        for &(a, b) in &horizon {
            let id = tris.len();
            let t = make_tri(points, [a, b, q]);
            for k in 0..3 {
                edges.insert((t.v[k], t.v[(k + 1) % 3]), id);
            }
            tris.push(t);
        }
    }

    // Merge coplanar neighbours into facets.
    let alive: Vec<usize> = (0..tris.len()).filter(|&i| tris[i].alive).collect();
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &id in &alive {
        let v = tris[id].v;
        for k in 0..3 {
            let Some(&nb) = edges.get(&(v[(k + 1) % 3], v[k])) else { continue };
            if nb <= id {
                continue;
            }
            let opp_nb = tris[nb].v.iter().copied().find(|x| !v.contains(x)).unwrap_or(tris[nb].v[0]);
            let opp_id = v.iter().copied().find(|x| !tris[nb].v.contains(x)).unwrap_or(v[0]);
            if height(&tris[id], &points[opp_nb]).abs() <= eps
                && height(&tris[nb], &points[opp_id]).abs() <= eps
            {
                let (ra, rb) = (find(&mut parent, id), find(&mut parent, nb));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut group_of: HashMap<usize, usize> = HashMap::new();
    for &id in &alive {
        let r = find(&mut parent, id);
        let g = *group_of.entry(r).or_insert_with(|| {
            groups.push((r, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(id);
    }

    let mut facets = Vec::with_capacity(groups.len());
    let mut is_vertex = vec![false; points.len()];
    for (_, members) in &groups {
        // Area-weighted normal.
        let mut acc = [0.0; 3];
        let mut idx: Vec<usize> = Vec::new();
        for &id in members {
            let v = tris[id].v;
            let c = cross3(&sub(&points[v[1]], &points[v[0]]), &sub(&points[v[2]], &points[v[0]]));
            for k in 0..3 {
                acc[k] += c[k];
            }
            idx.extend_from_slice(&v);
        }
        idx.sort_unstable();
        idx.dedup();
        let len = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
        if len <= 0.0 {
            continue;
        }
        let normal = [acc[0] / len, acc[1] / len, acc[2] / len];
        let offset = idx.iter().map(|&i| dot(&normal, &points[i])).fold(f64::NEG_INFINITY, f64::max);
        // In-plane basis (e1, e2) with e1 × e2 = normal.
        let helper = if normal[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = {
            let c = cross3(&helper, &normal);
            let l = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            [c[0] / l, c[1] / l, c[2] / l]
        };
        let e2 = cross3(&normal, &e1);
        let planar: Vec<[f64; 2]> = idx.iter().map(|&i| [dot(&e1, &points[i]), dot(&e2, &points[i])]).collect();
        let ring = monotone_chain(&planar, eps * eps * 1e-2);
        if ring.len() < 3 {
            continue;
        }
        let verts: Vec<usize> = ring.iter().map(|&r| idx[r]).collect();
        for &v in &verts {
            is_vertex[v] = true;
        }
        facets.push(HullFacet { normal: normal.to_vec(), offset, vertices: verts });
    }
    let vertices: Vec<usize> = (0..points.len()).filter(|&i| is_vertex[i]).collect();
    if facets.len() < 4 {
        return Err(Error::DegenerateBody);
    }
    Ok(Hull { dim: 3, vertices, facets })
}
