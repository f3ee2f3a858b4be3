//! Seeded randomness: hierarchical seeds, sphere and Grassmannian sampling,
//! random body generators and uniform sampling inside bodies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combine::VertexFlow;
use crate::error::{Error, Result};
use crate::geom::{make_hpoly, make_vpoly, Body, Subspace};
use crate::vector::{dot, norm, scale, Vector};

pub type Rng64 = ChaCha8Rng;

/// Root seed plus a derivation path. Streams are derived by hashing the
/// whole path, so every path has its own independent stream and parallel
/// chunking never depends on scheduling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub stream_path: Vec<u64>,
}

impl SeedSpec {
    pub fn new(root_seed: u64) -> SeedSpec {
        SeedSpec { root_seed, stream_path: Vec::new() }
    }

    pub fn child(&self, k: u64) -> SeedSpec {
        let mut stream_path = self.stream_path.clone();
        stream_path.push(k);
        SeedSpec { root_seed: self.root_seed, stream_path }
    }

    pub fn rng(&self) -> Rng64 {
        let mut h = Sha256::new();
        h.update(self.root_seed.to_le_bytes());
        h.update((self.stream_path.len() as u64).to_le_bytes());
        for k in &self.stream_path {
            h.update(k.to_le_bytes());
        }
        let digest: [u8; 32] = h.finalize().into();
        Rng64::from_seed(digest)
    }
}

/// Samples per parallel chunk. Chunk `k` draws from `seed.child(k)`.
pub const CHUNK: usize = 1 << 16;

/// Split `total` draws into fixed chunks and run them in parallel; results
/// come back in chunk order.
pub fn chunked<T, F>(total: usize, seed: &SeedSpec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Rng64) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(total - k * CHUNK);
            let mut rng = seed.child(k as u64).rng();
            f(count, &mut rng)
        })
        .collect()
}

pub fn gaussian_vector(n: usize, rng: &mut Rng64) -> Vector {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn sphere_point(n: usize, rng: &mut Rng64) -> Vector {
    loop {
        let g = gaussian_vector(n, rng);
        let l = norm(&g);
        if l > 1e-300 {
            return scale(&g, 1.0 / l);
        }
    }
}

/// Independent uniform points on S^{n-1}.
pub fn sphere_uniform(n: usize, count: usize, seed: &SeedSpec) -> Vec<Vector> {
    let mut rng = seed.rng();
    (0..count).map(|_| sphere_point(n, &mut rng)).collect()
}

/// Haar-random k-dimensional subspace of ℝⁿ (Gram–Schmidt of a Gaussian frame).
pub fn grassmann_subspace(n: usize, k: usize, seed: &SeedSpec) -> Result<Subspace> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("subspace dimension {k} not in 1..{n}")));
    }
    let mut rng = seed.rng();
    grassmann_with(n, k, &mut rng)
}

pub(crate) fn grassmann_with(n: usize, k: usize, rng: &mut Rng64) -> Result<Subspace> {
    loop {
        let frame: Vec<Vector> = (0..k).map(|_| gaussian_vector(n, rng)).collect();
        if let Ok(s) = Subspace::span(&frame) {
            return Ok(s);
        }
    }
}

/// Law of the vertex radii used by the generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiusLaw {
    Uniform { lo: f64, hi: f64 },
    Fixed(f64),
}

impl Default for RadiusLaw {
    fn default() -> Self {
        RadiusLaw::Uniform { lo: 0.5, hi: 1.5 }
    }
}

impl RadiusLaw {
    fn draw(&self, rng: &mut Rng64) -> f64 {
        match *self {
            RadiusLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            RadiusLaw::Fixed(r) => r,
        }
    }
}

const RETRIES: usize = 100;

fn retry<T>(seed: &SeedSpec, mut make: impl FnMut(&mut Rng64) -> Result<T>) -> Result<T> {
    let mut last = Error::DegenerateBody;
    for attempt in 0..RETRIES {
        let mut rng = seed.child(attempt as u64).rng();
        match make(&mut rng) {
            Ok(b) => return Ok(b),
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn check_m(n: usize, m: usize) -> Result<()> {
    if n == 0 || m < n + 1 {
        return Err(Error::InvalidParameter(format!("need m ≥ n+1 (n = {n}, m = {m})")));
    }
    Ok(())
}

/// conv{±w_1, …, ±w_m} with w_j uniform directions scaled by `law`.
pub fn random_sym_vpoly(n: usize, m: usize, law: RadiusLaw, seed: &SeedSpec) -> Result<Body> {
    check_m(n, m)?;
    retry(seed, |rng| {
        let mut pts = Vec::with_capacity(2 * m);
        for _ in 0..m {
            let w = scale(&sphere_point(n, rng), law.draw(rng));
            pts.push(scale(&w, -1.0));
            pts.push(w);
        }
        make_vpoly(pts)
    })
}

/// Intersection of m random symmetric slabs `|x·u_j| ≤ b_j`.
pub fn random_sym_hpoly(n: usize, m: usize, seed: &SeedSpec) -> Result<Body> {
    check_m(n, m)?;
    let law = RadiusLaw::default();
    retry(seed, |rng| {
        let mut normals = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m);
        for _ in 0..m {
            normals.push(sphere_point(n, rng));
            offsets.push(law.draw(rng));
        }
        make_hpoly(normals, offsets, true)
    })
}

/// Body invariant under all coordinate reflections.
pub fn random_unconditional(n: usize, m: usize, seed: &SeedSpec) -> Result<Body> {
    check_m(n, m)?;
    let law = RadiusLaw::default();
    retry(seed, |rng| {
        let mut pts = Vec::with_capacity(m << n);
        for _ in 0..m {
            let w: Vector = sphere_point(n, rng).iter().map(|x| x.abs() * law.draw(rng)).collect();
            for mask in 0..(1usize << n) {
                pts.push(w.iter().enumerate().map(|(i, &x)| if mask >> i & 1 == 1 { -x } else { x }).collect());
            }
        }
        make_vpoly(pts)
    })
}

/// Random triangle translated so its centroid is the origin.
pub fn random_triangle_centroid(seed: &SeedSpec) -> Result<Body> {
    let law = RadiusLaw::default();
    retry(seed, |rng| {
        let pts: Vec<Vector> = (0..3).map(|_| scale(&sphere_point(2, rng), law.draw(rng))).collect();
        let c = [
            (pts[0][0] + pts[1][0] + pts[2][0]) / 3.0,
            (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0,
        ];
        let t: Vec<Vector> = pts.iter().map(|p| vec![p[0] - c[0], p[1] - c[1]]).collect();
        let area = crate::vector::det2(&crate::vector::sub(&t[1], &t[0]), &crate::vector::sub(&t[2], &t[0])).abs();
        if area < 0.05 {
            return Err(Error::DegenerateBody);
        }
        make_vpoly(t)
    })
}

/// Non-symmetric V-polytope from m random points; retried until the origin is interior.
pub fn random_vpoly(n: usize, m: usize, seed: &SeedSpec) -> Result<Body> {
    check_m(n, m)?;
    let law = RadiusLaw::default();
    retry(seed, |rng| make_vpoly((0..m).map(|_| scale(&sphere_point(n, rng), law.draw(rng))).collect()))
}

/// Non-symmetric H-polytope from m random halfspaces; retried until bounded.
pub fn random_hpoly(n: usize, m: usize, seed: &SeedSpec) -> Result<Body> {
    check_m(n, m)?;
    let law = RadiusLaw::default();
    retry(seed, |rng| {
        let normals = (0..m).map(|_| sphere_point(n, rng)).collect();
        let offsets = (0..m).map(|_| law.draw(rng)).collect();
        make_hpoly(normals, offsets, false)
    })
}

/// Random vertex flow with exponents uniform in [-1, 1] on the window [-1, 1].
/// A symmetric flow uses pairs ±x_i sharing one exponent (`m` pairs).
pub fn random_vertex_flow(n: usize, m: usize, symmetric: bool, seed: &SeedSpec) -> Result<VertexFlow> {
    check_m(n, if symmetric { m + 1 } else { m })?;
    let law = RadiusLaw::default();
    retry(seed, |rng| {
        let mut points = Vec::new();
        let mut exponents = Vec::new();
        for _ in 0..m {
            let x = scale(&sphere_point(n, rng), law.draw(rng));
            let a = 2.0 * rng.random::<f64>() - 1.0;
            if symmetric {
                points.push(scale(&x, -1.0));
                exponents.push(a);
            }
            points.push(x);
            exponents.push(a);
        }
        VertexFlow::new(points, exponents, (-1.0, 1.0))
    })
}

/// Membership and chord oracle built once per body.
pub(crate) struct Oracle<'a> {
    body: &'a Body,
    halfspaces: Option<(Vec<Vector>, Vec<f64>)>,
}

impl<'a> Oracle<'a> {
    pub(crate) fn new(body: &'a Body) -> Oracle<'a> {
        let halfspaces = body.halfspaces().ok().map(|(v, b)| (v.to_vec(), b.to_vec()));
        Oracle { body, halfspaces }
    }

    pub(crate) fn gauge(&self, x: &[f64]) -> f64 {
        match &self.halfspaces {
            Some((normals, offsets)) => normals.iter().zip(offsets).map(|(v, b)| dot(v, x) / b).fold(0.0, f64::max),
            None => self.body.gauge(x),
        }
    }

    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        match &self.halfspaces {
            Some((normals, offsets)) => normals.iter().zip(offsets).all(|(v, b)| dot(v, x) <= *b),
            None => self.body.gauge(x) <= 1.0,
        }
    }

    /// Parameter interval of the chord `{x + τd} ∩ K` through an interior x.
    fn chord(&self, x: &[f64], d: &[f64], reach: f64) -> (f64, f64) {
        match &self.halfspaces {
            Some((normals, offsets)) => {
                let (mut lo, mut hi) = (-reach, reach);
                for (v, b) in normals.iter().zip(offsets) {
                    let a = dot(v, d);
                    let slack = b - dot(v, x);
                    if a > 0.0 {
                        hi = hi.min(slack / a);
                    } else if a < 0.0 {
                        lo = lo.max(slack / a);
                    }
                }
                (lo, hi)
            }
            None => {
                let edge = |sgn: f64| {
                    let (mut a, mut b) = (0.0, reach);
                    for _ in 0..60 {
                        let mid = 0.5 * (a + b);
                        let p: Vector = x.iter().zip(d).map(|(xi, di)| xi + sgn * mid * di).collect();
                        if self.body.gauge(&p) <= 1.0 {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    a
                };
                (-edge(-1.0), edge(1.0))
            }
        }
    }
}

/// Uniform points in the body: rejection from the bounding box, switching to
/// hit-and-run (50·n steps between samples) when acceptance is below 1e-3.
pub fn sample_in_body(body: &Body, count: usize, seed: &SeedSpec) -> Result<Vec<Vector>> {
    let oracle = Oracle::new(body);
    let (lo, hi) = body.bounding_box();
    let mut rng = seed.rng();
    sample_with(&oracle, &lo, &hi, count, &mut rng)
}

pub(crate) fn sample_with(
    oracle: &Oracle<'_>,
    lo: &[f64],
    hi: &[f64],
    count: usize,
    rng: &mut Rng64,
) -> Result<Vec<Vector>> {
    let n = lo.len();
    let draw = |rng: &mut Rng64| -> Vector { (0..n).map(|i| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>()).collect() };
    let mut out = Vec::with_capacity(count);
    let mut trials = 0usize;
    const PILOT: usize = 4000;
    while out.len() < count {
        let x = draw(rng);
        trials += 1;
        if oracle.contains(&x) {
            out.push(x);
        }
        if trials == PILOT && (out.len() as f64) < 1e-3 * PILOT as f64 {
            out.clear();
            return hit_and_run(oracle, lo, hi, count, rng);
        }
    }
    Ok(out)
}

pub(crate) fn hit_and_run(oracle: &Oracle<'_>, lo: &[f64], hi: &[f64], count: usize, rng: &mut Rng64) -> Result<Vec<Vector>> {
    let n = lo.len();
    let reach = lo.iter().zip(hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt() + 1.0;
    let steps = 50 * n;
    let mut x = vec![0.0; n];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..steps {
            let d = sphere_point(n, rng);
            let (a, b) = oracle.chord(&x, &d, reach);
            if !(b > a) {
                return Err(Error::AcceptanceTooLow);
            }
            let t = a + (b - a) * rng.random::<f64>();
            x = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::cube;

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let s = SeedSpec::new(42);
        let a: u64 = s.rng().random();
        let b: u64 = s.rng().random();
        assert_eq!(a, b);
        let c: u64 = s.child(0).rng().random();
        let d: u64 = s.child(1).rng().random();
        assert_ne!(a, c);
        assert_ne!(c, d);
        // path [0, 1] vs [1] under a different root must differ too
        let e: u64 = SeedSpec { root_seed: 42, stream_path: vec![0, 1] }.rng().random();
        assert_ne!(e, d);
    }

    #[test]
    fn sphere_moments() {
        let pts = sphere_uniform(3, 20000, &SeedSpec::new(1));
        let m: f64 = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        assert!(m.abs() < 4.0 / (pts.len() as f64).sqrt());
        let q: Vec<f64> = pts.iter().map(|p| p[0] * p[0]).collect();
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        let var = q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (q.len() - 1) as f64;
        assert!((mean - 1.0 / 3.0).abs() < 4.0 * (var / q.len() as f64).sqrt());
        assert!(pts.iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn planar_grassmannian_angle_is_uniform() {
        let mut rng = SeedSpec::new(5).rng();
        let mut angles: Vec<f64> = (0..10_000)
            .map(|_| {
                let s = grassmann_with(2, 1, &mut rng).unwrap();
                let b = &s.basis()[0];
                b[1].atan2(b[0]).rem_euclid(std::f64::consts::PI)
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        let n = angles.len() as f64;
        let ks = angles
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let f = a / std::f64::consts::PI;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the Kolmogorov–Smirnov statistic
        assert!(ks < 1.63 / n.sqrt(), "ks = {ks}");
    }

    #[test]
    fn generators_are_well_formed() {
        let s = SeedSpec::new(9);
        let k = random_sym_vpoly(2, 4, RadiusLaw::default(), &s).unwrap();
        assert!(k.is_symmetric());
        let t = random_triangle_centroid(&s).unwrap();
        let v = t.vertices().unwrap();
        assert_eq!(v.len(), 3);
        for i in 0..2 {
            assert!((v.iter().map(|p| p[i]).sum::<f64>() / 3.0).abs() < 1e-12);
        }
        let u = random_unconditional(3, 4, &s).unwrap();
        for w in u.vertices().unwrap() {
            for i in 0..3 {
                let mut r = w.clone();
                r[i] = -r[i];
                assert!(u.vertices().unwrap().iter().any(|q| q.iter().zip(&r).all(|(a, b)| a == b)));
            }
        }
        assert!(random_sym_hpoly(3, 6, &s).unwrap().is_symmetric());
    }

    #[test]
    fn cube_samples_cover_uniformly() {
        let c = cube(2);
        let pts = sample_in_body(&c, 20000, &SeedSpec::new(3)).unwrap();
        assert!(pts.iter().all(|p| c.gauge(p) <= 1.0 + 1e-12));
        let m2 = pts.iter().map(|p| p[0] * p[0]).sum::<f64>() / pts.len() as f64;
        // Var(x²) for x ~ U[-1,1] is 1/5 - 1/9
        assert!((m2 - 1.0 / 3.0).abs() < 4.0 * ((0.2 - 1.0 / 9.0) / 20000.0f64).sqrt());
    }

    #[test]
    fn hit_and_run_on_thin_body() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let rot = [vec![r, -r], vec![r, r]];
        // Acceptance ≈ 1e-4 forces the fallback; only containment is checkable
        // at this aspect ratio.
        let needle = crate::geom::box_body(&[1.0, 1e-4]).linear_image(&rot).unwrap();
        let pts = sample_in_body(&needle, 500, &SeedSpec::new(4)).unwrap();
        assert!(pts.iter().all(|p| needle.gauge(p) <= 1.0 + 1e-12));
        // Uniformity of the walk itself on a moderately thin body.
        let thin = crate::geom::box_body(&[1.0, 0.05]).linear_image(&rot).unwrap();
        let oracle = Oracle::new(&thin);
        let (lo, hi) = thin.bounding_box();
        let pts = hit_and_run(&oracle, &lo, &hi, 4000, &mut SeedSpec::new(5).rng()).unwrap();
        let along: Vec<f64> = pts.iter().map(|p| (p[0] + p[1]) * r).collect();
        let m = along.iter().sum::<f64>() / along.len() as f64;
        let m2 = along.iter().map(|a| a * a).sum::<f64>() / along.len() as f64;
        assert!(m.abs() < 0.1, "{m}");
        assert!((m2 - 1.0 / 3.0).abs() < 0.05, "{m2}");
    }
}
