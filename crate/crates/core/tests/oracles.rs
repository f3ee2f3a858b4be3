//! Library results against independent test-side computations.

use logsum::combine::{log_combine, DirectionGrid};
use logsum::geom::{box_body, Body};
use logsum::measure::{measure_of, volume, DensitySpec};
use logsum::sample::{random_sym_vpoly, random_vpoly, RadiusLaw, SeedSpec};
use statrs::function::erf::erf;

/// Area of {x : n_i·x ≤ b_i} by clipping a large square one half-plane at a
/// time (Sutherland–Hodgman), then the shoelace formula.
fn clipped_area(halfplanes: &[([f64; 2], f64)]) -> f64 {
    let big = 1e3;
    let mut poly = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
    for &(n, b) in halfplanes {
        let f = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - b;
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fp, fq) = (f(&p), f(&q));
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0) != (fq < 0.0) && fp != fq {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
    }
    let m = poly.len();
    (0..m).map(|i| poly[i][0] * poly[(i + 1) % m][1] - poly[(i + 1) % m][0] * poly[i][1]).sum::<f64>() / 2.0
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn polar_area_matches_clipping() {
    for j in 0..30 {
        let k = random_vpoly(2, 3 + j % 5, &SeedSpec::new(j as u64)).unwrap();
        let hp: Vec<([f64; 2], f64)> = k.vertices().unwrap().iter().map(|v| ([v[0], v[1]], 1.0)).collect();
        let a = volume(&k.polar_dual()).unwrap();
        assert!(close(a, clipped_area(&hp), 1e-10), "seed {j}");
    }
}

#[test]
fn log_combination_area_matches_clipping() {
    let g = DirectionGrid::planar(240);
    for j in 0..20u64 {
        let k = random_sym_vpoly(2, 4, RadiusLaw::default(), &SeedSpec::new(j)).unwrap();
        let l = random_sym_vpoly(2, 3, RadiusLaw::default(), &SeedSpec::new(100 + j)).unwrap();
        let lambda = 0.3;
        let hp: Vec<([f64; 2], f64)> = g
            .directions()
            .iter()
            .map(|u| ([u[0], u[1]], k.support(u).powf(lambda) * l.support(u).powf(1.0 - lambda)))
            .collect();
        let c = log_combine(&k, &l, lambda, &g).unwrap();
        assert!(close(volume(&c).unwrap(), clipped_area(&hp), 1e-10), "seed {j}");
    }
}

#[test]
fn gaussian_box_measure_matches_erf_product() {
    let gauss = DensitySpec::Gaussian { sigma: 1.0 };
    for widths in [[0.3, 1.2], [1.0, 1.0], [2.5, 0.7]] {
        let b: Body = box_body(&widths);
        let e = measure_of(&b, &gauss, 400_000, &SeedSpec::new(3)).unwrap();
        let exact: f64 = widths.iter().map(|w| erf(w / 2f64.sqrt())).product();
        assert!((e.value - exact).abs() <= 4.0 * e.stderr, "{widths:?}: {} vs {exact}", e.value);
    }
}

#[test]
fn spatial_box_volume_and_polar() {
    let b = box_body(&[0.5, 1.0, 2.0]);
    assert!(close(volume(&b).unwrap(), 8.0, 1e-12));
    // The polar of a box is the cross-polytope with vertices ±e_i / a_i:
    // volume 8/(6 a b c).
    assert!(close(volume(&b.polar_dual()).unwrap(), 8.0 / 6.0, 1e-12));
}
