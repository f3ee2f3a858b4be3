use logsum::combine::{lp_combine, log_combine, DirectionGrid};
use logsum::geom::Body;
use logsum::measure::volume;
use logsum::sample::{random_sym_vpoly, random_vpoly, sample_in_body, sphere_uniform, RadiusLaw, SeedSpec};
use logsum::verify::{check_dual_log_bm, uniform_grid, Orientation, ScanReport};
use proptest::prelude::*;

fn planar(seed: u64, m: usize) -> Body {
    random_vpoly(2, m, &SeedSpec::new(seed)).unwrap()
}

fn spatial(seed: u64, m: usize) -> Body {
    random_vpoly(3, m, &SeedSpec::new(seed)).unwrap()
}

fn probes(n: usize) -> Vec<Vec<f64>> {
    sphere_uniform(n, 64, &SeedSpec::new(12345))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bipolar_is_identity(seed in 0u64..10_000, m in 3usize..9, spatial_body in any::<bool>()) {
        let k = if spatial_body { spatial(seed, m + 1) } else { planar(seed, m) };
        let kk = k.polar_dual().polar_dual();
        for u in probes(k.dim()) {
            prop_assert!(close(k.support(&u), kk.support(&u), 1e-9));
        }
    }

    #[test]
    fn polar_support_is_gauge(seed in 0u64..10_000, m in 3usize..9) {
        let k = planar(seed, m);
        let dual = k.polar_dual();
        for x in probes(2) {
            let x: Vec<f64> = x.iter().map(|c| 0.7 * c).collect();
            prop_assert!(close(dual.support(&x), k.gauge(&x), 1e-9));
        }
    }

    #[test]
    fn volume_is_representation_independent(seed in 0u64..10_000, m in 4usize..10) {
        let k = spatial(seed, m);
        let h = k.to_hrep().unwrap();
        prop_assert!(close(volume(&k).unwrap(), volume(&h).unwrap(), 1e-9));
    }

    #[test]
    fn linear_image_scales_volume(seed in 0u64..10_000, a in 0.3f64..2.0, b in -0.8f64..0.8, c in 0.3f64..2.0) {
        let k = planar(seed, 5);
        let t = vec![vec![a, b], vec![0.0, c]];
        let img = k.linear_image(&t).unwrap();
        prop_assert!(close(volume(&img).unwrap(), a * c * volume(&k).unwrap(), 1e-9));
    }

    #[test]
    fn minkowski_support_is_additive_on_the_grid(s1 in 0u64..10_000, s2 in 0u64..10_000, lambda in 0.05f64..0.95) {
        let (k, l) = (planar(s1, 4), planar(s2, 5));
        let g = DirectionGrid::planar(360);
        let c = lp_combine(&k, &l, lambda, 1.0, &g).unwrap();
        for u in g.directions() {
            let want = lambda * k.support(u) + (1.0 - lambda) * l.support(u);
            prop_assert!(close(c.support(u), want, 1e-9));
        }
    }

    #[test]
    fn log_combination_endpoints_contain_the_bodies(s1 in 0u64..10_000, s2 in 0u64..10_000) {
        let (k, l) = (planar(s1, 4), planar(s2, 6));
        let g = DirectionGrid::planar(180);
        let kg = log_combine(&k, &l, 1.0, &g).unwrap();
        for u in probes(2) {
            prop_assert!(kg.support(&u) >= k.support(&u) * (1.0 - 1e-12));
        }
        for u in g.directions() {
            prop_assert!(close(kg.support(u), k.support(u), 1e-12));
        }
    }

    #[test]
    fn planar_dual_log_bm_holds(s1 in 0u64..10_000, s2 in 0u64..10_000, lambda in 0.0f64..=1.0, m in 3usize..7) {
        let g = DirectionGrid::planar(360);
        let r = check_dual_log_bm(&planar(s1, m), &planar(s2, 3), lambda, &g).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn body_json_round_trips(seed in 0u64..10_000, m in 2usize..6) {
        let k = random_sym_vpoly(3, m + 2, RadiusLaw::default(), &SeedSpec::new(seed)).unwrap();
        let back: Body = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        prop_assert_eq!(&k, &back);
        for u in probes(3) {
            prop_assert!((k.support(&u) - back.support(&u)).abs() <= 1e-12);
        }
    }

    #[test]
    fn samples_stay_inside(seed in 0u64..10_000) {
        let k = planar(seed, 5);
        for x in sample_in_body(&k, 200, &SeedSpec::new(seed)).unwrap() {
            prop_assert!(k.gauge(&x) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn log_affine_scans_are_both_concave_and_convex(c in -3.0f64..3.0, slope in -4.0f64..4.0) {
        let t = uniform_grid(-1.0, 1.0, 15).unwrap();
        let v: Vec<f64> = t.iter().map(|t| (c + slope * t).exp()).collect();
        for o in [Orientation::Concave, Orientation::Convex] {
            let r = ScanReport::build("x", t.clone(), v.clone(), None, o, 1e-9).unwrap();
            prop_assert!(r.pass);
        }
    }
}

#[test]
fn seed_children_are_deterministic_and_distinct() {
    let s = SeedSpec::new(5);
    assert_eq!(sphere_uniform(3, 10, &s.child(1)), sphere_uniform(3, 10, &s.child(1)));
    assert_ne!(sphere_uniform(3, 10, &s.child(1)), sphere_uniform(3, 10, &s.child(2)));
}
