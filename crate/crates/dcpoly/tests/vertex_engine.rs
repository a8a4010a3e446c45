//! Cross-validation of the incremental vertex engine against brute-force
//! enumeration over all (n+1)-subsets of constraint rows.

use dcpoly::poly_core::{
    enumerate_vertices_bruteforce, init_epigraph, AffineMinorant, BoxDomain, EpigraphPoly,
    LiftedVertex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> (BoxDomain<f64>, Vec<AffineMinorant<f64>>) {
    let n = rng.gen_range(1..=3usize);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let lo: f64 = rng.gen_range(-3.0..0.0);
        let hi: f64 = rng.gen_range(0.5..3.0);
        lower.push(lo);
        upper.push(hi);
    }
    let domain = BoxDomain::new(lower.clone(), upper.clone()).unwrap();
    let cuts = rng.gen_range(1..=8usize);
    let minorants = (0..cuts)
        .map(|_| {
            let gradient: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let anchor: Vec<f64> = (0..n)
                .map(|j| rng.gen_range(lower[j]..upper[j]))
                .collect();
            let value: f64 = rng.gen_range(-1.0..1.0);
            AffineMinorant::from_tangent(anchor, value, gradient)
        })
        .collect();
    (domain, minorants)
}

fn build_incremental(
    domain: &BoxDomain<f64>,
    minorants: &[AffineMinorant<f64>],
) -> EpigraphPoly<f64> {
    let mut poly = init_epigraph(domain.clone(), minorants[0].clone()).unwrap();
    for m in &minorants[1..] {
        poly.intersect_halfspace(m.clone()).unwrap();
    }
    poly
}

fn matches_within(a: &LiftedVertex<f64>, b: &LiftedVertex<f64>, tol: f64) -> bool {
    a.lifted_dist2(b) <= tol * tol
}

fn sets_equal(xs: &[LiftedVertex<f64>], ys: &[LiftedVertex<f64>], tol: f64) -> bool {
    xs.iter().all(|x| ys.iter().any(|y| matches_within(x, y, tol)))
        && ys.iter().all(|y| xs.iter().any(|x| matches_within(x, y, tol)))
}

#[test]
fn incremental_matches_bruteforce_on_500_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0usize;
    for trial in 0..500 {
        let (domain, minorants) = random_instance(&mut rng);
        let poly = build_incremental(&domain, &minorants);
        let brute = enumerate_vertices_bruteforce(&domain, &minorants).unwrap();
        if !sets_equal(poly.vertices(), &brute, 1e-7) {
            mismatches += 1;
            eprintln!(
                "trial {trial}: incremental {} vs brute {} vertices\n  box {:?} .. {:?}\n  cuts {:?}",
                poly.vertices().len(),
                brute.len(),
                domain.lower(),
                domain.upper(),
                minorants
            );
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn vertices_stay_in_box_and_on_underestimator() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (domain, minorants) = random_instance(&mut rng);
        let poly = build_incremental(&domain, &minorants);
        for v in poly.vertices() {
            assert!(domain.contains(&v.point, 1e-9), "vertex left the box");
            let val = poly.underestimator_value(&v.point);
            assert!(
                (v.height - val).abs() <= 1e-7 * (1.0 + val.abs()),
                "height {} disagrees with max minorant {}",
                v.height,
                val
            );
        }
    }
}

#[test]
fn refinement_only_raises_heights() {
    // Adding a cut can only push the lower boundary of the epigraph upward:
    // at every surviving x, the new underestimator dominates the old one.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let (domain, minorants) = random_instance(&mut rng);
        let mut poly = init_epigraph(domain.clone(), minorants[0].clone()).unwrap();
        for m in &minorants[1..] {
            let before: Vec<(Vec<f64>, f64)> = poly
                .vertices()
                .iter()
                .map(|v| (v.point.clone(), v.height))
                .collect();
            poly.intersect_halfspace(m.clone()).unwrap();
            for (x, old_height) in before {
                let new_val = poly.underestimator_value(&x);
                assert!(new_val >= old_height - 1e-9);
            }
        }
    }
}

#[test]
fn every_x_column_is_covered() {
    // The upward ray is never cut away: any box point has exactly one lowest
    // lifted point, and sampling must find a vertex-induced value there.
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    for _ in 0..100 {
        let (domain, minorants) = random_instance(&mut rng);
        let poly = build_incremental(&domain, &minorants);
        let n = domain.dim();
        for _ in 0..20 {
            let x: Vec<f64> = (0..n)
                .map(|j| rng.gen_range(domain.lower()[j]..domain.upper()[j]))
                .collect();
            let val = poly.underestimator_value(&x);
            assert!(val.is_finite());
            // It must equal the max of the minorants by definition.
            let direct = minorants
                .iter()
                .map(|m| m.evaluate(&x))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((val - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
    }
}

#[test]
fn export_schema_round_trips_key_fields() {
    let domain = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let cut = AffineMinorant::from_tangent(vec![0.0, 0.0], 0.0, vec![1.0, 1.0]);
    let poly = init_epigraph(domain, cut).unwrap();
    let doc = poly.to_json();
    assert_eq!(doc["n"], 2);
    assert_eq!(doc["minorants"].as_array().unwrap().len(), 1);
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 4);
    assert_eq!(doc["box"]["lower"], serde_json::json!([-1.0, -1.0]));
    let first = &doc["vertices"][0];
    assert!(first["point"].is_array());
    assert!(first["height"].is_number());
}
