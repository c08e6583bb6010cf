mod common;

use proptest::prelude::*;
use rand::Rng;
use uvaa_core::metrics::{dominates, hypervolume, igd, non_dominated, reference_front, reference_point};

fn random_front(r: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec![r.random_range(0.0..10.0), r.random_range(-10.0..0.0)]).collect()
}

#[test]
fn igd_matches_brute_force() {
    let mut r = common::rng(1);
    for _ in 0..200 {
        let f = random_front(&mut r, 5);
        let g = random_front(&mut r, 5);
        assert!((igd(&f, &g).unwrap() - common::igd_oracle(&f, &g)).abs() <= 1e-12);
    }
}

#[test]
fn hypervolume_matches_grid_oracle() {
    let mut r = common::rng(2);
    for _ in 0..200 {
        let n = r.random_range(1..12);
        let f = random_front(&mut r, n);
        let got = hypervolume(&f, &[0.0, -10.0]).unwrap();
        let want = common::hv_grid_oracle(&f, &[0.0, -10.0]);
        assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn hypervolume_matches_monte_carlo() {
    let mut r = common::rng(3);
    for _ in 0..3 {
        let f = random_front(&mut r, 8);
        let hv = hypervolume(&f, &[0.0, -10.0]).unwrap();
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let (x, y) = (r.random_range(0.0..10.0), r.random_range(-10.0..0.0));
                f.iter().any(|p| p[0] >= x && p[1] >= y)
            })
            .count();
        let p = hits as f64 / n as f64;
        let estimate = 100.0 * p;
        let sigma = 100.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((estimate - hv).abs() <= 3.0 * sigma, "{estimate} vs {hv} (σ {sigma})");
    }
}

#[test]
fn hand_examples() {
    assert_eq!(hypervolume(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[0.0, 0.0]).unwrap(), 3.0);
    assert_eq!(igd(&[vec![0.0, 0.0]], &[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap(), 1.0);
    assert!(dominates(&[3.0, 3.0], &[2.0, 3.0]).unwrap());
}

#[test]
fn reference_is_non_dominated_union() {
    let mut r = common::rng(4);
    let a = random_front(&mut r, 20);
    let b = random_front(&mut r, 20);
    let u = reference_front(&[a.clone(), b.clone()]);
    for p in a.iter().chain(&b) {
        assert!(u.iter().any(|q| q == p || dominates(q, p).unwrap()));
    }
    for p in &u {
        assert!(!u.iter().any(|q| dominates(q, p).unwrap()));
    }
    let rp = reference_point(&u, 0.1).unwrap();
    assert!(u.iter().all(|p| p[0] > rp[0] && p[1] > rp[1]));
}

fn front_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec((0.0f64..10.0, -10.0f64..0.0).prop_map(|(a, b)| vec![a, b]), 1..15)
}

proptest! {
    #[test]
    fn hv_monotone_under_insertion(front in front_strategy(), x in 0.0f64..10.0, y in -10.0f64..0.0) {
        let r = [0.0, -10.0];
        let nd: Vec<Vec<f64>> = non_dominated(&front).into_iter().map(|i| front[i].clone()).collect();
        let base = hypervolume(&nd, &r).unwrap();
        let p = vec![x, y];
        let mut ext = nd.clone();
        ext.push(p.clone());
        let after = hypervolume(&ext, &r).unwrap();
        let covered = nd.iter().any(|q| q[0] >= x && q[1] >= y);
        if covered {
            prop_assert!((after - base).abs() <= 1e-9 * base.max(1.0));
        } else if x > r[0] && y > r[1] {
            prop_assert!(after > base);
        }
    }

    #[test]
    fn metrics_ignore_order(front in front_strategy(), reference in front_strategy(), shift in 0usize..15) {
        let mut f2 = front.clone();
        f2.rotate_left(shift % front.len());
        f2.reverse();
        let mut r2 = reference.clone();
        r2.reverse();
        prop_assert!((igd(&front, &reference).unwrap() - igd(&f2, &r2).unwrap()).abs() <= 1e-12);
        let rp = [0.0, -10.0];
        prop_assert!((hypervolume(&front, &rp).unwrap() - hypervolume(&f2, &rp).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn igd_zero_iff_reference_covered(front in front_strategy(), take in 1usize..15) {
        let reference: Vec<Vec<f64>> = front.iter().take(take).cloned().collect();
        prop_assert_eq!(igd(&front, &reference).unwrap(), 0.0);
        let mut outside = reference.clone();
        outside.push(vec![20.0, 5.0]);
        prop_assert!(igd(&front, &outside).unwrap() > 0.0);
    }
}
