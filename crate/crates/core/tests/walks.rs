use std::collections::BTreeSet;

use nbspectra_core::ensembles::SeedSpec;
use nbspectra_core::walks::{
    enumerate_normal, exact_trace_moment, expand, format_labels, format_zeta, h_path_sum_moment, parse_walk, path_sum_moment,
    plain_key, rational_from_f64, reduce_path, verify_reduction, write_walk, BigRational, FiniteEnsemble,
    MomentTarget, PathSampler, WalkMode,
};

const LONG_PATH: &str = include_str!("../fixtures/long_path.txt");
const DIRECTED_PAIR: &str = include_str!("../fixtures/directed_pair.txt");

#[test]
fn long_path_reduction() {
    let p = parse_walk(LONG_PATH).unwrap();
    assert_eq!(p.mode(), WalkMode::Hermitian);
    let t = reduce_path(&p).unwrap();
    assert_eq!(t.gamma, 6);
    assert_eq!(t.k, vec![3, 4, 1, 1, 2, 1, 2, 1, 3, 3]);
    assert_eq!(expand(&t).unwrap(), p);
    assert!(verify_reduction(&p).all_passed());
}

#[test]
fn directed_pair_reduction() {
    let p = parse_walk(DIRECTED_PAIR).unwrap();
    assert_eq!(p.mode(), WalkMode::DirectedPair);
    let t = reduce_path(&p).unwrap();
    assert_eq!(t.gamma, 9);
    assert_eq!(format_labels(&t.zeta[0].vertices), "12345666775677545489");
    assert_eq!(format_labels(&t.zeta[1].vertices), "12334823334823489");
    assert_eq!(format_zeta(&t)[1], "1a2b3m3c4k8n2b3m3m3c4k8n2b3c4k8l9");
    assert!(verify_reduction(&p).all_passed());
}

#[test]
fn fixtures_round_trip_through_text() {
    for text in [LONG_PATH, DIRECTED_PAIR] {
        let p = parse_walk(text).unwrap();
        assert_eq!(parse_walk(&write_walk(&p)).unwrap(), p);
    }
}

#[test]
fn exhaustive_reduction_sweep() {
    for mode in [WalkMode::Hermitian, WalkMode::DirectedPair] {
        for n in 1..=4 {
            for ell in 1..=3 {
                let normal = enumerate_normal(n, ell, mode).unwrap();
                let mut keys = BTreeSet::new();
                for p in &normal {
                    let r = verify_reduction(p);
                    assert!(r.all_passed(), "{} {:?}", write_walk(p), r.failures());
                    assert!(keys.insert(plain_key(r.triple.as_ref().unwrap())));
                }
            }
        }
    }
}

#[test]
fn sampled_reduction_sweep() {
    let mut rng = SeedSpec::new(301, 0).rng();
    let mut s = PathSampler::new(8, 6).unwrap();
    for _ in 0..2000 {
        let p = s.sample(&mut rng);
        let r = verify_reduction(&p);
        assert!(r.all_passed(), "{} {:?}", write_walk(&p), r.failures());
    }
}

#[test]
fn oracles_agree_on_small_graphs() {
    let triangle = vec![(0, 1), (1, 2), (0, 2)];
    let k4: Vec<_> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
    let path = vec![(0, 1), (1, 2), (2, 3)];
    for (n, edges, q2) in [(3, triangle, 2.0), (4, k4, 3.0), (4, path, 2.0)] {
        let ens = FiniteEnsemble::rademacher(n, &edges, rational_from_f64(q2).unwrap()).unwrap();
        for ell in 1..=3 {
            let exact = exact_trace_moment(&ens, ell, MomentTarget::B).unwrap();
            assert_eq!(path_sum_moment(&ens, ell).unwrap(), exact, "n={n} l={ell}");
            let exact_h = exact_trace_moment(&ens, ell, MomentTarget::HDirected).unwrap();
            assert_eq!(h_path_sum_moment(&ens, ell).unwrap(), exact_h, "n={n} l={ell}");
        }
    }
}

#[test]
fn half_variance_triangle_trace_is_six() {
    let ens = FiniteEnsemble::rademacher(3, &[(0, 1), (1, 2), (0, 2)], rational_from_f64(2.0).unwrap()).unwrap();
    assert_eq!(exact_trace_moment(&ens, 1, MomentTarget::B).unwrap(), BigRational::from_integer(6.into()));
}
