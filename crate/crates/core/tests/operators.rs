use nbspectra_core::checks::{gelfand_margins, random_hermitian, random_instance, regular_graphs};
use nbspectra_core::dense::hermitian_eigenvalues;
use nbspectra_core::ensembles::SeedSpec;
use nbspectra_core::model::{EntryNorms, SparseMatrix};
use nbspectra_core::nbop::{build_nb_operator, nb_apply, NbMode};
use nbspectra_core::spectra::{
    hermitian_extremes, spectral_radius, trace_moment, Method, SpectralConfig, Solver, TraceMode,
};
use nbspectra_core::C64;
use proptest::prelude::*;

fn hermitian_strategy() -> impl Strategy<Value = SparseMatrix> {
    (2usize..9, 0.1f64..0.9, any::<bool>(), any::<u64>()).prop_map(|(n, p, complex, seed)| {
        random_hermitian(&mut SeedSpec::new(seed, 0).rng(), n, p, complex).unwrap()
    })
}

fn vector(seed: u64, len: usize) -> Vec<C64> {
    use rand::Rng;
    let mut rng = SeedSpec::new(seed, 1).rng();
    (0..len).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_apply_matches_entry_rule(h in hermitian_strategy(), seed in any::<u64>()) {
        for mode in [NbMode::SupportRestricted, NbMode::Full] {
            let op = build_nb_operator(&h, mode).unwrap();
            let x = vector(seed, op.dim());
            let fast = nb_apply(&op, &x).unwrap();
            let slow = op.apply_naive(&x).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn dense_roundtrip_preserves_support(h in hermitian_strategy()) {
        let back = SparseMatrix::from_dense(&h.to_dense(), true).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn norm_ordering_and_permutation_invariance(h in hermitian_strategy(), seed in any::<u64>()) {
        let n = h.n();
        let (a, b) = (h.norm_1_to_inf(), h.norm_2_to_inf());
        prop_assert!(a <= b + 1e-15 && b <= (n as f64).sqrt() * a + 1e-12);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let p = h.permuted(&perm).unwrap();
        prop_assert_eq!(p.norm_1_to_inf(), a);
        prop_assert!((p.norm_2_to_inf() - b).abs() <= 1e-14);
    }

    #[test]
    fn full_and_restricted_radius_agree(h in hermitian_strategy()) {
        let cfg = SpectralConfig::default().with_solver(Solver::Dense);
        let r = spectral_radius(&build_nb_operator(&h, NbMode::SupportRestricted).unwrap(), &cfg).unwrap().rho;
        let f = spectral_radius(&build_nb_operator(&h, NbMode::Full).unwrap(), &cfg).unwrap().rho;
        prop_assert!((r - f).abs() <= 1e-7 * (1.0 + r));
    }
}

#[test]
fn regular_graphs_have_radius_degree_minus_one() {
    for (name, h, expect) in regular_graphs().unwrap() {
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        let dense = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Dense)).unwrap();
        assert!((dense.rho - expect).abs() <= 1e-8, "{name}: {}", dense.rho);
        let it = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Iterative)).unwrap();
        assert_eq!(it.method, Method::Iterative);
        assert!((it.rho - expect).abs() <= 1e-4, "{name}: {}", it.rho);
    }
}

#[test]
fn iterative_radius_matches_dense_on_random_instances() {
    let mut rng = SeedSpec::new(101, 0).rng();
    for k in 0..100 {
        let (name, h) = random_instance(&mut rng, k, 20).unwrap();
        let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
        let d = spectral_radius(&op, &SpectralConfig::default().with_solver(Solver::Dense)).unwrap_or_else(|e| panic!("{name}: {e:?}")).rho;
        let cfg = SpectralConfig::default().with_solver(Solver::Iterative).with_seed(SeedSpec::new(k as u64, 0));
        let i = spectral_radius(&op, &cfg).unwrap().rho;
        assert!((d - i).abs() <= 1e-4 * d.max(1.0), "{name}: dense {d} iterative {i}");
    }
}

#[test]
fn lanczos_matches_dense_extremes() {
    let mut rng = SeedSpec::new(102, 0).rng();
    for k in 0..60 {
        let (name, h) = random_instance(&mut rng, k, 40).unwrap();
        let ev = if h.is_real() {
            hermitian_eigenvalues(&h.to_dense().real_part()).unwrap()
        } else {
            hermitian_eigenvalues(&h.to_dense()).unwrap()
        };
        let cfg = SpectralConfig::default().with_solver(Solver::Iterative);
        let ext = hermitian_extremes(&h, &cfg).unwrap();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        let scale = lo.abs().max(hi.abs()).max(1.0);
        assert!((ext.lambda_max - hi).abs() <= 1e-8 * scale, "{name}: {} vs {hi}", ext.lambda_max);
        assert!((ext.lambda_min - lo).abs() <= 1e-8 * scale, "{name}: {} vs {lo}", ext.lambda_min);
    }
}

#[test]
fn trace_moments_bound_the_radius() {
    let mut rng = SeedSpec::new(103, 0).rng();
    let cfg = SpectralConfig::default();
    for k in 0..30 {
        let (name, h) = random_instance(&mut rng, k, 16).unwrap();
        for (ell, m) in gelfand_margins(&h, 6, &cfg).unwrap().into_iter().enumerate() {
            assert!(m >= -1e-6, "{name} l={}: margin {m}", ell + 1);
        }
    }
}

#[test]
fn stochastic_trace_is_unbiased_on_the_triangle() {
    let h = SparseMatrix::from_edges(3, &[(0, 1), (1, 2), (0, 2)], 0.5f64.sqrt()).unwrap();
    let op = build_nb_operator(&h, NbMode::SupportRestricted).unwrap();
    let exact = trace_moment(&op, 1, TraceMode::ExactSmall).unwrap();
    assert!((exact.value - 6.0).abs() < 1e-12);
    let est = trace_moment(&op, 1, TraceMode::Stochastic { probes: 4000, seed: SeedSpec::new(5, 0) }).unwrap();
    assert!((est.value - 6.0).abs() <= 5.0 * est.std_error.max(1e-3), "{est:?}");
}
