use approx::assert_relative_eq;
use gibbs_lines::bridge::{BridgeSampler, DiscreteIncrementLaw};
use gibbs_lines::ensemble::{boltzmann_log_weight, Grid, LineEnsemble, LocalHamiltonian, Shift};
use gibbs_lines::polymer::{tau_bruteforce, tau_log, Environment, BRUTEFORCE_LIMIT};
use gibbs_lines::seed::{derive_seed, rng_for};
use gibbs_lines::stats::{compensated_sum, logsumexp, total_variation};
use proptest::prelude::*;

fn probs(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_the_bottom_curve_never_raises_the_weight(
        top in prop::collection::vec(-2.0f64..2.0, 6),
        bottom in prop::collection::vec(-4.0f64..0.0, 6),
        site in 0usize..6,
        bump in 0.0f64..1.0,
        scale in 0.1f64..3.0,
    ) {
        let grid = Grid::new(0.0, 1.0, 6).unwrap();
        let h = LocalHamiltonian::exponential(scale, Shift::After).unwrap();
        let mut raised = bottom.clone();
        raised[site] += bump;
        let base = LineEnsemble::unbounded(grid, 1, vec![top.clone(), bottom]).unwrap();
        let up = LineEnsemble::unbounded(grid, 1, vec![top, raised]).unwrap();
        let w0 = boltzmann_log_weight(&base, &h, None).unwrap();
        let w1 = boltzmann_log_weight(&up, &h, None).unwrap();
        prop_assert!(w0 <= 0.0);
        prop_assert!(w1 <= w0 + 1e-12 * w0.abs().max(1.0));
    }

    #[test]
    fn bridge_paths_pin_endpoints_and_stay_on_the_lattice(
        p in probs(2..6),
        jmin in -2i64..1,
        steps in 1usize..8,
        start in -1.0f64..1.0,
        seed: u64,
    ) {
        let delta = 0.25;
        let law = DiscreteIncrementLaw::from_probs(delta, jmin, &p).unwrap();
        let lo = law.jmin() * steps as i64;
        let hi = law.jmax() * steps as i64;
        let target = (lo + hi) / 2;
        let end = start + target as f64 * delta;
        let s = BridgeSampler::new(law.clone(), steps, start, end).unwrap();
        prop_assert!(s.log_partition().is_finite());
        let path = s.sample(&mut rng_for(seed, "prop-bridge", 0));
        prop_assert_eq!(path.len(), steps + 1);
        prop_assert_eq!(path[0], start);
        prop_assert!((path[steps] - end).abs() < 1e-12);
        for w in path.windows(2) {
            let j = law.lattice_steps(w[1] - w[0]).expect("increment off the lattice");
            prop_assert!((law.jmin()..=law.jmax()).contains(&j));
        }
    }

    #[test]
    fn bridge_marginals_are_distributions(p in probs(2..5), steps in 2usize..7) {
        let law = DiscreteIncrementLaw::from_probs(0.5, -1, &p).unwrap();
        let s = BridgeSampler::new(law, steps, 0.0, 0.0).unwrap();
        for m in 0..=steps {
            let total: f64 = s.marginal(m).iter().map(|&(_, q)| q).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn law_is_normalized_and_reflection_flips_the_mean(p in probs(1..8), jmin in -4i64..4) {
        let law = DiscreteIncrementLaw::from_probs(0.1, jmin, &p).unwrap();
        assert_relative_eq!(law.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let r = law.reflected();
        assert_relative_eq!(r.mean(), -law.mean(), epsilon = 1e-12);
        assert_relative_eq!(r.variance(), law.variance(), epsilon = 1e-12, max_relative = 1e-10);
    }

    #[test]
    fn tilting_hits_the_requested_mean(p in probs(3..8), frac in 0.1f64..0.9) {
        let law = DiscreteIncrementLaw::from_probs(1.0, -2, &p).unwrap();
        let target = law.jmin() as f64 + frac * (law.jmax() - law.jmin()) as f64;
        let t = law.tilted_to_mean(target);
        prop_assert!((t.mean() - target).abs() < 1e-8, "mean {} target {}", t.mean(), target);
    }

    #[test]
    fn determinant_matches_enumeration(
        gamma in 0.5f64..10.0,
        n in 1usize..5,
        k in 1usize..4,
        seed: u64,
    ) {
        let env = Environment::sample(gamma, n, k, &mut rng_for(seed, "prop-env", 0)).unwrap();
        for l in 0..=k {
            let a = tau_log(&env, n, k, l).unwrap();
            let b = tau_bruteforce(&env, n, k, l, BRUTEFORCE_LIMIT).unwrap();
            if b == f64::NEG_INFINITY {
                prop_assert_eq!(a, f64::NEG_INFINITY);
            } else {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "l={}: {} vs {}", l, a, b);
            }
        }
    }

    #[test]
    fn unit_weights_count_paths(n in 1usize..6, k in 1usize..4) {
        // With every weight 1, τ for a single path counts lattice paths.
        let env = Environment::from_weights(1.0, &vec![vec![1.0; k]; n]).unwrap();
        let paths = (0..k - 1).fold(1.0, |acc, i| acc * (n - 1 + k - 1 - i) as f64 / (i + 1) as f64);
        assert_relative_eq!(tau_log(&env, n, k, 1).unwrap(), paths.ln(), epsilon = 1e-12);
    }

    #[test]
    fn compensated_sum_ignores_order(mut xs in prop::collection::vec(-1e6f64..1e6, 1..200), seed: u64) {
        let a = compensated_sum(xs.iter().copied());
        let mut rng = rng_for(seed, "prop-shuffle", 0);
        use rand::seq::SliceRandom;
        xs.shuffle(&mut rng);
        let b = compensated_sum(xs.iter().copied());
        let scale: f64 = xs.iter().map(|x| x.abs()).sum();
        prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * scale.max(1.0));
    }

    #[test]
    fn logsumexp_is_bracketed(xs in prop::collection::vec(-700.0f64..700.0, 1..50)) {
        let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s = logsumexp(&xs);
        prop_assert!(s >= m);
        prop_assert!(s <= m + (xs.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn total_variation_is_a_bounded_symmetric_distance(a in probs(5..6), b in probs(5..6)) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (p, q) = (norm(&a), norm(&b));
        let d = total_variation(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        assert_relative_eq!(d, total_variation(&q, &p), epsilon = 1e-15);
        prop_assert_eq!(total_variation(&p, &p), 0.0);
    }

    #[test]
    fn seeds_are_stable_and_stream_separated(root: u64, idx in 0u64..1000) {
        prop_assert_eq!(derive_seed(root, "a", idx), derive_seed(root, "a", idx));
        prop_assert_ne!(derive_seed(root, "a", idx), derive_seed(root, "b", idx));
        prop_assert_ne!(derive_seed(root, "a", idx), derive_seed(root, "a", idx + 1));
    }

    #[test]
    fn grid_sites_round_trip(origin in -5.0f64..5.0, mesh in 0.01f64..2.0, count in 1usize..200, i in 0usize..200) {
        let g = Grid::new(origin, mesh, count).unwrap();
        let i = i % count;
        prop_assert_eq!(g.index_of(g.site(i)), Some(i));
    }
}
