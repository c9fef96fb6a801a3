use copack::copositivity::is_copositive_exact;
use copack::cpdual::{dual_objective, feasibility_check, is_cp_extreme, WeightedConfig};
use copack::graphs::{alpha, corpus, dkp_matrix, dkp_threshold, weighted_dkp_threshold, Graph, WeightFn};
use copack::SymmatN;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-3;

fn small_graph(seed: u64, n: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rng.random_range(0.1..0.9);
    Graph::random_gnp(n, p, &mut rng)
}

#[test]
fn threshold_separates_copositive_region() {
    for (name, g) in corpus::graphs() {
        let t = dkp_threshold(&g, TOL).unwrap();
        assert!(is_copositive_exact(&dkp_matrix(&g, t)).unwrap().is_copositive(), "{name} at {t}");
        let below = t - 2.0 * TOL;
        if below > 0.0 {
            assert!(!is_copositive_exact(&dkp_matrix(&g, below)).unwrap().is_copositive(), "{name} at {below}");
        }
    }
}

#[test]
fn copositive_pairs_nonnegatively_with_cp_rank_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (_, g) in corpus::graphs() {
        let t = dkp_threshold(&g, TOL).unwrap();
        let k = dkp_matrix(&g, t);
        for _ in 0..20 {
            let a: Vec<f64> = (0..g.n()).map(|_| rng.random_range(0.0..1.0)).collect();
            let m = SymmatN::outer(&a).unwrap();
            assert!(k.frobenius_dot(&m) >= -1e-9 * k.max_abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adding_an_edge_never_raises_threshold(seed in any::<u64>(), n in 2usize..8) {
        let mut g = small_graph(seed, n);
        let before = dkp_threshold(&g, TOL).unwrap();
        let missing: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.adjacent(i, j))
            .collect();
        if let Some(&(i, j)) = missing.first() {
            g.add_edge(i, j).unwrap();
            let after = dkp_threshold(&g, TOL).unwrap();
            prop_assert!(after <= before + TOL, "{} > {}", after, before);
        }
    }

    #[test]
    fn unit_weights_match_unweighted(seed in any::<u64>(), n in 1usize..8) {
        let g = small_graph(seed, n);
        let plain = dkp_threshold(&g, TOL).unwrap();
        let weighted = weighted_dkp_threshold(&g, &WeightFn::ones(n), TOL).unwrap();
        prop_assert!((plain - weighted).abs() <= 2.0 * TOL);
        prop_assert!((plain - alpha(&g).unwrap() as f64).abs() <= 2.0 * TOL);
    }

    #[test]
    fn cauchy_schwarz_chain(seed in any::<u64>(), n in 1usize..12) {
        let g = small_graph(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut stable: Vec<usize> = Vec::new();
        for v in order {
            if stable.iter().all(|&u| !g.adjacent(u, v)) {
                stable.push(v);
            }
        }
        let raw: Vec<f64> = stable.iter().map(|_| rng.random_range(0.01..1.0)).collect();
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        let c = WeightedConfig::new(stable.clone(), raw.iter().map(|a| a / norm).collect()).unwrap();
        prop_assert!(feasibility_check(&c, &g));
        let size = stable.len() as f64;
        let alpha = alpha(&g).unwrap() as f64;
        prop_assert!(dual_objective(&c).total_mass <= size + 1e-12);
        prop_assert!(size <= alpha);
        let uniform = dual_objective(&WeightedConfig::uniform(&stable));
        prop_assert!((uniform.total_mass - size).abs() <= 1e-12 * size);
    }

    #[test]
    fn rank_one_nonnegative_is_extreme(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        prop_assume!(a.iter().any(|x| *x > 1e-3));
        prop_assert!(is_cp_extreme(&SymmatN::outer(&a).unwrap()));
    }

    #[test]
    fn sum_of_two_rays_is_not_extreme(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let (na, nb) = (a.iter().map(|x| x * x).sum::<f64>().sqrt(), b.iter().map(|x| x * x).sum::<f64>().sqrt());
        let cos = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
        prop_assume!(cos < 1.0 - 1e-6);
        let m = SymmatN::outer(&a).unwrap().add(&SymmatN::outer(&b).unwrap());
        prop_assert!(!is_cp_extreme(&m));
    }
}
