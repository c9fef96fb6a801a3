use copack::copositivity::{is_copositive_exact, refute_copositive_grid, separate_sphere, Verdict};
use copack::kernels::{config_energy, PolyKernel};
use copack::{eig_sym, SymmatN};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn horn() -> SymmatN {
    let rows = vec![
        vec![1.0, -1.0, 1.0, 1.0, -1.0],
        vec![-1.0, 1.0, -1.0, 1.0, 1.0],
        vec![1.0, -1.0, 1.0, -1.0, 1.0],
        vec![1.0, 1.0, -1.0, 1.0, -1.0],
        vec![-1.0, 1.0, 1.0, -1.0, 1.0],
    ];
    SymmatN::from_rows(&rows, 0.0).unwrap()
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymmatN {
    let rank = rng.random_range(1..=n);
    let b: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    SymmatN::from_fn(n, |i, j| b.iter().map(|r| r[i] * r[j]).sum()).unwrap()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for u in &q {
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.iter().map(|x| x / norm).collect());
        }
    }
    q
}

#[test]
fn horn_matrix() {
    let h = horn();
    let r = is_copositive_exact(&h).unwrap();
    assert_eq!(r.verdict, Verdict::Copositive);
    assert!(!r.heuristic);
    assert!(eig_sym(&h).unwrap().min_eigenvalue() < -0.1);
    assert!(!h.is_entrywise_nonnegative(0.0));
    assert!(refute_copositive_grid(&h, 200).unwrap().is_copositive());
}

#[test]
fn horn_minus_diagonal_is_refuted() {
    let h = horn().add_diagonal(&[-0.01; 5]);
    let r = is_copositive_exact(&h).unwrap();
    assert_eq!(r.verdict, Verdict::NotCopositive);
    let w = r.witness.unwrap();
    assert!(w.iter().all(|x| *x >= 0.0));
    assert!(h.quad_form(&w) < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psd_is_copositive(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_psd(&mut rng, n);
        prop_assert!(is_copositive_exact(&k).unwrap().is_copositive());
    }

    #[test]
    fn nonnegative_is_copositive(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = SymmatN::from_fn(n, |_, _| rng.random_range(0.0..2.0)).unwrap();
        prop_assert!(is_copositive_exact(&k).unwrap().is_copositive());
    }

    #[test]
    fn nonnegative_diagonal_preserves_copositivity(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psd = random_psd(&mut rng, n);
        let nn = SymmatN::from_fn(n, |_, _| rng.random_range(0.0..1.0)).unwrap();
        let k = psd.add(&nn);
        prop_assert!(is_copositive_exact(&k).unwrap().is_copositive());
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        prop_assert!(is_copositive_exact(&k.add_diagonal(&d)).unwrap().is_copositive());
    }

    #[test]
    fn exact_and_grid_never_contradict(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = SymmatN::from_fn(5, |i, j| if i == j { rng.random_range(0.0..1.0) } else { rng.random_range(-0.6..1.0) }).unwrap();
        let exact = is_copositive_exact(&k).unwrap();
        let grid = refute_copositive_grid(&k, 50).unwrap();
        if !grid.is_copositive() {
            prop_assert!(!exact.is_copositive());
            let w = grid.witness.unwrap();
            prop_assert!(k.quad_form(&w) < 0.0);
        }
        if let Some(w) = exact.witness {
            prop_assert!(w.iter().all(|x| *x >= 0.0) && k.quad_form(&w) < 0.0);
        }
    }

    #[test]
    fn cut_energy_is_rotation_invariant(seed in any::<u64>(), dim in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let kernel = PolyKernel::new(dim, coeffs).unwrap();
        if let Some(cut) = separate_sphere(&kernel, 4, 4, seed).unwrap() {
            let e = config_energy(&kernel, &cut.config).unwrap();
            prop_assert!((e - cut.energy).abs() <= 1e-9 * (1.0 + e.abs()));
            let q = random_orthogonal(&mut rng, dim);
            let rotated = cut.config.transformed(&q).unwrap();
            let er = config_energy(&kernel, &rotated).unwrap();
            prop_assert!((e - er).abs() <= 1e-9 * (1.0 + e.abs()), "{} vs {}", e, er);
        }
    }
}
