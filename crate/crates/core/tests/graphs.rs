mod common;

use common::*;
use mvlle::graphs::*;
use mvlle::Matrix;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lle_weights_match_constrained_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_matrix(10, 2, &mut rng);
    let g = knn(&x, 3).unwrap();
    let s = lle_weights(&x, &g, DEFAULT_EPS_REG).unwrap();
    for i in 0..10 {
        let oracle = constrained_ls_row(&x, i, g.neighbors(i), DEFAULT_EPS_REG);
        for (&(j, w), (&nj, &wo)) in s.row(i).iter().zip(g.neighbors(i).iter().zip(&oracle)) {
            assert_eq!(j, nj);
            assert!((w - wo).abs() < 1e-8, "row {i}: {w} vs {wo}");
        }
    }
}

#[test]
fn embedding_cost_is_psd_by_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = random_matrix(8, 3, &mut rng);
    let c = embedding_cost(&lle_weights(&x, &knn(&x, 3).unwrap(), DEFAULT_EPS_REG).unwrap());
    let (values, _) = jacobi_eigen(&c);
    assert!(values[0] >= -1e-10, "{}", values[0]);
    assert!((&c * DVector::from_element(8, 1.0)).amax() < 1e-10);
}

#[test]
fn pairwise_sum_is_twice_the_laplacian_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let raw = Matrix::from_fn(6, 6, |_, _| rng.random::<f64>());
    let g = (&raw + raw.transpose()) * 0.5;
    let u = random_matrix(2, 6, &mut rng);
    let mut pairwise = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            pairwise += g[(i, j)] * (u.column(i) - u.column(j)).norm_squared();
        }
    }
    let l = consensus_matrix(ConsensusKind::UnnormalizedLe, &g).unwrap();
    let form = quadratic_form(&u, &l).unwrap();
    assert!((2.0 * form - pairwise).abs() <= 1e-12 * pairwise.abs());
    assert!((form - trace_form(&u, &l)).abs() < 1e-12);
}

#[test]
fn normalized_laplacian_spectrum_and_null_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z = random_matrix(3, 9, &mut rng);
    let k = kernel_matrix(&z, &KernelSpec::default()).unwrap();
    let l = consensus_matrix(ConsensusKind::NormalizedLe, &k).unwrap();
    let root_deg = DVector::from_iterator(9, k.row_iter().map(|r| r.sum().sqrt()));
    assert!((&l * root_deg).amax() < 1e-10);
    let (values, _) = jacobi_eigen(&l);
    assert!(values[0] > -1e-10 && values[8] < 2.0 + 1e-10);
}

#[test]
fn hsic_centering_and_reconstruction_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let z = random_matrix(2, 7, &mut rng);
    let k = kernel_matrix(
        &z,
        &KernelSpec::Polynomial {
            degree: 2,
            offset: 1.0,
        },
    )
    .unwrap();
    let l = consensus_matrix(ConsensusKind::HsicCentered, &k).unwrap();
    assert!((&l * DVector::from_element(7, 1.0)).amax() < 1e-10);

    // ‖U − U Sᵀ‖²_F: each sample rebuilt from its neighbours
    let x = random_matrix(7, 2, &mut rng);
    let s = lle_weights(&x, &knn(&x, 3).unwrap(), DEFAULT_EPS_REG)
        .unwrap()
        .to_dense();
    let u = random_matrix(2, 7, &mut rng);
    let residual = (&u - &u * s.transpose()).norm_squared();
    let l = consensus_matrix(ConsensusKind::Reconstruction, &s).unwrap();
    assert!((quadratic_form(&u, &l).unwrap() - residual).abs() < 1e-10);
}

fn psd_min_eig(m: &Matrix) -> f64 {
    jacobi_eigen(m).0[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weight_rows_sum_to_one(seed in any::<u64>(), n in 5usize..25, d in 1usize..5, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(n, d, &mut rng);
        let s = lle_weights(&x, &knn(&x, k).unwrap(), DEFAULT_EPS_REG).unwrap();
        for i in 0..n {
            let sum: f64 = s.row(i).iter().map(|e| e.1).sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            prop_assert!(s.row(i).iter().all(|e| e.0 != i));
        }
    }

    #[test]
    fn unnormalized_laplacian_is_psd(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Matrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let a = (&raw + raw.transpose()) * 0.5;
        let l = consensus_matrix(ConsensusKind::UnnormalizedLe, &a).unwrap();
        prop_assert!((&l * DVector::from_element(n, 1.0)).amax() < 1e-10);
        prop_assert!(psd_min_eig(&l) >= -1e-10);
        let u = random_matrix(2, n, &mut rng);
        prop_assert!(quadratic_form(&u, &l).unwrap() >= -1e-8 * u.norm_squared());
    }

    #[test]
    fn consensus_outputs_are_symmetric(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = random_matrix(3, n, &mut rng);
        let k = kernel_matrix(&z, &KernelSpec::default()).unwrap();
        for kind in [ConsensusKind::NormalizedLe, ConsensusKind::UnnormalizedLe, ConsensusKind::HsicCentered, ConsensusKind::Reconstruction] {
            let l = consensus_matrix(kind, &k).unwrap();
            prop_assert_eq!(asymmetry(&l), 0.0);
        }
    }
}
