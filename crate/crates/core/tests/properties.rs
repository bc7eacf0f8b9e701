#![allow(clippy::needless_range_loop)]

mod common;

use common::{rel_err, Reduced};
use disclination::analysis::{dist_so2, random_admissible, svd2};
use disclination::energy::{assemble_energy, w_density, MaterialLaw, Psi};
use disclination::experiments::{fold_lattice_coords, folded_init, prolong, LinearMode};
use disclination::lattice::{
    build_constraints, build_lattice, rotation, Configuration, DofLayout, LatticeSpec, Mat2,
    PHI_FIVE, PHI_SEVEN,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn phi_of(seven: bool) -> f64 {
    if seven {
        PHI_SEVEN
    } else {
        PHI_FIVE
    }
}

fn law_of(p: f64, smoothed: bool) -> MaterialLaw {
    let psi = if smoothed {
        Psi::smoothed_default()
    } else {
        Psi::Zero
    };
    MaterialLaw::new(p, psi).unwrap()
}

fn matrix() -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(-3.0f64..3.0).prop_map(|[a, b, c, d]| Mat2::new(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_differences(
        n in 1usize..6,
        seven: bool,
        p in 2.0f64..4.0,
        smoothed: bool,
        seed: u64,
    ) {
        let phi = phi_of(seven);
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let cmap = build_constraints(&graph, phi).unwrap();
        let layout = DofLayout::new(&graph, &cmap);
        let u = random_admissible(&graph, phi, 0.3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let x = layout.reduce(&u).unwrap();
        let red = Reduced { graph: &graph, cmap: &cmap, layout: &layout, law: law_of(p, smoothed) };
        let err = rel_err(&red.gradient(&x), &red.fd_gradient(&x, 1e-6 * graph.eps()));
        prop_assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn hessian_is_symmetric_and_matches_differences(n in 1usize..5, seven: bool, seed: u64) {
        let phi = phi_of(seven);
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let cmap = build_constraints(&graph, phi).unwrap();
        let layout = DofLayout::new(&graph, &cmap);
        let u = random_admissible(&graph, phi, 0.3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let x = layout.reduce(&u).unwrap();
        let red = Reduced { graph: &graph, cmap: &cmap, layout: &layout, law: law_of(3.0, true) };
        let h = red.hessian_dense(&x);
        for i in 0..h.len() {
            for j in 0..i {
                prop_assert!((h[i][j] - h[j][i]).abs() <= 1e-12 * (1.0 + h[i][j].abs()));
            }
        }
        let fd = red.fd_hessian(&x, 1e-6 * graph.eps());
        prop_assert!(common::rel_err_matrix(&h, &fd) < 1e-5);
    }

    #[test]
    fn density_is_nonnegative_and_rotation_invariant(
        a in matrix(),
        theta in 0.0f64..6.3,
        p in 2.0f64..5.0,
        smoothed: bool,
    ) {
        let law = law_of(p, smoothed);
        let w = w_density(&a, &law);
        prop_assert!(w >= 0.0);
        // the density takes the transposed deformation gradient
        let wr = w_density(&(a * rotation(theta)), &law);
        prop_assert!((w - wr).abs() <= 1e-12 * (1.0 + w));
    }

    #[test]
    fn energy_is_frame_indifferent(n in 1usize..8, seven: bool, theta in 0.0f64..6.3, seed: u64) {
        let phi = phi_of(seven);
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let law = law_of(2.0, true);
        let u = random_admissible(&graph, phi, 0.3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let e = assemble_energy(&graph, &u, &law).unwrap();
        let er = assemble_energy(&graph, &u.rotated(&rotation(theta)), &law).unwrap();
        prop_assert!((e - er).abs() <= 1e-12 * e);
    }

    #[test]
    fn svd_reconstructs(a in matrix()) {
        let s = svd2(&a);
        prop_assert!(s.sigma1 <= s.sigma2);
        prop_assert!((s.sigma1 * s.sigma2 - a.determinant().abs()).abs() <= 1e-12 * (1.0 + a.norm_squared()));
        prop_assert!((s.reconstruct() - a).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn distance_vanishes_on_rotations(theta in 0.0f64..6.3, p in 2.0f64..4.0) {
        prop_assert!(dist_so2(&rotation(theta), p) < 1e-20);
    }

    #[test]
    fn distance_is_invariant_under_rotations(a in matrix(), theta in 0.0f64..6.3) {
        let d = dist_so2(&a, 2.0);
        let r = rotation(theta);
        prop_assert!((dist_so2(&(r * a), 2.0) - d).abs() <= 1e-11 * (1.0 + d));
        prop_assert!((dist_so2(&(a * r), 2.0) - d).abs() <= 1e-11 * (1.0 + d));
    }

    #[test]
    fn prolongation_is_exact_on_linear_maps(k in 1u32..5, a in matrix()) {
        let coarse = build_lattice(&LatticeSpec::dyadic(PHI_FIVE, k).unwrap());
        let fine = build_lattice(&LatticeSpec::dyadic(PHI_FIVE, k + 1).unwrap());
        let u = prolong(&coarse, &Configuration::linear(&coarse, &a), &fine).unwrap();
        let exact = Configuration::linear(&fine, &a);
        for (p, q) in u.positions.iter().zip(&exact.positions) {
            prop_assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn prolongation_preserves_energy(k in 1u32..4, seven: bool, seed: u64) {
        let phi = phi_of(seven);
        let coarse = build_lattice(&LatticeSpec::dyadic(phi, k).unwrap());
        let fine = build_lattice(&LatticeSpec::dyadic(phi, k + 1).unwrap());
        let law = MaterialLaw::harmonic();
        let u = random_admissible(&coarse, phi, 0.2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let e = assemble_energy(&coarse, &u, &law).unwrap();
        let ef = assemble_energy(&fine, &prolong(&coarse, &u, &fine).unwrap(), &law).unwrap();
        prop_assert!((e - ef).abs() <= 1e-12 * e);
    }

    #[test]
    fn folded_configurations_are_admissible(n in 2usize..12, folds in 0usize..4, seven: bool) {
        prop_assume!(folds < n);
        let phi = phi_of(seven);
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let cmap = build_constraints(&graph, phi).unwrap();
        let u = folded_init(&graph, phi, folds, LinearMode::EdgePreserving).unwrap();
        prop_assert!(cmap.residual(&u) < 1e-13);
        let coords = fold_lattice_coords(&graph, folds).unwrap();
        for e in &graph.edges {
            let (a, b) = (coords[e.a], coords[e.b]);
            let d = (b.0 - a.0, b.1 - a.1);
            prop_assert!(matches!(d, (1, 0) | (-1, 0) | (0, 1) | (0, -1) | (1, -1) | (-1, 1)));
        }
    }

    #[test]
    fn random_configurations_are_admissible(n in 1usize..10, seven: bool, seed: u64) {
        let phi = phi_of(seven);
        let graph = build_lattice(&LatticeSpec::new(phi, n).unwrap());
        let cmap = build_constraints(&graph, phi).unwrap();
        let layout = DofLayout::new(&graph, &cmap);
        let u = random_admissible(&graph, phi, 0.3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(cmap.residual(&u) < 1e-13);
        let round = layout.expand(&layout.reduce(&u).unwrap()).unwrap();
        for (p, q) in u.positions.iter().zip(&round.positions) {
            prop_assert!((p - q).norm() < 1e-15);
        }
    }
}
