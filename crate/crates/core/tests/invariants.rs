use proptest::prelude::*;

use qds_core::davies::{build_davies, dissipator_commutation_defect, SpectralFunction};
use qds_core::linalg::{c, eigvalsh};
use qds_core::operators::{is_completely_positive, kraus_from_choi, vectorize, ChoiMatrix, DensityMatrix, Operator, Superoperator};
use qds_core::propagation::{evolve_action, evolve_exact};
use qds_core::random::{random_density_matrix, random_gkls, random_hermitian, random_kraus_channel, random_operator, seeded};
use qds_core::thermo::{relative_entropy, von_neumann_entropy};

fn cases() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases())]

    #[test]
    fn semigroup_maps_are_cptp(seed in any::<u64>(), d in 2usize..=4, m in 1usize..=3, t in 0.01f64..8.0) {
        let g = random_gkls(&mut seeded(seed), d, m, 1.0);
        let map = g.superoperator().exp(t);
        prop_assert!(map.trace_preservation_defect() < 1e-10);
        let report = is_completely_positive(&map, 1e-9);
        prop_assert!(report.completely_positive, "λ_min = {}", report.min_eigenvalue);
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), d in 2usize..=3, t in 0.0f64..3.0, s in 0.0f64..3.0) {
        let l = random_gkls(&mut seeded(seed), d, 2, 1.0).superoperator();
        let joint = l.exp(t + s);
        let split = l.exp(t).compose(&l.exp(s));
        prop_assert!(joint.max_abs_diff(&split) < 1e-10);
    }

    #[test]
    fn evolved_states_stay_physical(seed in any::<u64>(), d in 2usize..=5, t in 0.0f64..6.0) {
        let mut r = seeded(seed);
        let g = random_gkls(&mut r, d, 2, 0.8);
        let rho = random_density_matrix(&mut r, d);
        let a = evolve_exact(&g.superoperator(), t, &rho).unwrap();
        let b = evolve_action(&g, t, &rho).unwrap();
        prop_assert!(a.op().max_abs_diff(b.op()) < 1e-10);
        prop_assert!((a.op().trace().re - 1.0).abs() < 1e-10);
        prop_assert!(a.op().hermiticity_defect() < 1e-12);
        prop_assert!(a.min_eigenvalue() > -1e-10);
    }

    #[test]
    fn left_right_map_is_kron(seed in any::<u64>(), d in 1usize..=4) {
        let mut r = seeded(seed);
        let (a, b, x) = (random_operator(&mut r, d), random_operator(&mut r, d), random_operator(&mut r, d));
        let s = Superoperator::from_left_right(&a, &b).unwrap();
        let direct = &(&a * &x) * &b;
        prop_assert!((s.matrix() * vectorize(&x) - vectorize(&direct)).norm() < 1e-12);
    }

    #[test]
    fn kraus_round_trip(seed in any::<u64>(), d in 2usize..=4, k in 1usize..=4) {
        let channel = random_kraus_channel(&mut seeded(seed), d, k);
        let s = channel.to_superoperator();
        let back = kraus_from_choi(&ChoiMatrix::of(&s), 1e-10).unwrap();
        prop_assert!(back.len() <= d * d);
        prop_assert!(back.to_superoperator().max_abs_diff(&s) < 1e-10);
        prop_assert!(back.trace_preservation_defect() < 1e-10);
    }

    #[test]
    fn relative_entropy_contracts(seed in any::<u64>(), d in 2usize..=4, k in 1usize..=3) {
        let mut r = seeded(seed);
        let channel = random_kraus_channel(&mut r, d, k).to_superoperator();
        let rho = random_density_matrix(&mut r, d);
        let sigma = random_density_matrix(&mut r, d);
        let before = relative_entropy(&rho, &sigma).unwrap();
        let after = relative_entropy(
            &DensityMatrix::new_unchecked(channel.apply(rho.op())),
            &DensityMatrix::new_unchecked(channel.apply(sigma.op())),
        ).unwrap();
        prop_assert!(after <= before + 1e-9, "{after} > {before}");
        prop_assert!(before >= -1e-12);
    }

    #[test]
    fn entropy_is_bounded(seed in any::<u64>(), d in 1usize..=6) {
        let rho = random_density_matrix(&mut seeded(seed), d);
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= 0.0 && s <= (d as f64).ln() + 1e-12);
    }

    #[test]
    fn davies_generators_fix_gibbs(
        seed in any::<u64>(),
        e1 in 0.2f64..2.0,
        e2 in 0.2f64..2.0,
        beta in 0.1f64..3.0,
        lambda in 0.05f64..1.0,
    ) {
        let h = Operator::from_real_diagonal(&[0.0, e1, e1 + e2 + 0.1]);
        let s = random_hermitian(&mut seeded(seed), 3);
        let r = SpectralFunction::ohmic_cubed_exp(1.0, 3.0, Some(beta)).unwrap();
        let g = build_davies(&h, &[s], &r, lambda).unwrap();
        let gibbs = DensityMatrix::gibbs(&h, beta).unwrap();
        prop_assert!(g.apply(gibbs.op()).trace_norm() < 1e-10);
        prop_assert!(dissipator_commutation_defect(&g) < 1e-10);
        let choi = eigvalsh(ChoiMatrix::of(&g.superoperator().exp(1.0)).matrix());
        prop_assert!(choi[0] > -1e-10);
    }
}

#[test]
fn transposition_fails_cp_but_is_positive() {
    let t = Superoperator::transposition(3);
    assert!(!is_completely_positive(&t, 1e-10).completely_positive);
    let mut r = seeded(9);
    for _ in 0..20 {
        let rho = random_density_matrix(&mut r, 3);
        let img = DensityMatrix::new_unchecked(t.apply(rho.op()));
        assert!(img.min_eigenvalue() > -1e-12);
    }
    assert_eq!(t.apply(&Operator::unit(3, 0, 1)).get(1, 0), c(1.0));
}
