use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rqss_core::gaussian::{
    check_symplectic, fidelity_pure_mixed, GaussianState, Quadrature, SymplecticMap,
};

fn random_map(ops: &[(u8, f64)], modes: usize) -> SymplecticMap {
    ops.iter()
        .enumerate()
        .fold(SymplecticMap::identity(modes), |acc, (n, &(kind, x))| {
            let i = n % modes;
            let j = (n + 1) % modes;
            let next = match kind % 3 {
                0 => SymplecticMap::beam_splitter(modes, x.abs().fract(), i, j).unwrap(),
                1 => SymplecticMap::phase_rotation(modes, x, i).unwrap(),
                _ => SymplecticMap::squeezer(modes, x.clamp(-1.5, 1.5), i).unwrap(),
            };
            acc.then(&next).unwrap()
        })
}

fn purity_det(state: &GaussianState) -> f64 {
    state.covariance().determinant()
}

proptest! {
    #[test]
    fn composed_gates_stay_symplectic(ops in prop::collection::vec((0u8..3, -3.0f64..3.0), 1..12)) {
        let map = random_map(&ops, 3);
        prop_assert!(check_symplectic(map.matrix()).unwrap() < 1e-10);
    }

    #[test]
    fn gaussian_unitaries_keep_states_pure(
        ops in prop::collection::vec((0u8..3, -3.0f64..3.0), 1..10),
        s in 0.0f64..2.0,
        q0 in -5.0f64..5.0,
        p0 in -5.0f64..5.0,
    ) {
        let state = GaussianState::coherent(q0, p0).tensor(&GaussianState::two_mode_squeezed_vacuum(s).unwrap());
        let out = state.apply(&random_map(&ops, 3)).unwrap();
        prop_assert!(out.is_physical(1e-9));
        let det = purity_det(&out);
        prop_assert!((det - 1.0).abs() < 1e-7 * det.max(1.0));
    }

    #[test]
    fn partial_traces_are_physical(s in 0.0f64..3.0, t in 0.0f64..1.0, keep in 0usize..3) {
        let state = GaussianState::vacuum(1).unwrap().tensor(&GaussianState::two_mode_squeezed_vacuum(s).unwrap());
        let mixed = state.apply(&SymplecticMap::beam_splitter(3, t, 0, 1).unwrap()).unwrap();
        let reduced = mixed.partial_trace(&[keep]).unwrap();
        prop_assert!(reduced.is_physical(1e-9));
        prop_assert!(purity_det(&reduced) >= 1.0 - 1e-9);
    }

    #[test]
    fn feedforward_output_is_physical(s in 0.0f64..2.0, g in -4.0f64..4.0, p_quad in any::<bool>()) {
        let q = if p_quad { Quadrature::P } else { Quadrature::Q };
        let state = GaussianState::two_mode_squeezed_vacuum(s).unwrap();
        let out = state.homodyne_feedforward(0, 1, g, q).unwrap();
        prop_assert_eq!(out.modes(), 1);
        prop_assert!(out.is_physical(1e-9));
    }

    #[test]
    fn fidelity_is_bounded_and_symmetric_for_pure_states(
        q0 in -3.0f64..3.0, p0 in -3.0f64..3.0, r in -1.0f64..1.0,
    ) {
        let a = GaussianState::coherent(q0, p0);
        let b = GaussianState::squeezed_vacuum(r);
        let ab = fidelity_pure_mixed(&a, &b).unwrap();
        let ba = fidelity_pure_mixed(&b, &a).unwrap();
        prop_assert!(ab > 0.0 && ab <= 1.0 + 1e-12);
        prop_assert!((ab - ba).abs() < 1e-12);
    }
}

#[test]
fn coherent_overlap_matches_analytic_value() {
    // |<α|β>|² = exp(-|α-β|²) with α = (q + ip)/√2
    let a = GaussianState::coherent(1.0, -0.5);
    let b = GaussianState::coherent(-0.25, 2.0);
    let d2 = (1.25f64.powi(2) + 2.5f64.powi(2)) / 2.0;
    assert_abs_diff_eq!(
        fidelity_pure_mixed(&a, &b).unwrap(),
        (-d2).exp(),
        epsilon = 1e-14
    );
}

#[test]
fn fidelity_against_thermal_state() {
    // <0|ρ_th|0> = 1/(n̄ + 1)
    for nbar in [0.0, 0.3, 2.0] {
        let th = GaussianState::thermal(nbar).unwrap();
        let f = fidelity_pure_mixed(&GaussianState::vacuum(1).unwrap(), &th).unwrap();
        assert_abs_diff_eq!(f, 1.0 / (nbar + 1.0), epsilon = 1e-14);
    }
}

#[test]
fn rejects_unphysical_and_mismatched_input() {
    let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5]));
    assert!(GaussianState::new(DVector::zeros(2), bad).is_err());
    assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    let mixed = GaussianState::thermal(1.0).unwrap();
    assert!(fidelity_pure_mixed(&mixed, &GaussianState::vacuum(1).unwrap()).is_err());
    let stretched = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
    assert!(SymplecticMap::new(stretched, DVector::zeros(2), 1e-12).is_err());
}
