use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use rqss_core::modes::{
    bbb_bogoliubov, bogoliubov_exact, bogoliubov_perturbative, load_or_fit, mode_sums, phase_u,
    tau_from_u, BogoliubovSet, CavityGeometry, PerturbativeOptions, TransitionFit,
};
use rqss_core::quadrature::QuadratureOptions;
use rqss_core::{Error, Execution};

fn fit() -> &'static TransitionFit {
    static FIT: OnceLock<TransitionFit> = OnceLock::new();
    FIT.get_or_init(|| bogoliubov_perturbative(1.0, 12, &PerturbativeOptions::default()).unwrap())
}

fn transition() -> BogoliubovSet {
    fit().bogoliubov_set()
}

#[test]
fn exact_coefficients_scale_with_parity() {
    // entries with i + j odd are O(h), with i + j even O(h²)
    let q = QuadratureOptions::default();
    let at = |h: f64| {
        bogoliubov_exact(
            &CavityGeometry::new(1.0, h, 4).unwrap(),
            &q,
            Execution::Sequential,
        )
        .unwrap()
    };
    let (a, b) = (at(2e-3), at(1e-3));
    for i in 0..4 {
        for j in 0..4 {
            let expect = if (i + j) % 2 == 1 { 2.0 } else { 4.0 };
            for (x, y) in [
                (
                    a.alpha_minus_identity[(i, j)].re,
                    b.alpha_minus_identity[(i, j)].re,
                ),
                (a.beta[(i, j)].re, b.beta[(i, j)].re),
            ] {
                if y.abs() > 1e-12 {
                    assert!(
                        (x / y - expect).abs() < 0.05,
                        "({i},{j}): ratio {} vs {expect}",
                        x / y
                    );
                }
            }
        }
    }
}

#[test]
fn sequential_and_parallel_oracles_agree() {
    let g = CavityGeometry::new(1.0, 5e-3, 6).unwrap();
    let q = QuadratureOptions::default();
    let s = bogoliubov_exact(&g, &q, Execution::Sequential).unwrap();
    let p = bogoliubov_exact(&g, &q, Execution::Parallel).unwrap();
    assert_eq!(s, p);
}

#[test]
fn zero_duration_block_is_identity() {
    let bbb = bbb_bogoliubov(&transition(), 0.0).unwrap();
    for order in 1..3 {
        assert!(bbb.alpha(order).iter().all(|z| z.norm() < 1e-14));
        assert!(bbb.beta(order).iter().all(|z| z.norm() < 1e-14));
    }
}

#[test]
fn blocks_are_periodic_in_u() {
    let t = transition();
    for u in [0.1, 0.37, 0.8] {
        let a = bbb_bogoliubov(&t, u).unwrap();
        let b = bbb_bogoliubov(&t, u + 1.0).unwrap();
        for o in 0..3 {
            assert!((a.symplectic(o) - b.symplectic(o)).amax() < 1e-10);
        }
    }
}

#[test]
fn mode_sums_have_small_tails_and_grow_with_k() {
    let bbb = bbb_bogoliubov(&transition(), 0.25).unwrap();
    let sums: Vec<_> = (1..=3)
        .map(|k| mode_sums(&bbb, k, Some(1e-4)).unwrap())
        .collect();
    assert!(sums.windows(2).all(|w| w[0].f_alpha < w[1].f_alpha));
    assert!(sums.iter().all(|s| s.f_alpha > s.f_beta && s.f_beta > 0.0));
    assert!(matches!(
        mode_sums(&bbb, 11, None),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        mode_sums(&bbb, 1, Some(1e-30)),
        Err(Error::TruncationTail { .. })
    ));
}

#[test]
fn duration_conversion_round_trips() {
    for h in [1e-3, 0.5, 1.5] {
        let tau = tau_from_u(h, 0.3, 2.0).unwrap();
        assert_abs_diff_eq!(phase_u(h, tau, 2.0).unwrap(), 0.3, epsilon = 1e-14);
    }
}

#[test]
fn cache_round_trip_and_invalidation() {
    let dir = tempfile::tempdir().unwrap();
    let opts = PerturbativeOptions::default();
    let first = load_or_fit(1.0, 4, &opts, Some(dir.path())).unwrap();
    let files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(files.len(), 1);
    let again = load_or_fit(1.0, 4, &opts, Some(dir.path())).unwrap();
    assert_eq!(first, again);

    // a table stored under the wrong key is refitted, not trusted
    let mut wrong = first.clone();
    wrong.n_max = 5;
    std::fs::write(&files[0], serde_json::to_vec(&wrong).unwrap()).unwrap();
    assert_eq!(load_or_fit(1.0, 4, &opts, Some(dir.path())).unwrap(), first);

    std::fs::write(&files[0], b"{ not json").unwrap();
    assert!(matches!(
        load_or_fit(1.0, 4, &opts, Some(dir.path())),
        Err(Error::CorruptCache { .. })
    ));
    let mut truncated = first.clone();
    truncated.a2 = truncated.a2.resize(3, 3, 0.0);
    std::fs::write(&files[0], serde_json::to_vec(&truncated).unwrap()).unwrap();
    assert!(matches!(
        load_or_fit(1.0, 4, &opts, Some(dir.path())),
        Err(Error::CorruptCache { .. })
    ));
}

#[test]
fn fit_rejection_is_reported() {
    let opts = PerturbativeOptions {
        ladder: [0.4, 0.2, 0.1],
        fit_tolerance: 1e-9,
        fit_floor: 0.0,
        ..Default::default()
    };
    assert!(matches!(
        bogoliubov_perturbative(1.0, 3, &opts),
        Err(Error::FitResidual { .. })
    ));
    let dup = PerturbativeOptions {
        ladder: [1e-2, 1e-2, 5e-3],
        ..Default::default()
    };
    assert!(bogoliubov_perturbative(1.0, 3, &dup).is_err());
}
