use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use rqss_core::modes::{bogoliubov_perturbative, BogoliubovSet, PerturbativeOptions};
use rqss_core::protocol::{
    calibrate, calibration_landscape, encode, figure_data, Figure, Overrides, Protocol,
    ProtocolConfig, Scenario, SecretSpec,
};
use rqss_core::Execution;

fn transition() -> &'static BogoliubovSet {
    static SET: OnceLock<BogoliubovSet> = OnceLock::new();
    SET.get_or_init(|| {
        bogoliubov_perturbative(1.0, 20, &PerturbativeOptions::default())
            .unwrap()
            .bogoliubov_set()
    })
}

fn protocol(cfg: &ProtocolConfig) -> Protocol {
    Protocol::new(cfg, transition()).unwrap()
}

#[test]
fn config_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("run.toml");
    std::fs::write(
        &toml_path,
        "s = 0.5\nk = 2\nL = 1.0\nh = 0.01\nu = 0.3\nN_max = 12\n\
         [secret]\nkind = \"squeezed_vacuum\"\nparams = { r = 0.125 }\n\
         [overrides]\nexecution = \"sequential\"\n",
    )
    .unwrap();
    let cfg = ProtocolConfig::load(&toml_path).unwrap();
    assert_eq!(cfg.secret, SecretSpec::SqueezedVacuum { r: 0.125 });
    assert_eq!(cfg.execution(), Execution::Sequential);

    let json_path = dir.path().join("run.json");
    std::fs::write(
        &json_path,
        r#"{"s": 1, "u": 0.25, "overrides": {"bogus": 1}}"#,
    )
    .unwrap();
    assert!(ProtocolConfig::load(&json_path).is_err());
    std::fs::write(&json_path, r#"{"s": 1, "u": -0.25}"#).unwrap();
    assert!(ProtocolConfig::load(&json_path).is_err());
    assert!(ProtocolConfig::load(&dir.path().join("run.yaml")).is_err());
}

#[test]
fn fidelity_follows_its_second_order_expansion() {
    let cfg = ProtocolConfig {
        s: 1.0,
        u: 0.3,
        k: 2,
        ..Default::default()
    };
    let p = protocol(&cfg);
    for scenario in [Scenario::Players12, Scenario::Players23] {
        let f0 = p.fidelity(scenario, &cfg.secret, 0.0).unwrap();
        let f2 = p.first_order_f2(scenario, &cfg.secret).unwrap();
        let h = 1e-4;
        let f = p.fidelity(scenario, &cfg.secret, h).unwrap();
        assert_abs_diff_eq!((f0 - f) / (h * h), f2, epsilon = 1e-3 * f2.abs());
    }
}

#[test]
fn players_1_and_3_behave_like_2_and_3() {
    let cfg = ProtocolConfig {
        u: 0.4,
        ..Default::default()
    };
    let p = protocol(&cfg);
    assert_eq!("13".parse::<Scenario>().unwrap(), Scenario::Players23);
    let enc = encode(&cfg.secret.state(), cfg.s).unwrap();
    let a = p.collaborate_23(&enc, 1e-4).unwrap();
    let b = p.collaborate_13(&enc, 1e-4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_carries_provenance_and_serializes() {
    let cfg = ProtocolConfig {
        u: 0.25,
        ..Default::default()
    };
    let r = protocol(&cfg).report(Scenario::Players23).unwrap();
    assert_eq!(r.provenance.h_ladder, cfg.ladder());
    assert!(r.decoder.is_some());
    assert!(r.f2_relative_error().unwrap() < 1e-6);
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["scenario"], "23");
    assert_eq!(v["ladder"].as_array().unwrap().len(), 3);
    assert!(v["provenance"]["formula"].as_str().unwrap().contains("F0"));
}

#[test]
fn inertial_phase_override_changes_the_result() {
    let base = ProtocolConfig {
        u: 0.2,
        ..Default::default()
    };
    let tweaked = ProtocolConfig {
        overrides: Overrides {
            inertial_phase: Some(0.3),
            ..Default::default()
        },
        ..base.clone()
    };
    let secret = SecretSpec::SqueezedVacuum { r: 0.25 };
    let a = protocol(&base)
        .first_order_f2(Scenario::Players12, &secret)
        .unwrap();
    let b = protocol(&tweaked)
        .first_order_f2(Scenario::Players12, &secret)
        .unwrap();
    assert!((a - b).abs() > 1e-6);
}

#[test]
fn explicit_decoder_skips_calibration() {
    let cfg = ProtocolConfig {
        overrides: Overrides {
            decoder_gain: Some(-1.0),
            decoder_squeezing: Some(0.0),
            ..Default::default()
        },
        ..Default::default()
    };
    let p = protocol(&cfg);
    assert!(p.calibration.is_none());
    let f = p.fidelity(Scenario::Players23, &cfg.secret, 0.0).unwrap();
    assert!((f - calibrate(cfg.s).unwrap().fidelity).abs() > 1e-3);
}

#[test]
fn calibration_landscape_peaks_near_the_solution() {
    let c = calibrate(1.0).unwrap();
    let grid =
        calibration_landscape(1.0, &[c.gain - 0.5, c.gain, c.gain + 0.5], &[c.squeezing]).unwrap();
    assert_eq!(grid.len(), 3);
    assert_abs_diff_eq!(grid[1].2, c.fidelity, epsilon = 1e-14);
}

#[test]
fn figure_data_is_independent_of_execution_mode() {
    let grid: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
    let seq = ProtocolConfig {
        overrides: Overrides {
            execution: Some(Execution::Sequential),
            ..Default::default()
        },
        ..Default::default()
    };
    let par = ProtocolConfig {
        overrides: Overrides {
            execution: Some(Execution::Parallel),
            ..Default::default()
        },
        ..Default::default()
    };
    for fig in [Figure::T2, Figure::Nbar, Figure::F2Squeezed, Figure::F223] {
        let a = figure_data(fig, &grid, &seq, transition()).unwrap();
        let b = figure_data(fig, &grid, &par, transition()).unwrap();
        assert_eq!(a, b);
    }
    let nbar = figure_data(Figure::Nbar, &grid, &seq, transition()).unwrap();
    assert!(nbar.values[0].iter().all(Option::is_none));
    assert!(nbar.values[1].iter().all(Option::is_some));
}
