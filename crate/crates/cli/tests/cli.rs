use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rqss(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqss"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RQSS_CACHE_DIR", dir.join("cache"))
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn output_headers_are_stable() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for args in [
        &["bogo-check"][..],
        &["invariants", "--grid", "0:0.5:0.25"],
        &["fidelity"],
        &["figure-data", "--grid", "0:1:0.5"],
    ] {
        let o = rqss(dir.path(), args);
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let expect: &[(&str, &str)] = &[
        ("bogo_check.csv", "set,u,j,order,residual"),
        ("invariants.csv", "u,k,T2,nbar,r"),
        (
            "fidelity_23.csv",
            "u,s,k,q0,p0,r,h,F_formula,F_sim,F_diff,F2_formula,F2_sim,F2_first_order,F2_diff,F2_derived,F2_limit",
        ),
        ("figure_T2.csv", "u,k1,k2,k3"),
        ("figure_nbar.csv", "u,k1,k2,k3"),
    ];
    for (file, header) in expect {
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), *header, "{file}");
    }
    for manifest in ["bogo_check", "invariants", "fidelity_23", "figure_data"] {
        let text = fs::read_to_string(out.join(format!("{manifest}.manifest.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "tool_version",
            "timestamp",
            "config",
            "h_ladder",
            "N_max",
            "outputs",
        ] {
            assert!(v.get(key).is_some(), "{manifest} lacks {key}");
        }
    }
    let (h, rows) = read_csv(&out.join("invariants.csv"));
    assert_eq!(rows.len(), 9);
    assert!(rows
        .iter()
        .filter(|r| r[0] == "0")
        .all(|r| r[3] == "degenerate"));
    assert!(column(&h, &rows[3..], "T2").iter().all(|&t| t > 0.0));
}

#[test]
fn exit_codes_distinguish_usage_errors_from_breaches() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&rqss(dir.path(), &["bogus"])), 1);
    assert_eq!(code(&rqss(dir.path(), &["fidelity", "--scenario", "7"])), 1);
    assert_eq!(
        code(&rqss(dir.path(), &["invariants", "--grid", "0:1.5:0.5"])),
        1
    );
    assert_eq!(code(&rqss(dir.path(), &["fidelity", "--h", "-1"])), 1);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "s = \"lots\"\n").unwrap();
    assert_eq!(
        code(&rqss(
            dir.path(),
            &["fidelity", "--config", bad.to_str().unwrap()]
        )),
        1
    );

    assert_eq!(
        code(&rqss(dir.path(), &["bogo-check", "--tol", "1e-12"])),
        2
    );
    assert_eq!(code(&rqss(dir.path(), &["fidelity", "--nmax", "8"])), 2);
    // the reference players-1-and-2 closed form does not match the simulation
    assert_eq!(
        code(&rqss(dir.path(), &["fidelity", "--scenario", "12"])),
        2
    );
    assert_eq!(
        code(&rqss(
            dir.path(),
            &["fidelity", "--scenario", "12", "--formula", "derived"]
        )),
        0
    );
}

#[test]
fn zero_duration_block_has_vanishing_residuals() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("u0.toml");
    fs::write(
        &cfg,
        "s = 1.0\nk = 1\nL = 1.0\nh = 0.01\nu = 0.0\nN_max = 20\n\
         [secret]\nkind = \"vacuum\"\n",
    )
    .unwrap();
    let o = rqss(
        dir.path(),
        &["bogo-check", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = read_csv(&dir.path().join("out/bogo_check.csv"));
    let bbb: Vec<_> = rows.iter().filter(|r| r[0] == "bbb").collect();
    assert_eq!(bbb.len(), 15);
    assert!(bbb.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn corrupted_cache_is_a_breach() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&rqss(dir.path(), &["bogo-check"])), 0);
    for entry in fs::read_dir(dir.path().join("cache")).unwrap() {
        fs::write(entry.unwrap().path(), "{ truncated").unwrap();
    }
    let o = rqss(dir.path(), &["fidelity"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupted"));
}

#[test]
fn calibration_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("out").join("calibration.json");
    assert_eq!(
        code(&rqss(dir.path(), &["calibrate", "--grid", "0:2:1"])),
        0
    );
    let first = fs::read(&path).unwrap();
    assert_eq!(
        code(&rqss(dir.path(), &["calibrate", "--grid", "0:2:1"])),
        0
    );
    assert_eq!(first, fs::read(&path).unwrap());

    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let f = |i: usize| v["entries"][i]["fidelity"].as_f64().unwrap();
    assert!((f(0) - 0.5).abs() < 1e-6);
    assert!((f(2) - 1.0 / (1.0 + (-2.0_f64).exp())).abs() < 1e-6);

    let o = rqss(dir.path(), &["calibrate", "--tol", "0"]);
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("out/calibration_landscape.json").exists());
}

#[test]
fn inertial_cavities_give_constant_fidelity() {
    let dir = TempDir::new().unwrap();
    let o = rqss(dir.path(), &["fidelity", "--h", "0", "--grid", "0:1:0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/fidelity_23.csv"));
    let f = column(&h, &rows, "F_sim");
    assert_eq!(f.len(), 5);
    let f0 = 1.0 / (1.0 + (-1.0_f64).exp());
    assert!(f.iter().all(|&x| (x - f0).abs() < 1e-12), "{f:?}");
}

#[test]
fn coherent_amplitude_does_not_change_fidelity() {
    let dir = TempDir::new().unwrap();
    let o = rqss(
        dir.path(),
        &["fidelity", "--sweep", "q0", "--grid", "-2:2:1"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/fidelity_23.csv"));
    let f2 = column(&h, &rows, "F2_first_order");
    assert_eq!(f2.len(), 5);
    assert!(
        f2.iter().all(|&x| (x - f2[0]).abs() < 1e-12 * f2[0]),
        "{f2:?}"
    );
    // beyond second order the amplitude enters, at the h⁴ level
    let f = column(&h, &rows, "F_sim");
    assert!(f.iter().all(|&x| (x - f[0]).abs() < 1e-8), "{f:?}");
}

#[test]
fn players_one_and_two_ignore_the_amplitude() {
    let dir = TempDir::new().unwrap();
    let o = rqss(
        dir.path(),
        &[
            "fidelity",
            "--scenario",
            "12",
            "--formula",
            "derived",
            "--sweep",
            "p0",
            "--grid",
            "-3:5:2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/fidelity_12.csv"));
    let f2 = column(&h, &rows, "F2_first_order");
    assert_eq!(f2.len(), 5);
    assert!(
        f2.iter().all(|&x| (x - f2[0]).abs() < 1e-10 * f2[0]),
        "{f2:?}"
    );
    // the channel attenuates the mean, so at finite h the amplitude enters at h⁴|α|²
    let f = column(&h, &rows, "F_sim");
    assert!(f.iter().all(|&x| (x - f[0]).abs() < 1e-7), "{f:?}");
}

#[test]
fn strong_squeezing_reaches_the_limit() {
    let dir = TempDir::new().unwrap();
    let o = rqss(
        dir.path(),
        &["fidelity", "--sweep", "s", "--grid", "20:20:1"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/fidelity_23.csv"));
    let f2 = column(&h, &rows, "F2_first_order")[0];
    let limit = column(&h, &rows, "F2_limit")[0];
    assert!((f2 - limit).abs() < 1e-3 * limit.abs(), "{f2} vs {limit}");
}
