use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use rqss_core::channel::bbb_channel;
use rqss_core::modes::{bbb_bogoliubov, load_or_fit, mode_sums, BogoliubovSet};
use rqss_core::protocol::{
    calibrate_with_tolerance, calibration_landscape, figure_data, Calibration, FidelityReport,
    Figure, Protocol, ProtocolConfig, Scenario, SecretSpec, UGrid, CALIBRATION_TOL,
};
use rqss_core::Error as CoreError;

use crate::manifest::{write_json, RunManifest, TailBounds};
use crate::{Breach, Common, FormulaChoice, Sweep};

const IDENTITY_TOL: f64 = 1e-6;
/// Loose sanity bound on the cached table for commands other than `bogo-check`.
const CACHE_GUARD_TOL: f64 = 1e-4;
const FIDELITY_TOL: f64 = 1e-3;
/// F2 magnitudes below this are treated as vanishing in the relative check.
const F2_FLOOR: f64 = 1e-9;
const CHECKED_MODES: usize = 5;
const FIGURE_MODES: [usize; 3] = [1, 2, 3];

struct Run {
    config: ProtocolConfig,
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn start(command: &str, common: &Common) -> Result<Self> {
        let mut config = match &common.config {
            Some(path) => ProtocolConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ProtocolConfig::default(),
        };
        if let Some(h) = common.h {
            config.h = h;
        }
        if let Some(n) = common.nmax {
            config.n_max = n;
        }
        config.validate()?;
        fs::create_dir_all(&common.out)
            .with_context(|| format!("creating {}", common.out.display()))?;
        let manifest = RunManifest::new(command, common.config.as_deref(), &config);
        Ok(Self {
            config,
            out: common.out.clone(),
            manifest,
        })
    }

    fn transition(&self) -> Result<BogoliubovSet> {
        let c = &self.config;
        let fit = load_or_fit(c.length, c.n_max, &c.perturbative_options(), None)?;
        Ok(fit.bogoliubov_set())
    }

    /// Transition table that passed a basic identity check.
    fn checked_transition(&mut self) -> Result<BogoliubovSet> {
        let set = self.transition()?;
        let worst = worst_identity_residual(&set)?;
        self.manifest
            .tolerances
            .insert("cache_guard", CACHE_GUARD_TOL);
        if worst > CACHE_GUARD_TOL {
            return Err(Breach(format!(
                "transition table violates the Bogoliubov identity by {worst:e}; the cache may be corrupted"
            ))
            .into());
        }
        Ok(set)
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out.join(name);
        self.manifest.outputs.push(PathBuf::from(name));
        path
    }

    fn finish(self) -> Result<()> {
        let path = self.manifest.write(&self.out)?;
        for o in &self.manifest.outputs {
            println!("wrote {}", self.out.join(o).display());
        }
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn worst_identity_residual(set: &BogoliubovSet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 1..=CHECKED_MODES.min(set.n_max()) {
        for r in set.identity_residuals(j)? {
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

fn num(x: f64) -> String {
    let x = x + 0.0;
    if x == 0.0 || (1e-4..1e16).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))
}

pub fn bogo_check(common: &Common) -> Result<()> {
    let mut run = Run::start("bogo_check", common)?;
    let tol = common.tol.unwrap_or(IDENTITY_TOL);
    run.manifest.tolerances.insert("identity", tol);
    let transition = run.transition()?;
    let bbb = bbb_bogoliubov(&transition, run.config.u)?;
    let modes = CHECKED_MODES.min(transition.n_max());
    let k = run.config.k;
    if k + 3 <= bbb.n_max() {
        run.manifest
            .truncation_tail_bounds
            .absorb(&mode_sums(&bbb, k, None)?);
    }

    let path = run.output("bogo_check.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["set", "u", "j", "order", "residual"])?;
    let mut worst = [0.0_f64; 3];
    for (name, set) in [("transition", &transition), ("bbb", &bbb)] {
        for j in 1..=modes {
            for (order, r) in set.identity_residuals(j)?.iter().enumerate() {
                worst[order] = worst[order].max(r.abs());
                w.write_record([
                    name.to_owned(),
                    opt(set.u),
                    j.to_string(),
                    order.to_string(),
                    num(*r),
                ])?;
            }
        }
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Summary {
        manifest: String,
        modes_checked: usize,
        max_residual_by_order: [f64; 3],
        tolerance: f64,
        pass: bool,
    }
    let pass = worst.iter().all(|&r| r < tol);
    let summary = Summary {
        manifest: run.manifest.file_name(),
        modes_checked: modes,
        max_residual_by_order: worst,
        tolerance: tol,
        pass,
    };
    let json = run.output("bogo_check.json");
    write_json(&json, &summary)?;
    println!(
        "max residual by order: {:.3e} {:.3e} {:.3e} (tolerance {tol:e})",
        worst[0], worst[1], worst[2]
    );
    run.finish()?;
    if !pass {
        bail!(Breach(format!(
            "Bogoliubov identity residual {:e} exceeds {tol:e}",
            worst.iter().fold(0.0_f64, |a, &b| a.max(b))
        )));
    }
    Ok(())
}

pub fn invariants(common: &Common, grid: &UGrid, modes: &[usize]) -> Result<()> {
    let mut run = Run::start("invariants", common)?;
    let us = grid.points();
    if us.iter().any(|&u| !(0.0..1.0).contains(&u)) {
        bail!("invariants grid must lie within [0, 1)");
    }
    if modes.is_empty() || modes.iter().any(|&k| k == 0 || k + 3 > run.config.n_max) {
        bail!(
            "modes must lie in 1..={} for N_max = {}",
            run.config.n_max.saturating_sub(3),
            run.config.n_max
        );
    }
    let tol = common.tol.unwrap_or(run.config.tail_tolerance());
    run.manifest.tolerances.insert("tail", tol);
    run.manifest.arguments.insert(
        "grid",
        format!("{}:{}:{}", grid.start, grid.stop, grid.step),
    );
    let transition = run.checked_transition()?;

    struct Row {
        u: f64,
        k: usize,
        t2: f64,
        inv: Option<(f64, usize)>,
        tails: (f64, f64),
    }
    let rows = run
        .config
        .execution()
        .try_map(&us, |&u| -> Result<Vec<Row>, CoreError> {
            let bbb = bbb_bogoliubov(&transition, u)?;
            modes
                .iter()
                .map(|&k| {
                    let ch = bbb_channel(&bbb, k)?;
                    let sums = mode_sums(&bbb, k, None)?;
                    let inv = match ch.invariants(None, None) {
                        Ok(i) => Some((i.nbar, i.r)),
                        Err(CoreError::Degenerate(_)) => None,
                        Err(e) => return Err(e),
                    };
                    Ok(Row {
                        u,
                        k,
                        t2: ch.t2(),
                        inv,
                        tails: (sums.tail_alpha, sums.tail_beta),
                    })
                })
                .collect()
        })?;

    let path = run.output("invariants.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["u", "k", "T2", "nbar", "r"])?;
    let mut tails = TailBounds::default();
    let mut degenerate = 0;
    for row in rows.iter().flatten() {
        tails.alpha = tails.alpha.max(row.tails.0);
        tails.beta = tails.beta.max(row.tails.1);
        let (nbar, r) = match row.inv {
            Some((nbar, r)) => (num(nbar), r.to_string()),
            None => {
                degenerate += 1;
                ("degenerate".into(), "degenerate".into())
            }
        };
        w.write_record([num(row.u), row.k.to_string(), num(row.t2), nbar, r])?;
    }
    w.flush()?;
    run.manifest.truncation_tail_bounds = tails;
    if degenerate > 0 {
        println!("{degenerate} rows at integer u marked degenerate");
    }
    run.finish()?;
    if tails.alpha + tails.beta > tol {
        bail!(Breach(format!(
            "mode-sum truncation tail {:e} exceeds {tol:e}; increase N_max",
            tails.alpha + tails.beta
        )));
    }
    Ok(())
}

fn apply_sweep(base: &ProtocolConfig, sweep: Sweep, v: f64) -> Result<ProtocolConfig> {
    let mut cfg = base.clone();
    let (q0, p0) = match base.secret {
        SecretSpec::Coherent { q0, p0 } => (q0, p0),
        _ => (0.0, 0.0),
    };
    match sweep {
        Sweep::U => cfg.u = v,
        Sweep::S => cfg.s = v,
        Sweep::R => cfg.secret = SecretSpec::SqueezedVacuum { r: v },
        Sweep::K => {
            if v < 1.0 || v.fract() != 0.0 {
                bail!("k sweep values must be positive integers, got {v}");
            }
            cfg.k = v as usize;
        }
        Sweep::Q0 => cfg.secret = SecretSpec::Coherent { q0: v, p0 },
        Sweep::P0 => cfg.secret = SecretSpec::Coherent { q0, p0: v },
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sweep_value(cfg: &ProtocolConfig, sweep: Sweep) -> f64 {
    match (sweep, cfg.secret) {
        (Sweep::U, _) => cfg.u,
        (Sweep::S, _) => cfg.s,
        (Sweep::K, _) => cfg.k as f64,
        (Sweep::R, SecretSpec::SqueezedVacuum { r }) => r,
        (Sweep::Q0, SecretSpec::Coherent { q0, .. }) => q0,
        (Sweep::P0, SecretSpec::Coherent { p0, .. }) => p0,
        _ => 0.0,
    }
}

pub fn fidelity(
    common: &Common,
    scenario: Scenario,
    sweep: Sweep,
    grid: Option<&UGrid>,
    formula: FormulaChoice,
) -> Result<()> {
    let mut run = Run::start(&format!("fidelity_{}", scenario.label()), common)?;
    let tol = common.tol.unwrap_or(FIDELITY_TOL);
    run.manifest.tolerances.insert("f2_relative", tol);
    run.manifest
        .arguments
        .insert("sweep", format!("{sweep:?}").to_lowercase());
    run.manifest
        .arguments
        .insert("formula", format!("{formula:?}").to_lowercase());
    let values = match grid {
        Some(g) => {
            run.manifest
                .arguments
                .insert("grid", format!("{}:{}:{}", g.start, g.stop, g.step));
            g.points()
        }
        None => vec![sweep_value(&run.config, sweep)],
    };
    let configs = values
        .iter()
        .map(|&v| apply_sweep(&run.config, sweep, v))
        .collect::<Result<Vec<_>>>()?;
    let transition = run.checked_transition()?;

    let reports = run.config.execution().try_map(&configs, |cfg| {
        let p = Protocol::new(cfg, &transition)?;
        let report = p.report(scenario)?;
        Ok::<_, CoreError>((p, report))
    })?;

    let path = run.output(&format!("fidelity_{}.csv", scenario.label()));
    let mut w = csv_writer(&path)?;
    w.write_record([
        "u",
        "s",
        "k",
        "q0",
        "p0",
        "r",
        "h",
        "F_formula",
        "F_sim",
        "F_diff",
        "F2_formula",
        "F2_sim",
        "F2_first_order",
        "F2_diff",
        "F2_derived",
        "F2_limit",
    ])?;
    let mut worst: f64 = 0.0;
    let mut tails = TailBounds::default();
    for (cfg, (p, r)) in configs.iter().zip(&reports) {
        tails.absorb(&p.sums_u);
        tails.absorb(&p.sums_2u);
        let f2_ref = match (scenario, formula) {
            (Scenario::Players12, FormulaChoice::Derived) => r.f2_derived,
            _ => r.f2_formula,
        };
        let h = r.at_h.h;
        let f_formula = r.f0_formula.zip(f2_ref).map(|(f0, f2)| f0 - f2 * h * h);
        let f2_diff = f2_ref.map(|f2| r.f2_first_order - f2);
        if let Some(f2) = f2_ref {
            let rel = (r.f2_first_order - f2).abs() / f2.abs().max(F2_FLOOR);
            worst = worst.max(rel);
        }
        let (q0, p0, sq) = match cfg.secret {
            SecretSpec::Coherent { q0, p0 } => (Some(q0), Some(p0), None),
            SecretSpec::SqueezedVacuum { r } => (None, None, Some(r)),
            SecretSpec::Vacuum => (Some(0.0), Some(0.0), None),
        };
        let limit = (scenario == Scenario::Players23).then(|| p.closed_forms().f2_23_limit);
        w.write_record([
            num(cfg.u),
            num(cfg.s),
            cfg.k.to_string(),
            opt(q0),
            opt(p0),
            opt(sq),
            num(h),
            opt(f_formula),
            num(r.at_h.fidelity),
            opt(f_formula.map(|f| r.at_h.fidelity - f)),
            opt(f2_ref),
            num(r.f2_sim),
            num(r.f2_first_order),
            opt(f2_diff),
            opt(r.f2_derived),
            opt(limit),
        ])?;
    }
    w.flush()?;
    run.manifest.truncation_tail_bounds = tails;

    #[derive(Serialize)]
    struct ReportFile<'a> {
        manifest: String,
        scenario: Scenario,
        formula: String,
        tolerance: f64,
        max_relative_f2_error: f64,
        reports: Vec<&'a FidelityReport>,
    }
    let json = run.output(&format!("fidelity_{}.json", scenario.label()));
    write_json(
        &json,
        &ReportFile {
            manifest: run.manifest.file_name(),
            scenario,
            formula: format!("{formula:?}").to_lowercase(),
            tolerance: tol,
            max_relative_f2_error: worst,
            reports: reports.iter().map(|(_, r)| r).collect(),
        },
    )?;
    println!("max relative F2 deviation from the {formula:?} closed form: {worst:.3e}");
    run.finish()?;
    if worst > tol {
        bail!(Breach(format!(
            "simulated F2 differs from the closed form by {worst:e} (relative), above {tol:e}"
        )));
    }
    Ok(())
}

pub fn calibrate(common: &Common, grid: Option<&UGrid>) -> Result<()> {
    let mut run = Run::start("calibrate", common)?;
    let tol = common.tol.unwrap_or(CALIBRATION_TOL);
    run.manifest.tolerances.insert("calibration", tol);
    let ss = match grid {
        Some(g) => {
            run.manifest
                .arguments
                .insert("grid", format!("{}:{}:{}", g.start, g.stop, g.step));
            g.points()
        }
        None => vec![run.config.s],
    };
    if ss.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
        bail!("two-mode squeezing values must be finite and >= 0");
    }

    let mut entries: Vec<Calibration> = Vec::new();
    let mut failure = None;
    for &s in &ss {
        match calibrate_with_tolerance(s, tol) {
            Ok(c) => entries.push(c),
            Err(e @ CoreError::Calibration { .. }) => {
                failure = Some((s, e));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    if let Some((s, err)) = failure {
        let gains: Vec<f64> = (0..=32).map(|i| -6.0 + 0.25 * i as f64).collect();
        let squeezings: Vec<f64> = (0..=24).map(|i| -1.0 + 0.125 * i as f64).collect();
        let landscape = calibration_landscape(s, &gains, &squeezings)?;
        #[derive(Serialize)]
        struct Point {
            gain: f64,
            squeezing: f64,
            fidelity: f64,
        }
        #[derive(Serialize)]
        struct Landscape {
            manifest: String,
            s: f64,
            error: String,
            points: Vec<Point>,
        }
        let path = run.output("calibration_landscape.json");
        write_json(
            &path,
            &Landscape {
                manifest: run.manifest.file_name(),
                s,
                error: err.to_string(),
                points: landscape
                    .into_iter()
                    .map(|(gain, squeezing, fidelity)| Point {
                        gain,
                        squeezing,
                        fidelity,
                    })
                    .collect(),
            },
        )?;
        run.finish()?;
        return Err(err.into());
    }

    #[derive(Serialize)]
    struct CalibrationFile {
        manifest: String,
        tolerance: f64,
        entries: Vec<Calibration>,
    }
    let path = run.output("calibration.json");
    write_json(
        &path,
        &CalibrationFile {
            manifest: run.manifest.file_name(),
            tolerance: tol,
            entries,
        },
    )?;
    run.finish()
}

pub fn figure(common: &Common, grid: &UGrid, figure: Option<Figure>) -> Result<()> {
    let mut run = Run::start("figure_data", common)?;
    run.manifest.arguments.insert(
        "grid",
        format!("{}:{}:{}", grid.start, grid.stop, grid.step),
    );
    let tol = common.tol.unwrap_or(run.config.tail_tolerance());
    run.manifest.tolerances.insert("tail", tol);
    let transition = run.checked_transition()?;
    let us = grid.points();
    let figures = match figure {
        Some(f) => vec![f],
        None => vec![Figure::T2, Figure::Nbar, Figure::F2Squeezed, Figure::F223],
    };

    let tails = run
        .config
        .execution()
        .try_map(&us, |&u| -> Result<TailBounds, CoreError> {
            let mut t = TailBounds::default();
            for u in [u, 2.0 * u] {
                let bbb = bbb_bogoliubov(&transition, u)?;
                for k in FIGURE_MODES {
                    t.absorb(&mode_sums(&bbb, k, None)?);
                }
            }
            Ok(t)
        })?;
    let tails = tails.iter().fold(TailBounds::default(), |a, b| TailBounds {
        alpha: a.alpha.max(b.alpha),
        beta: a.beta.max(b.beta),
    });
    run.manifest.truncation_tail_bounds = tails;
    if tails.alpha + tails.beta > tol {
        bail!(Breach(format!(
            "mode-sum truncation tail {:e} exceeds {tol:e}; increase N_max",
            tails.alpha + tails.beta
        )));
    }

    for f in figures {
        let data = figure_data(f, &us, &run.config, &transition)?;
        let path = run.output(&format!("figure_{}.csv", f.name()));
        let mut w = csv_writer(&path)?;
        let header: Vec<&str> = std::iter::once("u")
            .chain(data.columns.iter().map(String::as_str))
            .collect();
        w.write_record(&header)?;
        for (u, row) in data.u.iter().zip(&data.values) {
            let record: Vec<String> = std::iter::once(num(*u))
                .chain(row.iter().map(|v| opt(*v)))
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    run.finish()
}
