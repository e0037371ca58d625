//! On-disk JSON cache of fitted transition tables, keyed by `(L, ladder, n_max)`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{bogoliubov_perturbative, PerturbativeOptions, TransitionFit};
use crate::error::{Error, Result};

pub const CACHE_DIR_ENV: &str = "RQSS_CACHE_DIR";

fn cache_file(dir: &Path, length: f64, n_max: usize, ladder: &[f64; 3]) -> PathBuf {
    dir.join(format!(
        "transition_L{length:e}_N{n_max}_h{:e}_{:e}_{:e}.json",
        ladder[0], ladder[1], ladder[2]
    ))
}

/// Returns the cached table when one matches the key, otherwise fits and stores it.
///
/// `dir` falls back to the directory named by [`CACHE_DIR_ENV`]; with neither,
/// nothing is cached.
pub fn load_or_fit(
    length: f64,
    n_max: usize,
    options: &PerturbativeOptions,
    dir: Option<&Path>,
) -> Result<TransitionFit> {
    let env_dir = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
    let Some(dir) = dir.map(Path::to_path_buf).or(env_dir) else {
        return bogoliubov_perturbative(length, n_max, options);
    };
    let path = cache_file(&dir, length, n_max, &options.ladder);
    if path.exists() {
        let corrupt = |reason: String| Error::CorruptCache {
            path: path.clone(),
            reason,
        };
        let fit: TransitionFit =
            serde_json::from_slice(&fs::read(&path)?).map_err(|e| corrupt(e.to_string()))?;
        if fit.length == length && fit.n_max == n_max && fit.ladder == options.ladder {
            let tables = [&fit.a1, &fit.b1, &fit.a2, &fit.b2];
            if tables.iter().any(|m| m.shape() != (n_max, n_max)) {
                return Err(corrupt(format!("tables are not {n_max}x{n_max}")));
            }
            if tables.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
                return Err(corrupt("non-finite coefficient".into()));
            }
            return Ok(fit);
        }
    }
    let fit = bogoliubov_perturbative(length, n_max, options)?;
    fs::create_dir_all(&dir)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(&fit)?)?;
    fs::rename(&tmp, &path)?;
    Ok(fit)
}
