use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::ResultRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "arch,l_max,element,snr_db,trials,mean_se,std_se,ci95,residual,leakage,power_w";

/// Provenance written next to every results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub n_trials: usize,
    pub excluded_trials: usize,
    /// `(trial, reason)` for each excluded trial.
    pub failures: Vec<(usize, String)>,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(
        config: &ExperimentConfig,
        failures: Vec<(usize, String)>,
        wall_time_s: f64,
    ) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: config.master_seed,
            n_trials: config.n_trials,
            excluded_trials: failures.len(),
            failures,
            wall_time_s,
            config: config.clone(),
        }
    }
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

/// Writes the CSV to `path` and the manifest beside it.
pub fn write_results(
    rows: &[ResultRow],
    manifest: &Manifest,
    path: impl AsRef<Path>,
) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mpath = manifest_path(path);
    std::fs::write(&mpath, serde_json::to_string_pretty(manifest)?)?;
    Ok(mpath)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_config_str;

    fn config() -> ExperimentConfig {
        parse_config_str(
            "system.n_tx = 16\nsystem.n_rx = 1\nsystem.n_users = 2\nsystem.n_streams = 1\nsystem.n_rf_tx = 2\n\
             architectures = [\"daosa-ups:1\"]\nsnr_grid_db = [10.0]\nn_trials = 3\nmaster_seed = \"18446744073709551557\"\n",
        )
        .unwrap()
    }

    fn row(mean: f64) -> ResultRow {
        ResultRow {
            arch: "daosa".into(),
            l_max: Some(1),
            element: "ups".into(),
            snr_db: -10.0,
            trials: 300,
            mean_se: mean,
            std_se: 0.1 / 3.0,
            ci95: 1.96e-3,
            residual: 0.123456789012345,
            leakage: 1e-31,
            power_w: None,
        }
    }

    #[test]
    fn round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/results.csv");
        let rows = vec![row(std::f64::consts::PI), row(1.0 / 7.0)];
        let mpath = write_results(&rows, &Manifest::new(&config(), vec![], 0.5), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_results(&path).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert!(((a.mean_se - b.mean_se) / a.mean_se).abs() < 1e-12);
            assert_eq!(a, b);
        }
        assert_eq!(mpath, dir.path().join("out/results.manifest.json"));
    }

    #[test]
    fn manifest_keeps_the_seed_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mpath = write_results(
            &[row(1.0)],
            &Manifest::new(&config(), vec![(2, "boom".into())], 1.0),
            &path,
        )
        .unwrap();
        let json = std::fs::read_to_string(mpath).unwrap();
        assert!(json.contains("18446744073709551557"));
        let m: Manifest = serde_json::from_str(&json).unwrap();
        assert_eq!(m.excluded_trials, 1);
        assert_eq!(m.config, config());
    }

    #[test]
    fn empty_rows_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_results(
            &[],
            &Manifest::new(&config(), vec![], 0.0),
            dir.path().join("x.csv"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyResults));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "").unwrap();
        let err = write_results(
            &[row(1.0)],
            &Manifest::new(&config(), vec![], 0.0),
            blocker.join("x.csv"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io(_) | Error::Csv(_)), "{err}");
    }
}
