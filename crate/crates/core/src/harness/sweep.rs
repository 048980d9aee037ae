use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::seed::{derive_seed, trial_seed};
use super::stats::RunningStats;
use crate::admm::{design_hybrid, AdmmParams};
use crate::baseline::{
    bd_fully_digital_precoder, fully_digital_combiner, DigitalPrecoder, Precoder,
};
use crate::channel::{draw_channel, ChannelRealization};
use crate::error::{Error, Result};
use crate::evaluation::{residual_metrics, spectral_efficiency, EvalParams};
use crate::exec::{run_indexed, Execution};
use crate::power::{fully_digital_power, power_consumption};
use crate::projections::Architecture;

/// One curve of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Series {
    Hybrid { arch: Architecture, mu0: bool },
    Digital,
}

impl Series {
    /// Unique label: the architecture label, with `-mu0` for the ablation.
    pub fn label(&self) -> String {
        match self {
            Series::Hybrid { arch, mu0: false } => arch.to_string(),
            Series::Hybrid { arch, mu0: true } => format!("{arch}-mu0"),
            Series::Digital => "digital".into(),
        }
    }

    fn columns(&self) -> (String, Option<usize>, String) {
        match self {
            Series::Hybrid { arch, mu0 } => {
                let mut name = arch.connectivity.label().to_string();
                if let Some(n) = arch.n_subarrays {
                    name.push_str(&format!("@{n}"));
                }
                if *mu0 {
                    name.push_str("-mu0");
                }
                (name, arch.l_max(), arch.element.to_string())
            }
            Series::Digital => ("digital".into(), None, "none".into()),
        }
    }
}

/// One CSV line: a series at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub arch: String,
    pub l_max: Option<usize>,
    pub element: String,
    pub snr_db: f64,
    pub trials: u64,
    pub mean_se: f64,
    pub std_se: f64,
    pub ci95: f64,
    /// Mean relative approximation error to the fully digital target.
    pub residual: f64,
    /// Mean inter-user leakage `sum_u ||H_bar_u F_u||^2`, averaged over subcarriers.
    pub leakage: f64,
    /// Empty when the power model cannot price the architecture.
    pub power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutcome {
    /// Subcarrier-averaged sum SE per SNR point.
    pub se: Vec<f64>,
    pub residual: f64,
    pub leakage: f64,
}

/// Everything measured in one trial, indexed like `SweepResult::series`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub series: Vec<SeriesOutcome>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub series: Vec<Series>,
    /// Series-major, SNR-minor.
    pub rows: Vec<ResultRow>,
    /// Per-trial outcomes; `None` for excluded trials.
    pub trials: Vec<Option<TrialOutcome>>,
    /// `(trial, reason)` for every excluded trial.
    pub failures: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn excluded(&self) -> usize {
        self.failures.len()
    }

    pub fn series_index(&self, label: &str) -> Option<usize> {
        self.series.iter().position(|s| s.label() == label)
    }

    /// Rows of the series with the given label, one per SNR point.
    pub fn rows_for(&self, label: &str) -> Option<&[ResultRow]> {
        let i = self.series_index(label)?;
        let n = self.rows.len() / self.series.len();
        Some(&self.rows[i * n..(i + 1) * n])
    }
}

fn series_of(cfg: &ExperimentConfig) -> Vec<Series> {
    let mut out = Vec::new();
    for &arch in &cfg.architectures {
        out.push(Series::Hybrid { arch, mu0: false });
        if cfg.baselines.admm_mu0 {
            out.push(Series::Hybrid { arch, mu0: true });
        }
    }
    if cfg.baselines.fully_digital {
        out.push(Series::Digital);
    }
    out
}

fn evaluate<P: Precoder>(
    precoder: &P,
    f_opt: &DigitalPrecoder,
    channels: &ChannelRealization,
    cfg: &ExperimentConfig,
) -> Result<SeriesOutcome> {
    let combiners = fully_digital_combiner(channels, precoder, &cfg.system);
    let mut se = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let rate = spectral_efficiency(
            channels,
            precoder,
            &combiners,
            &EvalParams::from_snr_db(snr),
        )?
        .mean_sum_rate;
        if !rate.is_finite() {
            return Err(Error::Numerical(format!("non-finite SE at {snr} dB")));
        }
        se.push(rate);
    }
    let res = residual_metrics(f_opt, precoder, channels);
    Ok(SeriesOutcome {
        se,
        residual: res.approximation,
        leakage: res.total_leakage() / channels.n_carriers() as f64,
    })
}

/// Runs trial `t` for the given series. All hybrid designs in a trial share
/// the channel draw and the initialization seed.
pub fn run_trial(cfg: &ExperimentConfig, series: &[Series], t: u64) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.master_seed, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = draw_channel(&cfg.system, &cfg.channel, &mut rng)?;
    let f_opt = bd_fully_digital_precoder(&channels, &cfg.system)?;
    let init_seed = derive_seed(seed, 0);
    let outcomes = series
        .iter()
        .map(|s| match s {
            Series::Digital => evaluate(&f_opt, &f_opt, &channels, cfg),
            Series::Hybrid { arch, mu0 } => {
                let prm = AdmmParams {
                    mu: if *mu0 { 0.0 } else { cfg.admm.mu },
                    ..cfg.admm
                };
                let mut init = ChaCha8Rng::seed_from_u64(init_seed);
                let design = design_hybrid(&cfg.system, &f_opt, &channels, arch, &prm, &mut init)?;
                evaluate(&design.precoder, &f_opt, &channels, cfg)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialOutcome {
        seed,
        series: outcomes,
    })
}

/// Runs every trial and aggregates in trial order. The output does not depend
/// on `exec`.
pub fn run_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let series = series_of(cfg);
    let results = run_indexed(exec, cfg.n_trials, |t| run_trial(cfg, &series, t as u64));

    let mut failures = Vec::new();
    let trials: Vec<Option<TrialOutcome>> = results
        .into_iter()
        .enumerate()
        .map(|(t, r)| r.map_err(|e| failures.push((t, e.to_string()))).ok())
        .collect();
    if failures.len() == cfg.n_trials {
        return Err(Error::Numerical(format!(
            "all {} trials failed; first: {}",
            cfg.n_trials, failures[0].1
        )));
    }

    let n_snr = cfg.snr_grid_db.len();
    let mut rows = Vec::with_capacity(series.len() * n_snr);
    for (i, s) in series.iter().enumerate() {
        let mut se = vec![RunningStats::new(); n_snr];
        let (mut residual, mut leakage) = (RunningStats::new(), RunningStats::new());
        for outcome in trials.iter().flatten() {
            let o = &outcome.series[i];
            se.iter_mut().zip(&o.se).for_each(|(acc, &x)| acc.push(x));
            residual.push(o.residual);
            leakage.push(o.leakage);
        }
        let power_w = match s {
            Series::Hybrid { arch, .. } => power_consumption(arch, &cfg.system, &cfg.power).ok(),
            Series::Digital => fully_digital_power(&cfg.system, &cfg.power).ok(),
        };
        let (arch, l_max, element) = s.columns();
        for (j, stats) in se.iter().enumerate() {
            rows.push(ResultRow {
                arch: arch.clone(),
                l_max,
                element: element.clone(),
                snr_db: cfg.snr_grid_db[j],
                trials: stats.count(),
                mean_se: stats.mean(),
                std_se: stats.std(),
                ci95: stats.ci95(),
                residual: residual.mean(),
                leakage: leakage.mean(),
                power_w,
            });
        }
    }
    Ok(SweepResult {
        series,
        rows,
        trials,
        failures,
    })
}
