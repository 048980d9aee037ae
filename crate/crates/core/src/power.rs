//! Hardware power-consumption model of the transmit front end.

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::projections::{Architecture, Connectivity, Element};

/// Per-device power draw in milliwatts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub p_bb: f64,
    pub p_dac: f64,
    pub p_os: f64,
    pub p_m: f64,
    pub p_pa: f64,
    pub p_pc: f64,
    /// Phase-shifter draw indexed by resolution, `p_ps[b - 1]` for `b` bits.
    pub p_ps: Vec<f64>,
    pub p_swi: f64,
    pub p_t: f64,
    /// Resolution used to price continuous (and double) phase shifters on fully connected arrays.
    pub continuous_bits_fc: u32,
    /// Same, on subarray architectures.
    pub continuous_bits_subarray: u32,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            p_bb: 200.0,
            p_dac: 110.0,
            p_os: 4.0,
            p_m: 22.0,
            p_pa: 60.0,
            p_pc: 6.6,
            p_ps: vec![10.0, 20.0, 40.0, 100.0],
            p_swi: 24.0,
            p_t: 100.0,
            continuous_bits_fc: 4,
            continuous_bits_subarray: 3,
        }
    }
}

/// Device inventory of one front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeviceCount {
    pub rf_chains: usize,
    pub phase_shifters: usize,
    pub ps_bits: u32,
    pub switches: usize,
}

impl PowerModel {
    fn phase_shifter(&self, bits: u32) -> Result<f64> {
        bits.checked_sub(1)
            .and_then(|i| self.p_ps.get(i as usize))
            .copied()
            .ok_or_else(|| {
                Error::UnsupportedArchitecture(format!(
                    "no phase-shifter power entry for {bits} bits"
                ))
            })
    }

    /// Total draw in watts for the given device inventory.
    pub fn total_watts(&self, devices: &DeviceCount, n_tx: usize) -> Result<f64> {
        let ps = if devices.phase_shifters > 0 {
            self.phase_shifter(devices.ps_bits)? * devices.phase_shifters as f64
        } else {
            0.0
        };
        let mw = self.p_bb
            + (self.p_dac + self.p_os + self.p_m) * devices.rf_chains as f64
            + (self.p_pa + self.p_pc) * n_tx as f64
            + ps
            + self.p_swi * devices.switches as f64
            + self.p_t;
        Ok(mw / 1000.0)
    }
}

/// Counts phase shifters and switches for an architecture.
pub fn device_count(
    arch: &Architecture,
    cfg: &SystemConfig,
    pm: &PowerModel,
) -> Result<DeviceCount> {
    arch.validate(cfg.n_tx, cfg.n_rf_tx)
        .map_err(|e| Error::UnsupportedArchitecture(format!("{arch}: {e}")))?;
    let n_rf = cfg.n_rf_tx;
    let (links, switches, continuous_bits) = match arch.connectivity {
        Connectivity::FullyConnected => (cfg.n_tx * n_rf, 0, pm.continuous_bits_fc),
        Connectivity::AoSA { l_max } | Connectivity::DAoSA { l_max } => {
            let size = cfg.n_tx / arch.subarrays(n_rf);
            let routing = match arch.connectivity {
                // A single hard-wired subarray per chain needs no routing switches.
                Connectivity::AoSA { l_max: 1 } => 0,
                _ => l_max * n_rf,
            };
            (l_max * n_rf * size, routing, pm.continuous_bits_subarray)
        }
    };
    let mut d = DeviceCount {
        rf_chains: n_rf,
        switches,
        ..Default::default()
    };
    match arch.element {
        Element::Ups => {
            d.phase_shifters = links;
            d.ps_bits = continuous_bits;
        }
        Element::Dps => {
            d.phase_shifters = 2 * links;
            d.ps_bits = continuous_bits;
        }
        Element::Qps { n_bits } => {
            d.phase_shifters = links;
            d.ps_bits = n_bits;
        }
        Element::Si => {
            d.phase_shifters = links;
            d.ps_bits = 1;
        }
        Element::Switch => d.switches += links,
        Element::AntennaSelection => d.switches = cfg.n_tx,
    }
    Ok(d)
}

/// Total front-end power in watts.
pub fn power_consumption(arch: &Architecture, cfg: &SystemConfig, pm: &PowerModel) -> Result<f64> {
    let devices = device_count(arch, cfg, pm)?;
    pm.total_watts(&devices, cfg.n_tx)
}

/// Fully digital reference: one RF chain per antenna, no analog network.
pub fn fully_digital_power(cfg: &SystemConfig, pm: &PowerModel) -> Result<f64> {
    let devices = DeviceCount {
        rf_chains: cfg.n_tx,
        ..Default::default()
    };
    pm.total_watts(&devices, cfg.n_tx)
}

/// Reference configurations with their published totals (watts),
/// for `N_tx = 256`, `N_RF = 8`.
pub const REFERENCE_TABLE: [(&str, f64); 14] = [
    ("fc-dps", 428.04),
    ("fc-ups", 223.24),
    ("fc-qps2", 59.4),
    ("fc-qps3", 100.36),
    ("fc-switch", 67.59),
    ("fc-si", 38.92),
    ("daosa-sps:1", 28.87),
    ("daosa-sps:2", 39.30),
    ("daosa-sps:3", 49.73),
    ("daosa-sps:4", 60.17),
    ("daosa-dps:1", 39.11),
    ("daosa-dps:2", 59.78),
    ("daosa-dps:3", 80.45),
    ("daosa-dps:4", 101.13),
];
