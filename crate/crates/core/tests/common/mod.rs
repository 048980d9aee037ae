#![allow(dead_code)]

use hprec_core::{
    bd_fully_digital_precoder, draw_channel, CMatrix, ChannelParams, ChannelRealization,
    DigitalPrecoder, SystemConfig,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Seeded instance with `n_carriers` subcarriers over a 1 GHz band.
pub fn instance(
    cfg: SystemConfig,
    n_carriers: usize,
    seed: u64,
) -> (SystemConfig, DigitalPrecoder, ChannelRealization) {
    let cfg = cfg.with_carriers(n_carriers, 28e9, if n_carriers > 1 { 1e9 } else { 0.0 });
    let ch = draw_channel(
        &cfg,
        &ChannelParams::default(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
    .unwrap();
    let f_opt = bd_fully_digital_precoder(&ch, &cfg).unwrap();
    (cfg, f_opt, ch)
}

/// Instance on i.i.d. Gaussian channels, for receive sizes a planar array cannot take.
pub fn gaussian_instance(
    cfg: SystemConfig,
    n_carriers: usize,
    seed: u64,
) -> (SystemConfig, DigitalPrecoder, ChannelRealization) {
    let cfg = cfg.with_carriers(n_carriers, 28e9, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..n_carriers)
        .map(|_| {
            (0..cfg.n_users)
                .map(|_| gaussian(cfg.n_rx, cfg.n_tx, &mut rng))
                .collect()
        })
        .collect();
    let ch = ChannelRealization {
        h,
        paths: Vec::new(),
        gamma: 1.0,
    };
    let f_opt = bd_fully_digital_precoder(&ch, &cfg).unwrap();
    (cfg, f_opt, ch)
}
