#![allow(dead_code)]

use iscc_core::array::{
    draw_noise_reference, draw_symbol_frame, sample_rician_channels, Clutter, Constellation,
    NoiseShapingAux, Scene, SymbolFrame, SystemConfig, TargetSpec, UserSpec,
};
use iscc_core::rng::{SeedStreams, Stream};

/// Eight antennas, 16 slots, 30 energy units per slot.
pub fn desk_config() -> SystemConfig {
    SystemConfig {
        n_tx: 8,
        n_rx: 8,
        frame_len: 16,
        power: 480.0,
        spacing_ratio: 0.5,
        rx_noise_power: 1.0,
        user_noise_powers: vec![1.0, 1.0],
    }
}

pub fn desk_targets() -> Vec<TargetSpec> {
    [-30.0f64, 30.0]
        .iter()
        .map(|&t| TargetSpec {
            angle: t.to_radians(),
            rcs_power: 1.0,
            clutter: [-20.0f64, 20.0]
                .iter()
                .map(|&o| Clutter {
                    angle: (t + o).to_radians(),
                    power: 0.01,
                })
                .collect(),
        })
        .collect()
}

/// Users at ±25° with Rician channels from stream `Channels/0`.
pub fn desk_scene(seed: u64) -> (SystemConfig, Scene) {
    let cfg = desk_config();
    let users: Vec<UserSpec> = [-25.0f64, 25.0]
        .iter()
        .map(|&a| UserSpec {
            angle: a.to_radians(),
            rician_factor: 10.0,
            n_paths: 4,
        })
        .collect();
    let channels = sample_rician_channels(
        &cfg,
        &users,
        &mut SeedStreams::new(seed).rng(Stream::Channels, 0),
    )
    .unwrap();
    let scene = Scene {
        targets: desk_targets(),
        channels,
    };
    scene.validate(&cfg).unwrap();
    (cfg, scene)
}

pub fn desk_frame(
    seed: u64,
    cfg: &SystemConfig,
    scene: &Scene,
    constellation: &Constellation,
    delta: f64,
) -> (SymbolFrame, NoiseShapingAux) {
    let s = SeedStreams::new(seed);
    let frame = draw_symbol_frame(
        constellation,
        scene.n_users(),
        cfg.frame_len,
        &mut s.rng(Stream::Symbols, 0),
    );
    let reference = draw_noise_reference(
        scene.n_targets(),
        cfg.frame_len,
        &mut s.rng(Stream::NoiseReference, 0),
    );
    (frame, NoiseShapingAux::new(reference, delta))
}
