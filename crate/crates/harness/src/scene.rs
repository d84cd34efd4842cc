//! Scene geometry and the seeded draws that turn it into solver inputs.

use iscc_core::array::{
    draw_noise_reference, draw_symbol_frame, sample_rician_channels, Clutter, Constellation,
    NoiseShapingAux, Scene, SymbolFrame, SystemConfig, TargetSpec, UserSpec,
};
use iscc_core::rng::{SeedStreams, Stream};
use iscc_core::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub frame_len: usize,
    /// Transmit energy per symbol slot; the frame budget is `L` times this.
    pub energy_per_slot: f64,
    pub spacing_ratio: f64,
    pub rx_noise_power: f64,
    pub user_noise_power: f64,
    pub eve_noise_power: f64,
    pub target_angles_deg: Vec<f64>,
    pub target_rcs_power: f64,
    /// Clutter scatterers at these offsets from every target.
    pub clutter_offsets_deg: Vec<f64>,
    pub clutter_power: f64,
    pub user_angles_deg: Vec<f64>,
    pub rician_factor: f64,
    pub n_paths: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SceneConfig {
    /// Eight antennas, two users at ±25°, two targets at ±30°, 16 slots.
    pub fn desk() -> Self {
        Self {
            n_tx: 8,
            n_rx: 8,
            frame_len: 16,
            energy_per_slot: 30.0,
            spacing_ratio: 0.5,
            rx_noise_power: 1.0,
            user_noise_power: 1.0,
            eve_noise_power: 1.0,
            target_angles_deg: vec![-30.0, 30.0],
            target_rcs_power: 1.0,
            clutter_offsets_deg: vec![-20.0, 20.0],
            clutter_power: 0.01,
            user_angles_deg: vec![-25.0, 25.0],
            rician_factor: 10.0,
            n_paths: 4,
        }
    }

    /// Fifteen antennas, otherwise the desk geometry.
    pub fn full_scale() -> Self {
        Self {
            n_tx: 15,
            n_rx: 15,
            ..Self::desk()
        }
    }

    pub fn system(&self) -> SystemConfig {
        SystemConfig {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            frame_len: self.frame_len,
            power: self.energy_per_slot * self.frame_len as f64,
            spacing_ratio: self.spacing_ratio,
            rx_noise_power: self.rx_noise_power,
            user_noise_powers: vec![self.user_noise_power; self.user_angles_deg.len()],
        }
    }

    pub fn targets(&self) -> Vec<TargetSpec> {
        self.target_angles_deg
            .iter()
            .map(|&t| TargetSpec {
                angle: t.to_radians(),
                rcs_power: self.target_rcs_power,
                clutter: self
                    .clutter_offsets_deg
                    .iter()
                    .map(|&o| Clutter {
                        angle: (t + o).to_radians(),
                        power: self.clutter_power,
                    })
                    .collect(),
            })
            .collect()
    }

    /// Channels come from the channel stream at index `block`, so every
    /// method and sweep point sharing a seed sees the same users.
    pub fn build(&self, seeds: &SeedStreams, block: u64) -> Result<(SystemConfig, Scene)> {
        let cfg = self.system();
        let users: Vec<UserSpec> = self
            .user_angles_deg
            .iter()
            .map(|&a| UserSpec {
                angle: a.to_radians(),
                rician_factor: self.rician_factor,
                n_paths: self.n_paths,
            })
            .collect();
        let channels =
            sample_rician_channels(&cfg, &users, &mut seeds.rng(Stream::Channels, block))?;
        let scene = Scene {
            targets: self.targets(),
            channels,
        };
        scene.validate(&cfg)?;
        Ok((cfg, scene))
    }

    /// Symbols and Gaussian references of frame `index`.
    pub fn frame(
        &self,
        seeds: &SeedStreams,
        index: u64,
        constellation: &Constellation,
        delta: f64,
    ) -> (SymbolFrame, NoiseShapingAux) {
        let frame = draw_symbol_frame(
            constellation,
            self.user_angles_deg.len(),
            self.frame_len,
            &mut seeds.rng(Stream::Symbols, index),
        );
        let reference = draw_noise_reference(
            self.target_angles_deg.len(),
            self.frame_len,
            &mut seeds.rng(Stream::NoiseReference, index),
        );
        (frame, NoiseShapingAux::new(reference, delta))
    }
}
