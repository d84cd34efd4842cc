//! Monte-Carlo symbol error rates for the users and for an eavesdropper at
//! each target, plus distribution distances between what they receive.

use iscc_core::array::{
    complex_gaussian, steering_vector, Constellation, ConstellationKind, Scene, SymbolFrame,
    SystemConfig,
};
use iscc_core::linalg::{dot, C64};
use iscc_core::metrics::{js_divergence_default, Waveform};
use iscc_core::rng::{SeedStreams, Stream};
use iscc_core::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    assert!(errors <= trials, "more errors than trials");
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let den = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / den;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    // the bounds touch 0 and 1 exactly at the extremes; rounding would leave a residue
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub ser: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl SerEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, trials);
        Self {
            errors,
            trials,
            ser: if trials == 0 {
                f64::NAN
            } else {
                errors as f64 / trials as f64
            },
            ci_lo,
            ci_hi,
        }
    }
}

/// One transmitted frame: its symbols, the waveform carrying them and, for
/// QAM, the receive grid half-spacing of every user.
#[derive(Debug, Clone)]
pub struct DesignedFrame {
    /// Index of the frame's random streams.
    pub index: u64,
    pub frame: SymbolFrame,
    pub waveform: Waveform,
    pub tau: Option<Vec<(f64, f64)>>,
}

/// Decision on a receive sample; QAM uses the per-axis half-spacing.
pub fn detect(constellation: &Constellation, y: C64, tau: (f64, f64)) -> usize {
    match constellation.kind {
        ConstellationKind::Psk => constellation.decide_psk(y),
        ConstellationKind::Qam => constellation.decide_qam(y, tau.0, tau.1),
    }
}

/// User SER over `draws` noise realizations of every frame. Noise of frame
/// `f` and user `k` comes from its own stream, so methods sharing frame indices see the
/// same noise.
pub fn monte_carlo_ser(
    frames: &[DesignedFrame],
    scene: &Scene,
    cfg: &SystemConfig,
    constellation: &Constellation,
    draws: usize,
    seeds: &SeedStreams,
) -> Result<SerEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument(
            "at least one noise draw is required".into(),
        ));
    }
    let (mut errors, mut trials) = (0u64, 0u64);
    for f in frames {
        for (k, h) in scene.channels.channels.iter().enumerate() {
            let mut rng = seeds.rng(Stream::MonteCarloNoise, (f.index << 8) | k as u64);
            let sigma = cfg.user_noise_powers[k].sqrt();
            let tau = f.tau.as_ref().map_or((1.0, 1.0), |t| t[k]);
            let clean: Vec<C64> = f.waveform.slots().map(|xl| dot(h, xl)).collect();
            for _ in 0..draws {
                for (l, y0) in clean.iter().enumerate() {
                    let y = y0 + complex_gaussian(&mut rng) * sigma;
                    if detect(constellation, y, tau) != f.frame.indices[k][l] {
                        errors += 1;
                    }
                    trials += 1;
                }
            }
        }
    }
    Ok(SerEstimate::from_counts(errors, trials))
}

/// Affine least-squares map `g z + b` from observations onto the true symbols.
pub fn genie_equalizer(obs: &[C64], symbols: &[C64]) -> Option<(C64, C64)> {
    assert_eq!(obs.len(), symbols.len());
    let n = obs.len() as f64;
    if obs.is_empty() {
        return None;
    }
    let mz: C64 = obs.iter().sum::<C64>() / n;
    let ms: C64 = symbols.iter().sum::<C64>() / n;
    let var: f64 = obs.iter().map(|z| (z - mz).norm_sqr()).sum::<f64>() / n;
    if !(var > 1e-300) {
        return None;
    }
    let cov: C64 = obs
        .iter()
        .zip(symbols)
        .map(|(z, s)| (z - mz).conj() * (s - ms))
        .sum::<C64>()
        / n;
    let g = cov / var;
    Some((g, ms - g * mz))
}

/// Eavesdropper view for one (target, user) pair.
#[derive(Debug, Clone)]
pub struct Interception {
    pub target: usize,
    pub user: usize,
    pub ser: SerEstimate,
    /// Equalized eavesdropper samples and the same user's equalized samples.
    pub eve_samples: Vec<C64>,
    pub user_samples: Vec<C64>,
    /// JS divergence between the two sample sets.
    pub jsd: f64,
}

#[derive(Debug, Clone)]
pub struct EveReport {
    pub pairs: Vec<Interception>,
    /// Lowest SER over every target and intercepted user.
    pub best: SerEstimate,
    /// Mean JS divergence over all pairs.
    pub jsd_mean: f64,
}

fn equalized(obs: &[C64], truth: &[C64]) -> Option<Vec<C64>> {
    genie_equalizer(obs, truth).map(|(g, b)| obs.iter().map(|z| g * z + b).collect())
}

/// A genie-aided eavesdropper at every target: it sees
/// `z_l = a_t(theta)^H x_l + noise` and fits the affine least-squares
/// equalizer against the true symbols of the user it attacks.
pub fn eavesdropper_eval(
    frames: &[DesignedFrame],
    scene: &Scene,
    cfg: &SystemConfig,
    constellation: &Constellation,
    eve_noise_power: f64,
    draws: usize,
    seeds: &SeedStreams,
) -> Result<EveReport> {
    if draws == 0 || frames.is_empty() {
        return Err(Error::InvalidArgument(
            "eavesdropper evaluation needs frames and noise draws".into(),
        ));
    }
    let sigma_e = eve_noise_power.sqrt();
    let uniform_guess = 1.0 - 1.0 / constellation.len() as f64;
    let mut pairs = Vec::new();
    for (t, target) in scene.targets.iter().enumerate() {
        let a = steering_vector(target.angle, cfg.n_tx, cfg.spacing_ratio);
        let mut z = Vec::new();
        for f in frames {
            let mut rng = seeds.rng(Stream::EveNoise, (f.index << 8) | t as u64);
            let clean: Vec<C64> = f.waveform.slots().map(|xl| dot(&a.0, xl)).collect();
            for _ in 0..draws {
                z.extend(
                    clean
                        .iter()
                        .map(|c| c + complex_gaussian(&mut rng) * sigma_e),
                );
            }
        }
        for (k, h) in scene.channels.channels.iter().enumerate() {
            let truth: Vec<C64> = frames
                .iter()
                .flat_map(|f| (0..draws).flat_map(move |_| f.frame.symbols[k].iter().copied()))
                .collect();
            let idx: Vec<usize> = frames
                .iter()
                .flat_map(|f| (0..draws).flat_map(move |_| f.frame.indices[k].iter().copied()))
                .collect();
            let mut y = Vec::with_capacity(truth.len());
            for f in frames {
                let mut rng = seeds.rng(Stream::MonteCarloNoise, (f.index << 8) | k as u64);
                let sigma = cfg.user_noise_powers[k].sqrt();
                let clean: Vec<C64> = f.waveform.slots().map(|xl| dot(h, xl)).collect();
                for _ in 0..draws {
                    y.extend(clean.iter().map(|c| c + complex_gaussian(&mut rng) * sigma));
                }
            }
            let user_samples = equalized(&y, &truth).unwrap_or(y);
            let (ser, eve_samples) = match equalized(&z, &truth) {
                Some(e) => {
                    let errors = e
                        .iter()
                        .zip(&idx)
                        .filter(|(v, &i)| detect(constellation, **v, (1.0, 1.0)) != i)
                        .count() as u64;
                    (SerEstimate::from_counts(errors, e.len() as u64), e)
                }
                None => {
                    let n = z.len() as u64;
                    let mut s =
                        SerEstimate::from_counts((uniform_guess * n as f64).round() as u64, n);
                    s.ser = uniform_guess;
                    (s, z.clone())
                }
            };
            let jsd = js_divergence_default(&user_samples, &eve_samples)?;
            pairs.push(Interception {
                target: t,
                user: k,
                ser,
                eve_samples,
                user_samples,
                jsd,
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "eavesdropper evaluation needs targets and users".into(),
        ));
    }
    let best = pairs
        .iter()
        .map(|p| p.ser)
        .min_by(|a, b| a.ser.total_cmp(&b.ser))
        .expect("non-empty");
    let jsd_mean = pairs.iter().map(|p| p.jsd).sum::<f64>() / pairs.len() as f64;
    Ok(EveReport {
        pairs,
        best,
        jsd_mean,
    })
}

/// JS divergence between `samples` and an equally sized draw from the
/// circular Gaussian with the same mean and power.
pub fn gaussian_fit_divergence<R: Rng + ?Sized>(samples: &[C64], rng: &mut R) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let n = samples.len() as f64;
    let mean: C64 = samples.iter().sum::<C64>() / n;
    let sd = (samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n).sqrt();
    let fit: Vec<C64> = (0..samples.len())
        .map(|_| mean + complex_gaussian(rng) * sd)
        .collect();
    js_divergence_default(samples, &fit)
}
