//! Sweep runner: paired-seed solves per sweep point and method, Monte-Carlo
//! evaluation, CSV artifacts and a resumable manifest.

use crate::design::{design_frame, Method, Modulation, Requirement};
use crate::eval::{
    eavesdropper_eval, gaussian_fit_divergence, monte_carlo_ser, DesignedFrame, SerEstimate,
};
use crate::scene::SceneConfig;
use iscc_core::array::{Scene, SystemConfig};
use iscc_core::metrics::{beampattern, min_scnr, BeampatternMode};
use iscc_core::mm::SolveOptions;
use iscc_core::psk::Qos;
use iscc_core::rng::{SeedStreams, Stream};
use iscc_core::robust::{GridKind, UncertaintyModel};
use iscc_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// User SNR threshold in dB (PSK only).
    GammaDb,
    /// SEP budget.
    Epsilon,
    /// Noise-shaping tolerance.
    Delta,
    /// Transmit (and receive) antennas.
    NTx,
    /// Channel uncertainty radius.
    EpsUser,
    /// Target angle half-width in degrees.
    EpsTargetDeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    pub eps_user: f64,
    pub eps_target_deg: f64,
    pub grid_size: usize,
    pub grid_kind: GridKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub seed: u64,
    #[serde(default)]
    pub scene: SceneConfig,
    pub modulation: Modulation,
    /// SEP budget when the sweep is not over the SNR threshold.
    pub epsilon: f64,
    pub delta: f64,
    pub sweep: Sweep,
    pub methods: Vec<Method>,
    /// Frames designed per sweep point and method.
    pub frames: usize,
    /// Noise realizations per frame; user trials are `frames * L * K_U * draws`.
    pub noise_draws: usize,
    #[serde(default)]
    pub uncertainty: Option<UncertaintyConfig>,
    #[serde(default)]
    pub solver: SolveOptions,
    /// Frames pooled into each constellation dump.
    #[serde(default = "default_dump_frames")]
    pub constellation_frames: usize,
    /// Angular resolution of the beampattern in degrees.
    #[serde(default = "default_beam_step")]
    pub beampattern_step_deg: f64,
}

fn default_dump_frames() -> usize {
    64
}

fn default_beam_step() -> f64 {
    1.0
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("plan: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty()
            || self.frames == 0
            || self.noise_draws == 0
            || self.sweep.values.is_empty()
        {
            return Err(Error::InvalidConfig(
                "plan needs methods, frames, noise draws and sweep values".into(),
            ));
        }
        if self.sweep.variable == SweepVariable::GammaDb
            && !matches!(self.modulation, Modulation::Psk { .. })
        {
            return Err(Error::InvalidConfig(
                "an SNR-threshold sweep needs PSK".into(),
            ));
        }
        Ok(())
    }

    /// Scene, requirement and uncertainty at one sweep value.
    pub fn at(&self, value: f64) -> Result<(SceneConfig, Requirement, Option<UncertaintyModel>)> {
        let mut sc = self.scene.clone();
        let mut qos = Qos::Sep(self.epsilon);
        let mut delta = self.delta;
        let mut unc = self.uncertainty.clone();
        match self.sweep.variable {
            SweepVariable::GammaDb => qos = Qos::Snr(10f64.powf(value / 10.0)),
            SweepVariable::Epsilon => qos = Qos::Sep(value),
            SweepVariable::Delta => delta = value,
            SweepVariable::NTx => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "antenna count {value} is not a positive integer"
                    )));
                }
                sc.n_tx = value as usize;
                sc.n_rx = value as usize;
            }
            SweepVariable::EpsUser => unc.get_or_insert_with(zero_uncertainty).eps_user = value,
            SweepVariable::EpsTargetDeg => {
                unc.get_or_insert_with(zero_uncertainty).eps_target_deg = value
            }
        }
        let model = unc.map(|u| UncertaintyModel {
            eps_user: vec![u.eps_user; sc.user_angles_deg.len()],
            eps_target: vec![u.eps_target_deg.to_radians(); sc.target_angles_deg.len()],
            grid_size: u.grid_size,
            grid_kind: u.grid_kind,
        });
        Ok((
            sc,
            Requirement {
                modulation: self.modulation,
                qos,
                delta,
            },
            model,
        ))
    }
}

fn zero_uncertainty() -> UncertaintyConfig {
    UncertaintyConfig {
        eps_user: 0.0,
        eps_target_deg: 0.0,
        grid_size: 5,
        grid_kind: GridKind::Uniform,
    }
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub point: usize,
    pub value: f64,
    pub method: Method,
    /// Mean over frames of the worst-case SCNR.
    pub min_scnr: f64,
    pub ser_user: SerEstimate,
    pub ser_eve_min: f64,
    /// Mean JS divergence between user and eavesdropper samples.
    pub jsd: f64,
    /// Mean JS divergence between eavesdropper samples and a fitted circular Gaussian.
    pub jsd_gauss: f64,
}

/// Solver status of one (point, method) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub method: Method,
    pub frame_hash: String,
    pub solves: usize,
    pub not_converged: usize,
    pub infeasible: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub value: f64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub jobs: Vec<JobStatus>,
    pub rows: Vec<MetricsRow>,
    /// This point's `beampattern.csv` lines.
    #[serde(default)]
    pub beampattern: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub plan_hash: String,
    pub points: Vec<PointRecord>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<MetricsRow>,
    pub manifest: Manifest,
    /// Sweep points served from an earlier run.
    pub reused: Vec<usize>,
}

fn sha_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn frame_hash(frames: &[DesignedFrame]) -> String {
    let mut text = String::new();
    for f in frames {
        let _ = write!(text, "{}:{:?};", f.index, f.frame.indices);
    }
    sha_hex(text.as_bytes())
}

pub fn plan_hash(plan: &ExperimentPlan) -> String {
    sha_hex(plan.to_json().as_bytes())
}

/// Bounded worker pool; `ISCC_THREADS` caps its size.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("ISCC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

/// `ISCC_SEED` overrides the plan seed.
pub fn effective_seed(plan: &ExperimentPlan) -> u64 {
    std::env::var("ISCC_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(plan.seed)
}

struct JobOutput {
    row: MetricsRow,
    status: JobStatus,
    frames: Vec<DesignedFrame>,
    trace_csv: Option<String>,
    dump: Vec<(f64, f64, &'static str)>,
}

#[allow(clippy::too_many_arguments)]
fn run_job(
    plan: &ExperimentPlan,
    point: usize,
    value: f64,
    method: Method,
    sc: &SceneConfig,
    cfg: &SystemConfig,
    scene: &Scene,
    seeds: &SeedStreams,
    req: &Requirement,
    unc: Option<&UncertaintyModel>,
    workers: &rayon::ThreadPool,
) -> Result<JobOutput> {
    let designs: Vec<_> = workers.install(|| {
        (0..plan.frames as u64)
            .into_par_iter()
            .map(|f| design_frame(method, sc, cfg, scene, seeds, f, req, unc, &plan.solver))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut status = JobStatus {
        method,
        frame_hash: String::new(),
        solves: 0,
        not_converged: 0,
        infeasible: 0,
        wall_ms: 0.0,
    };
    for r in designs.iter().filter_map(|d| d.report.as_ref()) {
        status.solves += 1;
        status.not_converged += usize::from(!r.converged);
        status.infeasible += usize::from(r.infeasible);
        status.wall_ms += r.wall_ms;
    }
    let trace_csv = designs[0].report.as_ref().map(|r| r.trace.to_csv());
    let frames: Vec<DesignedFrame> = designs.into_iter().map(|d| d.frame).collect();
    status.frame_hash = frame_hash(&frames);
    let constellation = req.modulation.constellation();
    let ser_user = monte_carlo_ser(&frames, scene, cfg, &constellation, plan.noise_draws, seeds)?;
    let eve = eavesdropper_eval(
        &frames,
        scene,
        cfg,
        &constellation,
        sc.eve_noise_power,
        plan.noise_draws,
        seeds,
    )?;
    let mut jsd_gauss = 0.0;
    for (i, p) in eve.pairs.iter().enumerate() {
        jsd_gauss +=
            gaussian_fit_divergence(&p.eve_samples, &mut seeds.rng(Stream::Oracle, i as u64))?;
    }
    jsd_gauss /= eve.pairs.len() as f64;
    let min_scnr_mean = frames
        .iter()
        .map(|f| min_scnr(&f.waveform.stacked, &scene.targets, cfg))
        .sum::<f64>()
        / frames.len() as f64;

    // first draw of up to `constellation_frames` frames, user 0 against the first target
    let per_frame = sc.frame_len * plan.noise_draws;
    let n_dump = plan.constellation_frames.min(frames.len());
    let mut dump = Vec::new();
    if let Some(p) = eve.pairs.first() {
        for f in 0..n_dump {
            let range = f * per_frame..f * per_frame + sc.frame_len;
            dump.extend(
                p.user_samples[range.clone()]
                    .iter()
                    .map(|z| (z.re, z.im, "user")),
            );
            dump.extend(p.eve_samples[range].iter().map(|z| (z.re, z.im, "eve")));
        }
    }
    Ok(JobOutput {
        row: MetricsRow {
            point,
            value,
            method,
            min_scnr: min_scnr_mean,
            ser_user,
            ser_eve_min: eve.best.ser,
            jsd: eve.jsd_mean,
            jsd_gauss,
        },
        status,
        frames,
        trace_csv,
        dump,
    })
}

fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from("point,method,min_scnr,ser_user_mean,ser_user_ci_lo,ser_user_ci_hi,ser_eve_min,jsd,solve_ms\n");
    for r in rows {
        // wall time is machine dependent and stays out of this file
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},",
            r.point,
            r.method.name(),
            r.min_scnr,
            r.ser_user.ser,
            r.ser_user.ci_lo,
            r.ser_user.ci_hi,
            r.ser_eve_min,
            r.jsd
        );
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidConfig(format!("writing {}: {e}", path.display())))
}

fn load_manifest(out: &Path, hash: &str) -> Option<Manifest> {
    let text = fs::read_to_string(out.join("manifest.json")).ok()?;
    let m: Manifest = serde_json::from_str(&text).ok()?;
    (m.plan_hash == hash).then_some(m)
}

/// Runs every sweep point and method of `plan`, writing artifacts into `out`.
/// Points already completed under the same plan are read back from the
/// manifest instead of being solved again.
pub fn run_experiment(plan: &ExperimentPlan, out: &Path) -> Result<RunSummary> {
    let mut plan = plan.clone();
    plan.seed = effective_seed(&plan);
    plan.validate()?;
    fs::create_dir_all(out)
        .map_err(|e| Error::InvalidConfig(format!("creating {}: {e}", out.display())))?;
    let hash = plan_hash(&plan);
    let previous = load_manifest(out, &hash);
    let seeds = SeedStreams::new(plan.seed);
    let workers = pool()?;
    let mut manifest = Manifest {
        plan_hash: hash,
        points: vec![],
    };
    let mut reused = vec![];

    for (i, &value) in plan.sweep.values.iter().enumerate() {
        if let Some(rec) = previous.as_ref().and_then(|m| {
            m.points
                .iter()
                .find(|p| p.index == i && p.ok && p.value == value)
        }) {
            manifest.points.push(rec.clone());
            reused.push(i);
            continue;
        }
        let mut record = PointRecord {
            index: i,
            value,
            ok: true,
            error: None,
            jobs: vec![],
            rows: vec![],
            beampattern: vec![],
        };
        let result = (|| -> Result<()> {
            let (sc, req, unc) = plan.at(value)?;
            let (cfg, scene) = sc.build(&seeds, 0)?;
            for &method in &plan.methods {
                let job = run_job(
                    &plan,
                    i,
                    value,
                    method,
                    &sc,
                    &cfg,
                    &scene,
                    &seeds,
                    &req,
                    unc.as_ref(),
                    &workers,
                )?;
                let name = method.name();
                if let Some(t) = &job.trace_csv {
                    write(&out.join(format!("trace_{i}_{name}.csv")), t)?;
                }
                let mut dump = String::from("re,im,role\n");
                for (re, im, role) in &job.dump {
                    let _ = writeln!(dump, "{re:e},{im:e},{role}");
                }
                write(&out.join(format!("constellation_{name}_{i}.csv")), &dump)?;
                let step = plan.beampattern_step_deg.max(1e-3);
                let n = (180.0 / step).floor() as usize;
                let angles: Vec<f64> = (0..=n)
                    .map(|j| (-90.0 + j as f64 * step).to_radians())
                    .collect();
                let x = &job.frames[0].waveform.stacked;
                let tx = beampattern(x, &angles, &cfg, BeampatternMode::TxPower, &scene);
                let echo = beampattern(x, &angles, &cfg, BeampatternMode::EchoScnr, &scene);
                for ((th, p), (_, e)) in tx.iter().zip(&echo) {
                    record
                        .beampattern
                        .push(format!("{i},{:e},{p:e},{e:e},{name}", th.to_degrees()));
                }
                if job.status.infeasible > 0 {
                    record.ok = false;
                }
                record.jobs.push(job.status);
                record.rows.push(job.row);
            }
            Ok(())
        })();
        if let Err(e) = result {
            record.ok = false;
            record.error = Some(e.to_string());
        }
        manifest.points.push(record);
    }

    let rows: Vec<MetricsRow> = manifest
        .points
        .iter()
        .flat_map(|p| p.rows.iter().cloned())
        .collect();
    write(&out.join("metrics.csv"), &metrics_csv(&rows))?;
    let mut beam = String::from("point,angle_deg,tx_power,echo_scnr,method\n");
    for line in manifest.points.iter().flat_map(|p| &p.beampattern) {
        beam.push_str(line);
        beam.push('\n');
    }
    write(&out.join("beampattern.csv"), &beam)?;
    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(RunSummary {
        rows,
        manifest,
        reused,
    })
}

/// Defaults for a quick covert QPSK sweep over the SNR threshold.
pub fn default_plan() -> ExperimentPlan {
    ExperimentPlan {
        seed: 1,
        scene: SceneConfig::desk(),
        modulation: Modulation::Psk { order: 4 },
        epsilon: 1e-2,
        delta: 0.1,
        sweep: Sweep {
            variable: SweepVariable::GammaDb,
            values: vec![5.0, 10.0, 15.0],
        },
        methods: vec![Method::Iscc, Method::Slp, Method::Bf],
        frames: 8,
        noise_draws: 100,
        uncertainty: None,
        solver: SolveOptions::default(),
        constellation_frames: 64,
        beampattern_step_deg: 1.0,
    }
}
