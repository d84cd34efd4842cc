use clap::{Parser, Subcommand};
use iscc_core::oracle::suite;
use iscc_core::rng::SeedStreams;
use iscc_harness::design::design_frame;
use iscc_harness::experiment::{
    default_plan, effective_seed, run_experiment, ExperimentPlan, RunSummary,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "iscc", about = "Covert ISAC waveform design and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design the first frame of every sweep point and method; write reports and waveforms.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Design and evaluate the first sweep point only.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Design and evaluate every sweep point (resumable).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default plan as JSON, a starting point for a config file.
    Plan,
    /// Check the closed-form projections against independent references.
    Oracle {
        #[arg(long, default_value = "projections")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
    },
}

fn load(path: &Path) -> Result<ExperimentPlan, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    ExperimentPlan::from_json(&text).map_err(|e| e.to_string())
}

fn print_rows(s: &RunSummary) {
    println!("point,method,min_scnr,ser_user,ser_eve_min,jsd");
    for r in &s.rows {
        println!(
            "{},{},{:.4},{:.3e},{:.4},{:.4}",
            r.point,
            r.method.name(),
            r.min_scnr,
            r.ser_user.ser,
            r.ser_eve_min,
            r.jsd
        );
    }
    if !s.reused.is_empty() {
        println!("reused points: {:?}", s.reused);
    }
}

fn solve(plan: &ExperimentPlan, out: &Path) -> Result<(), String> {
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let seeds = SeedStreams::new(effective_seed(plan));
    for (i, &value) in plan.sweep.values.iter().enumerate() {
        let (sc, req, unc) = plan.at(value).map_err(|e| e.to_string())?;
        let (cfg, scene) = sc.build(&seeds, 0).map_err(|e| e.to_string())?;
        for &m in &plan.methods {
            let d = design_frame(
                m,
                &sc,
                &cfg,
                &scene,
                &seeds,
                0,
                &req,
                unc.as_ref(),
                &plan.solver,
            )
            .map_err(|e| e.to_string())?;
            let mut csv = String::from("slot,antenna,re,im\n");
            for (l, xl) in d.frame.waveform.slots().enumerate() {
                for (n, z) in xl.iter().enumerate() {
                    csv.push_str(&format!("{l},{n},{:e},{:e}\n", z.re, z.im));
                }
            }
            fs::write(out.join(format!("waveform_{i}_{}.csv", m.name())), csv)
                .map_err(|e| e.to_string())?;
            if let Some(r) = &d.report {
                fs::write(
                    out.join(format!("report_{i}_{}.json", m.name())),
                    r.to_json(),
                )
                .map_err(|e| e.to_string())?;
                println!(
                    "point {i} {}: min SCNR {:.4}, converged {}, outer {}, {:.0} ms",
                    m.name(),
                    r.final_objective(),
                    r.converged,
                    r.outer_iters,
                    r.wall_ms
                );
            } else {
                println!("point {i} {}: heuristic beamformer", m.name());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Solve { config, out } => solve(&load(&config)?, &out).map(|_| true),
        Command::Eval { config, out } => {
            let mut plan = load(&config)?;
            plan.sweep.values.truncate(1);
            let s = run_experiment(&plan, &out).map_err(|e| e.to_string())?;
            print_rows(&s);
            Ok(s.manifest.points.iter().all(|p| p.ok))
        }
        Command::Sweep { config, out } => {
            let s = run_experiment(&load(&config)?, &out).map_err(|e| e.to_string())?;
            print_rows(&s);
            Ok(s.manifest.points.iter().all(|p| p.ok))
        }
        Command::Plan => {
            println!("{}", default_plan().to_json());
            Ok(true)
        }
        Command::Oracle {
            suite: name,
            instances,
            seed,
        } => {
            if name != "projections" {
                return Err(format!("unknown suite {name:?}; available: projections"));
            }
            let reports = suite::run(seed, instances);
            for r in &reports {
                println!(
                    "{:<18} n={:<4} max_err={:.3e} tol={:.0e} {}",
                    r.family,
                    r.instances,
                    r.max_error,
                    r.tolerance,
                    if r.passed { "ok" } else { "FAIL" }
                );
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
