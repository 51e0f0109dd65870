//! Batch runner CLI: execute scenarios, compare against the baseline filter,
//! print excitation certificates, and run the verification suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vislam_core::excitation::ExcitationKind;
use vislam_core::harness::acceptance;
use vislam_core::harness::analysis::{compare_summary, summarize};
use vislam_core::harness::config::from_config;
use vislam_core::harness::export::export;
use vislam_core::harness::{compare, run, RunError};
use vislam_core::{certify, scenario_ie, scenario_pe, BarlMode, MapperKind, Scenario};

#[derive(Parser)]
#[command(
    name = "vislam",
    about = "Deterministic visual-inertial SLAM observer testbench",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and export CSV series plus a JSON summary.
    Run(ScenarioArgs),
    /// Run a scenario with the baseline body-frame Kalman filter alongside.
    Compare(ScenarioArgs),
    /// Print per-landmark excitation certificates for a scenario.
    Certify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Window length (s) for the persistent-excitation check
        /// (default: half the horizon).
        #[arg(long)]
        window: Option<f64>,
    },
    /// Run every verification criterion and report pass/fail.
    Check {
        /// Directory for the machine-readable JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario preset (`pe`, `ie`) or path to a config file.
    #[arg(long, default_value = "pe")]
    scenario: String,
    /// Override the measurement-noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Override the horizon (s); the last profile segment is extended if
    /// needed.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory for exported files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Landmark estimator: `drem` or `gradient`.
    #[arg(long)]
    mapper: Option<String>,
    /// Localization-stage landmark regression: `anchored` or `feedback`.
    #[arg(long)]
    barl: Option<String>,
    /// Measurement noise: `on` or `off`.
    #[arg(long)]
    noise: Option<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, RunError> {
        let mut sc = match self.scenario.as_str() {
            "pe" => scenario_pe(),
            "ie" => scenario_ie(),
            path => from_config(&std::fs::read_to_string(path).map_err(|source| {
                RunError::Io { path: path.to_string(), source }
            })?)?,
        };
        if let Some(seed) = self.seed {
            sc.noise.seed = seed;
        }
        if let Some(dt) = self.dt {
            sc.dt = dt;
        }
        if let Some(horizon) = self.horizon {
            sc.horizon = horizon;
            if let Some(last) = sc.profile.segments.last_mut() {
                if last.t_end < horizon {
                    last.t_end = horizon;
                }
            }
        }
        if let Some(mapper) = &self.mapper {
            sc.mapper = match mapper.as_str() {
                "drem" => MapperKind::Drem,
                "gradient" => MapperKind::Gradient,
                other => return Err(RunError::Config(format!("unknown mapper `{other}`"))),
            };
        }
        if let Some(barl) = &self.barl {
            sc.barl_mode = match barl.as_str() {
                "anchored" => BarlMode::Anchored,
                "feedback" => BarlMode::Feedback,
                other => return Err(RunError::Config(format!("unknown barl mode `{other}`"))),
            };
        }
        if let Some(noise) = &self.noise {
            sc.noise_enabled = match noise.as_str() {
                "on" => true,
                "off" => false,
                other => {
                    return Err(RunError::Config(format!("noise must be on/off, got `{other}`")))
                }
            };
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn cmd_run(args: &ScenarioArgs) -> Result<(), RunError> {
    let sc = args.load()?;
    let record = run(&sc)?;
    let files = export(&record, &args.out)?;
    let summary = summarize(&record);
    println!(
        "scenario `{}`: {} steps, final attitude error {:.3e}, final position error {:.3e}",
        summary.scenario,
        record.n_steps(),
        summary.final_attitude_error.unwrap_or(f64::NAN),
        summary.final_position_error.unwrap_or(f64::NAN),
    );
    for l in &summary.landmarks {
        println!(
            "  landmark {}: |err_v| {:.3e}, |err_inertial| {:.3e}, excitation {}",
            l.index,
            l.final_err_v.unwrap_or(f64::NAN),
            l.final_err_inertial.unwrap_or(f64::NAN),
            l.ie.kind,
        );
    }
    println!("wrote {} files to {}", files.len(), args.out.display());
    Ok(())
}

fn cmd_compare(args: &ScenarioArgs) -> Result<(), RunError> {
    let sc = args.load()?;
    let record = compare(&sc)?;
    let files = export(&record, &args.out)?;
    let summary = compare_summary(&record);
    println!(
        "scenario `{}`, motion ends at {:.1} s (baseline is a reconstructed body-frame LTV KF)",
        summary.scenario, summary.mark_time
    );
    for l in &summary.landmarks {
        println!(
            "  landmark {}: observer {:.3e} -> {:.3e} | baseline {:.3e} -> {:.3e}{}",
            l.index,
            l.observer_err_at_mark,
            l.observer_err_final,
            l.baseline_err_at_mark,
            l.baseline_err_final,
            if l.baseline_stalled { "  (baseline stalled)" } else { "" },
        );
    }
    println!("wrote {} files to {}", files.len(), args.out.display());
    Ok(())
}

fn cmd_certify(args: &ScenarioArgs, window: Option<f64>) -> Result<(), RunError> {
    let sc = args.load()?;
    let window = window.unwrap_or(sc.horizon / 2.0);
    let record = run(&sc)?;
    println!("excitation certificates for `{}` (pe window {window} s):", sc.name);
    for (i, trace) in record.landmarks.iter().enumerate() {
        let ie = certify(&trace.samples, ExcitationKind::Ie, 0.0);
        let pe = certify(&trace.samples, ExcitationKind::Pe, window);
        let ie_line = match ie.kind {
            ExcitationKind::Ie => {
                format!("ie(t0 {:.3}, t_c {:.3}, delta {:.3e})", ie.t0, ie.t_c, ie.delta)
            }
            _ => "none".to_string(),
        };
        let pe_line = match pe.kind {
            ExcitationKind::Pe => format!("pe(delta {:.3e})", pe.delta),
            _ => "none".to_string(),
        };
        println!("  landmark {i}: {ie_line}, {pe_line}");
    }
    Ok(())
}

fn cmd_check(out: Option<&PathBuf>) -> Result<bool, RunError> {
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", r.report_line());
    }
    let all_pass = results.iter().all(|r| r.pass);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
        let path = dir.join("check_report.json");
        let rows: Vec<serde_json::Value> = results
            .iter()
            .map(|r| {
                serde_json::json!({
                    "id": r.id,
                    "name": r.name,
                    "pass": r.pass,
                    "detail": r.detail,
                })
            })
            .collect();
        let report = serde_json::json!({ "all_pass": all_pass, "criteria": rows });
        std::fs::write(&path, serde_json::to_string_pretty(&report).expect("serializable"))
            .map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
        println!("wrote {}", path.display());
    }
    println!("{}", if all_pass { "all criteria passed" } else { "FAILURES present" });
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Compare(args) => cmd_compare(args).map(|()| true),
        Command::Certify { scenario, window } => cmd_certify(scenario, *window).map(|()| true),
        Command::Check { out } => cmd_check(out.as_ref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
