use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sttrack::analysis::{self, export, render_report};
use sttrack::config::{Overrides, RunConfig};
use sttrack::io::{load_trajectory, save_trajectory, write_file};
use sttrack::pipeline::{self, write_json, Manifest};
use sttrack::simulation::write_trace;
use sttrack::target::write_centerline;
use sttrack::{Error, ErrorKind, Result, Trajectory};

const TARGET_FILE: &str = "target.csv";
const CENTERLINE_FILE: &str = "centerline.csv";
const RESOLVED_CONFIG_FILE: &str = "config.toml";
const TRACKED_FILE: &str = "tracked.csv";
const TRACE_FILE: &str = "trace.csv";
const RUN_LOG_FILE: &str = "run_log.json";
const REPORT_FILE: &str = "report.txt";

/// Spatiotemporal trajectory tracking simulator.
///
/// Config precedence, lowest first: built-in defaults, --config file, flags.
#[derive(Parser)]
#[command(name = "sttrack", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides speed_profile.seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Disables lead/lag acceleration compensation.
    #[arg(long, global = true)]
    no_compensation: bool,
    /// Overrides simulation.dt (seconds).
    #[arg(long, global = true, value_name = "SECONDS")]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the timed target trajectory.
    Generate,
    /// Run the closed loop against a target (generated from the config when
    /// --target is omitted).
    Simulate {
        #[arg(long, value_name = "PATH")]
        target: Option<PathBuf>,
    },
    /// Compare a target and a tracked trajectory on a common clock.
    Analyze {
        #[arg(long, value_name = "PATH")]
        target: PathBuf,
        #[arg(long, value_name = "PATH")]
        tracked: PathBuf,
    },
    /// Summarize an analysis directory.
    Report {
        /// Directory written by `analyze`; defaults to --out.
        dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Input => 3,
                ErrorKind::Divergence => 4,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Generate => generate(&resolve_config(common)?, &common.out),
        Command::Simulate { target } => simulate(&resolve_config(common)?, target.as_deref(), &common.out),
        Command::Analyze { target, tracked } => analyze(&resolve_config(common)?, target, tracked, &common.out),
        Command::Report { dir } => report(dir.as_deref().unwrap_or(&common.out)),
    }
}

fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        dt: common.dt,
        no_compensation: common.no_compensation,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_resolved_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    let text = cfg.to_toml();
    write_file(&dir.join(RESOLVED_CONFIG_FILE), |w| {
        writeln!(w, "# config_hash = \"{}\"", cfg.hash())?;
        write!(w, "{text}")
    })
}

fn generate(cfg: &RunConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let target = pipeline::generate_target(cfg)?;
    for w in &target.warnings {
        eprintln!("warning: {w}");
    }
    save_trajectory(&out.join(TARGET_FILE), &target.trajectory)?;
    let path = out.join(CENTERLINE_FILE);
    let file = File::create(&path).map_err(|source| Error::Io { path: path.clone(), source })?;
    write_centerline(BufWriter::new(file), &target.centerline)?;
    write_resolved_config(cfg, out)?;
    Manifest::new(
        "generate",
        cfg,
        vec![TARGET_FILE.into(), CENTERLINE_FILE.into(), RESOLVED_CONFIG_FILE.into()],
    )
    .write(out)?;

    let last = target.centerline.last().map_or(0.0, |p| p.station);
    println!(
        "generated {} points, {:.3} m, {:.2} s -> {}",
        target.trajectory.len(),
        last,
        target.trajectory.end_time() - target.trajectory.start_time(),
        out.join(TARGET_FILE).display()
    );
    println!("seed {} config {}", cfg.speed_profile.seed, cfg.hash());
    Ok(())
}

fn simulate(cfg: &RunConfig, target_path: Option<&Path>, out: &Path) -> Result<()> {
    create_dir(out)?;
    let mut files = vec![];
    let (target, target_name): (Trajectory, String) = match target_path {
        Some(path) => (load_trajectory(path)?, path.display().to_string()),
        None => {
            let generated = pipeline::generate_target(cfg)?;
            save_trajectory(&out.join(TARGET_FILE), &generated.trajectory)?;
            files.push(TARGET_FILE.to_string());
            (generated.trajectory, TARGET_FILE.to_string())
        }
    };
    write_resolved_config(cfg, out)?;
    files.push(RESOLVED_CONFIG_FILE.into());

    let log_path = out.join(RUN_LOG_FILE);
    let result = pipeline::simulate_target(cfg, &target);
    let sim = match result {
        Ok(sim) => sim,
        Err(e) => {
            write_json(
                &log_path,
                &json!({
                    "status": "failed",
                    "error": e.to_string(),
                    "target": target_name,
                    "config_hash": cfg.hash(),
                    "config": cfg,
                }),
            )?;
            return Err(e);
        }
    };
    save_trajectory(&out.join(TRACKED_FILE), &sim.tracked)?;
    write_file(&out.join(TRACE_FILE), |w| write_trace(w, &sim.trace))?;
    write_json(
        &log_path,
        &json!({
            "status": "ok",
            "target": target_name,
            "config_hash": cfg.hash(),
            "config": cfg,
            "stats": sim.stats,
        }),
    )?;
    files.extend([TRACKED_FILE.into(), TRACE_FILE.into(), RUN_LOG_FILE.into()]);
    Manifest::new("simulate", cfg, files).write(out)?;

    println!(
        "simulated {} ticks ({:.2} s): max |dp| {:.4} m, max |dq| {:.4} m -> {}",
        sim.stats.ticks,
        sim.stats.duration,
        sim.stats.max_abs_dp,
        sim.stats.max_abs_dq,
        out.join(TRACKED_FILE).display()
    );
    println!("seed {} config {}", cfg.speed_profile.seed, cfg.hash());
    Ok(())
}

fn analyze(cfg: &RunConfig, target: &Path, tracked: &Path, out: &Path) -> Result<()> {
    let target = load_trajectory(target)?;
    let tracked = load_trajectory(tracked)?;
    let (series, summary) = pipeline::analyze(cfg, &target, &tracked)?;
    let files = export(&series, &summary, out, cfg.analysis.pairing)?;
    let names = [
        &files.errors,
        &files.offsets,
        &files.pairing,
        &files.pairing_first,
        &files.pairing_last,
        &files.summary,
    ]
    .iter()
    .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
    .collect();
    Manifest::new("analyze", cfg, names).write(out)?;
    println!(
        "analyzed {} samples: max |leadlag| {:.4} m, max |lateral| {:.6} m, max |speed| {:.4} m/s -> {}",
        summary.samples,
        summary.leadlag.max_abs,
        summary.lateral.max_abs,
        summary.speed.max_abs,
        out.display()
    );
    Ok(())
}

fn report(dir: &Path) -> Result<()> {
    let required = [
        analysis::SUMMARY_FILE,
        analysis::ERRORS_FILE,
        analysis::OFFSETS_FILE,
        analysis::PAIRING_FILE,
    ];
    let missing: Vec<String> = required
        .iter()
        .filter(|name| !dir.join(name).is_file())
        .map(|name| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs {
            dir: dir.to_path_buf(),
            missing,
        });
    }
    let summary = analysis::read_summary(dir)?;
    let text = render_report(&summary);
    write_file(&dir.join(REPORT_FILE), |w| write!(w, "{text}"))?;
    print!("{text}");
    Ok(())
}
