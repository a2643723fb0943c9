use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bishopdisc::experiments::{
    export_report, export_timing, load_report, report_svgs, run_chart, run_timed, ExportFormat, GridSpec, Scenario,
    ScenarioConfig, TimedReport,
};
use bishopdisc::geometry::descriptor::{read_json, StructureDescriptor};
use bishopdisc::geometry::dilation::BallGrid;
use bishopdisc::geometry::structure::validate_structure;
use bishopdisc::report::{canonical_json, write_file};

#[derive(Parser)]
#[command(name = "bishopdisc", version, about = "Bishop discs attached to generic submanifolds of almost complex C^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Output directory (default: the scenario's `out`, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Polar grid as NθxNr, e.g. 64x16.
    #[arg(long, global = true)]
    grid: Option<GridSpec>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    tol_boundary: Option<f64>,
    #[arg(long, global = true)]
    tol_interior: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and export its report.
    Run { scenario: PathBuf },
    /// Check J^2 = -Id for a structure descriptor.
    Validate { structure: PathBuf },
    /// Solve a chart scenario and export the disc records.
    Chart { config: PathBuf },
    /// Redraw the SVG plots of a report.
    Plot { report: PathBuf },
}

fn load_config(path: &Path, opts: &Opts) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(g) = opts.grid {
        cfg.grid = g;
    }
    if let Some(t) = opts.tol_boundary {
        cfg.solver.tol = t;
    }
    if let Some(t) = opts.tol_interior {
        cfg.solver.tol_interior = t;
    }
    cfg.check()?;
    Ok(cfg)
}

fn out_dir(cfg: &ScenarioConfig, opts: &Opts) -> PathBuf {
    opts.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

fn finish(timed: &TimedReport, dir: &Path) -> Result<bool> {
    let files = export_report(&timed.report, dir, &ExportFormat::ALL)?;
    let timing = export_timing(timed, dir)?;
    print!("{}", timed.report.summary());
    for f in files.iter().chain(std::iter::once(&timing)) {
        info!("wrote {}", f.display());
    }
    println!("elapsed {:.2} s; report in {}", timed.elapsed_seconds, dir.display());
    Ok(timed.report.passed)
}

fn run(cli: Cli) -> Result<bool> {
    let opts = &cli.opts;
    if let Some(k) = opts.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Run { scenario } => {
            let cfg = load_config(scenario, opts)?;
            let timed = run_timed(&cfg)?;
            finish(&timed, &out_dir(&cfg, opts))
        }
        Command::Chart { config } => {
            let cfg = load_config(config, opts)?;
            let Scenario::Chart(params) = &cfg.scenario else {
                bail!("{} is a {} scenario, not a chart", config.display(), cfg.scenario.name());
            };
            let start = std::time::Instant::now();
            let (report, chart) = run_chart(&cfg, params)?;
            let timed = TimedReport { report, elapsed_seconds: start.elapsed().as_secs_f64() };
            let dir = out_dir(&cfg, opts);
            let path = dir.join(format!("{}.chart.json", cfg.id));
            write_file(&path, &canonical_json(&chart.records())?)?;
            info!("wrote {}", path.display());
            finish(&timed, &dir)
        }
        Command::Validate { structure } => {
            let desc: StructureDescriptor = read_json(structure)?;
            let j = desc.build()?;
            let n = j.dim_complex();
            let radius = j.domain_radius().min(1.0);
            let mut points = BallGrid::new(2 * n, radius, 3).points;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(0));
            points.extend((0..32).map(|_| (0..2 * n).map(|_| rng.gen_range(-radius..=radius) / (2 * n) as f64).collect::<Vec<f64>>()));
            let report = validate_structure(j.as_ref(), &points)?;
            print!("{}", canonical_json(&report)?);
            Ok(report.passed)
        }
        Command::Plot { report } => {
            let r = load_report(report)?;
            let dir = opts.out.clone().unwrap_or_else(|| report.parent().map(Path::to_path_buf).unwrap_or_default());
            for (stem, svg) in report_svgs(&r)? {
                let path = dir.join(format!("{stem}.svg"));
                write_file(&path, &svg)?;
                println!("{}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BISHOPDISC_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
