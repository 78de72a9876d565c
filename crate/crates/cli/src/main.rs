use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use quatsync::config::ConfigDoc;
use quatsync::engine::write_sweep_csv;
use quatsync::image::{self as qimage, Corruption, Image, ImageTask, RecoveryOptions};
use quatsync::presets;
use quatsync::{integrate, sweep_thm2, Controller, Error, RunConfig64, SettlingReport, SweepParam, TrajectoryRecord64};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Fixed-time synchronization of memristive quaternion networks.
#[derive(Debug, Parser)]
#[command(name = "quatsync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// JSON run configuration (schema 1).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the corruption generators.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Integration step, overrides the configuration.
    #[arg(long, value_name = "H")]
    step: Option<f64>,
    /// Final time, overrides the configuration.
    #[arg(long, value_name = "T")]
    horizon: Option<f64>,
    /// Print the condition/settling-time report and write report.json.
    #[arg(long)]
    report: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configured drive/response pair and write trajectory.csv.
    Run(Common),
    /// Tabulate settling-time estimates over a grid of one switched-exponent gain.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// k11, mu or gamma.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Also simulate each point and report the detected sync time at this tolerance.
        #[arg(long, value_name = "TOL")]
        empirical: Option<f64>,
    },
    /// Evaluate the synchronization conditions; exits 1 when one is violated.
    Check(Common),
    /// Two-neuron network under the power-law controller.
    Example1(Common),
    /// Two-neuron network under the switched-exponent controller, with the three gain tables.
    Example2(Common),
    /// Color-image recovery with the 256-neuron associative memory.
    Example3(Common),
}

fn load(common: &Common) -> Result<ConfigDoc> {
    let path = common.config.as_ref().context("--config PATH is required")?;
    ConfigDoc::load(path).with_context(|| format!("loading {}", path.display()))
}

fn apply_overrides(cfg: &mut RunConfig64, common: &Common) -> Result<()> {
    if let Some(h) = common.step {
        cfg.h = h;
    }
    if let Some(t) = common.horizon {
        cfg.t_end = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(())
}

fn out_dir(common: &Common) -> Result<Option<PathBuf>> {
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(common.out.clone())
}

fn report_for(cfg: &RunConfig64) -> Result<Option<SettlingReport>> {
    Ok(match &cfg.controller {
        Controller::None => None,
        Controller::Thm1(g) => Some(SettlingReport::thm1(&cfg.spec, g)?),
        Controller::Thm2(g) => Some(SettlingReport::thm2(&cfg.spec, g)?),
    })
}

fn emit_report(report: &SettlingReport, dir: Option<&Path>, name: &str) -> Result<()> {
    println!("{report}");
    if let Some(dir) = dir {
        fs::write(dir.join(name), serde_json::to_string_pretty(report)?)?;
    }
    Ok(())
}

fn write_trajectory(rec: &TrajectoryRecord64, path: &Path) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    rec.write_csv(std::io::BufWriter::new(f))?;
    Ok(())
}

fn summarize(label: &str, rec: &TrajectoryRecord64, tol: f64) {
    let sync = rec.sync_time(tol).map(|t| format!("{t:.4}")).unwrap_or_else(|| "none".into());
    println!(
        "{label}: V(0) = {:.4}, V({:.3}) = {:.3e}, sync time (V <= {tol:e}) = {sync}",
        rec.v.first().copied().unwrap_or(f64::NAN),
        rec.times.last().copied().unwrap_or(0.0),
        rec.v.last().copied().unwrap_or(f64::NAN),
    );
}

fn cmd_run(common: &Common) -> Result<bool> {
    let doc = load(common)?;
    let mut cfg: RunConfig64 = doc.run_config()?;
    apply_overrides(&mut cfg, common)?;
    let dir = out_dir(common)?;
    if common.report {
        if let Some(r) = report_for(&cfg)? {
            emit_report(&r, dir.as_deref(), "report.json")?;
        }
    }
    let rec = integrate(&cfg)?;
    summarize("run", &rec, cfg.sync_tol);
    if let Some(dir) = &dir {
        write_trajectory(&rec, &dir.join("trajectory.csv"))?;
    }
    Ok(true)
}

fn cmd_check(common: &Common) -> Result<bool> {
    let cfg: RunConfig64 = load(common)?.run_config()?;
    let dir = out_dir(common)?;
    match report_for(&cfg)? {
        Some(r) => {
            emit_report(&r, dir.as_deref(), "report.json")?;
            for c in r.violations() {
                eprintln!("violated: condition {} ({})", c.name, c.note);
            }
            Ok(r.all_satisfied())
        }
        None => {
            println!("no controller configured; nothing to check");
            Ok(true)
        }
    }
}

fn run_sweep(cfg: &RunConfig64, param: SweepParam, grid: &[f64], empirical: Option<f64>, dest: Option<&Path>) -> Result<()> {
    let rows = sweep_thm2(cfg, param, grid, empirical)?;
    let mut text = Vec::new();
    write_sweep_csv(&rows, param, &mut text)?;
    match dest {
        Some(path) => fs::write(path, &text)?,
        None => print!("{}", String::from_utf8_lossy(&text)),
    }
    Ok(())
}

fn cmd_sweep(common: &Common, param: &str, grid: &[f64], empirical: Option<f64>) -> Result<bool> {
    let param = SweepParam::parse(param)?;
    let mut cfg: RunConfig64 = load(common)?.run_config()?;
    apply_overrides(&mut cfg, common)?;
    let dir = out_dir(common)?;
    let dest = dir.map(|d| d.join(format!("sweep_{}.csv", param.name())));
    run_sweep(&cfg, param, grid, empirical, dest.as_deref())?;
    if let Some(d) = dest {
        println!("wrote {}", d.display());
    }
    Ok(true)
}

fn example1_config(controlled: bool) -> RunConfig64 {
    let ex = presets::example1::<f64>();
    let c = if controlled { Controller::Thm1(ex.gains) } else { Controller::None };
    RunConfig64::new(ex.spec, c, ex.drive_initial, ex.response_initial, 1.0)
}

fn cmd_example1(common: &Common) -> Result<bool> {
    let dir = out_dir(common)?;
    let mut ok = true;
    for (controlled, name) in [(true, "controlled"), (false, "uncontrolled")] {
        let mut cfg = match (&common.config, controlled) {
            (Some(_), true) => load(common)?.run_config()?,
            _ => example1_config(controlled),
        };
        if !controlled {
            cfg.t_end = 3.0;
        }
        apply_overrides(&mut cfg, common)?;
        if controlled {
            if let Some(r) = report_for(&cfg)? {
                ok &= r.all_satisfied();
                emit_report(&r, dir.as_deref(), "report.json")?;
            }
        }
        let rec = integrate(&cfg)?;
        summarize(name, &rec, 1e-2);
        if let Some(dir) = &dir {
            write_trajectory(&rec, &dir.join(format!("example1_{name}.csv")))?;
            if controlled {
                fs::write(dir.join("example1.json"), ConfigDoc::from_run(&cfg).to_json()?)?;
            }
        }
    }
    Ok(ok)
}

fn cmd_example2(common: &Common) -> Result<bool> {
    let dir = out_dir(common)?;
    let (x0, y0) = presets::example2_initial::<f64>();
    let spec = presets::two_neuron_network::<f64>();
    let mut ok = true;
    for (label, k11, k12, mu) in [("d_negative", 37.0, 130.0, 40.0), ("d_zero", 50.0, 23.7, 56.0), ("d_positive", 33.0, 130.0, 32.0)] {
        let mut cfg = RunConfig64::new(spec.clone(), Controller::Thm2(presets::example2_gains(k11, k12, mu)), x0.clone(), y0.clone(), 0.5);
        apply_overrides(&mut cfg, common)?;
        let report = report_for(&cfg)?.expect("controller present");
        ok &= report.all_satisfied();
        let rec = integrate(&cfg)?;
        println!(
            "{label} (k11 = {k11}, k12 = {k12}, mu = {mu}): d = {:.3}, T3 = {:.3}, T4 = {:.3}",
            report.d.unwrap_or(f64::NAN),
            report.estimate("T3").unwrap_or(f64::NAN),
            report.estimate("T4").unwrap_or(f64::NAN)
        );
        summarize(&format!("  {label}"), &rec, cfg.sync_tol);
        if let Some(dir) = &dir {
            write_trajectory(&rec, &dir.join(format!("example2_{label}.csv")))?;
        }
    }
    let mut base = RunConfig64::new(spec, Controller::Thm2(presets::example2_gains(45.0, 130.0, 40.0)), x0, y0, 0.5);
    apply_overrides(&mut base, common)?;
    let tables = [
        (SweepParam::K11, presets::K11_GRID.to_vec()),
        (SweepParam::Mu, presets::MU_GRID.to_vec()),
        (SweepParam::Gamma, presets::GAMMA_GRID.to_vec()),
    ];
    for (param, grid) in tables {
        let dest = dir.as_ref().map(|d| d.join(format!("table_{}.csv", param.name())));
        if dest.is_none() {
            println!("# {}", param.name());
        }
        run_sweep(&base, param, &grid, Some(base.sync_tol), dest.as_deref())?;
    }
    Ok(ok)
}

fn cmd_example3(common: &Common) -> Result<bool> {
    let dir = out_dir(common)?;
    let mut opts = RecoveryOptions::default();
    if let Some(h) = common.step {
        opts.h = h;
    }
    let seed = common.seed.unwrap_or(2024);
    let horizon = common.horizon.unwrap_or(0.3);
    let snapshots: Vec<f64> = [0.04, 0.06, 0.1, 0.3].into_iter().filter(|t| *t < horizon).chain([horizon]).collect();
    let tasks: Vec<(String, ImageTask)> = match &common.config {
        Some(_) => {
            let doc = load(common)?;
            let im = doc.image.context("configuration has no image section")?;
            let image = match &im.path {
                Some(p) => Image::load(p).with_context(|| format!("reading {p}"))?,
                None => Image::synthetic(128, 128),
            };
            let task = ImageTask {
                image,
                block_size: im.block_size,
                corruption: im.corruption.into(),
                seed: common.seed.unwrap_or(im.seed),
                t_snapshots: im.t_snapshots.clone(),
            };
            vec![("custom".into(), task)]
        }
        None => {
            let image = Image::synthetic(128, 128);
            [("missing", Corruption::Missing(0.8)), ("salt_pepper", Corruption::SaltPepper(0.8))]
                .into_iter()
                .map(|(name, corruption)| {
                    let task = ImageTask { image: image.clone(), block_size: 16, corruption, seed, t_snapshots: snapshots.clone() };
                    (name.to_string(), task)
                })
                .collect()
        }
    };
    let spec = presets::associative_memory::<f64>();
    let gains = presets::associative_memory_gains::<f64>();
    let mut ok = true;
    if common.report {
        let r = SettlingReport::thm2(&spec, &gains)?;
        ok &= r.all_satisfied();
        emit_report(&r, dir.as_deref(), "report.json")?;
    }
    for (name, task) in &tasks {
        let rec = qimage::recover_image(task, &spec, &gains, opts)?;
        let p0 = qimage::psnr(&task.image, &rec.corrupted)?;
        let series: Vec<String> = task.t_snapshots.iter().zip(&rec.psnr).map(|(t, p)| format!("t={t}: {p:.2} dB")).collect();
        println!("{name}: corrupted {p0:.2} dB; {}", series.join(", "));
        if let Some((_, last)) = rec.snapshots.last() {
            println!("{name}: max channel error at the last snapshot = {}", qimage::max_level_error(&task.image, last));
        }
        if let Some(dir) = &dir {
            task.image.save(dir.join("clean.ppm"))?;
            rec.corrupted.save(dir.join(format!("{name}_corrupted.ppm")))?;
            for (t, img) in &rec.snapshots {
                img.save(dir.join(format!("{name}_t{t:.2}.ppm")))?;
            }
            let mut csv = String::from("t,psnr_db\n");
            csv.push_str(&format!("0,{p0}\n"));
            for (t, p) in task.t_snapshots.iter().zip(&rec.psnr) {
                csv.push_str(&format!("{t},{p}\n"));
            }
            fs::write(dir.join(format!("{name}_psnr.csv")), csv)?;
        }
    }
    Ok(ok)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NonFinite { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep { common, param, grid, empirical } => cmd_sweep(common, param, grid, *empirical),
        Command::Check(c) => cmd_check(c),
        Command::Example1(c) => cmd_example1(c),
        Command::Example2(c) => cmd_example2(c),
        Command::Example3(c) => cmd_example3(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
