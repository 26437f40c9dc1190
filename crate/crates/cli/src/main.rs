use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rbf_pielm::execution::with_thread_limit;
use rbf_pielm::postprocess::{
    centerline_profiles, error_map, field_grid, write_error_map_csv, write_field_csv,
    write_profile_csv,
};
use rbf_pielm::sweep::{run_sweep, write_sweep_csv, AxisSpec, SweepSpec, DEFAULT_SEEDS};
use rbf_pielm::{run, Error, Execution, Preset, RunConfig, RunReport};

/// Gaussian RBF collocation solver for the biharmonic cavity and manufactured-solution benchmarks.
#[derive(Parser, Debug)]
#[command(name = "rbf-pielm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one configuration and write the report and field files.
    Solve(RunArgs),
    /// Run a hyperparameter grid and write sweep.csv.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// cavity, mms-k10, mms-k20 or mms-custom.
    #[arg(long)]
    preset: Option<Preset>,
    /// Flat key = value TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_units: Option<usize>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    sigmac: Option<f64>,
    /// Physics-aware placement (the default).
    #[arg(long, overrides_with = "no_pai")]
    pai: bool,
    /// Uniform centers with a constant width.
    #[arg(long, overrides_with = "pai")]
    no_pai: bool,
    /// Also impose the exact normal derivative on manufactured problems.
    #[arg(long)]
    clamped: bool,
    #[arg(long)]
    rcond: Option<f64>,
    /// Collocation grid, `<nx>x<ny>`.
    #[arg(long)]
    grid: Option<String>,
    /// Wavenumbers for mms-custom.
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "RBF_PIELM_THREADS")]
    threads: Option<usize>,
    /// Also write the assembled system to matrix.rplm.
    #[arg(long)]
    emit_matrix: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Sweep file with `seeds` and `[axis1]`/`[axis2]` tables.
    #[arg(long, conflicts_with_all = ["axis1", "axis2", "seeds"])]
    spec: Option<PathBuf>,
    /// `name=v1,v2,...` with name one of sigma0, sigmac, n_units.
    #[arg(long)]
    axis1: Option<String>,
    #[arg(long, requires = "axis1")]
    axis2: Option<String>,
    /// Comma-separated seeds per cell.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

/// Failures sorted by exit status.
enum Failure {
    Usage(Error),
    Numeric(Error),
    Io(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidArgument(_) => Failure::Usage(e),
            _ => Failure::Numeric(e),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(&args),
        Command::Sweep(args) => sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: [{}] {e}", e.module());
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn build_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            RunConfig::from_toml_str_with_preset(&text, args.preset).map_err(|e| match e {
                Error::Config {
                    line,
                    column,
                    message,
                } => Error::Config {
                    line,
                    column,
                    message: format!("{}: {message}", path.display()),
                },
                other => other,
            })?
        }
        None => RunConfig::for_preset(args.preset.unwrap_or_default()),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_units {
        cfg.n_units = v;
    }
    if let Some(v) = args.sigma0 {
        cfg.sigma0 = v;
    }
    if let Some(v) = args.sigmac {
        cfg.sigmac = v;
    }
    if args.pai {
        cfg.pai = true;
    }
    if args.no_pai {
        cfg.pai = false;
    }
    if args.clamped {
        cfg.clamped = true;
    }
    if let Some(v) = args.rcond {
        cfg.rcond = v;
    }
    if let Some(grid) = &args.grid {
        cfg.set_grid(grid)?;
    }
    if let Some(v) = args.k1 {
        cfg.k1 = v;
    }
    if let Some(v) = args.k2 {
        cfg.k2 = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.threads {
        cfg.threads = v;
    }
    if args.emit_matrix {
        cfg.emit_matrix = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execution() -> Execution {
    Execution::default()
}

/// Writes through a temporary sibling and renames, so readers never see a partial file.
fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    let file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    let mut w = BufWriter::new(file);
    fill(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", tmp.display()))?;
    drop(w);
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

fn solve(args: &RunArgs) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let threads = (cfg.threads > 0).then_some(cfg.threads);
    with_thread_limit(threads, || solve_with(&cfg))
}

fn solve_with(cfg: &RunConfig) -> Result<(), Failure> {
    let exec = execution();
    let outcome = run(cfg, exec)?;
    let report = RunReport::from_outcome(&outcome);
    let out = &cfg.out;

    write_atomic(&out.join("report.toml"), |w| {
        w.write_all(report.to_toml_string().as_bytes())
    })?;

    if cfg.emit_profiles {
        let (u, v) = centerline_profiles(&outcome.solution, cfg.profile_samples)?;
        write_atomic(&out.join("u_centerline.csv"), |w| write_profile_csv(w, &u))?;
        write_atomic(&out.join("v_centerline.csv"), |w| write_profile_csv(w, &v))?;
    }
    if cfg.emit_field {
        let field = field_grid(&outcome.solution, cfg.field_nx, cfg.field_ny, exec)?;
        write_atomic(&out.join("field.csv"), |w| write_field_csv(w, &field))?;
    }
    if let (true, Some(spec)) = (cfg.emit_error_map, cfg.mms_spec()) {
        let map = error_map(
            &outcome.solution,
            move |p| spec.exact(p),
            cfg.field_nx,
            cfg.field_ny,
            exec,
        )?;
        write_atomic(&out.join("error_map.csv"), |w| write_error_map_csv(w, &map))?;
    }
    if cfg.emit_matrix {
        write_atomic(&out.join("matrix.rplm"), |w| outcome.system.write_dump(w))?;
    }

    let s = &outcome.solve;
    println!(
        "{}: residual mean-abs {:.4e}, rank {}/{}, train {:.3}s",
        cfg.preset,
        s.residual_mean_abs,
        s.effective_rank,
        s.coefficients.len(),
        outcome.train_seconds()
    );
    if let Some(e) = outcome.errors {
        println!(
            "error vs exact: mean-abs {:.4e}, max {:.4e}",
            e.mean_abs, e.max_abs
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let base = build_config(&args.run)?;
    let spec = match (&args.spec, &args.axis1) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading sweep spec {}", path.display()))?;
            SweepSpec::from_toml_str(&text, base)?
        }
        (None, Some(axis1)) => SweepSpec::new(
            AxisSpec::parse(axis1)?,
            args.axis2.as_deref().map(AxisSpec::parse).transpose()?,
            base,
            args.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
        )?,
        (None, None) => {
            let mut spec = SweepSpec::sigma_grid(base);
            if let Some(seeds) = &args.seeds {
                spec.seeds = seeds.clone();
            }
            spec.validate()?;
            spec
        }
    };
    let out = spec.base.out.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let threads = (spec.base.threads > 0).then_some(spec.base.threads);
    let rows = with_thread_limit(threads, || run_sweep(&spec, execution()))?;
    write_atomic(&out.join("sweep.csv"), |w| write_sweep_csv(w, &rows))?;
    let failed = rows
        .iter()
        .filter(|r| r.status != rbf_pielm::sweep::CellStatus::Ok)
        .count();
    println!(
        "{} cells ({failed} failed), wrote {}",
        rows.len(),
        out.join("sweep.csv").display()
    );
    Ok(())
}
