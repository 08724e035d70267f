use std::path::PathBuf;
use std::process::ExitCode;

use bnet::data::{read_csv, ReadOptions};
use bnet::diffnet::{CombineMode, EdgeRule};
use bnet::harness::config::{Estimator, ExperimentConfig, GroupSpec, RealConfig};
use bnet::harness::output::{emit_real, emit_sample, emit_sweep, emit_synthetic};
use bnet::harness::synthetic::{results_table, run_replications, threshold_reports};
use bnet::harness::{run_real_analysis, run_sample};
use bnet::structures::StructureKind;
use bnet::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Differential network estimation: Bayesian graphical lasso with Wishart
/// thresholding, plus the D-trace lasso baseline.
#[derive(Parser, Debug)]
#[command(name = "bnet", version)]
struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// 40 replications and 5000 burn-in + 10000 retained sweeps.
    #[arg(long, global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicated simulation over structures and dimensions.
    Synthetic(GridArgs),
    /// Threshold sweep study for the B-net edge rules.
    Sweep(GridArgs),
    /// Differential network between two groups of a real dataset.
    Real(RealArgs),
    /// Single-sample network from one dataset.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
struct BnetArgs {
    /// Threshold for the B-net graph.
    #[arg(long)]
    eta: Option<f64>,
    /// How the two component graphs are combined: thresholded, difference or xor.
    #[arg(long)]
    mode: Option<CombineMode>,
    /// Edge rule: mean or ratio.
    #[arg(long)]
    rule: Option<EdgeRule>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    retained: Option<usize>,
    /// Wishart draws per posterior partial-correlation mean.
    #[arg(long)]
    wishart_draws: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_delimiter = ',')]
    structures: Option<Vec<StructureKind>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Per-sample size for each dimension.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<Estimator>>,
    #[command(flatten)]
    bnet: BnetArgs,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    date_column: Option<String>,
    /// Numeric columns to use (default: all).
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct RealArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Phase boundary dates (YYYY-MM-DD).
    #[arg(long, value_delimiter = ',')]
    boundaries: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    phase_names: Option<Vec<String>>,
    /// The two phases to contrast.
    #[arg(long, value_delimiter = ',')]
    compare: Option<Vec<String>>,
    /// Split rows by this label column instead of by date.
    #[arg(long, conflicts_with = "boundaries")]
    class_column: Option<String>,
    /// The two label values to contrast.
    #[arg(long, value_delimiter = ',', requires = "class_column")]
    classes: Option<Vec<f64>>,
    /// Trailing moving-average window.
    #[arg(long)]
    smooth: Option<usize>,
    /// Skip the rank-based Gaussianization.
    #[arg(long)]
    no_nonparanormal: bool,
    #[command(flatten)]
    bnet: BnetArgs,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    bnet: BnetArgs,
}

fn apply_bnet(cfg: &mut ExperimentConfig, a: &BnetArgs) {
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.mode {
        cfg.bnet.mode = v;
    }
    if let Some(v) = a.rule {
        cfg.bnet.rule = v;
    }
    if let Some(v) = a.burn_in {
        cfg.bnet.gibbs.burn_in = v;
    }
    if let Some(v) = a.retained {
        cfg.bnet.gibbs.retained = v;
    }
    if let Some(v) = a.wishart_draws {
        cfg.bnet.wishart_draws = v;
    }
}

fn apply_grid(cfg: &mut ExperimentConfig, a: &GridArgs) {
    if let Some(v) = &a.structures {
        cfg.structures.clone_from(v);
    }
    if let Some(v) = &a.dims {
        cfg.dims.clone_from(v);
    }
    if let Some(v) = &a.sizes {
        cfg.sample_sizes.clone_from(v);
    }
    if let Some(v) = a.reps {
        cfg.replications = v;
    }
    if let Some(v) = &a.estimators {
        cfg.estimators.clone_from(v);
    }
    apply_bnet(cfg, &a.bnet);
}

fn read_options(base: ReadOptions, a: &DataArgs) -> ReadOptions {
    ReadOptions {
        date_column: a.date_column.clone().or(base.date_column),
        columns: a.columns.clone().or(base.columns),
    }
}

fn pair<'a, T>(values: &'a [T], flag: &str) -> Result<&'a [T]> {
    if values.len() == 2 {
        Ok(values)
    } else {
        Err(Error::Config(format!("{flag} takes exactly two comma-separated values")))
    }
}

fn apply_real(cfg: &mut ExperimentConfig, a: &RealArgs) -> Result<RealConfig> {
    apply_bnet(cfg, &a.bnet);
    let base = cfg.real.clone();
    let groups = if let Some(column) = &a.class_column {
        let labels = a
            .classes
            .as_deref()
            .ok_or_else(|| Error::Config("--class-column needs --classes".into()))?;
        let labels = pair(labels, "--classes")?;
        Some(GroupSpec::Class {
            column: column.clone(),
            first: labels[0],
            second: labels[1],
        })
    } else if let Some(boundaries) = &a.boundaries {
        let compare = a
            .compare
            .as_deref()
            .ok_or_else(|| Error::Config("--boundaries needs --compare".into()))?;
        let compare = pair(compare, "--compare")?;
        Some(GroupSpec::Phases {
            boundaries: boundaries.clone(),
            names: a.phase_names.clone(),
            compare: [compare[0].clone(), compare[1].clone()],
        })
    } else {
        None
    };
    let path = a.data.data.clone().or_else(|| base.as_ref().map(|r| r.path.clone()));
    let real = RealConfig {
        path: path.ok_or_else(|| Error::Config("no data file: pass --data or set [real].path".into()))?,
        read: read_options(base.as_ref().map(|r| r.read.clone()).unwrap_or_default(), &a.data),
        smoothing_window: a.smooth.or(base.as_ref().and_then(|r| r.smoothing_window)),
        nonparanormal: !a.no_nonparanormal && base.as_ref().is_none_or(|r| r.nonparanormal),
        groups: groups
            .or_else(|| base.map(|r| r.groups))
            .ok_or_else(|| Error::Config("no grouping: pass --boundaries/--compare or --class-column/--classes".into()))?,
    };
    cfg.real = Some(real.clone());
    Ok(real)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.bnet.gibbs.seed = seed;
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    match &cli.command {
        Command::Synthetic(a) => {
            apply_grid(&mut cfg, a);
            cfg.validate()?;
            let records = run_replications(&cfg)?;
            let table = results_table(&cfg, &records);
            let studies = threshold_reports(&cfg, &records)?;
            emit_synthetic(&cli.out, &cfg, &records, &table, &studies)?;
            eprintln!("{} replications, {} table rows -> {}", records.len(), table.rows.len(), cli.out.display());
        }
        Command::Sweep(a) => {
            apply_grid(&mut cfg, a);
            cfg.estimators = vec![Estimator::Bnet];
            cfg.validate()?;
            let records = run_replications(&cfg)?;
            let studies = threshold_reports(&cfg, &records)?;
            emit_sweep(&cli.out, &cfg, &records, &studies)?;
            for s in &studies {
                eprintln!(
                    "{} p={} {}: best eta {} (MCC {:.3})",
                    s.structure, s.dim, s.rule, s.report.best_eta, s.report.best_mcc
                );
            }
        }
        Command::Real(a) => {
            let real = apply_real(&mut cfg, a)?;
            cfg.validate()?;
            let res = run_real_analysis(&real, &cfg.bnet, cfg.eta)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            emit_real(&cli.out, &cfg, &res)?;
            eprintln!(
                "{} vs {} (n = {} / {}): {} edges, Box's M p = {:.4}",
                res.groups[0],
                res.groups[1],
                res.sizes[0],
                res.sizes[1],
                res.network.adjacency.edge_count(),
                res.box_m.p_value
            );
        }
        Command::Sample(a) => {
            apply_bnet(&mut cfg, &a.bnet);
            cfg.validate()?;
            let path = a
                .data
                .data
                .clone()
                .or_else(|| cfg.real.as_ref().map(|r| r.path.clone()))
                .ok_or_else(|| Error::Config("no data file: pass --data".into()))?;
            let base = cfg.real.as_ref().map(|r| r.read.clone()).unwrap_or_default();
            let ds = read_csv(&path, &read_options(base, &a.data))?;
            let fit = run_sample(&ds, &cfg.bnet.gibbs, cfg.bnet.epsilon, cfg.bnet.wishart_draws, cfg.eta)?;
            emit_sample(&cli.out, &cfg, &fit)?;
            eprintln!("n = {}, p = {}: {} edges", fit.n, fit.names.len(), fit.adjacency.edge_count());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        "config" => 2,
        "data" => 3,
        "io" => 4,
        "argument" => 5,
        "numeric" => 6,
        "sampler" => 7,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            ExitCode::from(exit_code(&e))
        }
    }
}
