//! ecd-lab: experiment runner for counterdiabatic pulse design. Runs single
//! protocols, 1-D scans and 2-D infidelity maps, writing deterministic CSV
//! artifacts with embedded provenance.

mod config;
mod experiments;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{experiment_schema, known_experiments, resolve, AxisConfig, ExperimentConfig,
    SweepConfig};
use experiments::{compare_tables, geometric_mean_ratio, run_experiment, RunError};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "ecd-lab", version, about = "Counterdiabatic pulse design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV/metadata artifacts.
    Run(RunArgs),
    /// Run two configurations over the same sweep and report per-point ratios.
    Compare(CompareArgs),
    /// List experiments and their model parameters.
    ListModels,
    /// Parse and validate a configuration file.
    ValidateConfig { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name (lz | lz-convergence | stirap-map | bell-tau); may be
    /// omitted when --config provides it.
    experiment: Option<String>,
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Protocol: adiabatic | exact_cd | ecd (fmod is an alias for ecd).
    #[arg(long)]
    protocol: Option<String>,
    /// eCD carrier angular frequency.
    #[arg(long)]
    omega: Option<f64>,
    /// Global drive phase.
    #[arg(long)]
    phi: Option<f64>,
    /// Protocol window length for the Landau-Zener runs (t in [-span/2, span/2]).
    #[arg(long)]
    span: Option<f64>,
    /// Comma-separated carrier frequencies for lz-convergence.
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
    /// Comma-separated ramp durations for bell-tau.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Grid size NxM for stirap-map.
    #[arg(long)]
    grid: Option<String>,
    /// Ramp kind for bell-tau: linear | local_adiabatic | boundary_cancel.
    #[arg(long)]
    ramp: Option<String>,
    /// Model parameter overrides, key=value.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Output base name (defaults to the experiment name).
    #[arg(long)]
    name: Option<String>,
    /// Also write a diagnostic SVG rendering.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct CompareArgs {
    config_a: PathBuf,
    config_b: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value = "compare")]
    name: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(code) = install_thread_pool() {
        return code;
    }
    match cli.command {
        Command::Run(args) => match cmd_run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err((code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(code)
            }
        },
        Command::Compare(args) => match cmd_compare(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err((code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(code)
            }
        },
        Command::ListModels => {
            cmd_list_models();
            ExitCode::SUCCESS
        }
        Command::ValidateConfig { config } => match load_and_resolve(&config) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err((code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(code)
            }
        },
    }
}

/// ECD_LAB_THREADS caps the worker count; default is available parallelism.
fn install_thread_pool() -> Result<(), ExitCode> {
    if let Ok(v) = std::env::var("ECD_LAB_THREADS") {
        let n: usize = match v.parse() {
            Ok(n) if n >= 1 => n,
            _ => {
                eprintln!("error: ECD_LAB_THREADS must be a positive integer, got '{v}'");
                return Err(ExitCode::from(EXIT_CONFIG));
            }
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| {
                eprintln!("error: failed to build worker pool: {e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
    }
    Ok(())
}

type CmdError = (u8, String);

fn load_and_resolve(path: &Path) -> Result<ExperimentConfig, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    resolve(cfg).map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CmdError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| (EXIT_CONFIG, format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig {
            experiment: String::new(),
            protocol: None,
            model: BTreeMap::new(),
            drive: Default::default(),
            sweep: None,
            integrator: Default::default(),
            output: Default::default(),
        },
    };
    apply_flags(&mut cfg, &args)?;
    if cfg.experiment.is_empty() {
        return Err((
            EXIT_CONFIG,
            format!("no experiment given (expected one of {:?})", known_experiments()),
        ));
    }
    let resolved = resolve(cfg).map_err(|e| (EXIT_CONFIG, e))?;

    let artifacts = run_experiment(&resolved).map_err(run_error)?;
    for w in &artifacts.warnings {
        eprintln!("warning: {w}");
    }

    let dir = args.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| (EXIT_IO, format!("{}: {e}", dir.display())))?;
    let name = resolved.output.name.clone().unwrap_or_else(|| resolved.experiment.clone());
    // the CSV embeds the computation's provenance; where it was written is
    // incidental and lives in the metadata sidecar instead
    let provenance = ExperimentConfig { output: Default::default(), ..resolved.clone() };
    let resolved_json = serde_json::to_string(&provenance)
        .map_err(|e| (EXIT_IO, format!("serializing config: {e}")))?;
    let meta_json = serde_json::to_string(&resolved)
        .map_err(|e| (EXIT_IO, format!("serializing config: {e}")))?;

    let csv_path = dir.join(format!("{name}.csv"));
    output::write_csv(&csv_path, &resolved_json, &artifacts.table)
        .map_err(|e| (EXIT_IO, format!("{}: {e}", csv_path.display())))?;
    let meta_path = dir.join(format!("{name}.meta.json"));
    output::write_meta(&meta_path, &meta_json, &artifacts.warnings)
        .map_err(|e| (EXIT_IO, format!("{}: {e}", meta_path.display())))?;
    let mut written = vec![csv_path.display().to_string(), meta_path.display().to_string()];
    if args.svg || resolved.output.svg == Some(true) {
        let svg_path = dir.join(format!("{name}.svg"));
        let title = format!("{} ({})", resolved.experiment,
            resolved.protocol.as_deref().unwrap_or(""));
        match &artifacts.map {
            Some(map) => output::write_heatmap_svg(&svg_path, &resolved_json, map, &title),
            None => output::write_line_svg(&svg_path, &resolved_json, &artifacts.table, &title),
        }
        .map_err(|e| (EXIT_IO, format!("{}: {e}", svg_path.display())))?;
        written.push(svg_path.display().to_string());
    }
    println!("wrote {}", written.join(", "));
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CmdError> {
    let cfg_a = load_and_resolve(&args.config_a)?;
    let cfg_b = load_and_resolve(&args.config_b)?;
    if cfg_a.experiment != cfg_b.experiment {
        return Err((
            EXIT_CONFIG,
            format!("experiments differ: '{}' vs '{}'", cfg_a.experiment, cfg_b.experiment),
        ));
    }
    if cfg_a.sweep != cfg_b.sweep {
        return Err((EXIT_CONFIG, "sweep axes differ between the two configurations".into()));
    }
    let art_a = run_experiment(&cfg_a).map_err(run_error)?;
    let art_b = run_experiment(&cfg_b).map_err(run_error)?;
    let cmp = compare_tables(&art_a.table, &art_b.table).map_err(run_error)?;
    let geomean = geometric_mean_ratio(&cmp);

    std::fs::create_dir_all(&args.out)
        .map_err(|e| (EXIT_IO, format!("{}: {e}", args.out.display())))?;
    let resolved_json = serde_json::to_string(&serde_json::json!({
        "a": ExperimentConfig { output: Default::default(), ..cfg_a.clone() },
        "b": ExperimentConfig { output: Default::default(), ..cfg_b.clone() },
    }))
    .map_err(|e| (EXIT_IO, format!("serializing config: {e}")))?;
    let path = args.out.join(format!("{}.csv", args.name));
    output::write_compare_csv(&path, &resolved_json, &cmp, geomean)
        .map_err(|e| (EXIT_IO, format!("{}: {e}", path.display())))?;
    let meta_path = args.out.join(format!("{}.meta.json", args.name));
    output::write_meta(&meta_path, &resolved_json, &[])
        .map_err(|e| (EXIT_IO, format!("{}: {e}", meta_path.display())))?;
    println!("wrote {}, {} (geometric-mean ratio {geomean:.4e})", path.display(),
        meta_path.display());
    Ok(())
}

fn cmd_list_models() {
    println!("experiments and model parameters:");
    for exp in known_experiments() {
        println!("  {exp}");
        for (name, default, desc) in experiment_schema(exp).unwrap() {
            println!("    {name:<14} default {default:<10} {desc}");
        }
    }
    println!("protocols: adiabatic | exact_cd | ecd (alias fmod for stirap-map)");
}

fn run_error(e: RunError) -> CmdError {
    match e {
        RunError::Config(m) => (EXIT_CONFIG, m),
        RunError::Numerical(m) => (EXIT_NUMERICAL, m),
    }
}

fn apply_flags(cfg: &mut ExperimentConfig, args: &RunArgs) -> Result<(), CmdError> {
    if let Some(exp) = &args.experiment {
        if !cfg.experiment.is_empty() && &cfg.experiment != exp {
            return Err((
                EXIT_CONFIG,
                format!("experiment '{exp}' conflicts with config file '{}'", cfg.experiment),
            ));
        }
        cfg.experiment = exp.clone();
    }
    if let Some(p) = &args.protocol {
        cfg.protocol = Some(p.clone());
    }
    if let Some(w) = args.omega {
        cfg.drive.omega = Some(w);
    }
    if let Some(phi) = args.phi {
        cfg.drive.phi = Some(phi);
    }
    if let Some(s) = args.span {
        cfg.model.insert("span".into(), s);
    }
    for kv in &args.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| (EXIT_CONFIG, format!("--param '{kv}' is not KEY=VALUE")))?;
        let value: f64 = v
            .parse()
            .map_err(|_| (EXIT_CONFIG, format!("--param {k}: '{v}' is not a number")))?;
        cfg.model.insert(k.to_string(), value);
    }
    if let Some(ramp) = &args.ramp {
        let id = match ramp.as_str() {
            "linear" => 0.0,
            "local_adiabatic" => 1.0,
            "boundary_cancel" => 2.0,
            other => {
                return Err((
                    EXIT_CONFIG,
                    format!("--ramp: unknown kind '{other}' (linear | local_adiabatic | boundary_cancel)"),
                ))
            }
        };
        cfg.model.insert("ramp".into(), id);
    }
    if let Some(omegas) = &args.omegas {
        cfg.sweep = Some(list_sweep("omega", omegas)?);
    }
    if let Some(taus) = &args.taus {
        cfg.sweep = Some(list_sweep("tau", taus)?);
    }
    if let Some(grid) = &args.grid {
        let (n1, n2) = grid
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| (EXIT_CONFIG, format!("--grid '{grid}' is not NxM")))?;
        let base = cfg.sweep.clone().or_else(|| {
            resolve(ExperimentConfig {
                experiment: cfg.experiment.clone(),
                protocol: None,
                model: BTreeMap::new(),
                drive: Default::default(),
                sweep: None,
                integrator: Default::default(),
                output: Default::default(),
            })
            .ok()
            .and_then(|c| c.sweep)
        });
        let mut sweep = base.ok_or_else(|| {
            (EXIT_CONFIG, "--grid needs a sweep (is the experiment a 2-D map?)".to_string())
        })?;
        if sweep.axes.len() != 2 {
            return Err((EXIT_CONFIG, "--grid applies to 2-D sweeps only".into()));
        }
        sweep.axes[0].count = n1;
        sweep.axes[1].count = n2;
        cfg.sweep = Some(sweep);
    }
    if let Some(name) = &args.name {
        cfg.output.name = Some(name.clone());
    }
    cfg.output.dir = Some(args.out.display().to_string());
    if args.svg {
        cfg.output.svg = Some(true);
    }
    Ok(())
}

/// An explicit value list becomes a sweep axis; exact when the list is
/// geometric or arithmetic (the axis grid reproduces it), otherwise min/max
/// with the same count.
fn list_sweep(param: &str, values: &[f64]) -> Result<SweepConfig, CmdError> {
    if values.len() < 2 {
        return Err((EXIT_CONFIG, format!("--{param}s needs at least 2 values")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let axis = AxisConfig {
        param: param.to_string(),
        min: sorted[0],
        max: *sorted.last().unwrap(),
        count: sorted.len(),
        scale: if is_geometric(&sorted) { "log".into() } else { "linear".into() },
    };
    Ok(SweepConfig { axes: vec![axis] })
}

fn is_geometric(v: &[f64]) -> bool {
    if v.len() < 3 || v.iter().any(|x| *x <= 0.0) {
        return false;
    }
    let r = v[1] / v[0];
    v.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9 * r)
}
