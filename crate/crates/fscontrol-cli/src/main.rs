use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fscontrol::cli_io::export::export_json_file;
use fscontrol::cli_io::reproduce::REFERENCE_N_LAMBDA;
use fscontrol::cli_io::scenario::MANIFEST_FILE;
use fscontrol::cli_io::{
    export_from_manifest, load_config, reproduce_2d, run_scenario, Manifest, ReproduceOptions,
};

const OUTDIR_ENV: &str = "FSCONTROL_OUTDIR";

#[derive(Parser)]
#[command(name = "fscontrol", version, about = "Open-loop final-state control of parabolic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSVs plus manifest.json.
    Solve {
        config: PathBuf,
        /// Output directory (beats FSCONTROL_OUTDIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the reference 2D experiment against reference values.
    #[command(name = "reproduce-2d")]
    Reproduce2d {
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Only run this regularization weight (8000 or 20000).
        #[arg(long = "rho-f")]
        rho_f: Option<f64>,
        #[arg(long)]
        skip_constrained: bool,
        /// Multiplier grid intervals.
        #[arg(long, default_value_t = REFERENCE_N_LAMBDA)]
        n_lambda: usize,
    },
    /// Rewrite the CSVs of a finished run from its manifest.
    Export {
        manifest: PathBuf,
        /// Output directory (beats FSCONTROL_OUTDIR; default: next to the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn env_outdir() -> Option<PathBuf> {
    std::env::var_os(OUTDIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn solve(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load_config(config).with_context(|| format!("loading {}", config.display()))?;
    let dir = out.or_else(env_outdir).unwrap_or_else(|| cfg.output.dir.clone());
    let manifest = run_scenario(&cfg, &dir)?;
    for (name, value) in manifest.scalars() {
        if let Some(v) = value {
            println!("{name:<40} {v:.6}");
        }
    }
    if let Some(c) = &manifest.constrained {
        if !c.converged {
            eprintln!(
                "warning: dual ascent stopped after {} iterations (residual {:e})",
                c.iterations, c.kkt_residual
            );
        }
    }
    println!("wrote {}", dir.join(MANIFEST_FILE).display());
    Ok(ExitCode::SUCCESS)
}

fn reproduce(opts: ReproduceOptions) -> Result<ExitCode> {
    if let Some(r) = opts.rho_f {
        if r != 8000.0 && r != 20000.0 {
            anyhow::bail!("--rho-f must be 8000 or 20000, got {r}");
        }
    }
    let cmp = reproduce_2d(&opts)?;
    print!("{}", cmp.render());
    if let Some(dir) = env_outdir() {
        let path = dir.join("reproduce_2d.json");
        export_json_file(&cmp, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(if cmp.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn export(manifest_path: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let manifest = Manifest::load(manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let dir = out.or_else(env_outdir).unwrap_or_else(|| {
        manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    });
    for f in export_from_manifest(&manifest, &dir)? {
        println!("wrote {}", dir.join(f).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out } => solve(&config, out),
        Command::Reproduce2d {
            tol_scale,
            rho_f,
            skip_constrained,
            n_lambda,
        } => reproduce(ReproduceOptions {
            tol_scale,
            rho_f,
            skip_constrained,
            n_lambda,
        }),
        Command::Export { manifest, out } => export(&manifest, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
