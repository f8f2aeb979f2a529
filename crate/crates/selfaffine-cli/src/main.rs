mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_check, cmd_diag, cmd_dim, cmd_fixtures, cmd_lq, cmd_render, Eff, Fail};
use config::RunConfig;
use output::{Format, Target};

/// Dimension estimates, hypothesis checks, and diagnostics for planar
/// self-affine iterated function systems.
#[derive(Parser)]
#[command(name = "selfaffine", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// System description (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Truncation depth for pressure solves and diagnostics.
    #[arg(long)]
    depth: Option<u32>,
    /// Root-finding tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomized estimators.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap for parallel sections.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; omit to write machine output to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Machine output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the hypothesis checkers and report certificates.
    Check(Common),
    /// Solve for the affinity dimension and moment exponents.
    Dim(Common),
    /// Estimate the coarse moment spectrum and overlay the prediction.
    Lq(Common),
    /// Emit boundedness diagnostics for the directional series and the
    /// energy integral.
    Diag(Common),
    /// Rasterize the measure to a cell table and a grayscale image.
    Render(Common),
    /// Print or write the built-in example system configs.
    Fixtures {
        /// One of the built-in names; omit for all of them.
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(RunConfig, Eff), Fail> {
    let path = common.config.as_ref().ok_or(Fail {
        code: 64,
        message: "missing --config".into(),
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| Fail {
        code: 64,
        message: format!("{}: {e}", path.display()),
    })?;
    let cfg = RunConfig::parse(&text).map_err(|m| Fail {
        code: 64,
        message: m,
    })?;
    let eff = effective(common, &cfg);
    if let Some(w) = common.workers.or(cfg.params.workers) {
        // Ignore a second initialization (only possible in tests that
        // call this twice in-process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global();
    }
    Ok((cfg, eff))
}

fn effective(common: &Common, cfg: &RunConfig) -> Eff {
    Eff {
        depth: common.depth.or(cfg.params.depth),
        tol: common.tol.or(cfg.params.tol).unwrap_or(1e-6),
        seed: common.seed.or(cfg.params.seed).unwrap_or(0),
        target: Target {
            dir: common.out.clone(),
            format: common.format,
        },
    }
}

fn dispatch(cli: Cli) -> Result<i32, Fail> {
    match &cli.cmd {
        Cmd::Check(c) => {
            let (cfg, eff) = load(c)?;
            cmd_check(&cfg, &eff)
        }
        Cmd::Dim(c) => {
            let (cfg, eff) = load(c)?;
            cmd_dim(&cfg, &eff)
        }
        Cmd::Lq(c) => {
            let (cfg, eff) = load(c)?;
            cmd_lq(&cfg, &eff)
        }
        Cmd::Diag(c) => {
            let (cfg, eff) = load(c)?;
            cmd_diag(&cfg, &eff)
        }
        Cmd::Render(c) => {
            let (cfg, eff) = load(c)?;
            cmd_render(&cfg, &eff)
        }
        Cmd::Fixtures { name, common } => {
            let eff = Eff {
                depth: common.depth,
                tol: common.tol.unwrap_or(1e-6),
                seed: common.seed.unwrap_or(0),
                target: Target {
                    dir: common.out.clone(),
                    format: common.format,
                },
            };
            cmd_fixtures(name.as_deref(), &eff)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}
