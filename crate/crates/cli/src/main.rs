//! Batch front door for the convection laboratory.
//!
//! Exit codes: 0 success, 2 solver/verdict failure, 3 invalid configuration.

mod commands;
mod config;
mod manifest;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use commands::{InitialData, SweepMethod};
use config::RunConfig;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "benard",
    version,
    about = "Two-dimensional convection laboratory: critical Rayleigh numbers, amplitude reduction, direct integration and flow topology"
)]
struct Cli {
    /// Sectioned key-value configuration file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output root (default: $BENARD_OUT or ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run directory name (default: <command>-NNNN, first free index).
    #[arg(long, global = true)]
    name: Option<String>,

    #[command(subcommand)]
    cmd: Command,
}

/// Flags shared by every physics command; each one overrides the matching
/// configuration key.
#[derive(Args, Clone)]
struct CommonFlags {
    /// Walls: rigid-rigid, free-rigid or free-free.
    #[arg(long)]
    bc: Option<String>,
    /// Structural-stability space (B0, B1, B2, B3).
    #[arg(long)]
    space: Option<String>,
    /// Horizontal period, or "critical" to resolve L_c first.
    #[arg(long)]
    length: Option<String>,
    /// Rayleigh number as a multiple of R_c.
    #[arg(long)]
    r_ratio: Option<f64>,
    /// Absolute Rayleigh number (overrides --r-ratio).
    #[arg(long)]
    rayleigh: Option<f64>,
    #[arg(long)]
    prandtl: Option<f64>,
    /// Restore the 1/Pr prefactor of the momentum equation in the DNS.
    #[arg(long)]
    pr_scaling: Option<bool>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    j_max: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steady_tol: Option<f64>,
    /// Time scheme: imex1 or sbdf2.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Amplitude of the seeded coefficient noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Write a field snapshot every N recorded samples (0 = final only).
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl CommonFlags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let mut set = |key: &str, value: Option<String>| -> Result<()> {
            if let Some(v) = value {
                cfg.apply(key, &v).map_err(|e| anyhow!("--{key}: {e}"))?;
            }
            Ok(())
        };
        set("bc", self.bc.clone())?;
        set("space", self.space.clone())?;
        set("length", self.length.clone())?;
        set("r_ratio", self.r_ratio.map(|v| v.to_string()))?;
        set("rayleigh", self.rayleigh.map(|v| v.to_string()))?;
        set("prandtl", self.prandtl.map(|v| v.to_string()))?;
        set("pr_scaling", self.pr_scaling.map(|v| v.to_string()))?;
        set("k_max", self.k_max.map(|v| v.to_string()))?;
        set("j_max", self.j_max.map(|v| v.to_string()))?;
        set("dt", self.dt.map(|v| v.to_string()))?;
        set("horizon", self.horizon.map(|v| v.to_string()))?;
        set("steady_tol", self.steady_tol.map(|v| v.to_string()))?;
        set("scheme", self.scheme.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("noise", self.noise.map(|v| v.to_string()))?;
        set("snapshot_every", self.snapshot_every.map(|v| v.to_string()))?;
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Neutral curve and critical point (R_c, L_c, a_c).
    Critical {
        #[command(flatten)]
        common: CommonFlags,
        /// Period scan as lo:hi:points.
        #[arg(long, default_value = "0.5:10:64")]
        scan: String,
    },
    /// Eigenvalue tables and vertical profiles at (L, R).
    Eigs {
        #[command(flatten)]
        common: CommonFlags,
        /// Mode whose profiles to dump, as k,j.
        #[arg(long, default_value = "1,1")]
        mode: String,
    },
    /// Interaction table, Landau coefficient and the bifurcation verdict.
    Reduce {
        #[command(flatten)]
        common: CommonFlags,
        /// Evaluate alpha at the run Rayleigh number instead of at R_c.
        #[arg(long)]
        alpha_at_rayleigh: bool,
    },
    /// Integrate the Boussinesq system and record the trajectory.
    Simulate {
        #[command(flatten)]
        common: CommonFlags,
        /// Initial data: noise, or symmetric (zero-momentum) noise.
        #[arg(long, default_value = "noise")]
        ic: String,
        /// Extra amplitude on the slowest momentum-carrying shear mode.
        #[arg(long, default_value_t = 0.0)]
        shear: f64,
    },
    /// Classify the streamline topology of a field snapshot.
    Classify {
        #[command(flatten)]
        common: CommonFlags,
        /// Snapshot file written by `simulate`.
        #[arg(long)]
        snapshot: PathBuf,
    },
    /// Amplitude versus Rayleigh number with the scaling-exponent fit.
    Sweep {
        #[command(flatten)]
        common: CommonFlags,
        /// Rayleigh ratios as lo:hi:points.
        #[arg(long, default_value = "1.001:1.02:6")]
        ratios: String,
        /// Amplitude source: reduced (normal form) or dns.
        #[arg(long, default_value = "reduced")]
        method: String,
        /// Re-evaluate alpha at each Rayleigh number instead of at R_c.
        #[arg(long)]
        alpha_at_rayleigh: bool,
    },
    /// Verify a run directory against its manifest and print a summary.
    Report {
        /// Run directory containing manifest.txt.
        #[arg(long)]
        run: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected lo:hi:points, got '{s}'");
    }
    Ok((
        parts[0].parse()?,
        parts[1].parse()?,
        parts[2].parse()?,
    ))
}

fn parse_mode(s: &str) -> Result<(usize, usize)> {
    let (k, j) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected k,j, got '{s}'"))?;
    Ok((k.trim().parse()?, j.trim().parse()?))
}

/// Create the next free run directory under the output root.
fn make_run_dir(out: Option<&Path>, name: Option<&str>, command: &str) -> Result<PathBuf> {
    let root = match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os("BENARD_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs")),
    };
    std::fs::create_dir_all(&root)?;
    let dir = match name {
        Some(n) => {
            let d = root.join(n);
            if d.exists() {
                bail!(
                    "run directory {} already exists; runs are append-only",
                    d.display()
                );
            }
            d
        }
        None => {
            let mut idx = 0usize;
            loop {
                let d = root.join(format!("{command}-{idx:04}"));
                if !d.exists() {
                    break d;
                }
                idx += 1;
                if idx > 99_999 {
                    bail!("run index space exhausted under {}", root.display());
                }
            }
        }
    };
    std::fs::create_dir(&dir)?;
    Ok(dir)
}

fn load_config(path: Option<&Path>, common: Option<&CommonFlags>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        cfg.load_file(p)?;
    }
    if let Some(c) = common {
        c.apply(&mut cfg)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), (i32, anyhow::Error)> {
    let conf_err = |e: anyhow::Error| (3, e);
    let run_err = |e: anyhow::Error| (2, e);
    match &cli.cmd {
        Command::Critical { common, scan } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let scan = parse_range(scan).map_err(conf_err)?;
            let dir =
                make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "critical").map_err(run_err)?;
            commands::cmd_critical(&cfg, &dir, scan).map_err(run_err)
        }
        Command::Eigs { common, mode } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let mode = parse_mode(mode).map_err(conf_err)?;
            let dir =
                make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "eigs").map_err(run_err)?;
            commands::cmd_eigs(&cfg, &dir, mode).map_err(run_err)
        }
        Command::Reduce {
            common,
            alpha_at_rayleigh,
        } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let dir =
                make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "reduce").map_err(run_err)?;
            commands::cmd_reduce(&cfg, &dir, *alpha_at_rayleigh).map_err(run_err)
        }
        Command::Simulate { common, ic, shear } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let ic = match ic.as_str() {
                "noise" => InitialData::Noise,
                "symmetric" => InitialData::SymmetricNoise,
                other => {
                    return Err(conf_err(anyhow!(
                        "unknown --ic '{other}' (noise or symmetric)"
                    )))
                }
            };
            let dir = make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "simulate")
                .map_err(run_err)?;
            commands::cmd_simulate(&cfg, &dir, ic, *shear).map_err(run_err)
        }
        Command::Classify { common, snapshot } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let dir = make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "classify")
                .map_err(run_err)?;
            commands::cmd_classify(&cfg, &dir, snapshot).map_err(run_err)
        }
        Command::Sweep {
            common,
            ratios,
            method,
            alpha_at_rayleigh,
        } => {
            let cfg = load_config(cli.config.as_deref(), Some(common)).map_err(conf_err)?;
            let ratios = parse_range(ratios).map_err(conf_err)?;
            let method = match method.as_str() {
                "reduced" => SweepMethod::Reduced,
                "dns" => SweepMethod::Dns,
                other => {
                    return Err(conf_err(anyhow!(
                        "unknown --method '{other}' (reduced or dns)"
                    )))
                }
            };
            let dir =
                make_run_dir(cli.out.as_deref(), cli.name.as_deref(), "sweep").map_err(run_err)?;
            commands::cmd_sweep(&cfg, &dir, ratios, method, *alpha_at_rayleigh).map_err(run_err)
        }
        Command::Report { run } => commands::cmd_report(run).map_err(run_err),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(code);
        }
    }
}
