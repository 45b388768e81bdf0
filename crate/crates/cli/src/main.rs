use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anno3d::evaluate::{self, EvalOptions};
use anno3d::reconstruct::{self, ArtifactOptions};
use anno3d::service::{self, ServiceConfig};
use anno3d::settings::{load_config, Overrides};
use anno3d::{stats, CliError};
use anno3d_core::LpMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit code for runs where some documents or items failed.
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "anno3d", version, about = "Dense 3D shape from sparse single-image annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON reconstruction config; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Longest side of the working raster in pixels.
    #[arg(long, global = true)]
    resolution: Option<u32>,
    #[arg(long, value_enum, global = true)]
    lp_mode: Option<LpModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpModeArg {
    Strict,
    Soft,
}

impl From<LpModeArg> for LpMode {
    fn from(m: LpModeArg) -> Self {
        match m {
            LpModeArg::Strict => LpMode::Strict,
            LpModeArg::Soft => LpMode::Soft,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct depth, normals and meshes from annotation documents.
    Reconstruct {
        #[arg(required = true)]
        documents: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write PNG previews of depth and normals.
        #[arg(long)]
        png: bool,
        /// Also write surface id maps and an adjacency summary.
        #[arg(long)]
        debug_dump: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Score predictions listed in a manifest.
    Evaluate {
        manifest: PathBuf,
        #[arg(long, default_value = "eval")]
        out: PathBuf,
        /// Report what can be computed when inputs are missing or items fail.
        #[arg(long)]
        allow_partial: bool,
        #[arg(long, default_value_t = 1000)]
        wkdr_pairs: usize,
        #[arg(long, default_value_t = 100)]
        samples_per_class: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Dataset histograms over annotation documents.
    Stats {
        #[arg(required = true)]
        documents: Vec<PathBuf>,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the HTTP preview service.
    Serve {
        #[arg(long, env = "ANNO3D_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Concurrent reconstructions; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 30.0)]
        timeout_secs: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn config_of(c: &Common) -> anno3d::Result<anno3d_core::ReconstructionConfig> {
    load_config(
        c.config.as_deref(),
        &Overrides {
            seed: c.seed,
            resolution: c.resolution,
            lp_mode: c.lp_mode.map(Into::into),
        },
    )
}

fn run(cli: Cli) -> anno3d::Result<ExitCode> {
    match cli.command {
        Command::Reconstruct {
            documents,
            out,
            png,
            debug_dump,
            common,
        } => {
            let config = config_of(&common)?;
            let summary = reconstruct::run(&documents, &config, &out, &ArtifactOptions { png, debug_dump })?;
            for d in &summary.documents {
                let id = d.image_id.as_deref().unwrap_or("?");
                match &d.error {
                    None => eprintln!("ok    {id} ({})", d.source.display()),
                    Some(e) => eprintln!("FAIL  {id} ({}): {e}", d.source.display()),
                }
            }
            let failed = summary.failed();
            if failed > 0 {
                eprintln!(
                    "{}",
                    CliError::BatchFailed {
                        failed,
                        total: summary.documents.len()
                    }
                );
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            manifest,
            out,
            allow_partial,
            wkdr_pairs,
            samples_per_class,
            common,
        } => {
            let config = config_of(&common)?;
            let opts = EvalOptions {
                wkdr_pairs,
                samples_per_class,
                allow_partial,
                ..EvalOptions::default()
            };
            let output = evaluate::run(&manifest, &config, &out, &opts)?;
            for m in &output.missing {
                eprintln!("missing {} {}: {}", m.id, m.field, m.path.display());
            }
            for f in &output.failed {
                eprintln!("FAIL  {}: {}", f.id, f.reason);
            }
            print!("{}", output.csv());
            if output.missing.is_empty() && output.failed.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_PARTIAL))
            }
        }
        Command::Stats { documents, out, common } => {
            let config = config_of(&common)?;
            let report = stats::run(&documents, config.working_resolution)?;
            let text = serde_json::to_string_pretty(&report).expect("stats serialize");
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io { path: p, source: e })?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            host,
            workers,
            timeout_secs,
            common,
        } => {
            let base = config_of(&common)?;
            let mut config = ServiceConfig {
                base,
                timeout: Duration::from_secs_f64(timeout_secs.max(0.001)),
                ..ServiceConfig::default()
            };
            if let Some(w) = workers {
                config.workers = w;
            }
            let addr = format!("{host}:{port}");
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io {
                path: PathBuf::from(&addr),
                source: e,
            })?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::Io {
                    path: PathBuf::from(&addr),
                    source: e,
                })?;
                eprintln!("listening on http://{}", listener.local_addr().map_or(addr.clone(), |a| a.to_string()));
                service::serve(listener, config).await.map_err(|e| CliError::Io {
                    path: PathBuf::from(&addr),
                    source: e,
                })
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
