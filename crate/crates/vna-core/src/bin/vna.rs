//! Command-line front end: JSON problem ingestion, the named example
//! registry, and JSON/Markdown report emission.
//!
//! Exit codes: 0 clean, 2 when any verdict is Inconclusive, 1 on error.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vna_core::classify::{classify_vna, deformation_experiment, ProblemConfig};
use vna_core::registry;
use vna_core::report::VnaReport;

#[derive(Parser)]
#[command(
    name = "vna",
    version,
    about = "Classify multiplication-operator commutant algebras on Bergman spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem from a JSON config file
    Run {
        /// path to the problem JSON
        #[arg(long)]
        config: PathBuf,
        /// override the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// report JSON output path (default: report.json)
        #[arg(long)]
        out: Option<PathBuf>,
        /// optional Markdown rendering path
        #[arg(long)]
        md: Option<PathBuf>,
    },
    /// Run a named example from the registry
    Example {
        /// registry entry name
        #[arg(long, conflicts_with = "list")]
        name: Option<String>,
        /// list registry names and summaries
        #[arg(long)]
        list: bool,
        /// report JSON output path
        #[arg(long)]
        out: Option<PathBuf>,
        /// optional Markdown rendering path
        #[arg(long)]
        md: Option<PathBuf>,
        /// override the entry seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let err = serde_json::json!({ "error": e });
            eprintln!("{}", err);
            ExitCode::from(1)
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("VNA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { config, seed, out, md } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
            let mut cfg: ProblemConfig =
                serde_json::from_str(&text).map_err(|e| format!("config parse: {e}"))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            execute(&cfg, "run", out, md)
        }
        Command::Example { name, list, out, md, seed } => {
            if list {
                for e in registry::example_registry() {
                    println!("{:14} {}", e.name, e.summary);
                }
                return Ok(ExitCode::SUCCESS);
            }
            let Some(name) = name else {
                return Err("pass --name <id> or --list".into());
            };
            let entry = registry::find(&name)
                .ok_or_else(|| format!("unknown example '{name}'; try --list"))?;
            let mut cfg = entry.config;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            execute(&cfg, &name, out, md)
        }
    }
}

fn execute(
    cfg: &ProblemConfig,
    title: &str,
    out: Option<PathBuf>,
    md: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let report: VnaReport = if let Some(d) = &cfg.deformation {
        let balls = d.removed_balls.clone();
        let mut base_cfg = cfg.clone();
        base_cfg.deformation = None;
        let outcome = deformation_experiment(&base_cfg, &balls).map_err(|e| e.to_string())?;
        // the after-arm is the headline result; the before-arm is written
        // alongside when an output path is given
        if let Some(p) = &out {
            let before_path = sibling(p, "before");
            std::fs::write(&before_path, outcome.before.to_json())
                .map_err(|e| e.to_string())?;
        }
        let mut rep = outcome.after;
        rep.diagnostics.notes.push(format!(
            "deformation collapsed classes: {:?}",
            outcome.collapsed_classes
        ));
        rep
    } else {
        classify_vna(cfg).map_err(|e| e.to_string())?
    };
    let out_path = out.unwrap_or_else(|| PathBuf::from("report.json"));
    std::fs::write(&out_path, report.to_json()).map_err(|e| e.to_string())?;
    if let Some(mdp) = md {
        std::fs::write(&mdp, report.to_markdown(title)).map_err(|e| e.to_string())?;
    }
    println!("{}: dim {:?}, wrote {}", title, report.dim_vna, out_path.display());
    Ok(if report.has_inconclusive() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn sibling(p: &std::path::Path, tag: &str) -> PathBuf {
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let ext = p.extension().and_then(|s| s.to_str()).unwrap_or("json");
    p.with_file_name(format!("{stem}.{tag}.{ext}"))
}
