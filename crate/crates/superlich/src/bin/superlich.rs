//! Command-line verification harness: runs the catalog-by-identity case
//! matrix and emits one JSON object per case plus a final summary object.
//! Exit codes: 0 all cases pass, 1 any case failed or errored, 2 the
//! configuration was rejected.

use clap::Parser;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use superlich::suite::config::Config;
use superlich::suite::{default_tolerance, run_suite, IDENTITY_IDS};

#[derive(Parser, Debug)]
#[command(
    name = "superlich",
    version,
    about = "Numerical verification of Dirac-operator decomposition identities on a chart catalog"
)]
struct Cli {
    /// Key-value configuration file (see the README for the schema)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Geometry ids to run (comma separated); defaults to the whole catalog
    #[arg(long, value_delimiter = ',')]
    geometry: Vec<String>,

    /// Identity ids to run (comma separated); defaults to all identities
    #[arg(long, value_delimiter = ',')]
    identity: Vec<String>,

    /// Superconnection families to include (none, a0, a2, full-mix)
    #[arg(long, value_delimiter = ',')]
    family: Vec<String>,

    /// Twisting connection presets to include (flat, random)
    #[arg(long, value_delimiter = ',')]
    twisting: Vec<String>,

    /// Seeds to run (comma separated)
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,

    /// Test sections per case
    #[arg(long)]
    sections: Option<usize>,

    /// Sample points per case
    #[arg(long)]
    points: Option<usize>,

    /// Tolerance override applied to every selected identity
    #[arg(long)]
    tolerance: Option<f64>,

    /// Write the JSON-line report to this file as well as stdout.
    /// Relative paths resolve under SUPERLICH_REPORT_DIR when set.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Rank of the even twisting factor
    #[arg(long)]
    w_plus: Option<usize>,

    /// Rank of the odd twisting factor
    #[arg(long)]
    w_minus: Option<usize>,

    /// Run cases sequentially instead of in parallel
    #[arg(long)]
    sequential: bool,

    /// List geometries, identities and families, then exit
    #[arg(long)]
    list: bool,
}

fn print_catalog() {
    println!("geometries:");
    for id in superlich::geometry::catalog::GEOMETRY_IDS {
        let geom = superlich::geometry::catalog::by_id(id).expect("catalog entry");
        println!("  {:<14} dim {}", id, geom.n);
    }
    println!("identities (default tolerance):");
    for id in IDENTITY_IDS {
        println!("  {:<20} {:.0e}", id, default_tolerance(id));
    }
    println!("families:  none, a0, a2, full-mix (full-mix needs a 4-dimensional chart)");
    println!("twistings: flat, random");
}

fn resolve_report_path(cli_report: Option<PathBuf>) -> Option<PathBuf> {
    let dir = std::env::var_os("SUPERLICH_REPORT_DIR").map(PathBuf::from);
    match (cli_report, dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p),
        (None, Some(dir)) => Some(dir.join("report.jsonl")),
        (None, None) => None,
    }
}

fn build_config(cli: &Cli) -> superlich::Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if !cli.geometry.is_empty() {
        cfg.geometries = cli.geometry.clone();
    }
    if !cli.identity.is_empty() {
        cfg.identities = cli.identity.clone();
    }
    if !cli.family.is_empty() {
        cfg.families = Some(cli.family.clone());
    }
    if !cli.twisting.is_empty() {
        cfg.twistings = Some(cli.twisting.clone());
    }
    if !cli.seed.is_empty() {
        cfg.seeds = cli.seed.clone();
    }
    if let Some(s) = cli.sections {
        cfg.sections = s;
    }
    if let Some(p) = cli.points {
        cfg.points = p;
    }
    if let Some(t) = cli.tolerance {
        cfg.global_tolerance = Some(t);
    }
    if let Some(w) = cli.w_plus {
        cfg.w_plus = w;
    }
    if let Some(w) = cli.w_minus {
        cfg.w_minus = w;
    }
    if cli.sequential {
        cfg.parallel = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list {
        print_catalog();
        return ExitCode::SUCCESS;
    }

    let report_path = resolve_report_path(cli.report.clone());
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let output = match run_suite(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let body = output.to_jsonl();
    print!("{body}");
    if let Some(path) = report_path.or(cfg.report.clone()) {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("cannot create report directory {}: {e}", parent.display());
                    return ExitCode::from(2);
                }
            }
        }
        match std::fs::File::create(&path).and_then(|mut f| f.write_all(body.as_bytes())) {
            Ok(()) => {}
            Err(e) => {
                eprintln!("cannot write report {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }

    if output.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
