use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qemkit::Exec;
use qemkit_harness::{default_recipe_dir, load_dir, run_all, Recipe};

/// Runs acceptance recipes and writes a JSON report.
#[derive(Parser)]
#[command(name = "qemkit-recipes", version)]
struct Args {
    /// Recipe files or directories (default: the shipped recipes).
    paths: Vec<PathBuf>,
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Run recipes one after another.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let paths = if args.paths.is_empty() { vec![default_recipe_dir()] } else { args.paths };
    let mut recipes = Vec::new();
    for p in &paths {
        let loaded = if p.is_dir() { load_dir(p) } else { Recipe::load(p).map(|r| vec![r]) };
        match loaded {
            Ok(r) => recipes.extend(r),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let report = run_all(&recipes, if args.sequential { Exec::Sequential } else { Exec::Parallel });
    for r in &report.recipes {
        eprintln!("{} {:>2} {} ({:.1}s)", if r.passed { "PASS" } else { "FAIL" }, r.criterion, r.name, r.seconds);
    }
    let json = report.to_json();
    match &args.report {
        Some(p) => {
            if let Err(e) = std::fs::write(p, json + "\n") {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{json}"),
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        for f in &report.failures {
            eprintln!("failed: {f}");
        }
        ExitCode::from(1)
    }
}
