//! Command-line driver for qemkit: reads an experiment config, runs the
//! requested sweep and writes CSV plus a JSON summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use qemkit::InsertMode;

use crate::commands::FitKind;
use crate::config::{EngineKind, Experiment, Overrides};
use crate::error::CliError;
use crate::output::{prepare_dir, write_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Exact,
    Shots,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Direct,
    Ancilla,
}

#[derive(Debug, Parser)]
#[command(name = "qemkit", version, about = "Circuit-group error mitigation sweeps")]
pub struct Cli {
    /// Seed for shot sampling and PEC (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub engine: Option<EngineArg>,
    /// Output directory (overrides the config and QEMKIT_OUT_DIR).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: Option<u8>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal and noisy expectation values over the noise grid.
    Simulate { config: PathBuf },
    /// Mitigated values with Δ terms and RT_QEM.
    Qem { config: PathBuf },
    /// Per-sample PEC estimates against the QEM value (AD noise).
    PecCompare { config: PathBuf },
    /// Fit T1 or T2 to a `time,value` CSV.
    CalibFit {
        #[arg(long, value_enum)]
        kind: FitKind,
        #[arg(long)]
        data: PathBuf,
    },
    /// QEM over the grid, plus PEC when the config has a `[pec]` section.
    Sweep { config: PathBuf },
    /// Text listing of the circuit group at the first grid point.
    Manifest {
        config: PathBuf,
        /// Observable whose measured circuit is expanded (default: the first).
        #[arg(long)]
        observable: Option<String>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            engine: self.engine.map(|e| match e {
                EngineArg::Exact => EngineKind::Exact,
                EngineArg::Shots => EngineKind::Shots,
            }),
            order: self.order,
            mode: self.mode.map(|m| match m {
                ModeArg::Direct => InsertMode::Direct,
                ModeArg::Ancilla => InsertMode::Ancilla,
            }),
            out: self.out.clone(),
        }
    }
}

/// Runs one invocation and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let ov = cli.overrides();
    let load = |p: &PathBuf| -> Result<(Experiment, PathBuf), CliError> {
        let exp = Experiment::load(p, &ov)?;
        let dir = prepare_dir(exp.out_dir())?;
        Ok((exp, dir))
    };
    let mut written = Vec::new();
    match &cli.command {
        Command::Simulate { config } => {
            let (exp, dir) = load(config)?;
            let (t, s) = commands::simulate(&exp)?;
            written.push(dir.join("simulate.csv"));
            t.write(&written[0])?;
            written.push(dir.join("simulate.json"));
            write_json(&s, &written[1])?;
        }
        Command::Qem { config } => {
            let (exp, dir) = load(config)?;
            let (t, s) = commands::qem_command(&exp)?;
            written.push(dir.join("qem.csv"));
            t.write(&written[0])?;
            written.push(dir.join("qem.json"));
            write_json(&s, &written[1])?;
        }
        Command::PecCompare { config } => {
            let (exp, dir) = load(config)?;
            let (t, s) = commands::pec_command(&exp)?;
            written.push(dir.join("pec.csv"));
            t.write(&written[0])?;
            written.push(dir.join("pec.json"));
            write_json(&s, &written[1])?;
        }
        Command::Sweep { config } => {
            let (exp, dir) = load(config)?;
            let (qt, pt, s) = commands::sweep(&exp)?;
            written.push(dir.join("sweep_qem.csv"));
            qt.write(&written[0])?;
            if let Some(pt) = pt {
                let p = dir.join("sweep_pec.csv");
                pt.write(&p)?;
                written.push(p);
            }
            let p = dir.join("sweep.json");
            write_json(&s, &p)?;
            written.push(p);
        }
        Command::Manifest { config, observable } => {
            let (exp, dir) = load(config)?;
            let text = commands::manifest(&exp, observable.as_deref())?;
            let p = dir.join("manifest.txt");
            std::fs::write(&p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
            written.push(p);
        }
        Command::CalibFit { kind, data } => {
            let report = commands::calib_fit(data, *kind)?;
            let dir = match &cli.out {
                Some(d) => d.clone(),
                None => std::env::var(config::OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|_| PathBuf::from("out")),
            };
            let p = prepare_dir(&dir)?.join("calib.json");
            write_json(&report, &p)?;
            written.push(p);
        }
    }
    Ok(written)
}
