use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mafd::harness::{self, ExperimentRecord};
use mafd::{Result, Scheme, SystemConfig};

#[derive(Parser)]
#[command(name = "mafd", version, about = "Movable-antenna full-duplex secrecy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum secrecy rate versus moving-region size.
    SweepRegion {
        #[command(flatten)]
        common: Common,
        /// Region sides in wavelengths.
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,2.5,3")]
        values: Vec<f64>,
    },
    /// Sum secrecy rate versus residual self-interference.
    SweepSic {
        #[command(flatten)]
        common: Common,
        /// Residual SI levels in dB.
        #[arg(long, value_delimiter = ',', default_value = "-110,-100,-90,-80,-70")]
        values: Vec<f64>,
        /// BS transmit powers in dBm.
        #[arg(long, value_delimiter = ',', default_value = "20")]
        p_b_dbm: Vec<f64>,
    },
    /// Sum secrecy rate versus antenna count.
    SweepAntennas {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        values: Vec<usize>,
    },
    /// One trial per requested scheme.
    SingleRun {
        #[command(flatten)]
        common: Common,
        /// Trial index.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full iteration budget instead of the desk-scale one.
    #[arg(long)]
    full_budget: bool,
    /// Override a single parameter, e.g. `--set rho=-90dB`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheme ids; all schemes when omitted.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Also write per-iteration traces as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write measured run times to the `ms` column.
    #[arg(long)]
    wall_clock: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(SystemConfig, Vec<Scheme>)> {
        let base = if self.full_budget {
            SystemConfig::full_budget()
        } else {
            SystemConfig::desk_scale()
        };
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::parse(&std::fs::read_to_string(path)?, base)?,
            None => base,
        };
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| mafd::Error::Parse {
                    line: 0,
                    reason: format!("override `{item}` is not KEY=VALUE"),
                })?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        let schemes = if self.scheme.is_empty() {
            Scheme::ALL.to_vec()
        } else {
            self.scheme.iter().map(|s| s.parse()).collect::<Result<_>>()?
        };
        if let Some(n) = self.threads {
            // only fails if a pool already exists, which is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok((cfg, schemes))
    }

    fn finish(&self, records: &[ExperimentRecord]) -> Result<()> {
        harness::write_records_with(records, &self.out, self.wall_clock)?;
        if let Some(path) = &self.trace {
            harness::write_traces(records, path)?;
        }
        for (value, scheme, mean) in harness::mean_ssr(records) {
            println!("{value:>8} {scheme:<16} {mean:.4}");
        }
        let flagged = records.iter().filter(|r| r.relaxation_flagged()).count();
        if flagged > 0 {
            eprintln!("{flagged} run(s) with relaxation gap above 1%");
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepRegion { common, values } => {
            let (cfg, schemes) = common.resolve()?;
            let recs = harness::sweep_region_size(&cfg, &values, &schemes, cfg.trials)?;
            common.finish(&recs)
        }
        Command::SweepSic {
            common,
            values,
            p_b_dbm,
        } => {
            let (cfg, schemes) = common.resolve()?;
            let recs = harness::sweep_sic(&cfg, &values, &p_b_dbm, &schemes, cfg.trials)?;
            common.finish(&recs)
        }
        Command::SweepAntennas { common, values } => {
            let (cfg, schemes) = common.resolve()?;
            let recs = harness::sweep_antennas(&cfg, &values, &schemes, cfg.trials)?;
            common.finish(&recs)
        }
        Command::SingleRun { common, trial } => {
            let (cfg, schemes) = common.resolve()?;
            let recs = schemes
                .iter()
                .map(|&s| harness::run_trial(&cfg, s, trial))
                .collect::<Result<Vec<_>>>()?;
            for r in &recs {
                println!(
                    "{:<16} ssr {:.6} (uplink {:.6}, downlink {:.6}) in {} iterations",
                    r.scheme, r.ssr, r.r_u, r.r_d, r.iters
                );
            }
            harness::write_records_with(&recs, &common.out, common.wall_clock)?;
            if let Some(path) = &common.trace {
                harness::write_traces(&recs, path)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
