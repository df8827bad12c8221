//! Parameter sweeps, CSV records and summary statistics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::ao::{IterationSummary, Scheme, run_scheme};
use crate::channel::sample_scenario;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "sweep_name",
    "sweep_value",
    "seed",
    "ssr",
    "r_u",
    "r_d",
    "iters",
    "tightness",
    "feasible",
    "ms",
];

/// Relative gap between the relaxed and the rank-one objective above which
/// a run is flagged.
pub const RELAXATION_FLAG: f64 = 0.01;

/// One scheme on one trial of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    /// Seed of the channel realization.
    pub seed: u64,
    pub ssr: f64,
    pub r_u: f64,
    pub r_d: f64,
    /// Outer iterations performed.
    pub iters: usize,
    /// Largest `λ₂/λ₁` of the final transmit covariances.
    pub tightness: f64,
    pub feasible: bool,
    pub ms: f64,
    #[serde(skip)]
    pub point: usize,
    #[serde(skip)]
    pub trial: usize,
    #[serde(skip)]
    pub relaxation_gap: f64,
    #[serde(skip)]
    pub trace: Vec<IterationSummary>,
}

impl ExperimentRecord {
    pub fn relaxation_flagged(&self) -> bool {
        self.relaxation_gap > RELAXATION_FLAG
    }
}

/// Seed of the channel realization of `trial`. The sweep point is not mixed
/// in, so every point of a sweep sees the same channel draws.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, &[trial as u64])
}

/// Run one scheme on one trial in double precision.
pub fn run_trial(config: &SystemConfig, scheme: Scheme, trial: usize) -> Result<ExperimentRecord> {
    let seed = trial_seed(config.seed, trial);
    let scenario = sample_scenario::<f64>(config, seed)?;
    let run = run_scheme(scheme, &scenario, config, seed)?;
    let out = run.outcome;
    let last = out.trace.iterations.last();
    Ok(ExperimentRecord {
        scheme,
        sweep_name: String::new(),
        sweep_value: 0.0,
        seed,
        ssr: out.report.sum,
        r_u: out.report.uplink,
        r_d: out.report.downlink,
        iters: out.trace.iterations.len(),
        tightness: last.map_or(0.0, |s| s.tightness),
        feasible: out.constraints.all(),
        ms: run.elapsed_ms,
        point: 0,
        trial,
        relaxation_gap: last.map_or(0.0, |s| s.relaxation_gap),
        trace: out.trace.iterations,
    })
}

/// A sweep point: its value and the configuration to run there.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub name: String,
    pub value: f64,
    pub config: SystemConfig,
}

/// Run every `(point, scheme, trial)` combination in parallel. Records come
/// back ordered by point, then scheme in the order given, then trial.
pub fn run_sweep(points: &[SweepPoint], schemes: &[Scheme], trials: usize) -> Result<Vec<ExperimentRecord>> {
    for p in points {
        p.config.validate()?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..points.len())
        .flat_map(|p| (0..schemes.len()).flat_map(move |s| (0..trials).map(move |t| (p, s, t))))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(p, s, t)| {
            let point = &points[p];
            let mut rec = run_trial(&point.config, schemes[s], t)?;
            log::info!(
                "{} {}={} trial {t}: ssr {:.4}",
                schemes[s],
                point.name,
                point.value,
                rec.ssr
            );
            rec.sweep_name = point.name.clone();
            rec.sweep_value = point.value;
            rec.point = p;
            Ok((s, rec))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|(s, r)| (r.point, *s, r.trial));
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

/// Region side length `A/λ` sweep.
pub fn sweep_region_size(
    config: &SystemConfig,
    regions: &[f64],
    schemes: &[Scheme],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    let points = regions
        .iter()
        .map(|&a| SweepPoint {
            name: "region".into(),
            value: a,
            config: SystemConfig { region: a, ..config.clone() },
        })
        .collect::<Vec<_>>();
    run_sweep(&points, schemes, trials)
}

/// Residual self-interference sweep in dB, repeated for each BS power in dBm.
pub fn sweep_sic(
    config: &SystemConfig,
    rho_db: &[f64],
    p_b_dbm: &[f64],
    schemes: &[Scheme],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    let mut points = Vec::new();
    for &p in p_b_dbm {
        for &r in rho_db {
            let mut cfg = config.clone();
            cfg.set("rho", &format!("{r}dB"))?;
            cfg.set("p_b", &format!("{p}dBm"))?;
            points.push(SweepPoint {
                name: format!("rho_db@p_b_dbm={p}"),
                value: r,
                config: cfg,
            });
        }
    }
    run_sweep(&points, schemes, trials)
}

/// Antenna count sweep with `N_t = N_r = N`.
pub fn sweep_antennas(
    config: &SystemConfig,
    counts: &[usize],
    schemes: &[Scheme],
    trials: usize,
) -> Result<Vec<ExperimentRecord>> {
    let points = counts
        .iter()
        .map(|&n| SweepPoint {
            name: "antennas".into(),
            value: n as f64,
            config: SystemConfig {
                n_t: n,
                n_r: n,
                ..config.clone()
            },
        })
        .collect::<Vec<_>>();
    run_sweep(&points, schemes, trials)
}

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write records as CSV. Floats carry 12 significant digits. The `ms`
/// column is written as zero unless `timing` is set, which keeps output
/// byte-identical across reruns.
pub fn write_records_with(records: &[ExperimentRecord], path: &Path, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scheme.id().to_string(),
            r.sweep_name.clone(),
            sci(r.sweep_value),
            r.seed.to_string(),
            sci(r.ssr),
            sci(r.r_u),
            sci(r.r_d),
            r.iters.to_string(),
            sci(r.tightness),
            r.feasible.to_string(),
            sci(if timing { r.ms } else { 0.0 }),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    write_records_with(records, path, false)
}

/// A CSV row read back.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: Scheme,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub ssr: f64,
    pub r_u: f64,
    pub r_d: f64,
    pub iters: usize,
    pub tightness: f64,
    pub feasible: bool,
    pub ms: f64,
}

pub fn read_records(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| Error::Parse {
                line,
                reason: format!("column `{}` is not a number", CSV_HEADER[k]),
            })
        };
        let int = |k: usize| -> Result<u64> {
            field(k).parse().map_err(|_| Error::Parse {
                line,
                reason: format!("column `{}` is not an integer", CSV_HEADER[k]),
            })
        };
        rows.push(CsvRow {
            scheme: field(0).parse()?,
            sweep_name: field(1).to_string(),
            sweep_value: num(2)?,
            seed: int(3)?,
            ssr: num(4)?,
            r_u: num(5)?,
            r_d: num(6)?,
            iters: int(7)? as usize,
            tightness: num(8)?,
            feasible: field(9).parse().map_err(|_| Error::Parse {
                line,
                reason: "column `feasible` is not a boolean".into(),
            })?,
            ms: num(10)?,
        });
    }
    Ok(rows)
}

/// Write per-iteration traces as JSON lines.
pub fn write_traces(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        scheme: Scheme,
        sweep_name: &'a str,
        sweep_value: f64,
        seed: u64,
        #[serde(flatten)]
        iteration: &'a IterationSummary,
    }
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        for it in &r.trace {
            let line = Line {
                scheme: r.scheme,
                sweep_name: &r.sweep_name,
                sweep_value: r.sweep_value,
                seed: r.seed,
                iteration: it,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Mean sum rate per `(sweep value, scheme)`, in record order.
pub fn mean_ssr(records: &[ExperimentRecord]) -> Vec<(f64, Scheme, f64)> {
    let mut out: Vec<(f64, Scheme, f64, usize)> = Vec::new();
    for r in records {
        match out
            .iter_mut()
            .find(|(v, s, _, _)| *s == r.scheme && v.to_bits() == r.sweep_value.to_bits())
        {
            Some(e) => {
                e.2 += r.ssr;
                e.3 += 1;
            }
            None => out.push((r.sweep_value, r.scheme, r.ssr, 1)),
        }
    }
    out.into_iter().map(|(v, s, sum, n)| (v, s, sum / n as f64)).collect()
}

/// Outcome of a one-sided sign test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignTest {
    pub positive: usize,
    /// Non-tied pairs.
    pub n: usize,
    /// `P(X ≥ positive)` for `X ~ Bin(n, 1/2)`.
    pub p_value: f64,
}

/// Sign test of `H1: median(diffs) > 0`. Differences with magnitude at most
/// `tie` are dropped.
pub fn sign_test(diffs: &[f64], tie: f64) -> SignTest {
    let kept: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > tie).collect();
    let n = kept.len();
    let positive = kept.iter().filter(|d| **d > 0.0).count();
    SignTest {
        positive,
        n,
        p_value: binomial_upper_tail(n, positive),
    }
}

fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // exact with log-binomials; n is small
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_c = 0.0f64; // ln C(n, 0)
    let mut total = 0.0;
    for j in 0..=n {
        if j > 0 {
            ln_c += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            total += (ln_c + ln_half_n).exp();
        }
    }
    total.min(1.0)
}
