//! Command implementations behind the `sphavg` binary. Every command returns
//! its numeric payload both as JSON and as a flat table, and every output
//! embeds the [`RunConfig`] that produced it.

use crate::error::{invalid, Error, Result};
use crate::expsums::{kloosterman_direct, weil_sample, GaussTable, DIRECT_COST_CAP};
use crate::extremal::{level_set_members, DEFAULT_EPSILON, DEFAULT_THRESHOLD};
use crate::lattice::{admissible, count_ratio_sweep};
use crate::multiplier::{proof_split_certificates, residual_sweep, DecompositionParams, DEFAULT_GRID, DEFAULT_SEED};
use crate::numeric::isqrt;
use crate::operator::improving_sweep;
use crate::selftest::{run_selftest, SelftestOptions};
use crate::NormCertificate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Sphere,
    Kloosterman,
    Residual,
    Improve,
    Counterexample,
    Proofsplit,
    Selftest,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub lambda2: Option<u64>,
    pub lambda2_max: Option<u64>,
    pub p: f64,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub cutoff_n: Option<u64>,
    pub eta: f64,
    pub epsilon: f64,
    pub threshold_c: f64,
    pub grid: usize,
    pub torus: Option<usize>,
    pub seed: u64,
    pub q_min: Option<u64>,
    pub q_max: Option<u64>,
    #[serde(default)]
    pub oracle: bool,
    #[serde(default)]
    pub corrupt_roots: bool,
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command, d: usize) -> Self {
        Self {
            command,
            d,
            lambda2: None,
            lambda2_max: None,
            p: 1.8,
            p1: None,
            p2: None,
            cutoff_n: None,
            eta: 0.25,
            epsilon: DEFAULT_EPSILON,
            threshold_c: DEFAULT_THRESHOLD,
            grid: DEFAULT_GRID,
            torus: None,
            seed: DEFAULT_SEED,
            q_min: None,
            q_max: None,
            oracle: false,
            corrupt_roots: false,
            format: Format::Json,
        }
    }

    fn lambda2(&self) -> Result<u64> {
        self.lambda2.ok_or_else(|| invalid("--lambda2 is required"))
    }

    /// `lambda2..=lambda2_max`, or the single radius when no maximum is set.
    fn lambda2_range(&self) -> Result<std::ops::RangeInclusive<u64>> {
        let lo = self.lambda2.unwrap_or(1);
        Ok(lo..=self.lambda2_max.unwrap_or(self.lambda2()?))
    }
}

/// A flat view of a result for CSV output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub config: RunConfig,
    pub results: Value,
    pub table: Table,
    /// Set when a self-test check failed.
    pub failed: bool,
}

impl CommandOutput {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&json!({ "config": self.config, "results": self.results }))?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        match self.config.format {
            Format::Json => {
                writeln!(w, "{}", self.to_json()?)?;
            }
            Format::Csv => {
                writeln!(w, "# config: {}", serde_json::to_string(&self.config)?)?;
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(&self.table.headers)?;
                for row in &self.table.rows {
                    csv.write_record(row)?;
                }
                csv.flush()?;
            }
        }
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn cert_row(prefix: Vec<String>, c: &NormCertificate) -> Vec<String> {
    let mut row = prefix;
    row.extend([c.kind.clone(), num(c.left), num(c.right), num(c.ratio)]);
    row
}

pub fn cmd_sphere(cfg: &RunConfig) -> Result<CommandOutput> {
    let range = cfg.lambda2_range()?;
    let sweep = if range.is_empty() {
        crate::lattice::CountRatioSweep { d: cfg.d, rows: Vec::new(), window: None }
    } else {
        count_ratio_sweep(cfg.d, range)?
    };
    let mut table = Table::new(&["lambda2", "count", "ratio", "admissible"]);
    for r in &sweep.rows {
        table.push(vec![r.lambda2.to_string(), r.count.to_string(), num(r.ratio), r.admissible.to_string()]);
    }
    Ok(CommandOutput { config: cfg.clone(), results: serde_json::to_value(&sweep)?, table, failed: false })
}

pub fn cmd_kloosterman(cfg: &RunConfig) -> Result<CommandOutput> {
    let l2 = cfg.lambda2()?;
    let q_lo = cfg.q_min.unwrap_or(1).max(1);
    let q_hi = cfg.q_max.unwrap_or(isqrt(l2));
    let mut rows = Vec::new();
    let mut table = Table::new(&["q", "kind", "left", "right", "ratio", "oracle_error"]);
    for q in q_lo..=q_hi {
        let tbl = GaussTable::new(q);
        let cert = crate::expsums::weil_ratio_with(&tbl, l2, cfg.d, cfg.eta)?;
        let mut oracle = None;
        if cfg.oracle && (q as u128).pow(cfg.d as u32) <= DIRECT_COST_CAP as u128 {
            let mut worst: f64 = 0.0;
            for l in weil_sample(l2, q, cfg.d) {
                let direct = kloosterman_direct(l2, q, &l)?;
                worst = worst.max((tbl.kloosterman(l2, &l)? - direct.re).abs()).max(direct.im.abs());
            }
            oracle = Some(worst);
        }
        table.push(cert_row(vec![q.to_string()], &cert).into_iter().chain([oracle.map(num).unwrap_or_default()]).collect());
        rows.push(json!({ "q": q, "certificate": cert, "oracle_error": oracle }));
    }
    let growth = {
        let samples: Vec<(f64, f64)> =
            rows.iter().map(|r| (r["q"].as_f64().unwrap_or(0.0), r["certificate"]["ratio"].as_f64().unwrap_or(0.0))).collect();
        crate::stats::no_growth(&samples, 2.0)
    };
    Ok(CommandOutput { config: cfg.clone(), results: json!({ "rows": rows, "growth": growth }), table, failed: false })
}

pub fn cmd_residual(cfg: &RunConfig) -> Result<CommandOutput> {
    let l2s: Vec<u64> = cfg.lambda2_range()?.filter(|&l2| admissible(cfg.d, l2).unwrap_or(false)).collect();
    if l2s.is_empty() {
        return Err(invalid("residual: no admissible radius in range"));
    }
    let sweep = residual_sweep(cfg.d, &l2s, cfg.grid, cfg.seed, cfg.epsilon)?;
    let mut table = Table::new(&["lambda2", "kind", "left", "right", "ratio"]);
    for (l2, c) in l2s.iter().zip(&sweep.certificates) {
        table.push(cert_row(vec![l2.to_string()], c));
    }
    Ok(CommandOutput { config: cfg.clone(), results: serde_json::to_value(&sweep)?, table, failed: false })
}

pub fn cmd_improve(cfg: &RunConfig) -> Result<CommandOutput> {
    let l2s: Vec<u64> = cfg.lambda2_range()?.filter(|&l2| admissible(cfg.d, l2).unwrap_or(false)).collect();
    if l2s.is_empty() {
        return Err(invalid("improve: no admissible radius in range"));
    }
    let sweep = improving_sweep(cfg.d, &l2s, cfg.p, cfg.seed)?;
    let mut table = Table::new(&["lambda2", "pair", "kind", "left", "right", "ratio"]);
    for r in &sweep.rows {
        table.push(cert_row(vec![r.lambda2.to_string(), r.pair.clone()], &r.certificate));
    }
    Ok(CommandOutput { config: cfg.clone(), results: serde_json::to_value(&sweep)?, table, failed: false })
}

/// The report as JSON; in CSV the rows are the members of `G_λ`.
pub fn cmd_counterexample(cfg: &RunConfig) -> Result<CommandOutput> {
    let l2 = cfg.lambda2()?;
    let (report, members) = level_set_members(cfg.d, l2, cfg.threshold_c, cfg.epsilon, cfg.seed)?;
    let headers: Vec<String> = (0..cfg.d).map(|i| format!("x{i}")).collect();
    let rows = members.iter().map(|p| p.iter().map(|c| c.to_string()).collect()).collect();
    Ok(CommandOutput { config: cfg.clone(), results: serde_json::to_value(&report)?, table: Table { headers, rows }, failed: false })
}

pub fn cmd_proofsplit(cfg: &RunConfig) -> Result<CommandOutput> {
    let l2 = cfg.lambda2()?;
    let params = DecompositionParams {
        cutoff_n: cfg.cutoff_n.ok_or_else(|| invalid("--cutoff-N is required"))?,
        epsilon: cfg.epsilon,
        grid: cfg.grid,
        seed: cfg.seed,
        ..DecompositionParams::new(cfg.d, l2)
    };
    let split = proof_split_certificates(&params, cfg.torus)?;
    let mut table = Table::new(&["branch", "kind", "left", "right", "ratio"]);
    for c in &split.certificates {
        table.push(cert_row(vec![split.branch.clone()], c));
    }
    Ok(CommandOutput { config: cfg.clone(), results: serde_json::to_value(&split)?, table, failed: false })
}

pub fn cmd_selftest(cfg: &RunConfig) -> Result<CommandOutput> {
    let opts = SelftestOptions { corrupt_roots: cfg.corrupt_roots, seed: cfg.seed, ..SelftestOptions::default() };
    let report = run_selftest(&opts);
    let mut table = Table::new(&["check", "passed", "max_error", "tolerance", "cases", "seconds"]);
    for c in &report.checks {
        table.push(vec![
            c.name.clone(),
            c.passed.to_string(),
            num(c.max_error),
            num(c.tolerance),
            c.cases.to_string(),
            format!("{:.3}", c.seconds),
        ]);
    }
    Ok(CommandOutput { config: cfg.clone(), failed: !report.passed, results: serde_json::to_value(&report)?, table })
}

pub fn run(cfg: &RunConfig) -> Result<CommandOutput> {
    if cfg.d < 1 {
        return Err(invalid("--dim must be positive"));
    }
    match cfg.command {
        Command::Sphere => cmd_sphere(cfg),
        Command::Kloosterman => cmd_kloosterman(cfg),
        Command::Residual => cmd_residual(cfg),
        Command::Improve => cmd_improve(cfg),
        Command::Counterexample => cmd_counterexample(cfg),
        Command::Proofsplit => cmd_proofsplit(cfg),
        Command::Selftest => cmd_selftest(cfg),
    }
}

/// Reads the config back from a JSON output, a CSV output (`# config:` line)
/// or a bare config object. Returns the stored results when present.
pub fn read_saved(text: &str) -> Result<(RunConfig, Option<Value>)> {
    let trimmed = text.trim_start();
    if let Some(line) = trimmed.lines().find_map(|l| l.strip_prefix("# config:")) {
        return Ok((serde_json::from_str(line.trim())?, None));
    }
    let v: Value = serde_json::from_str(trimmed)?;
    if let Some(cfg) = v.get("config") {
        return Ok((serde_json::from_value(cfg.clone())?, v.get("results").cloned()));
    }
    Ok((serde_json::from_value(v)?, None))
}

/// Drops wall-clock fields so payloads from different runs can be compared.
pub fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("seconds");
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

/// Re-runs a saved config; errors if stored results differ from the new ones.
pub fn replay(text: &str) -> Result<CommandOutput> {
    let (cfg, stored) = read_saved(text)?;
    let out = run(&cfg)?;
    if let Some(mut old) = stored {
        let mut new = out.results.clone();
        strip_timings(&mut old);
        strip_timings(&mut new);
        if old != new {
            return Err(Error::Precision("replay: results differ from the stored payload".into()));
        }
    }
    Ok(out)
}

pub fn read_csv_config<R: BufRead>(r: R) -> Result<RunConfig> {
    for line in r.lines() {
        if let Some(rest) = line?.strip_prefix("# config:") {
            return Ok(serde_json::from_str(rest.trim())?);
        }
    }
    Err(Error::Format("no '# config:' line".into()))
}
