//! Parameter sweeps over a worker pool.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::dbm_to_watts;

use super::config_io::render_config;
use super::scenario::{run_point, ExperimentRecord, Scheme, Status};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "COVERT_RIS_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    /// QoS target in bits/s/Hz.
    R0,
    Epsilon,
    /// Transmit power in dBm.
    P,
    GammaCrb,
    /// Channel uses.
    L,
    /// Alice-RIS angle in degrees.
    ThetaR,
    /// RIS elements, arranged as a square.
    M,
    NTx,
}

impl SweepVar {
    pub const ALL: [SweepVar; 8] = [
        SweepVar::R0,
        SweepVar::Epsilon,
        SweepVar::P,
        SweepVar::GammaCrb,
        SweepVar::L,
        SweepVar::ThetaR,
        SweepVar::M,
        SweepVar::NTx,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::R0 => "R0",
            SweepVar::Epsilon => "epsilon",
            SweepVar::P => "P",
            SweepVar::GammaCrb => "gamma_crb",
            SweepVar::L => "L",
            SweepVar::ThetaR => "theta_R",
            SweepVar::M => "M",
            SweepVar::NTx => "n_tx",
        }
    }

    fn integer(value: f64, what: &str) -> Result<usize> {
        if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
            Ok(value as usize)
        } else {
            Err(Error::ConfigRange { key: what.into(), msg: format!("needs a positive integer, got {value}") })
        }
    }

    /// Copy of `base` with this variable set to `value`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        match self {
            SweepVar::R0 => cfg.qos_rate = value,
            SweepVar::Epsilon => cfg.epsilon = value,
            SweepVar::P => cfg.power = dbm_to_watts(value),
            SweepVar::GammaCrb => cfg.gamma_crb = value,
            SweepVar::L => cfg.channel_uses = Self::integer(value, "L")?,
            SweepVar::ThetaR => cfg.theta_r = value.to_radians(),
            SweepVar::M => {
                let m = Self::integer(value, "M")?;
                let side = (m as f64).sqrt().round() as usize;
                if side * side != m {
                    return Err(Error::ConfigRange { key: "M".into(), msg: format!("{m} is not a square number") });
                }
                cfg.ris_rows = side;
                cfg.ris_cols = side;
            }
            SweepVar::NTx => cfg.n_tx = Self::integer(value, "n_tx")?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown sweep variable `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self, base: &SystemConfig) -> Result<()> {
        if self.values.is_empty() || self.seeds.is_empty() || self.schemes.is_empty() {
            return Err(Error::invalid("sweep needs at least one value, seed and scheme"));
        }
        for &v in &self.values {
            self.variable.apply(base, v)?;
        }
        Ok(())
    }
}

/// Per-scheme, per-value aggregate over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub runs: usize,
    pub optimal: usize,
    pub mean_covert_rate: Option<f64>,
    pub mean_carol_rate: Option<f64>,
    pub mean_achieved_crb: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Scheme, String, u64), Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.scheme(), r.sweep_var.clone(), r.sweep_value.to_bits())).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((scheme, var, bits), rs)| {
            let ok: Vec<&&ExperimentRecord> = rs.iter().filter(|r| r.status == Status::Optimal).collect();
            SummaryRow {
                scheme: scheme.to_string(),
                sweep_var: var,
                sweep_value: f64::from_bits(bits),
                runs: rs.len(),
                optimal: ok.len(),
                mean_covert_rate: mean(ok.iter().filter_map(|r| r.covert_rate)),
                mean_carol_rate: mean(ok.iter().filter_map(|r| r.carol_rate)),
                mean_achieved_crb: mean(ok.iter().filter_map(|r| r.achieved_crb)),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.sweep_value.total_cmp(&b.sweep_value)));
    rows
}

/// Worker pool honouring [`THREADS_ENV`].
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{s}`")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Sorts records into the canonical (scheme, value, seed) order.
pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        a.scheme()
            .cmp(&b.scheme())
            .then(a.sweep_value.total_cmp(&b.sweep_value))
            .then(a.seed.cmp(&b.seed))
    });
}

/// Runs every (scheme, value, seed) point in memory. Point failures are
/// recorded in the status column and never abort the sweep.
pub fn run_sweep_records(base: &SystemConfig, spec: &SweepSpec) -> Result<Vec<ExperimentRecord>> {
    spec.validate(base)?;
    let mut points = Vec::new();
    for &scheme in &spec.schemes {
        for &value in &spec.values {
            for &seed in &spec.seeds {
                points.push((scheme, value, seed));
            }
        }
    }
    let var = spec.variable.as_str();
    let pool = worker_pool()?;
    let mut records: Vec<ExperimentRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|&(scheme, value, seed)| {
                let cfg = spec.variable.apply(base, value).expect("validated above");
                run_point(&cfg, scheme, seed, var, value).0
            })
            .collect()
    });
    sort_records(&mut records);
    Ok(records)
}

pub fn write_records(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(super::scenario::CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        log::warn!("{} is empty", path.display());
        return Ok(Vec::new());
    }
    let expected: Vec<&str> = super::scenario::CSV_HEADER.split(',').collect();
    if header != expected {
        return Err(Error::Schema(format!("{}: header {:?} does not match {:?}", path.display(), header, expected)));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Runs the sweep and writes `sweep_<var>.csv`, `summary_<var>.csv` and
/// the resolved base configuration into `out_dir`.
pub fn run_sweep(base: &SystemConfig, spec: &SweepSpec, out_dir: &Path) -> Result<SweepOutput> {
    std::fs::create_dir_all(out_dir)?;
    let records = run_sweep_records(base, spec)?;
    let var = spec.variable.as_str();
    let csv_path = out_dir.join(format!("sweep_{var}.csv"));
    write_records(&csv_path, &records)?;
    let summary = summarize(&records);
    let summary_path = out_dir.join(format!("summary_{var}.csv"));
    let mut w = csv::Writer::from_path(&summary_path)?;
    for row in &summary {
        w.serialize(row)?;
    }
    w.flush()?;
    std::fs::write(out_dir.join("config.txt"), render_config(base))?;
    Ok(SweepOutput { records, summary, csv_path, summary_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{Access, CsiModel};

    fn rec(scheme: Scheme, value: f64, seed: u64, rate: Option<f64>) -> ExperimentRecord {
        ExperimentRecord {
            scenario: scheme.csi,
            access: scheme.access,
            sweep_var: "R0".into(),
            sweep_value: value,
            seed,
            status: if rate.is_some() { Status::Optimal } else { Status::Infeasible },
            covert_rate: rate,
            carol_rate: rate.map(|_| 1.0),
            covert_ratio: rate.map(|_| 1.01),
            achieved_crb: None,
            iters: 3,
            wall_s: 0.5,
        }
    }

    #[test]
    fn apply_sets_variables() {
        let base = SystemConfig::desk();
        assert_eq!(SweepVar::M.apply(&base, 9.0).unwrap().ris_elements(), 9);
        assert!(SweepVar::M.apply(&base, 8.0).is_err());
        assert!((SweepVar::P.apply(&base, 20.0).unwrap().power - 0.1).abs() < 1e-15);
        assert!(SweepVar::Epsilon.apply(&base, 1.5).is_err());
        assert_eq!("gamma_crb".parse::<SweepVar>().unwrap(), SweepVar::GammaCrb);
    }

    #[test]
    fn csv_round_trip_keeps_absent_rates() {
        let dir = tempfile::tempdir().unwrap();
        let s = Scheme::new(CsiModel::KnownPc, Access::Noma);
        let records = vec![rec(s, 0.0, 1, Some(2.5)), rec(s, 1.0, 1, None)];
        let path = dir.path().join("r.csv");
        write_records(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), crate::experiments::scenario::CSV_HEADER);
        assert!(text.lines().nth(2).unwrap().contains("infeasible,,,,"));
        assert_eq!(read_records(&path).unwrap(), records);
    }

    #[test]
    fn summary_ignores_failed_points() {
        let s = Scheme::new(CsiModel::KnownPc, Access::Noma);
        let rows = summarize(&[rec(s, 0.0, 1, Some(2.0)), rec(s, 0.0, 2, Some(4.0)), rec(s, 0.0, 3, None)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs, 3);
        assert_eq!(rows[0].optimal, 2);
        assert_eq!(rows[0].mean_covert_rate, Some(3.0));
    }

    #[test]
    fn wrong_header_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_records(&path), Err(Error::Schema(_))));
    }
}
