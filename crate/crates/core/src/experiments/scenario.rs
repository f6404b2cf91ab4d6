//! Single scenario runs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::optimizer::{solve_scheme, Access, CsiModel, LiftedSolution};

use super::config_io::{parse_config, render_config};

/// A CSI model paired with an access mode, written `known-pc-noma` etc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scheme {
    pub csi: CsiModel,
    pub access: Access,
}

impl Scheme {
    pub const fn new(csi: CsiModel, access: Access) -> Self {
        Scheme { csi, access }
    }

    /// All six combinations.
    pub fn all() -> Vec<Scheme> {
        let mut out = Vec::new();
        for access in [Access::Noma, Access::Oma] {
            for csi in CsiModel::ALL {
                out.push(Scheme { csi, access });
            }
        }
        out
    }

    /// Parses a comma list; `all` expands to every scheme.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            if item == "all" {
                out.extend(Scheme::all());
            } else {
                out.push(item.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::invalid("empty scheme list"));
        }
        Ok(out)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.csi, self.access)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (csi, access) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::invalid(format!("scheme `{s}` should look like `known-pc-noma`")))?;
        Ok(Scheme { csi: csi.parse()?, access: access.parse()? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Nonconverged,
    Failed,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Nonconverged => "nonconverged",
            Status::Failed => "failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a results file. Rates and diagnostics are absent unless the
/// status is optimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scenario: CsiModel,
    pub access: Access,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub status: Status,
    pub covert_rate: Option<f64>,
    pub carol_rate: Option<f64>,
    pub covert_ratio: Option<f64>,
    pub achieved_crb: Option<f64>,
    pub iters: usize,
    pub wall_s: f64,
}

pub const CSV_HEADER: &str =
    "scenario,access,sweep_var,sweep_value,seed,status,covert_rate,carol_rate,covert_ratio,achieved_crb,iters,wall_s";

impl ExperimentRecord {
    pub fn scheme(&self) -> Scheme {
        Scheme::new(self.scenario, self.access)
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &ExperimentRecord) -> bool {
        ExperimentRecord { wall_s: 0.0, ..self.clone() } == ExperimentRecord { wall_s: 0.0, ..other.clone() }
    }
}

/// Runs one scheme on the channel drawn from `seed`, also returning the
/// solution when one was produced.
pub fn run_point(
    cfg: &SystemConfig,
    scheme: Scheme,
    seed: u64,
    sweep_var: &str,
    sweep_value: f64,
) -> (ExperimentRecord, Option<LiftedSolution>) {
    let start = Instant::now();
    let outcome = ChannelSet::generate(cfg, seed).and_then(|ch| solve_scheme(cfg, &ch, scheme.csi, scheme.access));
    let mut rec = ExperimentRecord {
        scenario: scheme.csi,
        access: scheme.access,
        sweep_var: sweep_var.to_string(),
        sweep_value,
        seed,
        status: Status::Optimal,
        covert_rate: None,
        carol_rate: None,
        covert_ratio: None,
        achieved_crb: None,
        iters: 0,
        wall_s: 0.0,
    };
    let sol = match outcome {
        Ok(sol) => {
            rec.covert_rate = Some(sol.covert_rate);
            rec.carol_rate = Some(sol.carol_rate);
            rec.covert_ratio = Some(sol.worst_covert_ratio);
            rec.achieved_crb = sol.achieved_crb;
            rec.iters = sol.iterations();
            Some(sol)
        }
        Err(Error::NonConvergence { reason, best }) => {
            log::info!("{scheme} seed {seed}: {reason}");
            rec.status = Status::Nonconverged;
            rec.iters = best.iterations();
            Some(*best)
        }
        Err(e @ (Error::Infeasible(_) | Error::Unidentifiable(_))) => {
            log::info!("{scheme} seed {seed}: {e}");
            rec.status = Status::Infeasible;
            None
        }
        Err(e) => {
            log::warn!("{scheme} seed {seed}: {e}");
            rec.status = Status::Failed;
            None
        }
    };
    rec.wall_s = start.elapsed().as_secs_f64();
    (rec, sol)
}

/// Runs one scheme outside any sweep.
pub fn run_scenario(cfg: &SystemConfig, scheme: Scheme, seed: u64) -> ExperimentRecord {
    run_point(cfg, scheme, seed, "none", 0.0).0
}

/// A run persisted as JSON together with the configuration that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SavedRun {
    pub scheme: Scheme,
    pub seed: u64,
    /// Configuration in the flat text format.
    pub config: String,
    pub record: ExperimentRecord,
    pub solution: Option<LiftedSolution>,
}

impl SavedRun {
    pub fn new(cfg: &SystemConfig, record: ExperimentRecord, solution: Option<LiftedSolution>) -> Self {
        SavedRun { scheme: record.scheme(), seed: record.seed, config: render_config(cfg), record, solution }
    }

    pub fn config(&self) -> Result<SystemConfig> {
        parse_config(&self.config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
