//! Run artefacts: chain CSVs, summary CSV, metadata JSON.

use super::hmc::{HmcConfig, HmcRun, ParamSummary};
use crate::error::CoreError;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Writes one `chain_<i>.csv` per chain (header = parameter names, one draw
/// per row) into `dir`.
pub fn write_chain_csvs(run: &HmcRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir.display().to_string(), e))?;
    for (ci, chain) in run.chains.iter().enumerate() {
        let mut out = String::new();
        out.push_str(&run.param_names.join(","));
        out.push('\n');
        for row in chain.draws.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        let path = dir.join(format!("chain_{ci}.csv"));
        std::fs::write(&path, out).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Writes `param,mean,sd,q05,q95,ess,rhat` rows.
pub fn write_summary_csv(summaries: &[ParamSummary], path: &Path) -> Result<()> {
    let mut out = String::from("param,mean,sd,q05,q95,ess,rhat\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.name, s.mean, s.sd, s.q05, s.q95, s.ess, s.rhat
        );
    }
    std::fs::write(path, out).map_err(|e| CoreError::io(path.display().to_string(), e))
}

/// Reads a summary CSV back (used by the comparison report).
pub fn read_summary_csv(path: &Path) -> Result<Vec<ParamSummary>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let p = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == "param,mean,sd,q05,q95,ess,rhat" => {}
        _ => {
            return Err(CoreError::parse(
                &p,
                "line 1",
                "expected header param,mean,sd,q05,q95,ess,rhat",
            ))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CoreError::parse(
                &p,
                format!("line {}", lineno + 1),
                format!("expected 7 fields, got {}", fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| {
                CoreError::parse(
                    &p,
                    format!("line {}, field {}", lineno + 1, i + 1),
                    format!("not a float: {:?}", fields[i]),
                )
            })
        };
        out.push(ParamSummary {
            name: fields[0].to_string(),
            mean: num(1)?,
            sd: num(2)?,
            q05: num(3)?,
            q95: num(4)?,
            ess: num(5)?,
            rhat: num(6)?,
            ess_per_s: f64::NAN,
        });
    }
    Ok(out)
}

/// Run-level metadata stored next to the chains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config: HmcConfig,
    pub wall_secs: f64,
    pub divergences: usize,
    pub divergence_warning: bool,
    /// Total ESS summed over parameters, for quick efficiency comparisons.
    pub total_ess: f64,
}

impl RunMetadata {
    pub fn from_run(run: &HmcRun, summaries: &[ParamSummary]) -> Self {
        RunMetadata {
            seed: run.config.seed,
            config: run.config,
            wall_secs: run.wall_secs,
            divergences: run.total_divergences(),
            divergence_warning: run.divergence_warning,
            total_ess: summaries.iter().map(|s| s.ess).sum(),
        }
    }
}

pub fn write_run_metadata(meta: &RunMetadata, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).expect("serializable");
    std::fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
}

pub fn read_run_metadata(path: &Path) -> Result<RunMetadata> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| {
        CoreError::parse(
            path.display().to_string(),
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}
