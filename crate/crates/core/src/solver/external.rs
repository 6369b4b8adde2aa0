//! Escape hatch to an external MILP solver through LP files.
//!
//! The command is a shell template containing `{lp}` (the model file we
//! write) and `{sol}` (where the solver must leave its solution). Solutions
//! are read in CBC's text format:
//!
//! ```text
//! Optimal - objective value 3.00000000
//!       0 a                      1                       0
//! ```
//!
//! The first line carries the status; each following line holds an index,
//! a column name, a value and a reduced cost. Columns that are absent are 0.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use super::bnb::{MilpResult, MilpStatus};
use super::lpfile::{export_lp_text, lp_names};
use crate::milp::{MilpModel, ObjSense, Objective};

pub const SOLVER_CMD_ENV: &str = "OVERTPOLY_SOLVER_CMD";

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("could not run solver: {0}")]
    Spawn(String),
    #[error("solution file line {line}: cannot parse {text:?}")]
    Parse { line: usize, text: String },
    #[error("solver reported the model infeasible")]
    Infeasible,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses a CBC-style solution text against the model's LP names.
pub fn parse_cbc_solution(
    text: &str,
    model: &MilpModel,
    objective: &Objective,
) -> Result<MilpResult, ExternalError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(ExternalError::Parse {
        line: 1,
        text: String::new(),
    })?;
    let lower = head.trim().to_ascii_lowercase();
    let status = if lower.starts_with("optimal") {
        MilpStatus::Optimal
    } else if lower.starts_with("infeasible") || lower.contains("infeasible") {
        return Err(ExternalError::Infeasible);
    } else if lower.starts_with("unbounded") {
        MilpStatus::Unbounded
    } else if lower.starts_with("stopped") {
        MilpStatus::TimeLimit
    } else {
        return Err(ExternalError::Parse {
            line: 1,
            text: head.to_string(),
        });
    };
    let names = lp_names(model);
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(j, n)| (n.as_str(), j))
        .collect();
    let mut x = vec![0.0; model.num_vars()];
    for (k, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().filter(|t| *t != "**").collect();
        let bad = || ExternalError::Parse {
            line: k + 1,
            text: line.to_string(),
        };
        if toks.len() < 3 {
            return Err(bad());
        }
        toks[0].parse::<usize>().map_err(|_| bad())?;
        let j = *index.get(toks[1]).ok_or_else(bad)?;
        x[j] = toks[2].parse::<f64>().map_err(|_| bad())?;
    }
    let val = objective.value(&x);
    let (incumbent, bound, gap) = match status {
        MilpStatus::Optimal => (Some(val), val, 0.0),
        // no proven bound comes back from a stopped run
        _ => {
            let inf = if objective.sense == ObjSense::Maximize {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            (Some(val), inf, f64::INFINITY)
        }
    };
    Ok(MilpResult {
        status,
        incumbent,
        bound,
        gap,
        values: Some(x),
        nodes: 0,
        pivots: 0,
    })
}

/// Resolves the command template: the environment variable wins over the configured value.
pub fn resolve_solver_cmd(configured: Option<&str>) -> Result<String, ExternalError> {
    match std::env::var(SOLVER_CMD_ENV) {
        Ok(s) if !s.trim().is_empty() => Ok(s),
        _ => configured.map(str::to_string).ok_or_else(|| {
            ExternalError::Config(format!(
                "no solver.cmd configured and {SOLVER_CMD_ENV} unset"
            ))
        }),
    }
}

/// Writes the model to a scratch directory, runs `cmd`, parses the solution.
pub fn solve_external(
    model: &MilpModel,
    objective: &Objective,
    cmd: &str,
) -> Result<MilpResult, ExternalError> {
    if !cmd.contains("{lp}") || !cmd.contains("{sol}") {
        return Err(ExternalError::Config(format!(
            "solver command needs {{lp}} and {{sol}} placeholders: {cmd}"
        )));
    }
    let dir = tempfile::tempdir()?;
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("model.sol");
    std::fs::write(&lp, export_lp_text(model, Some(objective)))?;
    let line = cmd
        .replace("{lp}", &quote(&lp))
        .replace("{sol}", &quote(&sol));
    let out = Command::new("sh")
        .arg("-c")
        .arg(&line)
        .output()
        .map_err(|e| ExternalError::Spawn(e.to_string()))?;
    match out.status.code() {
        Some(0) => {}
        Some(127) => {
            return Err(ExternalError::Config(format!(
                "solver not found: {}",
                String::from_utf8_lossy(&out.stderr).trim()
            )))
        }
        code => {
            return Err(ExternalError::Spawn(format!(
                "exit {:?}: {}",
                code,
                String::from_utf8_lossy(&out.stderr).trim()
            )))
        }
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| ExternalError::Spawn(format!("solver wrote no solution file: {e}")))?;
    parse_cbc_solution(&text, model, objective)
}

fn quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', "'\\''"))
}
