//! Adapter for external MILP backends driven by file exchange.
//!
//! The model is written as LP or MPS text, the backend command runs with the
//! `{model}` and `{solution}` placeholders substituted (whitespace-split, no
//! shell), and the solution file is read back as `name value` lines with `#`
//! comments; variables missing from the file default to zero. The decoded
//! assignment is re-checked against the model and rejected on any violation,
//! so a buggy backend cannot smuggle an infeasible answer through.

use super::{MilpResult, MilpStatus, SolverError};
use crate::mip::{emit_lp, emit_mps_with_names, evaluate, Assignment, MilpModel, VarRef};
use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Lp,
    Mps,
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Lp => "lp",
            ModelFormat::Mps => "mps",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "lp" => Some(ModelFormat::Lp),
            "mps" => Some(ModelFormat::Mps),
            _ => None,
        }
    }
}

/// How to invoke an external solver.
#[derive(Debug, Clone)]
pub struct BackendConfig {
    /// Command template containing `{model}` and `{solution}` placeholders,
    /// split on whitespace.
    pub command: String,
    pub format: ModelFormat,
}

pub fn solve_external(
    model: &MilpModel,
    cfg: &BackendConfig,
    workdir: &Path,
) -> Result<MilpResult, SolverError> {
    if !cfg.command.contains("{model}") || !cfg.command.contains("{solution}") {
        return Err(SolverError::BackendTemplate);
    }
    std::fs::create_dir_all(workdir)?;
    let model_path = workdir.join(format!("model.{}", cfg.format.extension()));
    let solution_path = workdir.join("solution.sol");

    // Name lookup for decoding; MPS emission shortens names.
    let name_map: HashMap<String, VarRef> = match cfg.format {
        ModelFormat::Lp => {
            std::fs::write(&model_path, emit_lp(model))?;
            model.vars().map(|(v, d)| (d.name.clone(), v)).collect()
        }
        ModelFormat::Mps => {
            let (text, map) = emit_mps_with_names(model);
            std::fs::write(&model_path, text)?;
            map.into_iter().collect()
        }
    };

    let tokens: Vec<String> = cfg
        .command
        .split_whitespace()
        .map(|t| {
            t.replace("{model}", &model_path.to_string_lossy())
                .replace("{solution}", &solution_path.to_string_lossy())
        })
        .collect();
    let (program, args) = tokens
        .split_first()
        .ok_or(SolverError::BackendTemplate)?;
    let output = Command::new(program)
        .args(args)
        .current_dir(workdir)
        .output()
        .map_err(|e| SolverError::BackendLaunch(format!("{program}: {e}")))?;
    if !output.status.success() {
        return Err(SolverError::BackendRun(format!(
            "{} (stderr: {})",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }

    let text = std::fs::read_to_string(&solution_path).map_err(|e| {
        SolverError::BackendRun(format!(
            "backend produced no readable solution file at {}: {e}",
            solution_path.display()
        ))
    })?;
    let mut asg = Assignment::empty(model);
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SolverError::BackendParse {
                line: raw.to_string(),
                reason: "expected exactly `name value`".to_string(),
            });
        };
        let var = name_map.get(name).copied().ok_or_else(|| SolverError::BackendParse {
            line: raw.to_string(),
            reason: format!("unknown variable {name:?}"),
        })?;
        let value: f64 = value.parse().map_err(|e| SolverError::BackendParse {
            line: raw.to_string(),
            reason: format!("bad number: {e}"),
        })?;
        asg.set(var, value);
    }
    asg.fill_missing(0.0);

    let ev = evaluate(model, &asg).map_err(|e| SolverError::BackendParse {
        line: String::new(),
        reason: e.to_string(),
    })?;
    if let Some((constraint, amount)) = ev.violations.first().cloned() {
        return Err(SolverError::SolutionIntegrity { constraint, amount });
    }
    Ok(MilpResult {
        status: MilpStatus::Optimal,
        incumbent: Some(asg),
        objective: ev.objective,
        best_bound: ev.objective,
        nodes_explored: 0,
    })
}
