//! Solver-agnostic MILP representation.
//!
//! A [`MilpModel`] is a registry of named variables plus linear constraints
//! and a maximization objective. Models are assembled by the formulation
//! builders and then treated as immutable; the text emitters ([`emit_lp`],
//! [`emit_mps`]), the [`evaluate`] checker and the solvers all consume them
//! read-only.

mod write;

pub use write::{emit_lp, emit_mps, emit_mps_with_names};

use crate::constants::{FEASIBILITY_TOL, INTEGRALITY_TOL};
use std::collections::HashMap;
use thiserror::Error;

/// Handle to a registered variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef(usize);

impl VarRef {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    /// Rebuild a handle from a dense column index; callers must know the
    /// index is in range for the model at hand.
    #[inline]
    pub fn from_index(index: usize) -> VarRef {
        VarRef(index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// A registered variable: unique name, kind and bounds.
#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A linear row `sum(coef * var) sense rhs`. Terms are pre-merged: a variable
/// appears at most once.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarRef, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Error)]
pub enum MipError {
    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),
    #[error("variable {0:?} is not registered in this model")]
    UnknownVariable(String),
    #[error("invalid bounds [{lower}, {upper}] for {name:?}")]
    BadBounds { name: String, lower: f64, upper: f64 },
    #[error("assignment is missing a value for {0:?}")]
    MissingValue(String),
}

/// A maximization MILP.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    vars: Vec<VarDef>,
    by_name: HashMap<String, VarRef>,
    objective: Vec<(VarRef, f64)>,
    constraints: Vec<LinearConstraint>,
    branch_priority: Vec<i32>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarRef, MipError> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(MipError::DuplicateVariable(name));
        }
        if lower > upper
            || (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0))
        {
            return Err(MipError::BadBounds { name, lower, upper });
        }
        let var = VarRef(self.vars.len());
        self.by_name.insert(name.clone(), var);
        self.vars.push(VarDef { name, kind, lower, upper });
        self.branch_priority.push(0);
        Ok(var)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarRef, MipError> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarRef, MipError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    /// Merge duplicate variables and drop zero coefficients.
    fn merge_terms(terms: Vec<(VarRef, f64)>) -> Vec<(VarRef, f64)> {
        let mut merged: Vec<(VarRef, f64)> = Vec::with_capacity(terms.len());
        let mut seen: HashMap<VarRef, usize> = HashMap::new();
        for (v, c) in terms {
            match seen.get(&v) {
                Some(&idx) => merged[idx].1 += c,
                None => {
                    seen.insert(v, merged.len());
                    merged.push((v, c));
                }
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        merged
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarRef, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.vars.len()));
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms: Self::merge_terms(terms),
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarRef, f64)>) {
        self.objective = Self::merge_terms(terms);
    }

    /// Tighten or relax the bounds of an existing variable.
    pub fn set_bounds(&mut self, var: VarRef, lower: f64, upper: f64) -> Result<(), MipError> {
        if lower > upper {
            return Err(MipError::BadBounds {
                name: self.vars[var.0].name.clone(),
                lower,
                upper,
            });
        }
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
        Ok(())
    }

    /// Branching preference; higher classes are branched first.
    pub fn set_branch_priority(&mut self, var: VarRef, priority: i32) {
        self.branch_priority[var.0] = priority;
    }

    #[inline]
    pub fn branch_priority(&self, var: VarRef) -> i32 {
        self.branch_priority[var.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.by_name.get(name).copied()
    }

    #[inline]
    pub fn var(&self, var: VarRef) -> &VarDef {
        &self.vars[var.0]
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarRef, &VarDef)> {
        self.vars.iter().enumerate().map(|(i, d)| (VarRef(i), d))
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(VarRef, f64)] {
        &self.objective
    }

    pub fn objective_coefficient(&self, var: VarRef) -> f64 {
        self.objective
            .iter()
            .find(|(v, _)| *v == var)
            .map(|&(_, c)| c)
            .unwrap_or(0.0)
    }
}

/// A (possibly partial) value for every registered variable.
#[derive(Debug, Clone)]
pub struct Assignment {
    values: Vec<Option<f64>>,
}

impl Assignment {
    pub fn empty(model: &MilpModel) -> Self {
        Assignment { values: vec![None; model.num_vars()] }
    }

    /// Dense assignment from a full value vector (solver output).
    pub fn from_dense(values: Vec<f64>) -> Self {
        Assignment { values: values.into_iter().map(Some).collect() }
    }

    pub fn set(&mut self, var: VarRef, value: f64) {
        self.values[var.0] = Some(value);
    }

    pub fn set_by_name(&mut self, model: &MilpModel, name: &str, value: f64) -> Result<(), MipError> {
        let var = model
            .var_by_name(name)
            .ok_or_else(|| MipError::UnknownVariable(name.to_string()))?;
        self.set(var, value);
        Ok(())
    }

    /// Replace every missing value with `value`.
    pub fn fill_missing(&mut self, value: f64) {
        for v in &mut self.values {
            v.get_or_insert(value);
        }
    }

    pub fn get(&self, var: VarRef) -> Option<f64> {
        self.values.get(var.0).copied().flatten()
    }

    /// Value of `var`, treating missing as zero.
    pub fn value_or_zero(&self, var: VarRef) -> f64 {
        self.get(var).unwrap_or(0.0)
    }
}

/// Result of checking an assignment against a model.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    /// `(constraint or check name, violation magnitude)`, in model order.
    pub violations: Vec<(String, f64)>,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recompute the objective and list every constraint violated beyond the
/// feasibility tolerance, every binary away from an integer beyond the
/// integrality tolerance, and every variable outside its bounds.
pub fn evaluate(model: &MilpModel, asg: &Assignment) -> Result<Evaluation, MipError> {
    let mut values = Vec::with_capacity(model.num_vars());
    for (var, def) in model.vars() {
        match asg.get(var) {
            Some(v) => values.push(v),
            None => return Err(MipError::MissingValue(def.name.clone())),
        }
    }
    let objective = model
        .objective()
        .iter()
        .map(|&(v, c)| c * values[v.0])
        .sum();
    let mut violations = Vec::new();
    for c in model.constraints() {
        let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * values[v.0]).sum();
        let amount = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        if amount > FEASIBILITY_TOL {
            violations.push((c.name.clone(), amount));
        }
    }
    for (var, def) in model.vars() {
        let v = values[var.0];
        if def.kind == VarKind::Binary && (v - v.round()).abs() > INTEGRALITY_TOL {
            violations.push((format!("integrality:{}", def.name), (v - v.round()).abs()));
        }
        let below = def.lower - v;
        let above = v - def.upper;
        if below > FEASIBILITY_TOL || above > FEASIBILITY_TOL {
            violations.push((format!("bound:{}", def.name), below.max(above)));
        }
    }
    Ok(Evaluation { objective, violations })
}

/// Exact pre-presolve size counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ModelStats {
    pub binary: usize,
    pub continuous: usize,
    pub constraints: usize,
}

pub fn model_stats(model: &MilpModel) -> ModelStats {
    let binary = model
        .vars()
        .filter(|(_, d)| d.kind == VarKind::Binary)
        .count();
    ModelStats {
        binary,
        continuous: model.num_vars() - binary,
        constraints: model.constraints().len(),
    }
}
