//! Mixed-integer linear models: bounded variables, linear rows, objective.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl RowSense {
    pub fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, a)| a * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            RowSense::Le => (a - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - a).max(0.0),
            RowSense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn minimize(terms: Vec<(VarId, f64)>) -> Objective {
        Objective {
            sense: ObjSense::Minimize,
            terms,
            constant: 0.0,
        }
    }

    pub fn maximize(terms: Vec<(VarId, f64)>) -> Objective {
        Objective {
            sense: ObjSense::Maximize,
            terms,
            constant: 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[v.0]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("variable name {0} declared twice")]
    DuplicateName(String),
    #[error("variable {name} has empty bounds [{lo}, {hi}]")]
    EmptyBounds { name: String, lo: f64, hi: f64 },
    #[error("constraint references undeclared variable {0}")]
    UnknownVariable(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
    objective: Option<Objective>,
    names: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new() -> MilpModel {
        MilpModel::default()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        kind: VarKind,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(ModelError::DuplicateName(name));
        }
        let (lo, hi) = if kind == VarKind::Binary {
            (lo.max(0.0), hi.min(1.0))
        } else {
            (lo, hi)
        };
        if !(lo <= hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(ModelError::EmptyBounds { name, lo, hi });
        }
        let id = VarId(self.vars.len());
        self.names.insert(name.clone(), id);
        self.vars.push(Variable { name, lo, hi, kind });
        Ok(id)
    }

    pub fn continuous(
        &mut self,
        name: impl Into<String>,
        lo: f64,
        hi: f64,
    ) -> Result<VarId, ModelError> {
        self.add_var(name, lo, hi, VarKind::Continuous)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_row(
        &mut self,
        terms: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> Result<(), ModelError> {
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UnknownVariable(v.0));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(ModelError::NonFinite(format!(
                "row {}",
                self.rows.len() + 1
            )));
        }
        // merge repeated variables
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, a) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(t) => t.1 += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.rows.push(Constraint {
            terms: merged,
            sense,
            rhs,
        });
        Ok(())
    }

    pub fn set_objective(&mut self, obj: Objective) {
        self.objective = Some(obj);
    }

    pub fn clear_objective(&mut self) {
        self.objective = None;
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Tightens a variable's bounds (intersection with the current ones).
    pub fn tighten(&mut self, id: VarId, lo: f64, hi: f64) {
        let v = &mut self.vars[id.0];
        v.lo = v.lo.max(lo);
        v.hi = v.hi.min(hi);
    }

    /// Fixes a variable to a value.
    pub fn fix(&mut self, id: VarId, value: f64) {
        let v = &mut self.vars[id.0];
        v.lo = value;
        v.hi = value;
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lo - xi).max(xi - v.hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Appends all variables and rows of `other`, prefixing nothing; names
    /// must not collide. Returns the offset added to `other`'s variable ids.
    pub fn absorb(&mut self, other: &MilpModel) -> Result<usize, ModelError> {
        let offset = self.vars.len();
        for v in &other.vars {
            self.add_var(v.name.clone(), v.lo, v.hi, v.kind)?;
        }
        for r in &other.rows {
            let terms = r
                .terms
                .iter()
                .map(|(v, a)| (VarId(v.0 + offset), *a))
                .collect();
            self.add_row(terms, r.sense, r.rhs)?;
        }
        Ok(offset)
    }
}
