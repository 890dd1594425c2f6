//! Constraint algebra shared by the documentation pipeline, the code
//! analyzer, the mock service and the evaluation harness.
//!
//! Every constraint has the shape `precondition -> invalid`: the request is
//! rejected whenever the precondition holds. Sugar such as `requires(A, B)`
//! exists only in the text form (see [`dsl`]).

pub mod atom;
pub mod domain;
pub mod dsl;
pub mod formula;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use atom::{Atom, CmpOp, Literal, ParamPath};
pub use domain::{evaluate_under, Assignment, Domain};
pub use dsl::{parse_dsl, parse_dsl_with_catalog, to_dsl, write_document};
pub use formula::Formula;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: unknown parameter path '{path}'")]
    UnknownPath { line: usize, path: String },
    #[error("no assignment for parameter '{0}'")]
    MissingAssignment(String),
    #[error("no truth value supplied for unparsed fragment '{0}'")]
    MissingUnparsed(String),
    #[error("constraint contains unparsed fragments and cannot be compared automatically")]
    Partial,
    #[error("domain does not cover parameter '{0}'")]
    DomainCoverage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Doc,
    Code,
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintClass {
    Inter,
    Single,
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintClass::Inter => "inter",
            ConstraintClass::Single => "single",
        })
    }
}

/// `precondition -> invalid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub precondition: Formula,
    pub origin: Origin,
    #[serde(default)]
    pub source_ref: String,
    #[serde(default)]
    pub class: Option<ConstraintClass>,
    #[serde(default)]
    pub category: Option<String>,
}

impl Constraint {
    pub fn new(precondition: Formula, origin: Origin) -> Self {
        Constraint { precondition, origin, source_ref: String::new(), class: None, category: None }
    }

    pub fn with_source(mut self, source_ref: impl Into<String>) -> Self {
        self.source_ref = source_ref.into();
        self
    }

    /// True when an unparsed fragment is part of the precondition.
    pub fn partial(&self) -> bool {
        self.precondition.has_unparsed()
    }

    pub fn paths(&self) -> BTreeSet<ParamPath> {
        self.precondition.paths()
    }

    /// Explicit label, else inter-parameter iff two or more paths are involved.
    pub fn effective_class(&self) -> ConstraintClass {
        self.class.unwrap_or_else(|| {
            if self.paths().len() >= 2 {
                ConstraintClass::Inter
            } else {
                ConstraintClass::Single
            }
        })
    }

    pub fn normalized(&self) -> Constraint {
        Constraint { precondition: self.precondition.normalize(), ..self.clone() }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_dsl(self))
    }
}

fn is_missing_disjunction(f: &Formula) -> bool {
    match f {
        Formula::Or(cs) => cs.len() >= 2 && cs.iter().all(is_absence),
        _ => false,
    }
}

fn is_absence(f: &Formula) -> bool {
    matches!(f, Formula::Not(inner) if matches!(**inner, Formula::Leaf(Atom::Present { .. })))
}

/// Splits `P -> B & C` into `P -> B` and `P -> C`.
///
/// Only a disjunction of absences (the consequent side of the invalid-state
/// form) is split; the triggering condition is never taken apart.
pub fn decompose(c: &Constraint) -> Vec<Constraint> {
    let pre = c.precondition.normalize();
    let rebuild = |f: Formula| Constraint { precondition: f.normalize(), ..c.clone() };
    // Negations pushed to the atoms expose `not (a and b)` as a disjunction of absences.
    let nnf = pre.push_negations();
    match &nnf {
        Formula::Or(cs) if is_missing_disjunction(&nnf) => cs.iter().cloned().map(rebuild).collect(),
        Formula::And(cs) => {
            let Some(idx) = cs.iter().position(is_missing_disjunction) else {
                return vec![Constraint { precondition: pre.clone(), ..c.clone() }];
            };
            let Formula::Or(missing) = &cs[idx] else { unreachable!() };
            missing
                .iter()
                .map(|m| {
                    let mut parts = cs.clone();
                    parts[idx] = m.clone();
                    rebuild(Formula::And(parts))
                })
                .collect()
        }
        _ => vec![Constraint { precondition: pre, ..c.clone() }],
    }
}

/// Whether two formulas agree at every point of `d` restricted to their paths.
pub fn formulas_equivalent(f1: &Formula, f2: &Formula, d: &Domain) -> Result<bool, ConstraintError> {
    if f1.has_unparsed() || f2.has_unparsed() {
        return Err(ConstraintError::Partial);
    }
    let mut paths = f1.paths();
    paths.extend(f2.paths());
    let sub = d.restrict(&paths)?;
    for point in sub.points() {
        if evaluate_under(f1, &point)? != evaluate_under(f2, &point)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Logical equivalence of two non-partial constraints over a finite domain.
pub fn equivalent(c1: &Constraint, c2: &Constraint, d: &Domain) -> Result<bool, ConstraintError> {
    formulas_equivalent(&c1.precondition, &c2.precondition, d)
}

/// Domain grounding every path mentioned in the given constraints.
pub fn domain_for<'a>(cs: impl IntoIterator<Item = &'a Constraint>) -> Domain {
    Domain::from_formulas(cs.into_iter().map(|c| &c.precondition))
}

/// Union of constraint lists keeping one representative per equivalence
/// class. Partial constraints are deduplicated syntactically after
/// normalization.
pub fn union_dedup(lists: &[&[Constraint]]) -> Vec<Constraint> {
    let all: Vec<&Constraint> = lists.iter().flat_map(|l| l.iter()).collect();
    let domain = domain_for(all.iter().copied());
    let mut out: Vec<Constraint> = Vec::new();
    for c in all {
        let c = c.normalized();
        let dup = out.iter().any(|kept| {
            if c.partial() || kept.partial() {
                kept.precondition == c.precondition
            } else {
                equivalent(kept, &c, &domain).unwrap_or(false)
            }
        });
        if !dup {
            out.push(c);
        }
    }
    out
}
