//! Finite grounding of formulas: assignments, evaluation, and the product
//! domain enumerated by the equivalence check.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::atom::{number_to_json, Atom, CmpOp, Literal, ParamPath};
use super::formula::Formula;
use super::ConstraintError;

/// Sentinel string value distinct from every literal a formula can mention.
pub const OTHER_VALUE: &str = "\u{1}other";

/// One point of a domain: each path is absent (`None`) or carries a value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub values: BTreeMap<ParamPath, Option<Value>>,
    pub unparsed: BTreeMap<String, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absent(mut self, path: impl Into<ParamPath>) -> Self {
        self.values.insert(path.into(), None);
        self
    }

    pub fn with(mut self, path: impl Into<ParamPath>, value: Value) -> Self {
        self.values.insert(path.into(), Some(value));
        self
    }

    pub fn set(&mut self, path: ParamPath, value: Option<Value>) {
        self.values.insert(path, value);
    }

    fn lookup(&self, path: &ParamPath) -> Result<Option<&Value>, ConstraintError> {
        match self.values.get(path) {
            Some(v) => Ok(v.as_ref()),
            None => Err(ConstraintError::MissingAssignment(path.to_string())),
        }
    }
}

/// Evaluates a formula at one assignment.
///
/// Value atoms over absent parameters are false.
pub fn evaluate_under(f: &Formula, a: &Assignment) -> Result<bool, ConstraintError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Not(c) => !evaluate_under(c, a)?,
        Formula::And(cs) => {
            for c in cs {
                if !evaluate_under(c, a)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(cs) => {
            for c in cs {
                if evaluate_under(c, a)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Leaf(atom) => evaluate_atom(atom, a)?,
    })
}

fn evaluate_atom(atom: &Atom, a: &Assignment) -> Result<bool, ConstraintError> {
    Ok(match atom {
        Atom::Present { path } => a.lookup(path)?.is_some(),
        Atom::Eq { path, value } => a.lookup(path)?.is_some_and(|v| value.matches(v)),
        Atom::Cmp { path, op, bound } => a
            .lookup(path)?
            .and_then(Value::as_f64)
            .is_some_and(|v| op.apply(v, bound.0)),
        Atom::CmpParams { left, op, right } => {
            let l = a.lookup(left)?;
            let r = a.lookup(right)?;
            match (l, r) {
                (Some(l), Some(r)) => compare_values(l, *op, r),
                _ => false,
            }
        }
        Atom::Len { path, op, bound } => a
            .lookup(path)?
            .and_then(value_len)
            .is_some_and(|n| op.apply(n as f64, *bound as f64)),
        Atom::InSet { path, values } => a
            .lookup(path)?
            .is_some_and(|v| values.iter().any(|lit| lit.matches(v))),
        Atom::Unparsed { text } => *a
            .unparsed
            .get(text)
            .ok_or_else(|| ConstraintError::MissingUnparsed(text.clone()))?,
    })
}

fn compare_values(l: &Value, op: CmpOp, r: &Value) -> bool {
    match (l, r) {
        (Value::Number(x), Value::Number(y)) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => op.apply(x, y),
            _ => false,
        },
        (Value::String(x), Value::String(y)) => match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => false,
        },
        (Value::Bool(x), Value::Bool(y)) => match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            _ => false,
        },
        _ => false,
    }
}

/// Length of a string (in chars) or array.
pub fn value_len(v: &Value) -> Option<usize> {
    match v {
        Value::String(s) => Some(s.chars().count()),
        Value::Array(xs) => Some(xs.len()),
        _ => None,
    }
}

/// Finite per-path value sets. Every path additionally has the `absent` state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Domain {
    values: BTreeMap<ParamPath, Vec<Value>>,
}

#[derive(Default)]
struct PathSamples {
    values: Vec<Value>,
    needs_other: bool,
}

impl PathSamples {
    fn push(&mut self, v: Value) {
        if !self.values.contains(&v) {
            self.values.push(v);
        }
    }

    fn push_num_neighbourhood(&mut self, n: f64) {
        for x in [n - 1.0, n, n + 1.0] {
            self.push(number_to_json(x));
        }
    }
}

/// Paths linked by `p <op> q` atoms share one sample set: the union of
/// their own samples, widened by up to k steps around each number for a
/// component of k paths. Integer witnesses for any chain of comparisons
/// then exist inside the set.
fn close_comparisons(values: &mut BTreeMap<ParamPath, Vec<Value>>, pairs: Vec<(ParamPath, ParamPath)>) {
    let mut component: BTreeMap<ParamPath, usize> = BTreeMap::new();
    let mut groups: Vec<BTreeSet<ParamPath>> = Vec::new();
    for (l, r) in pairs {
        match (component.get(&l).copied(), component.get(&r).copied()) {
            (Some(a), Some(b)) if a != b => {
                let moved = std::mem::take(&mut groups[b]);
                for p in &moved {
                    component.insert(p.clone(), a);
                }
                groups[a].extend(moved);
            }
            (Some(_), Some(_)) => {}
            (Some(a), None) | (None, Some(a)) => {
                for p in [l, r] {
                    component.insert(p.clone(), a);
                    groups[a].insert(p);
                }
            }
            (None, None) => {
                let a = groups.len();
                component.insert(l.clone(), a);
                component.insert(r.clone(), a);
                groups.push([l, r].into_iter().collect());
            }
        }
    }
    for g in groups.into_iter().filter(|g| !g.is_empty()) {
        let k = g.len() as f64;
        let mut union = PathSamples::default();
        for p in &g {
            for v in &values[p] {
                union.push(v.clone());
                if let Some(n) = v.as_f64() {
                    let mut step = 1.0;
                    while step <= k {
                        union.push(number_to_json(n - step));
                        union.push(number_to_json(n + step));
                        step += 1.0;
                    }
                }
            }
        }
        for p in g {
            values.insert(p, union.values.clone());
        }
    }
}

impl Domain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Grounds every path mentioned in `formulas`: literals from `==`/`in`
    /// atoms, `b-1, b, b+1` around numeric bounds, strings of length
    /// `n-1, n, n+1` around length bounds. Each path also gets a value of a
    /// type its atoms cannot hold, since `not a >= 3` accepts a string.
    pub fn from_formulas<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> Domain {
        let mut samples: BTreeMap<ParamPath, PathSamples> = BTreeMap::new();
        let mut pairs = Vec::new();
        for f in formulas {
            for atom in f.atoms() {
                match atom {
                    Atom::Present { path } => {
                        samples.entry(path.clone()).or_default();
                    }
                    Atom::Eq { path, value } => {
                        let s = samples.entry(path.clone()).or_default();
                        match value {
                            Literal::Num(n) => s.push_num_neighbourhood(n.0),
                            other => s.push(other.to_json()),
                        }
                        s.needs_other = true;
                    }
                    Atom::Cmp { path, bound, .. } => {
                        let s = samples.entry(path.clone()).or_default();
                        s.push_num_neighbourhood(bound.0);
                        s.needs_other = true;
                    }
                    Atom::CmpParams { left, right, .. } => {
                        pairs.push((left.clone(), right.clone()));
                        for p in [left, right] {
                            let s = samples.entry(p.clone()).or_default();
                            s.push(Value::from(0));
                            s.push(Value::from(1));
                            s.needs_other = true;
                        }
                    }
                    Atom::Len { path, bound, .. } => {
                        let s = samples.entry(path.clone()).or_default();
                        let lo = bound.saturating_sub(1);
                        for n in lo..=bound + 1 {
                            s.push(Value::String("_".repeat(n as usize)));
                        }
                        // A value without a length.
                        s.push(Value::Bool(false));
                    }
                    Atom::InSet { path, values } => {
                        let s = samples.entry(path.clone()).or_default();
                        for v in values {
                            s.push(v.to_json());
                        }
                        s.needs_other = true;
                    }
                    Atom::Unparsed { .. } => {}
                }
            }
        }
        for s in samples.values_mut() {
            if s.values.is_empty() || s.needs_other {
                s.push(Value::String(OTHER_VALUE.to_string()));
            }
        }
        let mut values: BTreeMap<ParamPath, Vec<Value>> = samples.into_iter().map(|(p, s)| (p, s.values)).collect();
        close_comparisons(&mut values, pairs);
        Domain { values }
    }

    /// Adds extra sample values for a path (e.g. marked enum literals or defaults).
    pub fn extend_path(&mut self, path: ParamPath, extra: impl IntoIterator<Item = Value>) {
        let vs = self.values.entry(path).or_default();
        for v in extra {
            if !vs.contains(&v) {
                vs.push(v);
            }
        }
    }

    pub fn merge(&mut self, other: &Domain) {
        for (p, vs) in &other.values {
            self.extend_path(p.clone(), vs.iter().cloned());
        }
    }

    pub fn contains_path(&self, p: &ParamPath) -> bool {
        self.values.contains_key(p)
    }

    pub fn paths(&self) -> impl Iterator<Item = &ParamPath> {
        self.values.keys()
    }

    pub fn values_of(&self, p: &ParamPath) -> Option<&[Value]> {
        self.values.get(p).map(Vec::as_slice)
    }

    /// Sub-domain over the given paths.
    pub fn restrict(&self, paths: &BTreeSet<ParamPath>) -> Result<Domain, ConstraintError> {
        let mut values = BTreeMap::new();
        for p in paths {
            let vs = self
                .values
                .get(p)
                .ok_or_else(|| ConstraintError::DomainCoverage(p.to_string()))?;
            values.insert(p.clone(), vs.clone());
        }
        Ok(Domain { values })
    }

    /// Number of raw product points (before hierarchy filtering).
    pub fn product_size(&self) -> usize {
        self.values.values().map(|v| v.len() + 1).product()
    }

    /// Enumerates every hierarchy-consistent point of the product domain:
    /// a path may only be present when each of its ancestors in the domain is.
    pub fn points(&self) -> Points<'_> {
        let paths: Vec<&ParamPath> = self.values.keys().collect();
        let ancestors = paths
            .iter()
            .map(|p| {
                paths
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| q.is_ancestor_of(p))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Points {
            domain: self,
            paths,
            ancestors,
            counters: vec![0; self.values.len()],
            done: false,
        }
    }
}

pub struct Points<'a> {
    domain: &'a Domain,
    paths: Vec<&'a ParamPath>,
    ancestors: Vec<Vec<usize>>,
    counters: Vec<usize>,
    done: bool,
}

impl Points<'_> {
    fn advance(&mut self) {
        for i in (0..self.counters.len()).rev() {
            let size = self.domain.values[self.paths[i]].len() + 1;
            self.counters[i] += 1;
            if self.counters[i] < size {
                return;
            }
            self.counters[i] = 0;
        }
        self.done = true;
    }

    fn consistent(&self) -> bool {
        self.counters.iter().enumerate().all(|(i, &c)| {
            c == 0 || self.ancestors[i].iter().all(|&a| self.counters[a] != 0)
        })
    }
}

impl Iterator for Points<'_> {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        while !self.done {
            if self.consistent() {
                let mut a = Assignment::new();
                for (i, p) in self.paths.iter().enumerate() {
                    let v = match self.counters[i] {
                        0 => None,
                        k => Some(self.domain.values[*p][k - 1].clone()),
                    };
                    a.set((*p).clone(), v);
                }
                self.advance();
                return Some(a);
            }
            self.advance();
        }
        None
    }
}
