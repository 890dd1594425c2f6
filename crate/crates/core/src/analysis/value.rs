//! Abstract values and the scoped variable environment.

use std::collections::BTreeMap;
use std::fmt;

use crate::constraint::{Literal, ParamPath};
use crate::source::ast::TypeRef;

#[derive(Debug, Clone, PartialEq)]
pub enum AbstractValue {
    Unknown,
    Int(i64),
    Str(String),
    Bool(bool),
    /// Enum constant by name.
    Enum(String),
    /// A request parameter; the root request object has the empty path.
    ParamRef { path: ParamPath, ty: TypeRef },
    /// Only constants and enum values are ever elements.
    Collection(Vec<AbstractValue>),
}

impl AbstractValue {
    pub fn is_const(&self) -> bool {
        matches!(self, AbstractValue::Int(_) | AbstractValue::Str(_) | AbstractValue::Bool(_) | AbstractValue::Enum(_))
    }

    /// Builds a tracked collection; any non-constant element makes it unknown.
    pub fn collection(items: Vec<AbstractValue>) -> AbstractValue {
        if items.iter().all(AbstractValue::is_const) {
            AbstractValue::Collection(items)
        } else {
            AbstractValue::Unknown
        }
    }

    pub fn literal(&self) -> Option<Literal> {
        Some(match self {
            AbstractValue::Int(v) => Literal::num(*v as f64),
            AbstractValue::Str(s) | AbstractValue::Enum(s) => Literal::str(s.clone()),
            AbstractValue::Bool(b) => Literal::Bool(*b),
            _ => return None,
        })
    }

    pub fn param(&self) -> Option<(&ParamPath, &TypeRef)> {
        match self {
            AbstractValue::ParamRef { path, ty } => Some((path, ty)),
            _ => None,
        }
    }
}

impl fmt::Display for AbstractValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbstractValue::Unknown => f.write_str("?"),
            AbstractValue::Int(v) => write!(f, "{}", v),
            AbstractValue::Str(s) => write!(f, "{:?}", s),
            AbstractValue::Bool(b) => write!(f, "{}", b),
            AbstractValue::Enum(e) => f.write_str(e),
            AbstractValue::ParamRef { path, .. } if path.as_str().is_empty() => f.write_str("param(<request>)"),
            AbstractValue::ParamRef { path, .. } => write!(f, "param({})", path),
            AbstractValue::Collection(items) => {
                let items: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub value: AbstractValue,
    /// Declared type when known (`var` and untyped loop variables have none).
    pub ty: Option<TypeRef>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Scope {
    vars: BTreeMap<String, Variable>,
    /// Lookups do not continue past a frame boundary.
    frame: bool,
}

/// Lexically scoped environment plus the recency list of accessed parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariableStack {
    scopes: Vec<Scope>,
    recency: Vec<ParamPath>,
}

impl VariableStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn depth(&self) -> usize {
        self.scopes.len()
    }

    pub fn push_scope(&mut self) {
        self.scopes.push(Scope::default());
    }

    /// Opens a method frame: outer variables become invisible.
    pub fn push_frame(&mut self) {
        self.scopes.push(Scope { vars: BTreeMap::new(), frame: true });
    }

    pub fn pop(&mut self) {
        self.scopes.pop().expect("pop without matching push");
    }

    /// Drops scopes above `depth`.
    pub fn truncate(&mut self, depth: usize) {
        self.scopes.truncate(depth);
    }

    /// Binds in the innermost scope, shadowing outer bindings.
    pub fn declare(&mut self, name: &str, var: Variable) {
        self.scopes.last_mut().expect("declare outside any scope").vars.insert(name.to_string(), var);
    }

    fn visible(&self) -> impl Iterator<Item = &Scope> {
        let start = self.scopes.iter().rposition(|s| s.frame).unwrap_or(0);
        self.scopes[start..].iter().rev()
    }

    pub fn lookup(&self, name: &str) -> Option<&Variable> {
        self.visible().find_map(|s| s.vars.get(name))
    }

    /// Updates the innermost visible binding; returns false if none exists.
    pub fn assign(&mut self, name: &str, value: AbstractValue) -> bool {
        let start = self.scopes.iter().rposition(|s| s.frame).unwrap_or(0);
        for s in self.scopes[start..].iter_mut().rev() {
            if let Some(v) = s.vars.get_mut(name) {
                v.value = value;
                return true;
            }
        }
        false
    }

    /// Records a parameter access; the most recent access is last.
    pub fn touch(&mut self, path: &ParamPath) {
        if path.as_str().is_empty() {
            return;
        }
        self.recency.retain(|p| p != path);
        self.recency.push(path.clone());
    }

    /// Scope contents, ignoring the recency list.
    pub fn same_scopes(&self, other: &VariableStack) -> bool {
        self.scopes == other.scopes
    }

    pub fn most_recent(&self) -> Option<&ParamPath> {
        self.recency.last()
    }
}
