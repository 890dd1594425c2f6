use std::collections::BTreeSet;
use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

/// Dot-separated parameter path, e.g. `card.cvc`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPath(String);

impl ParamPath {
    pub fn new(path: impl Into<String>) -> Self {
        ParamPath(path.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    /// Last segment, the parameter's own name.
    pub fn name(&self) -> &str {
        self.0.rsplit('.').next().unwrap_or(&self.0)
    }

    pub fn parent(&self) -> Option<ParamPath> {
        self.0.rfind('.').map(|i| ParamPath(self.0[..i].to_string()))
    }

    pub fn child(&self, name: &str) -> ParamPath {
        if self.0.is_empty() {
            ParamPath(name.to_string())
        } else {
            ParamPath(format!("{}.{}", self.0, name))
        }
    }

    /// True when `self` is a strict ancestor of `other`.
    pub fn is_ancestor_of(&self, other: &ParamPath) -> bool {
        other.0.len() > self.0.len()
            && other.0.starts_with(&self.0)
            && other.0.as_bytes()[self.0.len()] == b'.'
    }

    /// Number of leading segments shared with `other`.
    pub fn common_prefix_len(&self, other: &ParamPath) -> usize {
        self.segments()
            .zip(other.segments())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn depth(&self) -> usize {
        self.segments().count()
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ParamPath {
    fn from(s: &str) -> Self {
        ParamPath::new(s)
    }
}

/// A literal appearing in an atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Num(OrderedFloat<f64>),
    Str(String),
}

impl Literal {
    pub fn str(s: impl Into<String>) -> Self {
        Literal::Str(s.into())
    }

    pub fn num(n: f64) -> Self {
        Literal::Num(OrderedFloat(n))
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Literal::Bool(b) => serde_json::Value::Bool(*b),
            Literal::Num(n) => number_to_json(n.0),
            Literal::Str(s) => serde_json::Value::String(s.clone()),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Literal> {
        match v {
            serde_json::Value::Bool(b) => Some(Literal::Bool(*b)),
            serde_json::Value::Number(n) => n.as_f64().map(Literal::num),
            serde_json::Value::String(s) => Some(Literal::Str(s.clone())),
            _ => None,
        }
    }

    /// Equality against a concrete request value; numbers compare numerically.
    pub fn matches(&self, v: &serde_json::Value) -> bool {
        match (self, v) {
            (Literal::Bool(a), serde_json::Value::Bool(b)) => a == b,
            (Literal::Num(a), serde_json::Value::Number(b)) => b.as_f64() == Some(a.0),
            (Literal::Str(a), serde_json::Value::String(b)) => a == b,
            _ => false,
        }
    }
}

pub(crate) fn number_to_json(n: f64) -> serde_json::Value {
    if n.fract() == 0.0 && n.abs() < 9.0e15 {
        serde_json::Value::from(n as i64)
    } else {
        serde_json::Number::from_f64(n)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

pub(crate) fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 9.0e15 {
        format!("{}", n as i64)
    } else {
        format!("{}", n)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{}", b),
            Literal::Num(n) => f.write_str(&format_number(n.0)),
            Literal::Str(s) => write!(f, "\"{}\"", escape(s)),
        }
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "!=",
            CmpOp::Eq => "==",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "!=" => CmpOp::Ne,
            "==" => CmpOp::Eq,
            _ => return None,
        })
    }

    /// The operator obtained by swapping operands: `a < b` ⇔ `b > a`.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Ne => a != b,
            CmpOp::Eq => a == b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Leaf of a constraint formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Atom {
    Present { path: ParamPath },
    Eq { path: ParamPath, value: Literal },
    Cmp { path: ParamPath, op: CmpOp, bound: OrderedFloat<f64> },
    CmpParams { left: ParamPath, op: CmpOp, right: ParamPath },
    Len { path: ParamPath, op: CmpOp, bound: u64 },
    InSet { path: ParamPath, values: BTreeSet<Literal> },
    Unparsed { text: String },
}

impl Atom {
    pub fn present(path: impl Into<ParamPath>) -> Atom {
        Atom::Present { path: path.into() }
    }

    pub fn eq(path: impl Into<ParamPath>, value: Literal) -> Atom {
        Atom::Eq { path: path.into(), value }
    }

    pub fn cmp(path: impl Into<ParamPath>, op: CmpOp, bound: f64) -> Atom {
        Atom::Cmp { path: path.into(), op, bound: OrderedFloat(bound) }
    }

    pub fn cmp_params(left: impl Into<ParamPath>, op: CmpOp, right: impl Into<ParamPath>) -> Atom {
        Atom::CmpParams { left: left.into(), op, right: right.into() }
    }

    pub fn len(path: impl Into<ParamPath>, op: CmpOp, bound: u64) -> Atom {
        Atom::Len { path: path.into(), op, bound }
    }

    pub fn in_set(path: impl Into<ParamPath>, values: impl IntoIterator<Item = Literal>) -> Atom {
        Atom::InSet { path: path.into(), values: values.into_iter().collect() }
    }

    pub fn unparsed(text: impl Into<String>) -> Atom {
        Atom::Unparsed { text: text.into() }
    }

    /// Parameter paths referenced by this atom.
    pub fn paths(&self) -> Vec<&ParamPath> {
        match self {
            Atom::Present { path }
            | Atom::Eq { path, .. }
            | Atom::Cmp { path, .. }
            | Atom::Len { path, .. }
            | Atom::InSet { path, .. } => vec![path],
            Atom::CmpParams { left, right, .. } => vec![left, right],
            Atom::Unparsed { .. } => vec![],
        }
    }

    pub fn is_unparsed(&self) -> bool {
        matches!(self, Atom::Unparsed { .. })
    }
}

impl From<String> for ParamPath {
    fn from(s: String) -> Self {
        ParamPath(s)
    }
}

impl From<&ParamPath> for ParamPath {
    fn from(p: &ParamPath) -> Self {
        p.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_helpers() {
        let p = ParamPath::new("card.reference");
        assert_eq!(p.name(), "reference");
        assert_eq!(p.parent(), Some(ParamPath::new("card")));
        assert!(ParamPath::new("card").is_ancestor_of(&p));
        assert!(!ParamPath::new("car").is_ancestor_of(&p));
        assert_eq!(p.common_prefix_len(&ParamPath::new("card")), 1);
        assert_eq!(ParamPath::new("").child("x"), ParamPath::new("x"));
    }

    #[test]
    fn literal_matching_is_typed() {
        assert!(Literal::num(80.0).matches(&serde_json::json!(80)));
        assert!(!Literal::str("80").matches(&serde_json::json!(80)));
        assert!(Literal::Bool(true).matches(&serde_json::json!(true)));
    }

    #[test]
    fn flipped_ops() {
        assert!(CmpOp::Lt.flipped().apply(3.0, 2.0));
        assert_eq!(CmpOp::Ne.flipped(), CmpOp::Ne);
    }
}
