use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::atom::{escape, format_number, Atom, ParamPath};

/// Boolean formula over parameter atoms.
///
/// The derived ordering is the stable total order used to sort the children
/// of `And`/`Or` during normalization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Leaf(Atom),
    True,
    False,
}

impl Formula {
    pub fn leaf(atom: Atom) -> Formula {
        Formula::Leaf(atom)
    }

    pub fn and(children: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::And(children.into_iter().collect())
    }

    pub fn or(children: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::Or(children.into_iter().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Formula {
        Formula::Not(Box::new(child))
    }

    pub fn present(path: impl Into<ParamPath>) -> Formula {
        Formula::Leaf(Atom::present(path))
    }

    pub fn absent(path: impl Into<ParamPath>) -> Formula {
        Formula::not(Formula::present(path))
    }

    /// Every atom in the formula, left to right.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Formula::Not(c) => c.collect_atoms(out),
            Formula::Leaf(a) => out.push(a),
            Formula::True | Formula::False => {}
        }
    }

    pub fn paths(&self) -> BTreeSet<ParamPath> {
        self.atoms()
            .into_iter()
            .flat_map(|a| a.paths().into_iter().cloned())
            .collect()
    }

    pub fn has_unparsed(&self) -> bool {
        self.atoms().iter().any(|a| a.is_unparsed())
    }

    /// Canonical form: flattened, deduplicated, sorted, no double negation,
    /// constants folded, single-child connectives collapsed. Idempotent.
    pub fn normalize(&self) -> Formula {
        match self {
            Formula::Leaf(_) | Formula::True | Formula::False => self.clone(),
            Formula::Not(inner) => match inner.normalize() {
                Formula::Not(x) => *x,
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                other => Formula::not(other),
            },
            Formula::And(cs) => normalize_nary(cs, true),
            Formula::Or(cs) => normalize_nary(cs, false),
        }
    }

    /// Negation normal form: `Not` only directly above atoms. Preserves
    /// semantics; the result is normalized.
    pub fn push_negations(&self) -> Formula {
        fn go(f: &Formula, neg: bool) -> Formula {
            match f {
                Formula::Not(inner) => go(inner, !neg),
                Formula::And(cs) if neg => Formula::Or(cs.iter().map(|c| go(c, true)).collect()),
                Formula::Or(cs) if neg => Formula::And(cs.iter().map(|c| go(c, true)).collect()),
                Formula::And(cs) => Formula::And(cs.iter().map(|c| go(c, false)).collect()),
                Formula::Or(cs) => Formula::Or(cs.iter().map(|c| go(c, false)).collect()),
                Formula::True => if neg { Formula::False } else { Formula::True },
                Formula::False => if neg { Formula::True } else { Formula::False },
                Formula::Leaf(_) => if neg { Formula::not(f.clone()) } else { f.clone() },
            }
        }
        go(self, false).normalize()
    }

    /// Functional rendering, e.g. `and(not(Unparsed("f(x)")), present(card.issuer))`.
    pub fn to_functional(&self) -> String {
        let mut s = String::new();
        self.write_functional(&mut s);
        s
    }

    fn write_functional(&self, out: &mut String) {
        match self {
            Formula::And(cs) | Formula::Or(cs) => {
                out.push_str(if matches!(self, Formula::And(_)) { "and(" } else { "or(" });
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    c.write_functional(out);
                }
                out.push(')');
            }
            Formula::Not(c) => {
                out.push_str("not(");
                c.write_functional(out);
                out.push(')');
            }
            Formula::Leaf(Atom::Unparsed { text }) => {
                out.push_str(&format!("Unparsed(\"{}\")", escape(text)));
            }
            Formula::Leaf(a) => out.push_str(&atom_text(a)),
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
        }
    }
}

fn normalize_nary(children: &[Formula], is_and: bool) -> Formula {
    let (absorbing, neutral) = if is_and {
        (Formula::False, Formula::True)
    } else {
        (Formula::True, Formula::False)
    };
    let mut flat: Vec<Formula> = Vec::with_capacity(children.len());
    for c in children {
        let n = c.normalize();
        if n == absorbing {
            return absorbing;
        }
        if n == neutral {
            continue;
        }
        match n {
            Formula::And(inner) if is_and => flat.extend(inner),
            Formula::Or(inner) if !is_and => flat.extend(inner),
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();
    match flat.len() {
        0 => neutral,
        1 => flat.pop().unwrap(),
        _ if is_and => Formula::And(flat),
        _ => Formula::Or(flat),
    }
}

/// Text of a single atom in the constraint DSL syntax.
pub(crate) fn atom_text(a: &Atom) -> String {
    match a {
        Atom::Present { path } => format!("present({})", path),
        Atom::Eq { path, value } => format!("{} == {}", path, value),
        Atom::Cmp { path, op, bound } => format!("{} {} {}", path, op, format_number(bound.0)),
        Atom::CmpParams { left, op, right } => format!("{} {} {}", left, op, right),
        Atom::Len { path, op, bound } => format!("len({}) {} {}", path, op, bound),
        Atom::InSet { path, values } => {
            let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            format!("{} in {{{}}}", path, vs.join(", "))
        }
        Atom::Unparsed { text } => format!("unparsed(\"{}\")", escape(text)),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_functional())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::atom::CmpOp;

    fn p(name: &str) -> Formula {
        Formula::present(name)
    }

    #[test]
    fn flattens_nested_and() {
        let f = Formula::and([p("x"), Formula::and([p("y"), p("z")])]);
        assert_eq!(f.normalize(), Formula::And(vec![p("x"), p("y"), p("z")]));
    }

    #[test]
    fn removes_double_negation() {
        assert_eq!(Formula::not(Formula::not(p("a"))).normalize(), p("a"));
    }

    #[test]
    fn collapses_single_child() {
        assert_eq!(Formula::or([p("a"), p("a")]).normalize(), p("a"));
    }

    #[test]
    fn folds_constants() {
        assert_eq!(Formula::and([p("a"), Formula::True]).normalize(), p("a"));
        assert_eq!(Formula::or([p("a"), Formula::True]).normalize(), Formula::True);
        assert_eq!(Formula::not(Formula::False).normalize(), Formula::True);
        assert_eq!(Formula::And(vec![]).normalize(), Formula::True);
    }

    #[test]
    fn functional_rendering() {
        let f = Formula::and([
            Formula::not(Formula::leaf(Atom::unparsed("isValidCard(card)"))),
            p("card.issuer"),
        ])
        .normalize();
        assert_eq!(
            f.to_functional(),
            "and(not(Unparsed(\"isValidCard(card)\")), present(card.issuer))"
        );
        let c = Formula::leaf(Atom::cmp("offset", CmpOp::Gt, 80.0));
        assert_eq!(c.to_functional(), "offset > 80");
    }
}
