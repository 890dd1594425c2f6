//! Candidate mining from parameter descriptions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constraint::{Literal, ParamPath};
use crate::oas::EndpointSpec;

/// `cells[i][j]`: occurrences of parameter `j`'s name in parameter `i`'s description.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    pub params: Vec<ParamPath>,
    pub cells: Vec<Vec<u32>>,
}

impl CooccurrenceMatrix {
    pub fn index_of(&self, p: &ParamPath) -> Option<usize> {
        self.params.iter().position(|q| q == p)
    }

    pub fn cell(&self, i: &ParamPath, j: &ParamPath) -> u32 {
        match (self.index_of(i), self.index_of(j)) {
            (Some(i), Some(j)) => self.cells[i][j],
            _ => 0,
        }
    }

    pub fn symmetric(&self, i: usize, j: usize) -> u32 {
        if i == j {
            0
        } else {
            self.cells[i][j] + self.cells[j][i]
        }
    }

    /// Row total of the symmetrized matrix.
    pub fn total(&self, i: usize) -> u32 {
        (0..self.params.len()).map(|j| self.symmetric(i, j)).sum()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Occurrences of `word` in `text` delimited by non-word characters.
pub fn count_word(text: &str, word: &str) -> u32 {
    if word.is_empty() {
        return 0;
    }
    text.match_indices(word)
        .filter(|(i, _)| {
            let before = text[..*i].chars().next_back();
            let after = text[i + word.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        })
        .count() as u32
}

/// Counts word-boundary, case-sensitive mentions of each other parameter's
/// name in every description.
pub fn build_cooccurrence(e: &EndpointSpec) -> CooccurrenceMatrix {
    let params: Vec<ParamPath> = e.flat().map(|p| p.path.clone()).collect();
    let names: Vec<&str> = params.iter().map(ParamPath::name).collect();
    let n = params.len();
    let mut cells = vec![vec![0u32; n]; n];
    for (i, p) in e.flat().enumerate() {
        if p.description.is_empty() {
            continue;
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            cells[i][j] = count_word(&p.description, names[j]);
        }
    }
    CooccurrenceMatrix { params, cells }
}

/// For each describing parameter, the `(owner, literal)` pairs of enum values
/// its description mentions verbatim.
pub fn mark_values(e: &EndpointSpec) -> BTreeMap<ParamPath, BTreeSet<(ParamPath, Literal)>> {
    let mut enum_lits: Vec<(ParamPath, Literal, String)> = Vec::new();
    for p in e.flat() {
        for lit in &p.enum_values {
            let text = match lit {
                Literal::Str(s) => s.clone(),
                other => other.to_string(),
            };
            enum_lits.push((p.path.clone(), lit.clone(), text));
        }
    }
    let mut out = BTreeMap::new();
    for p in e.flat() {
        let marked: BTreeSet<(ParamPath, Literal)> = enum_lits
            .iter()
            .filter(|(_, _, word)| count_word(&p.description, word) > 0)
            .map(|(owner, lit, _)| (owner.clone(), lit.clone()))
            .collect();
        if !marked.is_empty() {
            out.insert(p.path.clone(), marked);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(rename = "params")]
    pub paths: BTreeSet<ParamPath>,
    #[serde(rename = "values", default)]
    pub marked_values: BTreeMap<ParamPath, Vec<Literal>>,
}

impl Candidate {
    pub fn pair(a: impl Into<ParamPath>, b: impl Into<ParamPath>) -> Candidate {
        Candidate { paths: [a.into(), b.into()].into_iter().collect(), marked_values: BTreeMap::new() }
    }
}

/// Parameters co-occurring more than this multiple of the mean are dropped.
pub const DEFAULT_FREQUENCY_FACTOR: f64 = 2.0;

/// Pairwise candidates after dropping parameters that co-occur more than
/// `frequency_factor` times the mean total (over parameters with nonzero totals).
pub fn candidates(e: &EndpointSpec, frequency_factor: f64) -> Vec<Candidate> {
    assert!(frequency_factor > 0.0, "frequency factor must be positive");
    let m = build_cooccurrence(e);
    let marks = mark_values(e);
    let n = m.params.len();
    let totals: Vec<u32> = (0..n).map(|i| m.total(i)).collect();
    let nonzero: Vec<u32> = totals.iter().copied().filter(|&t| t > 0).collect();
    if nonzero.is_empty() {
        return Vec::new();
    }
    let mean = nonzero.iter().map(|&t| t as f64).sum::<f64>() / nonzero.len() as f64;
    let limit = frequency_factor * mean;
    let kept: Vec<bool> = totals.iter().map(|&t| (t as f64) <= limit).collect();

    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !kept[i] || !kept[j] || m.symmetric(i, j) == 0 {
                continue;
            }
            let pair = [&m.params[i], &m.params[j]];
            let mut marked_values: BTreeMap<ParamPath, Vec<Literal>> = BTreeMap::new();
            for describer in pair {
                for (owner, lit) in marks.get(describer).into_iter().flatten() {
                    if pair.contains(&owner) {
                        marked_values.entry(owner.clone()).or_default().push(lit.clone());
                    }
                }
            }
            // Keep the enum declaration order for determinism.
            for (owner, lits) in marked_values.iter_mut() {
                let decl = &e.get(owner).expect("owner is in the spec").enum_values;
                lits.sort_by_key(|l| decl.iter().position(|d| d == l));
                lits.dedup();
            }
            out.push(Candidate {
                paths: pair.iter().map(|p| (*p).clone()).collect(),
                marked_values,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oas::load_spec;

    fn spec(props: &str) -> EndpointSpec {
        load_spec(&format!(r#"{{"endpoint": "/payments", "schema": {{"properties": {{{}}}}}}}"#, props)).unwrap()
    }

    #[test]
    fn description_mention_counts() {
        let e = spec(
            r#""bankAccount": {"type": "object", "description": "The details of the bank account. Either bankAccount or card is required."},
               "card": {"type": "object", "description": "A card. card card."},
               "other": {"type": "string", "description": "nothing here; cards are not card-like? cardholder"}"#,
        );
        let m = build_cooccurrence(&e);
        assert_eq!(m.cell(&"bankAccount".into(), &"card".into()), 1);
        assert_eq!(m.cell(&"card".into(), &"card".into()), 0);
        // "card-like" counts ("-" is not a word character), "cards" and "cardholder" do not.
        assert_eq!(m.cell(&"other".into(), &"card".into()), 1);
    }

    #[test]
    fn repeated_mentions_accumulate() {
        let e = spec(r#""a": {"description": "card or card"}, "card": {}"#);
        let m = build_cooccurrence(&e);
        assert_eq!(m.cell(&"a".into(), &"card".into()), 2);
    }

    #[test]
    fn no_mentions_zero_row() {
        let e = spec(r#""a": {"description": "plain text"}, "b": {}"#);
        let m = build_cooccurrence(&e);
        assert!(m.cells[0].iter().all(|&c| c == 0));
        assert!(candidates(&e, 2.0).is_empty());
    }

    #[test]
    fn enum_mentions_marked() {
        let e = spec(
            r#""card": {"type": "object", "properties": {"cvc": {"type": "string", "description": "Not needed for ONECLICK."}}},
               "recurring": {"type": "object", "properties": {"contract": {"type": "string", "enum": ["ONECLICK", "RECURRING"]}}},
               "country": {"type": "string", "description": "Required for the US and Canada"}"#,
        );
        let marks = mark_values(&e);
        let cvc = &marks[&ParamPath::new("card.cvc")];
        assert!(cvc.contains(&("recurring.contract".into(), Literal::str("ONECLICK"))));
        assert!(!marks.contains_key(&ParamPath::new("country")));
    }

    #[test]
    fn single_pair_candidate() {
        let e = spec(
            r#""bankAccount": {"description": "Either bankAccount or card is required."}, "card": {}, "x": {}"#,
        );
        let cs = candidates(&e, 2.0);
        assert_eq!(cs, vec![Candidate::pair("bankAccount", "card")]);
    }

    #[test]
    fn frequent_words_are_dropped() {
        // 'reference' is mentioned by ten descriptions; five other pairs mention each other once.
        let mut props = vec![r#""reference": {}"#.to_string()];
        for i in 0..10 {
            props.push(format!(r#""p{i}": {{"description": "the reference of q{i}"}}"#));
            props.push(format!(r#""q{i}": {{}}"#));
        }
        let e = spec(&props.join(","));
        let cs = candidates(&e, 2.0);
        assert!(cs.iter().all(|c| !c.paths.contains(&ParamPath::new("reference"))));
        assert_eq!(cs.len(), 10);
        // A generous factor keeps it.
        assert_eq!(candidates(&e, 100.0).len(), 20);
    }

    #[test]
    fn marked_values_restricted_to_pair() {
        let e = spec(
            r#""paymentMethod": {"type": "object", "properties": {"type": {"type": "string", "enum": ["scheme", "iDEAL"]}}},
               "returnUrl": {"type": "string", "description": "Needed when the payment type is iDEAL, ignored for scheme."}"#,
        );
        let cs = candidates(&e, 2.0);
        let c = cs.iter().find(|c| c.paths.contains(&ParamPath::new("paymentMethod.type"))).unwrap();
        assert_eq!(
            c.marked_values[&ParamPath::new("paymentMethod.type")],
            vec![Literal::str("scheme"), Literal::str("iDEAL")]
        );
    }
}
