//! Candidate validation by probing: combination tables, request building,
//! response classification and template fitting.

mod client;
mod fit;

use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::constraint::{Assignment, ParamPath};
use crate::doc::Candidate;
use crate::oas::{default_value, EndpointSpec, Overrides};

pub use client::{run_probe, HttpClient, ProbeClient, Prober, RateLimiter, TransportError};
pub use fit::{fit_templates, FitOutcome, Template, UNOBSERVED_DIAGNOSTIC};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("candidate must involve at least two parameters, got {0}")]
    TooFewParameters(usize),
    #[error("template fitting needs a parameter pair, got {0} parameters")]
    NotAPair(usize),
    #[error("unknown parameter '{0}'")]
    UnknownPath(String),
    #[error("cannot set '{path}': '{at}' is not an object")]
    PathConflict { path: String, at: String },
    #[error("row {0} has no result")]
    Unfilled(usize),
    #[error("{errors} of {rows} probes failed at the transport level; refusing to fit")]
    TooManyErrors { errors: usize, rows: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One state of a parameter in a combination table.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Absent,
    Value(Value),
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Absent => f.write_str("absent"),
            State::Value(v) => write!(f, "{}", v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeResult {
    Success,
    Failure,
    Error(String),
}

impl ProbeResult {
    /// 2xx succeeds; everything else (3xx included) fails.
    pub fn from_status(status: u16) -> ProbeResult {
        if (200..300).contains(&status) {
            ProbeResult::Success
        } else {
            ProbeResult::Failure
        }
    }
}

impl fmt::Display for ProbeResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeResult::Success => f.write_str("success"),
            ProbeResult::Failure => f.write_str("failure"),
            ProbeResult::Error(e) => write!(f, "error: {}", e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Index into each parameter's state list, in `ObservationTable::paths` order.
    pub states: Vec<usize>,
    pub result: Option<ProbeResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    pub candidate: Candidate,
    pub paths: Vec<ParamPath>,
    /// `[absent] ++ values` per path.
    pub state_sets: Vec<Vec<State>>,
    pub rows: Vec<Row>,
}

impl ObservationTable {
    pub fn row_states(&self, row: &Row) -> Vec<(ParamPath, State)> {
        self.paths
            .iter()
            .zip(&row.states)
            .enumerate()
            .map(|(k, (p, &s))| (p.clone(), self.state_sets[k][s].clone()))
            .collect()
    }

    /// The row as a constraint-evaluation point.
    pub fn row_assignment(&self, row: &Row) -> Assignment {
        let mut a = Assignment::new();
        for (p, s) in self.row_states(row) {
            a.set(p, match s {
                State::Absent => None,
                State::Value(v) => Some(v),
            });
        }
        a
    }

    /// CSV dump: one column per path plus `result`.
    pub fn to_csv(&self) -> Result<String, ProbeError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.paths.iter().map(|p| p.to_string()).collect();
        header.push("result".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = self.row_states(row).iter().map(|(_, s)| s.to_string()).collect();
            rec.push(row.result.as_ref().map(|r| r.to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| ProbeError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// States of one parameter: absent, then marked values or the default.
pub fn state_set(c: &Candidate, e: &EndpointSpec, p: &ParamPath, overrides: &Overrides) -> Result<Vec<State>, ProbeError> {
    let spec = e.get(p).ok_or_else(|| ProbeError::UnknownPath(p.to_string()))?;
    let mut states = vec![State::Absent];
    match c.marked_values.get(p) {
        Some(vals) if !vals.is_empty() => states.extend(vals.iter().map(|l| State::Value(l.to_json()))),
        _ => states.push(State::Value(default_value(spec, overrides))),
    }
    Ok(states)
}

/// Full Cartesian product of the candidate's state sets, lexicographic over
/// state indices with the first path most significant.
pub fn enumerate_rows(c: &Candidate, e: &EndpointSpec, overrides: &Overrides) -> Result<ObservationTable, ProbeError> {
    if c.paths.len() < 2 {
        return Err(ProbeError::TooFewParameters(c.paths.len()));
    }
    let paths: Vec<ParamPath> = c.paths.iter().cloned().collect();
    let state_sets = paths
        .iter()
        .map(|p| state_set(c, e, p, overrides))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = vec![Vec::new()];
    for set in &state_sets {
        rows = rows
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..set.len()).map(move |k| {
                    let mut r = prefix.clone();
                    r.push(k);
                    r
                })
            })
            .collect();
    }
    Ok(ObservationTable {
        candidate: c.clone(),
        paths,
        state_sets,
        rows: rows.into_iter().map(|states| Row { states, result: None }).collect(),
    })
}

fn segments(p: &ParamPath) -> Vec<&str> {
    p.segments().filter(|s| !s.is_empty()).collect()
}

/// Removes the path; returns true when `v` became empty because of it.
fn remove_path(v: &mut Value, segs: &[&str]) -> bool {
    match v {
        Value::Object(m) => {
            if segs.len() == 1 {
                if m.remove(segs[0]).is_none() {
                    return false;
                }
            } else if let Some(child) = m.get_mut(segs[0]) {
                if remove_path(child, &segs[1..]) {
                    m.remove(segs[0]);
                }
            } else {
                return false;
            }
            m.is_empty()
        }
        Value::Array(items) => {
            let mut emptied = false;
            for it in items.iter_mut() {
                emptied |= remove_path(it, segs);
            }
            if emptied {
                items.retain(|it| !matches!(it, Value::Object(m) if m.is_empty()));
            }
            items.is_empty() && emptied
        }
        _ => false,
    }
}

fn set_path(v: &mut Value, segs: &[&str], value: &Value, full: &ParamPath, depth: usize) -> Result<(), ProbeError> {
    match v {
        Value::Object(m) => {
            if segs.len() == 1 {
                m.insert(segs[0].to_string(), value.clone());
                return Ok(());
            }
            let child = m.entry(segs[0].to_string()).or_insert_with(|| Value::Object(Map::new()));
            set_path(child, &segs[1..], value, full, depth + 1)
        }
        Value::Array(items) => {
            if items.is_empty() {
                items.push(Value::Object(Map::new()));
            }
            for it in items.iter_mut() {
                set_path(it, segs, value, full, depth)?;
            }
            Ok(())
        }
        _ => Err(ProbeError::PathConflict {
            path: full.to_string(),
            at: full.segments().take(depth).collect::<Vec<_>>().join("."),
        }),
    }
}

/// Applies a row to the base request: absent paths (and ancestors emptied by
/// the removal) are dropped, value states are written, all else is untouched.
/// Paths under arrays apply to every element.
pub fn build_request(base: &Value, assignment: &[(ParamPath, State)]) -> Result<Value, ProbeError> {
    let mut body = base.clone();
    for (p, s) in assignment {
        if *s == State::Absent {
            remove_path(&mut body, &segments(p));
        }
    }
    for (p, s) in assignment {
        if let State::Value(v) = s {
            set_path(&mut body, &segments(p), v, p, 0)?;
        }
    }
    Ok(body)
}

/// Requests needed to validate every parameter against its `top_k` partners
/// with `values_per_param` values each (plus absence).
pub fn estimate_budget(params: u64, top_k: u64, values_per_param: u64) -> u64 {
    if params == 0 {
        return 0;
    }
    let states = values_per_param + 1;
    top_k.min(params - 1) * params * states * states
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Literal;
    use crate::oas::load_spec;
    use serde_json::json;

    fn spec() -> EndpointSpec {
        load_spec(
            r#"{"endpoint": "/payments", "schema": {"properties": {
                "bankAccount": {"type": "object", "properties": {"iban": {"type": "string"}}},
                "card": {"type": "object", "properties": {"number": {"type": "string"}}},
                "paymentMethod": {"type": "object", "properties": {"type": {"type": "string", "enum": ["scheme", "iDEAL", "sepa"]}}},
                "returnUrl": {"type": "string"}
            }}}"#,
        )
        .unwrap()
    }

    #[test]
    fn nine_rows_for_two_marked_values_each() {
        let e = load_spec(
            r#"{"endpoint": "/x", "schema": {"properties": {
                "a": {"type": "string", "enum": ["x", "y"]}, "b": {"type": "string", "enum": ["u", "v"]}}}}"#,
        )
        .unwrap();
        let mut c = Candidate::pair("a", "b");
        c.marked_values.insert("a".into(), vec![Literal::str("x"), Literal::str("y")]);
        c.marked_values.insert("b".into(), vec![Literal::str("u"), Literal::str("v")]);
        let t = enumerate_rows(&c, &e, &Overrides::new()).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.rows[0].states, vec![0, 0]);
        assert_eq!(t.rows[1].states, vec![0, 1]);
        assert_eq!(t.rows[8].states, vec![2, 2]);
    }

    #[test]
    fn four_rows_without_marked_values() {
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.state_sets[0][1], State::Value(json!({"iban": "str"})));
    }

    #[test]
    fn single_path_rejected() {
        let c = Candidate { paths: ["card".into()].into_iter().collect(), marked_values: Default::default() };
        assert!(matches!(enumerate_rows(&c, &spec(), &Overrides::new()), Err(ProbeError::TooFewParameters(1))));
    }

    #[test]
    fn absent_removes_subtree() {
        let base = json!({"card": {"number": "1"}, "amount": 5});
        let out = build_request(&base, &[("card".into(), State::Absent)]).unwrap();
        assert_eq!(out, json!({"amount": 5}));
    }

    #[test]
    fn absent_prunes_emptied_ancestors() {
        let base = json!({"paymentMethod": {"type": "scheme"}, "keep": {}});
        let out = build_request(&base, &[("paymentMethod.type".into(), State::Absent)]).unwrap();
        assert_eq!(out, json!({"keep": {}}));
    }

    #[test]
    fn value_sets_nested_field() {
        let base = json!({"amount": 5});
        let out = build_request(&base, &[("paymentMethod.type".into(), State::Value(json!("iDEAL")))]).unwrap();
        assert_eq!(out, json!({"amount": 5, "paymentMethod": {"type": "iDEAL"}}));
    }

    #[test]
    fn empty_assignment_is_identity() {
        let base = json!({"a": {"b": [1, 2]}});
        assert_eq!(build_request(&base, &[]).unwrap(), base);
    }

    #[test]
    fn conflicting_intermediate() {
        let base = json!({"card": "oops"});
        let err = build_request(&base, &[("card.number".into(), State::Value(json!("1")))]).unwrap_err();
        assert!(matches!(err, ProbeError::PathConflict { at, .. } if at == "card"));
    }

    #[test]
    fn arrays_apply_per_element() {
        let base = json!({"people": [{"name": "a"}, {"name": "b", "age": 3}]});
        let out = build_request(&base, &[("people.name".into(), State::Absent)]).unwrap();
        assert_eq!(out, json!({"people": [{"age": 3}]}));
    }

    #[test]
    fn status_classification() {
        assert_eq!(ProbeResult::from_status(200), ProbeResult::Success);
        assert_eq!(ProbeResult::from_status(204), ProbeResult::Success);
        assert_eq!(ProbeResult::from_status(302), ProbeResult::Failure);
        assert_eq!(ProbeResult::from_status(422), ProbeResult::Failure);
        assert_eq!(ProbeResult::from_status(500), ProbeResult::Failure);
    }

    #[test]
    fn budget_rows() {
        assert_eq!(estimate_budget(371, 22, 2), 73_458);
        assert_eq!(estimate_budget(3, 22, 2), 54);
        assert_eq!(estimate_budget(1, 22, 2), 0);
    }

    #[test]
    fn csv_dump() {
        let mut t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        t.rows[0].result = Some(ProbeResult::Failure);
        let csv = t.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bankAccount,card,result"));
        assert_eq!(lines.next(), Some("absent,absent,failure"));
        assert_eq!(lines.next(), Some(r#"absent,"{""number"":""str""}","#));
    }
}
