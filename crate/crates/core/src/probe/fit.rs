//! Fitting constraint templates to a filled observation table.
//!
//! A template is kept only when the rows it marks invalid are exactly the
//! rows observed to fail. Templates indistinguishable on the table (same
//! predicted rows) collapse to the first one in template order.

use std::collections::BTreeSet;

use crate::constraint::dsl::{all_or_none, exactly_one, requires};
use crate::constraint::{evaluate_under, Atom, Constraint, Formula, Literal, Origin, ParamPath};

use super::{ObservationTable, ProbeError, ProbeResult};

pub const UNOBSERVED_DIAGNOSTIC: &str = "unobserved constraints suspected";

#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Requires { trigger: ParamPath, target: ParamPath },
    OrRequires(ParamPath, ParamPath),
    ExactlyOne(ParamPath, ParamPath),
    AllOrNone(ParamPath, ParamPath),
    ValueRequires { trigger: ParamPath, value: Literal, target: ParamPath },
}

impl Template {
    pub fn precondition(&self) -> Formula {
        match self {
            Template::Requires { trigger, target } => requires(Formula::present(trigger), std::slice::from_ref(target)),
            Template::OrRequires(a, b) => Formula::and([Formula::absent(a), Formula::absent(b)]),
            Template::ExactlyOne(a, b) => exactly_one(&[a.clone(), b.clone()]),
            Template::AllOrNone(a, b) => all_or_none(&[a.clone(), b.clone()]),
            Template::ValueRequires { trigger, value, target } => requires(
                Formula::leaf(Atom::eq(trigger, value.clone())),
                std::slice::from_ref(target),
            ),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Template::Requires { trigger, target } => format!("requires({}, {})", trigger, target),
            Template::OrRequires(a, b) => format!("or-requires({}, {})", a, b),
            Template::ExactlyOne(a, b) => format!("exactly-one({}, {})", a, b),
            Template::AllOrNone(a, b) => format!("all-or-none({}, {})", a, b),
            Template::ValueRequires { trigger, value, target } => {
                format!("requires({} == {}, {})", trigger, value, target)
            }
        }
    }
}

fn templates_for(table: &ObservationTable) -> Vec<Template> {
    let (a, b) = (&table.paths[0], &table.paths[1]);
    let mut out = vec![
        Template::Requires { trigger: a.clone(), target: b.clone() },
        Template::Requires { trigger: b.clone(), target: a.clone() },
        Template::OrRequires(a.clone(), b.clone()),
        Template::ExactlyOne(a.clone(), b.clone()),
        Template::AllOrNone(a.clone(), b.clone()),
    ];
    for (trigger, target) in [(a, b), (b, a)] {
        for value in table.candidate.marked_values.get(trigger).into_iter().flatten() {
            out.push(Template::ValueRequires { trigger: trigger.clone(), value: value.clone(), target: target.clone() });
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOutcome {
    pub constraints: Vec<Constraint>,
    pub diagnostics: Vec<String>,
}

/// Emits every template whose predicted failures equal the observed ones.
pub fn fit_templates(table: &ObservationTable) -> Result<FitOutcome, ProbeError> {
    if table.paths.len() != 2 {
        return Err(ProbeError::NotAPair(table.paths.len()));
    }
    let mut usable = Vec::new();
    let mut errors = 0;
    for (i, row) in table.rows.iter().enumerate() {
        match &row.result {
            None => return Err(ProbeError::Unfilled(i)),
            Some(ProbeResult::Error(_)) => errors += 1,
            Some(_) => usable.push(i),
        }
    }
    if errors * 4 > table.rows.len() {
        return Err(ProbeError::TooManyErrors { errors, rows: table.rows.len() });
    }
    let observed: BTreeSet<usize> = usable
        .iter()
        .copied()
        .filter(|&i| table.rows[i].result == Some(ProbeResult::Failure))
        .collect();
    let mut outcome = FitOutcome::default();
    if observed.is_empty() {
        return Ok(outcome);
    }
    let pair = format!("{}, {}", table.paths[0], table.paths[1]);
    if observed.len() == usable.len() {
        outcome
            .diagnostics
            .push(format!("{}: every combination of {} fails", UNOBSERVED_DIAGNOSTIC, pair));
        return Ok(outcome);
    }

    let points: Vec<_> = usable.iter().map(|&i| (i, table.row_assignment(&table.rows[i]))).collect();
    let mut kept_predictions: Vec<BTreeSet<usize>> = Vec::new();
    for t in templates_for(table) {
        let pre = t.precondition();
        let predicted: BTreeSet<usize> = points
            .iter()
            .filter(|(_, a)| evaluate_under(&pre, a).expect("table rows assign every template path"))
            .map(|(i, _)| *i)
            .collect();
        if predicted != observed || kept_predictions.contains(&predicted) {
            continue;
        }
        kept_predictions.push(predicted);
        outcome.constraints.push(
            Constraint::new(pre.normalize(), Origin::Doc).with_source(format!("probe {}", t.describe())),
        );
    }
    if outcome.constraints.is_empty() {
        outcome.diagnostics.push(format!(
            "{}: failures of {} match no template",
            UNOBSERVED_DIAGNOSTIC, pair
        ));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{domain_for, equivalent, parse_dsl};
    use crate::doc::Candidate;
    use crate::oas::{load_spec, EndpointSpec, Overrides};
    use crate::probe::{enumerate_rows, State};

    fn spec() -> EndpointSpec {
        load_spec(
            r#"{"endpoint": "/payments", "schema": {"properties": {
                "bankAccount": {"type": "object"},
                "card": {"type": "object"},
                "paymentMethod": {"type": "object", "properties": {"type": {"type": "string", "enum": ["scheme", "iDEAL"]}}},
                "returnUrl": {"type": "string"}
            }}}"#,
        )
        .unwrap()
    }

    /// Fills the table by evaluating a ground-truth scenario directly.
    fn fill(mut t: ObservationTable, truth: &str) -> ObservationTable {
        let cs = parse_dsl(truth).unwrap();
        for i in 0..t.rows.len() {
            let a = t.row_assignment(&t.rows[i]);
            let bad = cs.iter().any(|c| evaluate_under(&c.precondition, &a).unwrap());
            t.rows[i].result = Some(if bad { ProbeResult::Failure } else { ProbeResult::Success });
        }
        t
    }

    fn assert_fits(outcome: &FitOutcome, truth: &str) {
        let want = parse_dsl(truth).unwrap().pop().unwrap();
        assert_eq!(outcome.constraints.len(), 1, "{:?}", outcome);
        let d = domain_for([&want, &outcome.constraints[0]]);
        assert!(equivalent(&want, &outcome.constraints[0], &d).unwrap());
    }

    #[test]
    fn or_requirement_from_single_failing_row() {
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        let truth = "not present(bankAccount) and not present(card) -> invalid";
        let out = fit_templates(&fill(t, truth)).unwrap();
        assert_fits(&out, truth);
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn value_dependent_requirement() {
        let mut c = Candidate::pair("paymentMethod.type", "returnUrl");
        c.marked_values.insert("paymentMethod.type".into(), vec![Literal::str("scheme"), Literal::str("iDEAL")]);
        let t = enumerate_rows(&c, &spec(), &Overrides::new()).unwrap();
        assert_eq!(t.rows.len(), 6);
        let truth = r#"requires(paymentMethod.type == "iDEAL", returnUrl)"#;
        let out = fit_templates(&fill(t, truth)).unwrap();
        assert_fits(&out, truth);
    }

    #[test]
    fn each_presence_template_is_recovered() {
        for truth in [
            "requires(bankAccount, card)",
            "requires(card, bankAccount)",
            "exactly-one(bankAccount, card)",
            "all-or-none(bankAccount, card)",
        ] {
            let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
            assert_fits(&fit_templates(&fill(t, truth)).unwrap(), truth);
        }
    }

    #[test]
    fn all_success_gives_nothing() {
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        let out = fit_templates(&fill(t, "")).unwrap();
        assert!(out.constraints.is_empty());
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn all_failure_is_diagnosed() {
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        let out = fit_templates(&fill(t, "true -> invalid")).unwrap();
        assert!(out.constraints.is_empty());
        assert!(out.diagnostics[0].starts_with(UNOBSERVED_DIAGNOSTIC));
    }

    #[test]
    fn unmatched_failures_are_diagnosed() {
        // Every row with bankAccount fails: no pair template explains it.
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        let out = fit_templates(&fill(t, "present(bankAccount) -> invalid")).unwrap();
        assert!(out.constraints.is_empty());
        assert_eq!(out.diagnostics.len(), 1);
    }

    #[test]
    fn too_many_transport_errors_abort() {
        let mut t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        for (i, r) in t.rows.iter_mut().enumerate() {
            r.result = Some(if i < 2 { ProbeResult::Error("connect".into()) } else { ProbeResult::Success });
        }
        assert!(matches!(fit_templates(&t), Err(ProbeError::TooManyErrors { errors: 2, rows: 4 })));
        // One error in four is tolerated and excluded.
        t.rows[1].result = Some(ProbeResult::Success);
        assert!(fit_templates(&t).unwrap().constraints.is_empty());
    }

    #[test]
    fn unfilled_rows_rejected() {
        let t = enumerate_rows(&Candidate::pair("bankAccount", "card"), &spec(), &Overrides::new()).unwrap();
        assert!(matches!(fit_templates(&t), Err(ProbeError::Unfilled(0))));
    }

    #[test]
    fn fitted_constraints_reproduce_table() {
        let mut c = Candidate::pair("paymentMethod.type", "returnUrl");
        c.marked_values.insert("paymentMethod.type".into(), vec![Literal::str("scheme"), Literal::str("iDEAL")]);
        let t = fill(
            enumerate_rows(&c, &spec(), &Overrides::new()).unwrap(),
            r#"requires(paymentMethod.type == "iDEAL", returnUrl)"#,
        );
        let out = fit_templates(&t).unwrap();
        for row in &t.rows {
            let a = t.row_assignment(row);
            let predicted = out.constraints.iter().any(|c| evaluate_under(&c.precondition, &a).unwrap());
            assert_eq!(predicted, row.result == Some(ProbeResult::Failure));
        }
        assert!(t.state_sets[0].contains(&State::Absent));
    }
}
