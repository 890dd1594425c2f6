//! Scoring identified constraints against a ground truth.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::constraint::{decompose, domain_for, equivalent, parse_dsl, to_dsl, Constraint, ConstraintClass, ConstraintError, Domain};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("cannot read ground truth {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("ground truth {path}: {source}")]
    Dsl { path: String, source: ConstraintError },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Reads a ground-truth DSL file; labels are kept on the constraints.
pub fn load_ground_truth(path: &Path) -> Result<Vec<Constraint>, EvaluationError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvaluationError::Io { path: path.display().to_string(), source })?;
    parse_dsl(&text).map_err(|source| EvaluationError::Dsl { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub constraint: String,
    pub class: ConstraintClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl Entry {
    fn of(c: &Constraint) -> Entry {
        Entry {
            constraint: to_dsl(c),
            class: c.effective_class(),
            category: c.category.clone(),
            source: c.source_ref.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub truth: Entry,
    pub identified: Entry,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub recall: f64,
    pub precision: f64,
    /// Set when a ratio had an empty denominator and defaults to 1.0.
    pub vacuous: bool,
}

/// recall = matched / truth, precision = matched / identified; an empty
/// denominator gives 1.0 and marks the result vacuous.
pub fn metrics(matched: usize, truth: usize, identified: usize) -> Metrics {
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    Metrics { recall: ratio(matched, truth), precision: ratio(matched, identified), vacuous: truth == 0 || identified == 0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Counts {
    /// Decomposed identified constraints excluding manual review.
    pub identified: usize,
    pub truth: usize,
    pub matched: usize,
    pub missed: usize,
    pub spurious: usize,
    pub manual: usize,
    pub metrics: Metrics,
}

impl Counts {
    fn finish(mut self) -> Self {
        self.metrics = metrics(self.matched, self.truth, self.identified);
        self
    }

    fn add(&mut self, o: &Counts) {
        self.identified += o.identified;
        self.truth += o.truth;
        self.matched += o.matched;
        self.missed += o.missed;
        self.spurious += o.spurious;
        self.manual += o.manual;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub endpoint: String,
    pub matched: Vec<MatchedPair>,
    pub missed: Vec<Entry>,
    pub spurious: Vec<Entry>,
    pub manual_review: Vec<Entry>,
    pub by_class: BTreeMap<ConstraintClass, Counts>,
    pub total: Counts,
}

/// Decomposes both sides and matches them greedily one-to-one by
/// equivalence over `domain`. Truth is visited in file order, identified
/// candidates in normalized-DSL order.
pub fn match_constraints(endpoint: &str, identified: &[Constraint], truth: &[Constraint], domain: &Domain) -> Result<EvaluationReport, EvaluationError> {
    let truth: Vec<Constraint> = truth.iter().flat_map(decompose).collect();
    let mut ident: Vec<Constraint> = identified.iter().flat_map(decompose).collect();
    ident.sort_by_cached_key(to_dsl);
    let (manual, ident): (Vec<Constraint>, Vec<Constraint>) = ident.into_iter().partition(Constraint::partial);

    let mut used = vec![false; ident.len()];
    let mut matched = Vec::new();
    let mut missed = Vec::new();
    for t in &truth {
        let mut hit = None;
        for (i, c) in ident.iter().enumerate() {
            if !used[i] && equivalent(t, c, domain)? {
                hit = Some(i);
                break;
            }
        }
        match hit {
            Some(i) => {
                used[i] = true;
                matched.push(MatchedPair { truth: Entry::of(t), identified: Entry::of(&ident[i]) });
            }
            None => missed.push(Entry::of(t)),
        }
    }
    let spurious: Vec<Entry> = ident.iter().zip(&used).filter(|(_, u)| !**u).map(|(c, _)| Entry::of(c)).collect();
    let manual_review: Vec<Entry> = manual.iter().map(Entry::of).collect();

    let mut by_class: BTreeMap<ConstraintClass, Counts> = BTreeMap::new();
    for class in [ConstraintClass::Inter, ConstraintClass::Single] {
        let c = Counts {
            // A matched constraint counts in its truth's class so that
            // matched <= identified holds per class.
            identified: matched.iter().filter(|m| m.truth.class == class).count() + spurious.iter().filter(|m| m.class == class).count(),
            truth: truth.iter().filter(|c| c.effective_class() == class).count(),
            matched: matched.iter().filter(|m| m.truth.class == class).count(),
            missed: missed.iter().filter(|m| m.class == class).count(),
            spurious: spurious.iter().filter(|m| m.class == class).count(),
            manual: manual_review.iter().filter(|m| m.class == class).count(),
            metrics: Metrics::default(),
        };
        by_class.insert(class, c.finish());
    }
    let total = Counts {
        identified: ident.len(),
        truth: truth.len(),
        matched: matched.len(),
        missed: missed.len(),
        spurious: spurious.len(),
        manual: manual_review.len(),
        metrics: Metrics::default(),
    }
    .finish();
    Ok(EvaluationReport { endpoint: endpoint.to_string(), matched, missed, spurious, manual_review, by_class, total })
}

/// [`match_constraints`] over the domain grounding both sets.
pub fn evaluate(endpoint: &str, identified: &[Constraint], truth: &[Constraint]) -> Result<EvaluationReport, EvaluationError> {
    let domain = domain_for(identified.iter().chain(truth));
    match_constraints(endpoint, identified, truth, &domain)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub endpoints: Vec<EvaluationReport>,
    pub by_class: BTreeMap<ConstraintClass, Counts>,
    pub total: Counts,
}

pub fn summarize(endpoints: Vec<EvaluationReport>) -> Summary {
    let mut by_class: BTreeMap<ConstraintClass, Counts> = BTreeMap::new();
    let mut total = Counts::default();
    for r in &endpoints {
        for (k, c) in &r.by_class {
            by_class.entry(*k).or_default().add(c);
        }
        total.add(&r.total);
    }
    let by_class = by_class.into_iter().map(|(k, c)| (k, c.finish())).collect();
    Summary { endpoints, by_class, total: total.finish() }
}

/// Plain-text table: one row per endpoint and class.
pub fn render_table(s: &Summary) -> String {
    let mut rows: Vec<[String; 6]> = vec![["Endpoint", "Class", "Identified", "Total", "FP", "Manual"].map(String::from)];
    for r in &s.endpoints {
        for (class, c) in &r.by_class {
            if c.truth == 0 && c.identified == 0 && c.manual == 0 {
                continue;
            }
            rows.push([
                r.endpoint.clone(),
                class.to_string(),
                c.matched.to_string(),
                c.truth.to_string(),
                c.spurious.to_string(),
                c.manual.to_string(),
            ]);
        }
    }
    for (class, c) in &s.by_class {
        rows.push(["Total".into(), class.to_string(), c.matched.to_string(), c.truth.to_string(), c.spurious.to_string(), c.manual.to_string()]);
    }
    let widths: Vec<usize> = (0..6).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (n, r) in rows.iter().enumerate() {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{:<w$}", c, w = *w)).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if n == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        }
    }
    for (class, c) in &s.by_class {
        let _ = writeln!(
            out,
            "{}: recall {:.1}% precision {:.1}%{}",
            class,
            c.metrics.recall * 100.0,
            c.metrics.precision * 100.0,
            if c.metrics.vacuous { " (empty denominator counted as 100%)" } else { "" }
        );
    }
    out
}
