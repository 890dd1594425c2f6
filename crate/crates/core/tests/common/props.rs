//! Property checks shared by the `properties` test target and the acceptance
//! runner. Each returns a proptest failure message on a counterexample.

use std::collections::{BTreeMap, BTreeSet};

use constraintminer::analysis::{AbstractValue, Engine, Variable, VariableStack};
use constraintminer::config::AnalysisConfig;
use constraintminer::constraint::dsl::formula_to_dsl;
use constraintminer::constraint::{decompose, evaluate_under, parse_dsl, to_dsl, union_dedup, Assignment, Constraint, Formula, Literal, ParamPath};
use constraintminer::doc::{candidates, Candidate};
use constraintminer::evaluation::evaluate;
use constraintminer::mock::{validate_request, Scenario};
use constraintminer::oas::{load_spec, Overrides};
use constraintminer::probe::enumerate_rows;
use constraintminer::source::{parse_expr, parse_unit, print_unit, resolve_program, SourceFile};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

use super::oracle::{self, Gen};

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn flat_gen() -> Gen {
    Gen { params: vec!["a", "b", "c"] }
}

fn one(text: &str) -> Constraint {
    parse_dsl(text).unwrap().pop().unwrap()
}

fn statement_of(f: &Formula) -> String {
    format!("{} -> invalid", formula_to_dsl(f))
}

pub fn normalize_idempotent_and_sound(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let text = format!("{} -> invalid", flat_gen().formula(&mut StdRng::seed_from_u64(seed), 3));
        let f = one(&text).precondition;
        let n = f.normalize();
        prop_assert_eq!(n.normalize(), n.clone(), "not idempotent on {}", text);
        prop_assert!(oracle::equivalent(&text, &statement_of(&n)), "{} normalized to {}", text, statement_of(&n));
        Ok(())
    })
}

/// The decomposed parts reject exactly what the original rejects.
pub fn decompose_preserves_conjunction(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let text = flat_gen().statement(&mut StdRng::seed_from_u64(seed));
        let c = one(&text);
        let parts = decompose(&c);
        prop_assert!(!parts.is_empty());
        let joined = Formula::Or(parts.iter().map(|p| p.precondition.clone()).collect());
        prop_assert!(oracle::equivalent(&text, &statement_of(&joined)), "{} split into {:?}", text, parts.iter().map(to_dsl).collect::<Vec<_>>());
        Ok(())
    })
}

#[derive(Debug, Clone)]
enum StackOp {
    Scope,
    Frame,
    Pop,
    Declare(u8, i64),
    Assign(u8, i64),
}

fn stack_op() -> impl Strategy<Value = StackOp> {
    prop_oneof![
        2 => Just(StackOp::Scope),
        1 => Just(StackOp::Frame),
        3 => Just(StackOp::Pop),
        3 => (0u8..4, -5i64..5).prop_map(|(n, v)| StackOp::Declare(n, v)),
        2 => (0u8..4, -5i64..5).prop_map(|(n, v)| StackOp::Assign(n, v)),
    ]
}

/// Checks the stack against a list-of-maps model after every operation and
/// that closing every opened scope restores the starting depth.
pub fn stack_push_pop_balance(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(stack_op(), 0..60), |ops| {
        let mut s = VariableStack::new();
        s.push_frame();
        let mut model: Vec<(bool, BTreeMap<String, i64>)> = vec![(true, BTreeMap::new())];
        let names = ["v0", "v1", "v2", "v3"];
        let visible = |m: &Vec<(bool, BTreeMap<String, i64>)>, n: &str| -> Option<i64> {
            for (frame, vars) in m.iter().rev() {
                if let Some(v) = vars.get(n) {
                    return Some(*v);
                }
                if *frame {
                    return None;
                }
            }
            None
        };
        for op in ops {
            match op {
                StackOp::Scope => {
                    s.push_scope();
                    model.push((false, BTreeMap::new()));
                }
                StackOp::Frame => {
                    s.push_frame();
                    model.push((true, BTreeMap::new()));
                }
                StackOp::Pop if model.len() > 1 => {
                    s.pop();
                    model.pop();
                }
                StackOp::Pop => {}
                StackOp::Declare(n, v) => {
                    s.declare(names[n as usize], Variable { value: AbstractValue::Int(v), ty: None });
                    model.last_mut().unwrap().1.insert(names[n as usize].into(), v);
                }
                StackOp::Assign(n, v) => {
                    let name = names[n as usize];
                    let expect = visible(&model, name).is_some();
                    prop_assert_eq!(s.assign(name, AbstractValue::Int(v)), expect);
                    if expect {
                        for (frame, vars) in model.iter_mut().rev() {
                            if let Some(slot) = vars.get_mut(name) {
                                *slot = v;
                                break;
                            }
                            if *frame {
                                break;
                            }
                        }
                    }
                }
            }
            prop_assert_eq!(s.depth(), model.len());
            for n in names {
                let got = s.lookup(n).map(|v| v.value.clone());
                prop_assert_eq!(got, visible(&model, n).map(AbstractValue::Int));
            }
        }
        while model.len() > 1 {
            s.pop();
            model.pop();
        }
        prop_assert_eq!(s.depth(), 1);
        Ok(())
    })
}

const WIDE_SPEC: &str = r#"{"endpoint": "/x", "schema": {"properties": {
    "p0": {"type": "string"}, "p1": {"type": "integer"}, "p2": {"type": "boolean"},
    "p3": {"type": "object", "properties": {"q": {"type": "string"}}},
    "p4": {"type": "string", "enum": ["e1", "e2"]}, "p5": {"type": "number"}
}}}"#;

/// |rows| is the product of (1 + marked values, or 1 + 1 default).
pub fn enumerate_rows_closed_form(cases: u32) -> Result<(), String> {
    let spec = load_spec(WIDE_SPEC).unwrap();
    let paths = ["p0", "p1", "p2", "p3.q", "p4", "p5"];
    let strategy = prop::collection::btree_map(0usize..paths.len(), 0usize..4, 2..5);
    run(cases, strategy, |chosen| {
        let mut c = Candidate { paths: BTreeSet::new(), marked_values: BTreeMap::new() };
        let mut expect = 1;
        for (&i, &marks) in &chosen {
            let p = ParamPath::new(paths[i]);
            c.paths.insert(p.clone());
            if marks > 0 {
                c.marked_values.insert(p, (0..marks).map(|k| Literal::str(format!("m{}", k))).collect());
            }
            expect *= 1 + marks.max(1);
        }
        let t = enumerate_rows(&c, &spec, &Overrides::new()).unwrap();
        prop_assert_eq!(t.rows.len(), expect);
        let states: Vec<&Vec<usize>> = t.rows.iter().map(|r| &r.states).collect();
        prop_assert!(states.windows(2).all(|w| w[0] < w[1]), "rows not in lexicographic order");
        Ok(())
    })
}

const MOCK_SPEC: &str = r#"{"endpoint": "/pay", "schema": {"properties": {
    "amount": {"type": "integer"},
    "card": {"type": "object", "properties": {"number": {"type": "string"}, "cvc": {"type": "string"}}},
    "bankAccount": {"type": "object", "properties": {"iban": {"type": "string"}}},
    "method": {"type": "string"},
    "returnUrl": {"type": "string"}
}}}"#;

const MOCK_RULES: &str = "not present(bankAccount) and not present(card) -> invalid
requires(method == \"iDEAL\", returnUrl)
amount < 0 -> invalid
len(card.number) > 4 -> invalid
requires(card, card.cvc)
method in {\"bad\", \"worse\"} -> invalid";

fn option_of(values: Vec<Value>) -> impl Strategy<Value = Option<Value>> {
    prop_oneof![1 => Just(None), 4 => prop::sample::select(values).prop_map(Some)]
}

fn mock_body() -> impl Strategy<Value = Value> {
    let strs = || vec![json!("ab"), json!("abcde"), json!(""), json!(7), Value::Null];
    (
        option_of(vec![json!(-1), json!(0), json!(5), json!("5"), Value::Null]),
        option_of(strs()),
        option_of(strs()),
        prop::bool::ANY,
        option_of(vec![json!({"iban": "x"}), json!({}), json!(3), Value::Null]),
        option_of(vec![json!("iDEAL"), json!("scheme"), json!("bad"), json!(1)]),
        option_of(strs()),
    )
        .prop_map(|(amount, number, cvc, has_card, bank, method, ret)| {
            let mut body = serde_json::Map::new();
            let put = |m: &mut serde_json::Map<String, Value>, k: &str, v: Option<Value>| {
                if let Some(v) = v {
                    m.insert(k.into(), v);
                }
            };
            put(&mut body, "amount", amount);
            if has_card {
                let mut card = serde_json::Map::new();
                put(&mut card, "number", number);
                put(&mut card, "cvc", cvc);
                body.insert("card".into(), Value::Object(card));
            }
            put(&mut body, "bankAccount", bank);
            put(&mut body, "method", method);
            put(&mut body, "returnUrl", ret);
            Value::Object(body)
        })
}

/// The mock's status agrees with evaluating the scenario constraints
/// directly over the body's values.
pub fn mock_agrees_with_core(cases: u32) -> Result<(), String> {
    let scenario = Scenario::from_texts(MOCK_SPEC, MOCK_RULES, 422).unwrap();
    let rules = parse_dsl(MOCK_RULES).unwrap();
    type Check = fn(&Value) -> bool;
    let types: [(&str, Check); 8] = [
        ("amount", Value::is_i64),
        ("card", Value::is_object),
        ("card.number", Value::is_string),
        ("card.cvc", Value::is_string),
        ("bankAccount", Value::is_object),
        ("bankAccount.iban", Value::is_string),
        ("method", Value::is_string),
        ("returnUrl", Value::is_string),
    ];
    run(cases, mock_body(), |body| {
        let mut a = Assignment::new();
        let mut well_typed = true;
        for (path, ok) in types {
            let v = path.split('.').try_fold(&body, |cur, seg| cur.get(seg)).filter(|v| !v.is_null()).cloned();
            well_typed &= v.as_ref().is_none_or(ok);
            a.set(ParamPath::new(path), v);
        }
        let violated = rules.iter().any(|c| evaluate_under(&c.precondition, &a).unwrap());
        let expect = if !well_typed || violated { 422 } else { 200 };
        prop_assert_eq!(validate_request(&scenario, body.to_string().as_bytes()), expect, "body {}", body);
        Ok(())
    })
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["x", "y", "r", "this.n"]).prop_map(String::from),
        (0i64..100).prop_map(|n| n.to_string()),
        prop::sample::select(vec!["\"s\"", "\"\"", "true", "false", "null"]).prop_map(String::from),
        prop::sample::select(vec!["r.getA()", "r.getCard().getNumber()", "f(x)", "x.length()"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let ops = prop::sample::select(vec!["||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%"]);
        prop_oneof![
            (inner.clone(), ops, inner.clone()).prop_map(|(a, o, b)| format!("({} {} {})", a, o, b)),
            inner.clone().prop_map(|a| format!("!({})", a)),
            inner.clone().prop_map(|a| format!("-({})", a)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("g({}, {})", a, b)),
            inner.prop_map(|a| format!("new E({})", a)),
        ]
    })
}

fn stmt_text() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        expr_text().prop_map(|e| format!("int v = {};", e)),
        expr_text().prop_map(|e| format!("x = {};", e)),
        expr_text().prop_map(|e| format!("x += {};", e)),
        expr_text().prop_map(|e| format!("f({});", e)),
        Just("throw new ValidationException(\"m\");".to_string()),
        Just("return;".to_string()),
        Just("x++;".to_string()),
    ];
    simple.prop_recursive(3, 16, 3, |inner| {
        let block = prop::collection::vec(inner, 0..3).prop_map(|v| v.join(" "));
        prop_oneof![
            (expr_text(), block.clone(), block.clone()).prop_map(|(c, a, b)| format!("if ({}) {{ {} }} else {{ {} }}", c, a, b)),
            (expr_text(), block.clone()).prop_map(|(c, a)| format!("if ({}) {{ {} }}", c, a)),
            (expr_text(), block.clone()).prop_map(|(c, a)| format!("for (int i = 0; i < {}; i++) {{ {} }}", c, a)),
            block.clone().prop_map(|a| format!("for (Item it : r.getItems()) {{ {} }}", a)),
            (block.clone(), block).prop_map(|(a, b)| format!("switch (r.getT()) {{ case A: case B: {} break; default: {} }}", a, b)),
        ]
    })
}

/// print(parse(src)) parses back to the same tree and prints identically.
pub fn printer_round_trip(cases: u32) -> Result<(), String> {
    run(cases, prop::collection::vec(stmt_text(), 0..5), |stmts| {
        let src = format!("class C {{ int n; void m(Req r) {{ {} }} }}", stmts.join("\n"));
        let unit = parse_unit(&src).map_err(|e| TestCaseError::fail(format!("{}: {}", e, src)))?;
        let printed = print_unit(&unit);
        let again = parse_unit(&printed).map_err(|e| TestCaseError::fail(format!("{}: {}", e, printed)))?;
        prop_assert_eq!(&again, &unit, "tree changed through\n{}", printed);
        prop_assert_eq!(print_unit(&again), printed);
        Ok(())
    })
}

fn constraint_set(r: &mut StdRng, n: usize) -> Vec<Constraint> {
    let g = Gen { params: vec!["a", "b", "c"] };
    let text: Vec<String> = (0..n).map(|_| g.statement(r)).collect();
    parse_dsl(&text.join("\n")).unwrap()
}

/// Swapping identified and truth swaps missed and spurious; adding an
/// identified constraint never loses a match.
pub fn evaluation_symmetric_and_monotone(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 0usize..4, 0usize..4), |(seed, n, m)| {
        let mut r = StdRng::seed_from_u64(seed);
        let a = constraint_set(&mut r, n);
        let mut b = constraint_set(&mut r, m);
        // Share some constraints so matches actually happen.
        b.extend(a.iter().take(1).cloned());
        let ab = evaluate("/x", &a, &b).unwrap().total;
        let ba = evaluate("/x", &b, &a).unwrap().total;
        prop_assert_eq!(ab.matched, ba.matched);
        prop_assert_eq!(ab.missed, ba.spurious);
        prop_assert_eq!(ab.spurious, ba.missed);
        let mut more = a.clone();
        more.extend(constraint_set(&mut r, 1));
        prop_assert!(evaluate("/x", &more, &b).unwrap().total.matched >= ab.matched);
        Ok(())
    })
}

/// Combining two sources matches no more than both sources separately.
pub fn combined_matches_bounded(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut r = StdRng::seed_from_u64(seed);
        let doc = constraint_set(&mut r, 3);
        let code = constraint_set(&mut r, 3);
        let mut truth = constraint_set(&mut r, 2);
        truth.extend(doc.iter().take(1).cloned());
        truth.extend(code.iter().take(1).cloned());
        let combined = union_dedup(&[&code, &doc]);
        let d = evaluate("/x", &doc, &truth).unwrap().total.matched;
        let c = evaluate("/x", &code, &truth).unwrap().total.matched;
        let both = evaluate("/x", &combined, &truth).unwrap().total.matched;
        prop_assert!(both <= d + c);
        Ok(())
    })
}

#[derive(Debug, Clone)]
enum Arith {
    Lit(i64),
    Bin(Box<Arith>, char, Box<Arith>),
}

impl Arith {
    fn text(&self) -> String {
        match self {
            Arith::Lit(n) => n.to_string(),
            Arith::Bin(a, o, b) => format!("({} {} {})", a.text(), o, b.text()),
        }
    }

    fn value(&self) -> Option<i64> {
        match self {
            Arith::Lit(n) => Some(*n),
            Arith::Bin(a, o, b) => {
                let (x, y) = (a.value()?, b.value()?);
                match o {
                    '+' => x.checked_add(y),
                    '-' => x.checked_sub(y),
                    '*' => x.checked_mul(y),
                    '/' => x.checked_div(y),
                    _ => x.checked_rem(y),
                }
            }
        }
    }
}

fn arith() -> impl Strategy<Value = Arith> {
    prop_oneof![(0i64..20).prop_map(Arith::Lit), Just(Arith::Lit(i64::MAX / 2))].prop_recursive(4, 16, 2, |inner| {
        (inner.clone(), prop::sample::select(vec!['+', '-', '*', '/', '%']), inner).prop_map(|(a, o, b)| Arith::Bin(Box::new(a), o, Box::new(b)))
    })
}

/// Folding integer expressions agrees with checked machine arithmetic;
/// overflow and division by zero fold to unknown.
pub fn constant_folding_matches_arithmetic(cases: u32) -> Result<(), String> {
    let files = [SourceFile { name: "c.mj".into(), text: "class C { void m() { } }".into() }];
    let program = resolve_program(&files, &["C.m".to_string()], &[]).unwrap();
    let config = AnalysisConfig::default();
    run(cases, arith(), |e| {
        let mut engine = Engine::new(&program, &config);
        engine.enter("C", None);
        let got = engine.eval(&parse_expr(&e.text()).unwrap());
        let want = e.value().map_or(AbstractValue::Unknown, AbstractValue::Int);
        prop_assert_eq!(got, want, "{}", e.text());
        Ok(())
    })
}

/// Raising the frequency factor only ever keeps more candidates.
pub fn candidates_monotone_in_factor(cases: u32) -> Result<(), String> {
    let names = ["alpha", "beta", "gamma", "delta", "omega"];
    let description = prop::collection::vec(prop::sample::select(vec!["alpha", "beta", "gamma", "delta", "omega", "the", "value"]), 0..8);
    run(cases, (prop::collection::vec(description, 5), 0.2f64..3.0, 0.0f64..2.0), |(descs, f, extra)| {
        let props: serde_json::Map<String, Value> = names
            .iter()
            .zip(&descs)
            .map(|(n, d)| (n.to_string(), json!({"type": "string", "description": d.join(" ")})))
            .collect();
        let spec = load_spec(&json!({"endpoint": "/x", "schema": {"properties": props}}).to_string()).unwrap();
        let low: BTreeSet<Candidate> = candidates(&spec, f).into_iter().collect();
        let high: BTreeSet<Candidate> = candidates(&spec, f + extra).into_iter().collect();
        prop_assert!(low.is_subset(&high), "factor {} kept {:?}, {} kept {:?}", f, low, f + extra, high);
        Ok(())
    })
}

/// Every property with its default case count, for the acceptance runner.
pub type Suite = (&'static str, fn(u32) -> Result<(), String>, u32);

pub fn all() -> Vec<Suite> {
    vec![
        ("normalize idempotence and semantics", normalize_idempotent_and_sound, 200),
        ("decompose conjunction-equivalence", decompose_preserves_conjunction, 200),
        ("variable stack push/pop balance", stack_push_pop_balance, 256),
        ("observation table closed-form row count", enumerate_rows_closed_form, 256),
        ("mock status agrees with constraint evaluation", mock_agrees_with_core, 500),
        ("AST print round trip", printer_round_trip, 200),
        ("evaluation swap symmetry and monotonicity", evaluation_symmetric_and_monotone, 128),
        ("combined matches bounded by parts", combined_matches_bounded, 128),
        ("constant folding matches arithmetic", constant_folding_matches_arithmetic, 256),
        ("candidates monotone in frequency factor", candidates_monotone_in_factor, 256),
    ]
}
