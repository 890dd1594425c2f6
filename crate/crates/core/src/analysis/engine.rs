//! Abstract interpretation over method CFGs with callee inlining.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::cfg::{build_cfg, Cfg, Edge, Node, NodeId};
use super::value::{AbstractValue, Variable, VariableStack};
use crate::config::{AnalysisConfig, CommonMethod};
use crate::constraint::{union_dedup, Atom, CmpOp, Constraint, Formula, Literal, Origin, ParamPath};
use crate::source::ast::{AssignOp, BinOp, CaseLabel, Expr, ExprKind, Stmt, StmtKind, TypeRef, UnOp};
use crate::source::{print_expr, Program, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Unparsed,
    Truncated,
    Recursive,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub method: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallStatus {
    Inlined,
    Summarized,
    Truncated,
    RecursionCut,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub line: u32,
    pub col: u32,
    pub args: Vec<String>,
    pub depth: usize,
    pub status: CallStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallGraph {
    pub root: String,
    pub max_depth: usize,
    pub nodes: BTreeSet<String>,
    pub edges: Vec<CallEdge>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub constraints: Vec<Constraint>,
    pub diagnostics: Vec<Diagnostic>,
    pub call_graphs: Vec<CallGraph>,
}

/// How a walk left its region.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Flow {
    Reached,
    /// Control left the region; `negate` marks exits after which the rest of
    /// the enclosing region only runs when the branch condition was false.
    Ended { negate: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Exec,
    Summary,
}

struct Frame {
    class: String,
    method: String,
    mode: Mode,
    guard_base: usize,
    returns: Vec<AbstractValue>,
    terms: Vec<Formula>,
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Value,
    Guard,
}

pub struct Engine<'p> {
    program: &'p Program,
    common: BTreeMap<String, CommonMethod>,
    patterns: Vec<String>,
    max_depth: usize,
    root_model: Option<String>,
    pub stack: VariableStack,
    guards: Vec<Formula>,
    frames: Vec<Frame>,
    summary_depth: usize,
    emitted: Vec<Constraint>,
    diagnostics: BTreeSet<Diagnostic>,
    graph: CallGraph,
    const_eval: Vec<String>,
}

fn literal_of_label(l: &CaseLabel) -> Literal {
    match l {
        CaseLabel::Int(v) => Literal::num(*v as f64),
        CaseLabel::Str(s) | CaseLabel::Name(s) => Literal::str(s.clone()),
    }
}

fn label_text(l: &CaseLabel) -> String {
    match l {
        CaseLabel::Int(v) => v.to_string(),
        CaseLabel::Str(s) => format!("{:?}", s),
        CaseLabel::Name(n) => n.clone(),
    }
}

fn cmp_op(op: BinOp) -> Option<CmpOp> {
    Some(match op {
        BinOp::Eq => CmpOp::Eq,
        BinOp::Ne => CmpOp::Ne,
        BinOp::Lt => CmpOp::Lt,
        BinOp::Le => CmpOp::Le,
        BinOp::Gt => CmpOp::Gt,
        BinOp::Ge => CmpOp::Ge,
        _ => return None,
    })
}

/// Folds a binary operator over constants; `None` when undecidable.
pub fn fold_binary(op: BinOp, a: &AbstractValue, b: &AbstractValue) -> Option<AbstractValue> {
    use AbstractValue as V;
    Some(match (op, a, b) {
        (BinOp::Add, V::Int(x), V::Int(y)) => V::Int(x.checked_add(*y)?),
        (BinOp::Sub, V::Int(x), V::Int(y)) => V::Int(x.checked_sub(*y)?),
        (BinOp::Mul, V::Int(x), V::Int(y)) => V::Int(x.checked_mul(*y)?),
        (BinOp::Div, V::Int(x), V::Int(y)) => V::Int(x.checked_div(*y)?),
        (BinOp::Rem, V::Int(x), V::Int(y)) => V::Int(x.checked_rem(*y)?),
        (BinOp::Add, V::Str(x), y) if y.is_const() => V::Str(format!("{}{}", x, plain(y))),
        (BinOp::Add, x, V::Str(y)) if x.is_const() => V::Str(format!("{}{}", plain(x), y)),
        (BinOp::And, V::Bool(false), _) | (BinOp::And, _, V::Bool(false)) => V::Bool(false),
        (BinOp::Or, V::Bool(true), _) | (BinOp::Or, _, V::Bool(true)) => V::Bool(true),
        (BinOp::And, V::Bool(x), V::Bool(y)) => V::Bool(*x && *y),
        (BinOp::Or, V::Bool(x), V::Bool(y)) => V::Bool(*x || *y),
        (BinOp::Eq | BinOp::Ne, x, y) if x.is_const() && y.is_const() => {
            let same = std::mem::discriminant(x) == std::mem::discriminant(y);
            if !same {
                return None;
            }
            V::Bool((x == y) == (op == BinOp::Eq))
        }
        (_, V::Int(x), V::Int(y)) => V::Bool(cmp_op(op)?.apply(*x as f64, *y as f64)),
        _ => return None,
    })
}

fn plain(v: &AbstractValue) -> String {
    match v {
        AbstractValue::Str(s) => s.clone(),
        other => other.to_string(),
    }
}

fn conj(fs: &[Formula]) -> Formula {
    Formula::and(fs.iter().cloned())
}

impl<'p> Engine<'p> {
    pub fn new(program: &'p Program, config: &AnalysisConfig) -> Self {
        Engine {
            program,
            common: config.common_method_table(),
            patterns: config.invalid_state_patterns.clone(),
            max_depth: config.max_depth,
            root_model: None,
            stack: VariableStack::new(),
            guards: Vec::new(),
            frames: Vec::new(),
            summary_depth: 0,
            emitted: Vec::new(),
            diagnostics: BTreeSet::new(),
            graph: CallGraph { root: String::new(), max_depth: config.max_depth, nodes: BTreeSet::new(), edges: Vec::new() },
            const_eval: Vec::new(),
        }
    }

    /// Enters `class` as if analyzing one of its methods, with `root` as the
    /// request model; used to evaluate standalone expressions.
    pub fn enter(&mut self, class: &str, root: Option<&str>) {
        self.root_model = root.map(str::to_string);
        self.frames.push(Frame {
            class: class.to_string(),
            method: String::from("<expr>"),
            mode: Mode::Exec,
            guard_base: 0,
            returns: Vec::new(),
            terms: Vec::new(),
        });
        self.stack.push_frame();
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.diagnostics.iter().cloned().collect()
    }

    fn class(&self) -> &str {
        &self.frames.last().expect("inside a method").class
    }

    fn method_name(&self) -> String {
        let f = self.frames.last().expect("inside a method");
        format!("{}.{}", f.class, f.method)
    }

    fn file(&self) -> String {
        self.program.files.get(self.class()).cloned().unwrap_or_default()
    }

    fn note(&mut self, kind: DiagnosticKind, span: Span, text: String) {
        let d = Diagnostic { kind, file: self.file(), line: span.line, col: span.col, method: self.method_name(), text };
        self.diagnostics.insert(d);
    }

    fn unparsed(&mut self, e: &Expr) -> Formula {
        let text = print_expr(e);
        self.note(DiagnosticKind::Unparsed, e.span, text.clone());
        Formula::leaf(Atom::unparsed(text))
    }

    // ---- controllers ----

    /// Extracts the constraints reachable from one controller method.
    pub fn analyze_controller(&mut self, class: &str, method: &str) -> CallGraph {
        let program = self.program;
        let m = program.method(class, method).expect("controller was resolved");
        let root = program.request_root(class, method);
        self.root_model = root.as_ref().map(|(_, c)| c.clone());
        let name = format!("{}.{}", class, method);
        self.graph = CallGraph { root: name.clone(), max_depth: self.max_depth, nodes: BTreeSet::from([name]), edges: Vec::new() };
        let args: Vec<AbstractValue> = m
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| match &root {
                Some((ri, _)) if *ri == i => AbstractValue::ParamRef { path: ParamPath::new(""), ty: p.ty.clone() },
                _ => AbstractValue::Unknown,
            })
            .collect();
        let depth = self.stack.depth();
        self.run(class, method, &args, Mode::Exec);
        debug_assert_eq!(depth, self.stack.depth());
        std::mem::replace(&mut self.graph, CallGraph { root: String::new(), max_depth: self.max_depth, nodes: BTreeSet::new(), edges: Vec::new() })
    }

    pub fn take_constraints(&mut self) -> Vec<Constraint> {
        std::mem::take(&mut self.emitted)
    }

    /// Runs a method body in a fresh frame; returns the frame.
    fn run(&mut self, class: &str, method: &str, args: &[AbstractValue], mode: Mode) -> Frame {
        let program = self.program;
        let m = program.method(class, method).expect("callee exists");
        let guard_base = self.guards.len();
        self.frames.push(Frame {
            class: class.to_string(),
            method: method.to_string(),
            mode,
            guard_base,
            returns: Vec::new(),
            terms: Vec::new(),
        });
        let depth = self.stack.depth();
        self.stack.push_frame();
        for (p, v) in m.params.iter().zip(args.iter().cloned().chain(std::iter::repeat(AbstractValue::Unknown))) {
            self.stack.declare(&p.name, Variable { value: v, ty: Some(p.ty.clone()) });
        }
        let cfg = build_cfg(m);
        self.walk(&cfg, cfg.entry, cfg.exit, &[]);
        self.stack.truncate(depth);
        self.guards.truncate(guard_base);
        self.frames.pop().expect("frame pushed above")
    }

    // ---- CFG walk ----

    fn walk(&mut self, cfg: &Cfg<'p>, mut n: NodeId, stop: NodeId, outer: &[NodeId]) -> Flow {
        let base = self.guards.len();
        let flow = loop {
            if n == stop {
                break Flow::Reached;
            }
            if outer.contains(&n) {
                break Flow::Ended { negate: false };
            }
            match cfg.node(n) {
                Node::Entry | Node::Join | Node::Jump(_) => n = cfg.next(n),
                Node::ScopeOpen => {
                    self.stack.push_scope();
                    n = cfg.next(n);
                }
                Node::ScopeClose => {
                    self.stack.pop();
                    n = cfg.next(n);
                }
                Node::Exit => break Flow::Ended { negate: true },
                Node::InvalidSink => break Flow::Ended { negate: false },
                Node::Simple(s) => {
                    self.exec(s);
                    n = cfg.next(n);
                }
                Node::Return { value, .. } => break self.on_return(*value),
                Node::Throw { stmt, value } => {
                    self.eval(value);
                    self.emit(stmt.span);
                    break Flow::Ended { negate: false };
                }
                Node::Branch { cond, join } => {
                    let (cond, join) = (*cond, *join);
                    let g = self.guard(cond).normalize();
                    let t = cfg.target(n, &Edge::True).expect("branch has a true edge");
                    let f = cfg.target(n, &Edge::False).expect("branch has a false edge");
                    let mut stops = outer.to_vec();
                    stops.push(stop);
                    let r1 = self.arm(cfg, g.clone(), t, join, &stops);
                    let r2 = self.arm(cfg, Formula::not(g.clone()), f, join, &stops);
                    match (r1, r2) {
                        (Flow::Ended { negate: a }, Flow::Ended { negate: b }) => break Flow::Ended { negate: a && b },
                        (Flow::Ended { negate: true }, Flow::Reached) => self.guards.push(Formula::not(g)),
                        (Flow::Reached, Flow::Ended { negate: true }) => self.guards.push(g),
                        _ => {}
                    }
                    n = join;
                }
                Node::Switch { scrutinee, join } => {
                    let (scrutinee, join) = (*scrutinee, *join);
                    let subject = self.eval(scrutinee);
                    let edges: Vec<(Edge, NodeId)> = cfg.successors(n).to_vec();
                    let all_labels: Vec<CaseLabel> = edges
                        .iter()
                        .filter_map(|(e, _)| match e {
                            Edge::Case(ls) => Some(ls.clone()),
                            _ => None,
                        })
                        .flatten()
                        .collect();
                    let mut stops = outer.to_vec();
                    stops.push(stop);
                    let mut ended = Some(true);
                    for (edge, target) in edges {
                        let g = match &edge {
                            Edge::Case(ls) => Formula::or(ls.iter().map(|l| self.case_guard(scrutinee, &subject, l))),
                            _ => Formula::and(all_labels.iter().map(|l| Formula::not(self.case_guard(scrutinee, &subject, l)))),
                        };
                        match self.arm(cfg, g, target, join, &stops) {
                            Flow::Reached => ended = None,
                            Flow::Ended { negate } => ended = ended.map(|all| all && negate),
                        }
                    }
                    if let Some(negate) = ended {
                        break Flow::Ended { negate };
                    }
                    n = join;
                }
                Node::Loop { stmt, after } => {
                    let after = *after;
                    if let StmtKind::ForEach { ty, var, iter, .. } = &stmt.kind {
                        let coll = self.eval(iter);
                        let value = match coll {
                            // Array parameters share the element's path.
                            AbstractValue::ParamRef { path, ty: cty } => {
                                let ety = cty.element().cloned().unwrap_or(cty);
                                AbstractValue::ParamRef { path, ty: ety }
                            }
                            _ => AbstractValue::Unknown,
                        };
                        let ty = ty.clone().or_else(|| value.param().map(|(_, t)| t.clone()));
                        self.stack.declare(var, Variable { value, ty });
                    }
                    let body = cfg.target(n, &Edge::Body).expect("loop has a body edge");
                    let depth = self.stack.depth();
                    let mut stops = outer.to_vec();
                    stops.push(stop);
                    self.walk(cfg, body, after, &stops);
                    self.stack.truncate(depth);
                    n = after;
                }
            }
        };
        self.guards.truncate(base);
        flow
    }

    fn arm(&mut self, cfg: &Cfg<'p>, g: Formula, from: NodeId, join: NodeId, stops: &[NodeId]) -> Flow {
        let depth = self.stack.depth();
        self.guards.push(g);
        let r = self.walk(cfg, from, join, stops);
        self.guards.pop();
        self.stack.truncate(depth);
        r
    }

    fn case_guard(&mut self, scrutinee: &Expr, subject: &AbstractValue, l: &CaseLabel) -> Formula {
        match subject {
            AbstractValue::ParamRef { path, .. } if !path.as_str().is_empty() => match l {
                CaseLabel::Int(v) => Formula::leaf(Atom::cmp(path.clone(), CmpOp::Eq, *v as f64)),
                _ => Formula::leaf(Atom::eq(path.clone(), literal_of_label(l))),
            },
            v if v.is_const() => {
                let lit = literal_of_label(l);
                if v.literal() == Some(lit) {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            _ => {
                let text = format!("{} == {}", print_expr(scrutinee), label_text(l));
                self.note(DiagnosticKind::Unparsed, scrutinee.span, text.clone());
                Formula::leaf(Atom::unparsed(text))
            }
        }
    }

    fn on_return(&mut self, value: Option<&Expr>) -> Flow {
        let mode = self.frames.last().expect("inside a method").mode;
        match (mode, value) {
            (Mode::Summary, Some(e)) => {
                let g = self.guard(e).normalize();
                let negate = g != Formula::True;
                if g != Formula::False {
                    let base = self.frames.last().unwrap().guard_base;
                    let mut path: Vec<Formula> = self.guards[base..].to_vec();
                    path.push(g);
                    self.frames.last_mut().unwrap().terms.push(conj(&path));
                }
                Flow::Ended { negate }
            }
            (_, Some(e)) => {
                let v = self.eval(e);
                self.frames.last_mut().unwrap().returns.push(v);
                Flow::Ended { negate: true }
            }
            (_, None) => Flow::Ended { negate: true },
        }
    }

    fn emit(&mut self, span: Span) {
        if self.summary_depth > 0 {
            return;
        }
        let pre = conj(&self.guards).normalize();
        if pre == Formula::False {
            return;
        }
        let source = format!("{}:{}", self.file(), span.line);
        self.emitted.push(Constraint::new(pre, Origin::Code).with_source(source));
    }

    fn exec(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Local { ty, name, init } => {
                let value = init.as_ref().map(|e| self.eval(e)).unwrap_or(AbstractValue::Unknown);
                let ty = if ty.name == "var" { value.param().map(|(_, t)| t.clone()) } else { Some(ty.clone()) };
                self.stack.declare(name, Variable { value, ty });
            }
            StmtKind::Assign { target, op, value } => {
                let mut v = self.eval(value);
                if let ExprKind::Name(name) = &target.kind {
                    if let Some(bop) = op.binary() {
                        let cur = self.stack.lookup(name).map(|x| x.value.clone()).unwrap_or(AbstractValue::Unknown);
                        v = fold_binary(bop, &cur, &v).unwrap_or(AbstractValue::Unknown);
                    }
                    self.stack.assign(name, v);
                } else {
                    // Object fields are not tracked.
                    self.eval(target);
                    debug_assert!(matches!(op, AssignOp::Set) || op.binary().is_some());
                }
            }
            StmtKind::Expr(e) => {
                if let ExprKind::Call { name, args, target } = &e.kind {
                    if self.patterns.iter().any(|p| p == name) {
                        if let Some(t) = target {
                            self.eval(t);
                        }
                        for a in args {
                            self.eval(a);
                        }
                        self.emit(s.span);
                        return;
                    }
                }
                self.eval(e);
            }
            _ => unreachable!("CFG simple nodes hold simple statements"),
        }
    }

    // ---- expressions ----

    /// Declared class of an expression when syntactically evident.
    fn static_type(&self, e: &Expr) -> Option<TypeRef> {
        match &e.kind {
            ExprKind::Name(n) => self.stack.lookup(n).and_then(|v| v.ty.clone()),
            ExprKind::This => Some(TypeRef::simple(self.class())),
            ExprKind::New { ty, .. } => Some(ty.clone()),
            _ => None,
        }
    }

    fn is_class_name(&self, e: &Expr) -> Option<String> {
        match &e.kind {
            ExprKind::Name(n) if self.stack.lookup(n).is_none() => Some(n.clone()),
            _ => None,
        }
    }

    fn static_constant(&mut self, class: &str, name: &str) -> Option<AbstractValue> {
        let program = self.program;
        let f = program.field(class, name)?;
        if !(f.is_static && f.is_final) {
            return Some(AbstractValue::Unknown);
        }
        let key = format!("{}.{}", class, name);
        if self.const_eval.contains(&key) {
            return Some(AbstractValue::Unknown);
        }
        let init = f.init.as_ref()?;
        self.const_eval.push(key);
        self.frames.push(Frame {
            class: class.to_string(),
            method: "<init>".into(),
            mode: Mode::Exec,
            guard_base: self.guards.len(),
            returns: Vec::new(),
            terms: Vec::new(),
        });
        let depth = self.stack.depth();
        self.stack.push_frame();
        let v = self.eval(init);
        self.stack.truncate(depth);
        self.frames.pop();
        self.const_eval.pop();
        Some(v)
    }

    pub fn eval(&mut self, e: &Expr) -> AbstractValue {
        match &e.kind {
            ExprKind::Int(v) => AbstractValue::Int(*v),
            ExprKind::Str(s) => AbstractValue::Str(s.clone()),
            ExprKind::Bool(b) => AbstractValue::Bool(*b),
            ExprKind::Null | ExprKind::This => AbstractValue::Unknown,
            ExprKind::Name(n) => {
                if let Some(v) = self.stack.lookup(n) {
                    let v = v.value.clone();
                    if let Some((p, _)) = v.param() {
                        let p = p.clone();
                        self.stack.touch(&p);
                    }
                    return v;
                }
                let class = self.class().to_string();
                if let Some(v) = self.static_constant(&class, n) {
                    return v;
                }
                if self.program.enum_of_constant(n).is_some() {
                    return AbstractValue::Enum(n.clone());
                }
                AbstractValue::Unknown
            }
            ExprKind::Field { target, name } => {
                if let Some(c) = self.is_class_name(target) {
                    if let Some(en) = self.program.enums.get(&c) {
                        return if en.constants.contains(name) { AbstractValue::Enum(name.clone()) } else { AbstractValue::Unknown };
                    }
                    if self.program.classes.contains_key(&c) {
                        return self.static_constant(&c, name).unwrap_or(AbstractValue::Unknown);
                    }
                }
                let recv = self.eval(target);
                let ty = self.static_type(target);
                self.member(&recv, ty.as_ref(), name)
            }
            ExprKind::Call { target, name, args } => self.call(e, target.as_deref(), name, args, Ctx::Value).0,
            ExprKind::New { args, .. } => {
                // Constructed objects are not tracked: parameters passed in are lost.
                for a in args {
                    self.eval(a);
                }
                AbstractValue::Unknown
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs);
                if matches!((op, &a), (BinOp::Or, AbstractValue::Bool(true)) | (BinOp::And, AbstractValue::Bool(false))) {
                    return a;
                }
                let b = self.eval(rhs);
                fold_binary(*op, &a, &b).unwrap_or(AbstractValue::Unknown)
            }
            ExprKind::Unary { op, expr } => match (op, self.eval(expr)) {
                (UnOp::Not, AbstractValue::Bool(b)) => AbstractValue::Bool(!b),
                (UnOp::Neg, AbstractValue::Int(v)) => v.checked_neg().map(AbstractValue::Int).unwrap_or(AbstractValue::Unknown),
                _ => AbstractValue::Unknown,
            },
        }
    }

    /// Field `name` of a receiver (direct access or through a getter).
    fn member(&mut self, recv: &AbstractValue, static_ty: Option<&TypeRef>, field: &str) -> AbstractValue {
        let program = self.program;
        match recv {
            AbstractValue::ParamRef { path, ty } => match program.model_of(ty).and_then(|m| program.field(&m, field)) {
                Some(f) => {
                    let p = path.child(&f.name);
                    self.stack.touch(&p);
                    AbstractValue::ParamRef { path: p, ty: f.ty.clone() }
                }
                None => AbstractValue::Unknown,
            },
            AbstractValue::Unknown => {
                let owner = match static_ty {
                    Some(t) => match program.model_of(t) {
                        Some(m) => Some(m),
                        None => return AbstractValue::Unknown,
                    },
                    None => None,
                };
                match self.resolve_param_ref(field, owner.as_deref()) {
                    Some((path, ty)) => {
                        self.stack.touch(&path);
                        AbstractValue::ParamRef { path, ty }
                    }
                    None => AbstractValue::Unknown,
                }
            }
            _ => AbstractValue::Unknown,
        }
    }

    /// Maps a field name to a parameter path when the receiver object is
    /// unknown; ties go to the path closest to the most recent access.
    pub fn resolve_param_ref(&mut self, field: &str, owner: Option<&str>) -> Option<(ParamPath, TypeRef)> {
        let root = self.root_model.clone()?;
        let program = self.program;
        let fields: Vec<_> = program
            .parameter_fields(&root)
            .into_iter()
            .filter(|f| f.field == field && owner.is_none_or(|o| f.owner == o))
            .collect();
        let candidates = program.paths_named(&root, field, owner);
        let ty_of = |p: &ParamPath| fields.iter().find(|f| &f.path == p).map(|f| f.ty.clone()).expect("candidate from fields");
        match candidates.len() {
            0 => None,
            1 => Some((candidates[0].clone(), ty_of(&candidates[0]))),
            _ => {
                let recent = self.stack.most_recent().cloned();
                let score = |p: &ParamPath| recent.as_ref().map(|r| p.common_prefix_len(r)).unwrap_or(0);
                let best = candidates.iter().map(score).max().unwrap_or(0);
                let top: Vec<&ParamPath> = candidates.iter().filter(|p| score(p) == best).collect();
                let chosen = top[0].clone();
                if recent.is_none() || top.len() > 1 {
                    let span = Span::default();
                    let all: Vec<String> = candidates.iter().map(|p| p.to_string()).collect();
                    self.note(DiagnosticKind::Ambiguous, span, format!("{} resolved to {} among {}", field, chosen, all.join(", ")));
                }
                Some((chosen.clone(), ty_of(&chosen)))
            }
        }
    }

    fn record(&mut self, callee: String, span: Span, args: &[AbstractValue], status: CallStatus) {
        let caller = self.method_name();
        self.graph.nodes.insert(callee.clone());
        self.graph.edges.push(CallEdge {
            caller,
            callee,
            line: span.line,
            col: span.col,
            args: args.iter().map(|a| a.to_string()).collect(),
            depth: self.frames.len(),
            status,
        });
    }

    /// Evaluates a call; in guard context also returns the guard formula
    /// for boolean program methods.
    fn call(&mut self, e: &Expr, target: Option<&Expr>, name: &str, args: &[Expr], ctx: Ctx) -> (AbstractValue, Option<Formula>) {
        let program = self.program;
        // Collection builders.
        if let Some(t) = target {
            if let Some(c) = self.is_class_name(t) {
                let builder = matches!((c.as_str(), name), ("List" | "Set", "of") | ("Arrays", "asList"));
                if builder && !program.classes.contains_key(&c) {
                    let items: Vec<AbstractValue> = args.iter().map(|a| self.eval(a)).collect();
                    return (AbstractValue::collection(items), None);
                }
            }
        }
        // Program methods.
        let class = match target {
            None => Some(self.class().to_string()),
            Some(t) => match self.is_class_name(t) {
                Some(c) if program.classes.contains_key(&c) => Some(c),
                _ => self.static_type(t).map(|ty| ty.name).filter(|c| program.method(c, name).is_some()),
            },
        };
        if let Some(class) = class.filter(|c| program.method(c, name).is_some()) {
            if let Some(t) = target {
                self.eval(t);
            }
            let argv: Vec<AbstractValue> = args.iter().map(|a| self.eval(a)).collect();
            return self.invoke(e, &class, name, &argv, ctx);
        }
        let recv = match target {
            Some(t) => self.eval(t),
            None => AbstractValue::Unknown,
        };
        let argv: Vec<AbstractValue> = args.iter().map(|a| self.eval(a)).collect();
        let static_ty = target.and_then(|t| self.static_type(t));
        // Getters on request objects.
        if argv.is_empty() {
            if let Some(field) = self.getter_target(&recv, static_ty.as_ref(), name) {
                return (self.member(&recv, static_ty.as_ref(), &field), None);
            }
        }
        let folded = match (name, &recv, argv.as_slice()) {
            ("length", AbstractValue::Str(s), []) => AbstractValue::Int(s.chars().count() as i64),
            ("size", AbstractValue::Collection(xs), []) => AbstractValue::Int(xs.len() as i64),
            ("isEmpty", AbstractValue::Collection(xs), []) => AbstractValue::Bool(xs.is_empty()),
            ("isEmpty", AbstractValue::Str(s), []) => AbstractValue::Bool(s.is_empty()),
            ("equals", a, [b]) if a.is_const() && b.is_const() => AbstractValue::Bool(a == b),
            ("contains", AbstractValue::Collection(xs), [b]) if b.is_const() => AbstractValue::Bool(xs.contains(b)),
            _ => AbstractValue::Unknown,
        };
        if folded == AbstractValue::Unknown && !self.common.contains_key(name) && !matches!(recv, AbstractValue::ParamRef { .. }) {
            let callee = match &static_ty {
                Some(t) => format!("{}.{}", t.name, name),
                None => name.to_string(),
            };
            self.record(callee, e.span, &argv, CallStatus::External);
        }
        (folded, None)
    }

    /// The field a getter reads, when the receiver is (or may be) a request object.
    fn getter_target(&self, recv: &AbstractValue, static_ty: Option<&TypeRef>, name: &str) -> Option<String> {
        let program = self.program;
        let model = match recv {
            AbstractValue::ParamRef { ty, .. } => Some(program.model_of(ty)?),
            AbstractValue::Unknown => match static_ty {
                Some(t) => Some(program.model_of(t)?),
                None => None,
            },
            _ => return None,
        };
        match model {
            Some(m) => program.getter_field(&m, name).map(|f| f.name.clone()),
            None => {
                // Untyped receiver: any model declaring the field qualifies.
                let root = self.root_model.as_ref()?;
                let stem = name.strip_prefix("get").or_else(|| name.strip_prefix("is"))?;
                let mut cs = stem.chars();
                let field: String = cs.next()?.to_lowercase().chain(cs).collect();
                program.parameter_fields(root).iter().any(|f| f.field == field).then_some(field)
            }
        }
    }

    fn invoke(&mut self, e: &Expr, class: &str, name: &str, args: &[AbstractValue], ctx: Ctx) -> (AbstractValue, Option<Formula>) {
        let program = self.program;
        let m = program.method(class, name).expect("checked by caller");
        let callee = format!("{}.{}", class, name);
        let summarize = ctx == Ctx::Guard && m.returns_boolean();
        let cut = |this: &mut Self, kind: DiagnosticKind, status: CallStatus| {
            let text = format!("{}(...)", name);
            this.note(kind, e.span, format!("{} not analyzed", callee));
            this.record(callee.clone(), e.span, args, status);
            let f = summarize.then(|| {
                this.note(DiagnosticKind::Unparsed, e.span, text.clone());
                Formula::leaf(Atom::unparsed(text))
            });
            (AbstractValue::Unknown, f)
        };
        if self.frames.iter().any(|f| f.class == class && f.method == name) {
            return cut(self, DiagnosticKind::Recursive, CallStatus::RecursionCut);
        }
        if self.frames.len() > self.max_depth {
            return cut(self, DiagnosticKind::Truncated, CallStatus::Truncated);
        }
        if summarize {
            self.record(callee, e.span, args, CallStatus::Summarized);
            let saved = std::mem::take(&mut self.guards);
            self.summary_depth += 1;
            let frame = self.run(class, name, args, Mode::Summary);
            self.summary_depth -= 1;
            self.guards = saved;
            return (AbstractValue::Unknown, Some(Formula::or(frame.terms).normalize()));
        }
        self.record(callee, e.span, args, CallStatus::Inlined);
        let frame = self.run(class, name, args, Mode::Exec);
        let value = match frame.returns.split_first() {
            Some((first, rest)) if rest.iter().all(|r| r == first) => first.clone(),
            _ => AbstractValue::Unknown,
        };
        (value, None)
    }

    // ---- guards ----

    /// Translates a boolean expression into a formula; untranslatable
    /// fragments become unparsed atoms.
    pub fn guard(&mut self, e: &Expr) -> Formula {
        match &e.kind {
            ExprKind::Bool(b) => {
                if *b {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            ExprKind::Unary { op: UnOp::Not, expr } => Formula::not(self.guard(expr)),
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => Formula::and([self.guard(lhs), self.guard(rhs)]),
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => Formula::or([self.guard(lhs), self.guard(rhs)]),
            ExprKind::Binary { op, lhs, rhs } if cmp_op(*op).is_some() => self.compare(e, *op, lhs, rhs),
            ExprKind::Call { target, name, args } => self.guard_call(e, target.as_deref(), name, args),
            _ => {
                let v = self.eval(e);
                self.truth_of(e, v)
            }
        }
    }

    fn truth_of(&mut self, e: &Expr, v: AbstractValue) -> Formula {
        match v {
            AbstractValue::Bool(true) => Formula::True,
            AbstractValue::Bool(false) => Formula::False,
            AbstractValue::ParamRef { path, ty } if ty.is_boolean() => Formula::leaf(Atom::eq(path, Literal::Bool(true))),
            _ => self.unparsed(e),
        }
    }

    fn is_boolean_expr(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Bool(_) | ExprKind::Unary { op: UnOp::Not, .. } => true,
            ExprKind::Binary { op, .. } => matches!(op, BinOp::And | BinOp::Or) || cmp_op(*op).is_some(),
            ExprKind::Call { target: None, name, .. } => self.program.method(self.class(), name).is_some_and(|m| m.returns_boolean()),
            _ => false,
        }
    }

    fn len_operand(&mut self, e: &Expr) -> Option<ParamPath> {
        let ExprKind::Call { target: Some(t), name, args } = &e.kind else { return None };
        if !args.is_empty() || self.common.get(name) != Some(&CommonMethod::Len) {
            return None;
        }
        match self.eval(t) {
            AbstractValue::ParamRef { path, .. } if !path.as_str().is_empty() => Some(path),
            _ => None,
        }
    }

    fn compare(&mut self, e: &Expr, op: BinOp, lhs: &Expr, rhs: &Expr) -> Formula {
        let cop = cmp_op(op).expect("comparison operator");
        // Null checks.
        let null_side = match (&lhs.kind, &rhs.kind) {
            (_, ExprKind::Null) => Some(lhs),
            (ExprKind::Null, _) => Some(rhs),
            _ => None,
        };
        if let Some(other) = null_side {
            if !matches!(cop, CmpOp::Eq | CmpOp::Ne) {
                return self.unparsed(e);
            }
            let is_null = match self.eval(other) {
                AbstractValue::ParamRef { path, .. } if path.as_str().is_empty() => Formula::False,
                AbstractValue::ParamRef { path, .. } => Formula::absent(path),
                v if v.is_const() || matches!(v, AbstractValue::Collection(_)) => Formula::False,
                _ => return self.unparsed(e),
            };
            return if cop == CmpOp::Eq { is_null } else { Formula::not(is_null) };
        }
        // Lengths.
        for (side, other, op) in [(lhs, rhs, cop), (rhs, lhs, cop.flipped())] {
            if let Some(path) = self.len_operand(side) {
                return match self.eval(other) {
                    AbstractValue::Int(n) if n >= 0 => Formula::leaf(Atom::len(path, op, n as u64)),
                    _ => self.unparsed(e),
                };
            }
        }
        // Boolean equalities.
        if matches!(cop, CmpOp::Eq | CmpOp::Ne) && (self.is_boolean_expr(lhs) || self.is_boolean_expr(rhs)) {
            let (a, b) = (self.guard(lhs), self.guard(rhs));
            let same = Formula::or([
                Formula::and([a.clone(), b.clone()]),
                Formula::and([Formula::not(a), Formula::not(b)]),
            ]);
            return if cop == CmpOp::Eq { same } else { Formula::not(same) };
        }
        let (a, b) = (self.eval(lhs), self.eval(rhs));
        self.compare_values(e, cop, a, b)
    }

    fn compare_values(&mut self, e: &Expr, op: CmpOp, a: AbstractValue, b: AbstractValue) -> Formula {
        use AbstractValue as V;
        let root = |p: &ParamPath| p.as_str().is_empty();
        match (&a, &b) {
            // Distinct elements of one array collapse to the same path.
            (V::ParamRef { path: p, .. }, V::ParamRef { path: q, .. }) if p == q => self.unparsed(e),
            (V::ParamRef { path: p, .. }, V::ParamRef { path: q, .. }) if !root(p) && !root(q) => {
                Formula::leaf(Atom::cmp_params(p.clone(), op, q.clone()))
            }
            (V::ParamRef { path, .. }, V::Int(n)) if !root(path) => Formula::leaf(Atom::cmp(path.clone(), op, *n as f64)),
            (V::Int(n), V::ParamRef { path, .. }) if !root(path) => Formula::leaf(Atom::cmp(path.clone(), op.flipped(), *n as f64)),
            (V::ParamRef { path, .. }, c) | (c, V::ParamRef { path, .. })
                if !root(path) && c.is_const() && matches!(op, CmpOp::Eq | CmpOp::Ne) =>
            {
                let eq = Formula::leaf(Atom::eq(path.clone(), c.literal().expect("constant")));
                if op == CmpOp::Eq {
                    eq
                } else {
                    Formula::not(eq)
                }
            }
            _ => {
                let bop = match op {
                    CmpOp::Eq => BinOp::Eq,
                    CmpOp::Ne => BinOp::Ne,
                    CmpOp::Lt => BinOp::Lt,
                    CmpOp::Le => BinOp::Le,
                    CmpOp::Gt => BinOp::Gt,
                    CmpOp::Ge => BinOp::Ge,
                };
                match fold_binary(bop, &a, &b) {
                    Some(V::Bool(true)) => Formula::True,
                    Some(V::Bool(false)) => Formula::False,
                    _ => self.unparsed(e),
                }
            }
        }
    }

    fn guard_call(&mut self, e: &Expr, target: Option<&Expr>, name: &str, args: &[Expr]) -> Formula {
        let common = self.common.get(name).copied();
        let program_method = match target {
            None => program_has(self.program, self.class(), name),
            Some(t) => match self.is_class_name(t) {
                Some(c) => program_has(self.program, &c, name),
                None => self.static_type(t).is_some_and(|ty| program_has(self.program, &ty.name, name)),
            },
        };
        if let (Some(kind), Some(t), false) = (common, target, program_method) {
            let recv = self.eval(t);
            let argv: Vec<AbstractValue> = args.iter().map(|a| self.eval(a)).collect();
            let param = |v: &AbstractValue| match v {
                AbstractValue::ParamRef { path, .. } if !path.as_str().is_empty() => Some(path.clone()),
                _ => None,
            };
            let f = match (kind, &recv, argv.as_slice()) {
                (CommonMethod::Eq, r, [a]) => return self.compare_values(e, CmpOp::Eq, r.clone(), a.clone()),
                (CommonMethod::IsEmpty, r, []) if param(r).is_some() => {
                    Some(Formula::leaf(Atom::len(param(r).unwrap(), CmpOp::Eq, 0)))
                }
                (CommonMethod::Contains, AbstractValue::Collection(items), [a]) if param(a).is_some() => {
                    let lits: Vec<Literal> = items.iter().filter_map(AbstractValue::literal).collect();
                    Some(Formula::leaf(Atom::in_set(param(a).unwrap(), lits)))
                }
                _ => None,
            };
            return match f {
                Some(f) => f,
                None => {
                    let folded = self.fold_common(name, &recv, &argv);
                    self.truth_of(e, folded)
                }
            };
        }
        let (v, f) = self.call(e, target, name, args, Ctx::Guard);
        match f {
            Some(f) => f,
            None => self.truth_of(e, v),
        }
    }

    fn fold_common(&self, name: &str, recv: &AbstractValue, argv: &[AbstractValue]) -> AbstractValue {
        match (name, recv, argv) {
            ("isEmpty", AbstractValue::Str(s), []) => AbstractValue::Bool(s.is_empty()),
            ("isEmpty", AbstractValue::Collection(xs), []) => AbstractValue::Bool(xs.is_empty()),
            ("equals", a, [b]) if a.is_const() && b.is_const() => AbstractValue::Bool(a == b),
            ("contains", AbstractValue::Collection(xs), [b]) if b.is_const() => AbstractValue::Bool(xs.contains(b)),
            _ => AbstractValue::Unknown,
        }
    }

    /// Guard formula of a boolean method applied to `args`.
    pub fn boolean_summary(&mut self, class: &str, method: &str, args: &[AbstractValue]) -> Formula {
        let program = self.program;
        let m = program.method(class, method).expect("method exists");
        let call = Expr::new(ExprKind::Call { target: None, name: method.to_string(), args: Vec::new() }, m.span);
        self.invoke(&call, class, method, args, Ctx::Guard).1.unwrap_or(Formula::leaf(Atom::unparsed(format!("{}(...)", method))))
    }
}

fn program_has(p: &Program, class: &str, name: &str) -> bool {
    p.method(class, name).is_some()
}

/// Analyzes every configured controller.
pub fn extract_constraints(p: &Program, config: &AnalysisConfig) -> Analysis {
    let mut engine = Engine::new(p, config);
    let mut graphs = Vec::new();
    let mut all = Vec::new();
    for (class, method) in &p.controllers {
        graphs.push(engine.analyze_controller(class, method));
        all.extend(engine.take_constraints());
    }
    Analysis { constraints: union_dedup(&[&all]), diagnostics: engine.diagnostics(), call_graphs: graphs }
}

/// Call graph explored from `root` (`Class.method`) with the given depth limit.
pub fn build_call_graph(p: &Program, root: (&str, &str), max_depth: usize) -> CallGraph {
    let config = AnalysisConfig { max_depth, ..AnalysisConfig::default() };
    let mut engine = Engine::new(p, &config);
    engine.analyze_controller(root.0, root.1)
}
