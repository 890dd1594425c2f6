//! Per-method control-flow graphs.
//!
//! Branches and switches name their join node; loops name the node after
//! the loop. Loop bodies are entered once and have no back edge. `throw`
//! flows to a dedicated invalid sink, `return` to the exit.

use std::collections::VecDeque;

use crate::source::ast::{CaseLabel, Expr, MethodDecl, Stmt, StmtKind};

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub enum Node<'a> {
    Entry,
    Exit,
    InvalidSink,
    /// Local declaration, assignment or expression statement.
    Simple(&'a Stmt),
    Branch { cond: &'a Expr, join: NodeId },
    Switch { scrutinee: &'a Expr, join: NodeId },
    /// `for`/for-each header; the body is reached over [`Edge::Body`].
    Loop { stmt: &'a Stmt, after: NodeId },
    Join,
    Return { stmt: &'a Stmt, value: Option<&'a Expr> },
    Throw { stmt: &'a Stmt, value: &'a Expr },
    /// `break`/`continue`.
    Jump(&'a Stmt),
    ScopeOpen,
    ScopeClose,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edge {
    Next,
    True,
    False,
    Case(Vec<CaseLabel>),
    Default,
    Body,
    /// Loop exit without running the body.
    Skip,
}

#[derive(Debug, Clone)]
pub struct Cfg<'a> {
    /// Pruned (unreachable) nodes are `None`.
    pub nodes: Vec<Option<Node<'a>>>,
    pub succ: Vec<Vec<(Edge, NodeId)>>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub sink: NodeId,
}

impl<'a> Cfg<'a> {
    pub fn node(&self, id: NodeId) -> &Node<'a> {
        self.nodes[id].as_ref().expect("pruned node referenced")
    }

    pub fn successors(&self, id: NodeId) -> &[(Edge, NodeId)] {
        &self.succ[id]
    }

    pub fn target(&self, id: NodeId, edge: &Edge) -> Option<NodeId> {
        self.succ[id].iter().find(|(e, _)| e == edge).map(|(_, t)| *t)
    }

    pub fn next(&self, id: NodeId) -> NodeId {
        self.target(id, &Edge::Next).expect("node has a fallthrough successor")
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = (NodeId, &Node<'a>)> {
        self.nodes.iter().enumerate().filter_map(|(i, n)| n.as_ref().map(|n| (i, n)))
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([self.entry]);
        seen[self.entry] = true;
        while let Some(n) = queue.pop_front() {
            for &(_, t) in &self.succ[n] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }
}

struct Builder<'a> {
    cfg: Cfg<'a>,
    /// (break target, continue target) of enclosing loops/switches.
    jumps: Vec<(NodeId, Option<NodeId>)>,
}

/// Edges waiting for their target node.
type Pending = Vec<(NodeId, Edge)>;

impl<'a> Builder<'a> {
    fn add(&mut self, n: Node<'a>) -> NodeId {
        self.cfg.nodes.push(Some(n));
        self.cfg.succ.push(Vec::new());
        self.cfg.nodes.len() - 1
    }

    fn link(&mut self, pending: Pending, to: NodeId) {
        for (from, e) in pending {
            self.cfg.succ[from].push((e, to));
        }
    }

    fn seq(&mut self, stmts: &'a [Stmt], mut pending: Pending) -> Pending {
        for s in stmts {
            pending = self.stmt(s, pending);
        }
        pending
    }

    fn scoped(&mut self, stmts: &'a [Stmt], pending: Pending) -> Pending {
        let open = self.add(Node::ScopeOpen);
        self.link(pending, open);
        let tail = self.seq(stmts, vec![(open, Edge::Next)]);
        let close = self.add(Node::ScopeClose);
        self.link(tail, close);
        vec![(close, Edge::Next)]
    }

    fn stmt(&mut self, s: &'a Stmt, pending: Pending) -> Pending {
        match &s.kind {
            StmtKind::Block(b) => self.scoped(&b.stmts, pending),
            StmtKind::Local { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                let n = self.add(Node::Simple(s));
                self.link(pending, n);
                vec![(n, Edge::Next)]
            }
            StmtKind::If { cond, then, otherwise } => {
                let join = self.add(Node::Join);
                let b = self.add(Node::Branch { cond, join });
                self.link(pending, b);
                let t = self.arm(then, vec![(b, Edge::True)]);
                self.link(t, join);
                let f = match otherwise {
                    Some(o) => self.arm(o, vec![(b, Edge::False)]),
                    None => vec![(b, Edge::False)],
                };
                self.link(f, join);
                vec![(join, Edge::Next)]
            }
            StmtKind::Switch { scrutinee, cases } => {
                let join = self.add(Node::Join);
                let sw = self.add(Node::Switch { scrutinee, join });
                self.link(pending, sw);
                self.jumps.push((join, None));
                let mut fall: Pending = Vec::new();
                let mut has_default = false;
                // Labels of empty cases falling into a labelled case share its edge.
                let mut carried: Vec<CaseLabel> = Vec::new();
                for (k, c) in cases.iter().enumerate() {
                    let next_labelled = cases.get(k + 1).is_some_and(|n| !n.is_default());
                    if !c.is_default() && c.body.is_empty() && next_labelled {
                        carried.extend(c.labels.iter().cloned());
                        continue;
                    }
                    let label = if c.is_default() {
                        has_default = true;
                        Edge::Default
                    } else {
                        let mut ls = std::mem::take(&mut carried);
                        ls.extend(c.labels.iter().cloned());
                        Edge::Case(ls)
                    };
                    let mut entry = std::mem::take(&mut fall);
                    entry.push((sw, label));
                    fall = self.scoped(&c.body, entry);
                }
                self.jumps.pop();
                self.link(fall, join);
                if !has_default {
                    self.cfg.succ[sw].push((Edge::Default, join));
                }
                vec![(join, Edge::Next)]
            }
            StmtKind::For { init, update, body, .. } => {
                let open = self.add(Node::ScopeOpen);
                self.link(pending, open);
                let mut p = vec![(open, Edge::Next)];
                if let Some(i) = init {
                    p = self.stmt(i, p);
                }
                self.loop_rest(s, body, update.as_deref(), p)
            }
            StmtKind::ForEach { body, .. } => {
                let open = self.add(Node::ScopeOpen);
                self.link(pending, open);
                self.loop_rest(s, body, None, vec![(open, Edge::Next)])
            }
            StmtKind::Return(value) => {
                let n = self.add(Node::Return { stmt: s, value: value.as_ref() });
                self.link(pending, n);
                let exit = self.cfg.exit;
                self.link(vec![(n, Edge::Next)], exit);
                Vec::new()
            }
            StmtKind::Throw(value) => {
                let n = self.add(Node::Throw { stmt: s, value });
                self.link(pending, n);
                let sink = self.cfg.sink;
                self.link(vec![(n, Edge::Next)], sink);
                Vec::new()
            }
            StmtKind::Break | StmtKind::Continue => {
                let n = self.add(Node::Jump(s));
                self.link(pending, n);
                let target = self.jumps.iter().rev().find_map(|&(brk, cont)| match s.kind {
                    StmtKind::Break => Some(brk),
                    _ => cont,
                });
                // A stray jump ends the method.
                let t = target.unwrap_or(self.cfg.exit);
                self.link(vec![(n, Edge::Next)], t);
                Vec::new()
            }
        }
    }

    fn arm(&mut self, s: &'a Stmt, pending: Pending) -> Pending {
        match &s.kind {
            StmtKind::Block(_) => self.stmt(s, pending),
            // A lone statement still gets its own scope.
            _ => self.scoped(std::slice::from_ref(s), pending),
        }
    }

    fn loop_rest(&mut self, s: &'a Stmt, body: &'a Stmt, update: Option<&'a Stmt>, pending: Pending) -> Pending {
        let after = self.add(Node::Join);
        let head = self.add(Node::Loop { stmt: s, after });
        self.link(pending, head);
        self.cfg.succ[head].push((Edge::Skip, after));
        // `continue` skips the rest of the single body pass.
        self.jumps.push((after, Some(after)));
        let mut tail = self.arm(body, vec![(head, Edge::Body)]);
        self.jumps.pop();
        if let Some(u) = update {
            tail = self.stmt(u, tail);
        }
        self.link(tail, after);
        let close = self.add(Node::ScopeClose);
        self.link(vec![(after, Edge::Next)], close);
        vec![(close, Edge::Next)]
    }
}

/// Builds the CFG of a method body; unreachable statements are pruned.
pub fn build_cfg(m: &MethodDecl) -> Cfg<'_> {
    let mut b = Builder {
        cfg: Cfg { nodes: Vec::new(), succ: Vec::new(), entry: 0, exit: 1, sink: 2 },
        jumps: Vec::new(),
    };
    b.add(Node::Entry);
    b.add(Node::Exit);
    b.add(Node::InvalidSink);
    let tail = b.seq(&m.body.stmts, vec![(0, Edge::Next)]);
    b.link(tail, 1);
    let mut cfg = b.cfg;
    let live = cfg.reachable();
    for (i, alive) in live.into_iter().enumerate() {
        if !alive && i != cfg.exit && i != cfg.sink {
            cfg.nodes[i] = None;
            cfg.succ[i].clear();
        }
    }
    cfg
}
