//! Syntax tree for `.mj` units. Node equality ignores spans.

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeRef {
    pub name: String,
    pub args: Vec<TypeRef>,
}

impl TypeRef {
    pub fn simple(name: impl Into<String>) -> Self {
        TypeRef { name: name.into(), args: Vec::new() }
    }

    pub fn is_boolean(&self) -> bool {
        self.name == "boolean" || self.name == "Boolean"
    }

    pub fn is_void(&self) -> bool {
        self.name == "void"
    }

    /// Element type of `List<T>`/`Set<T>`-like containers.
    pub fn element(&self) -> Option<&TypeRef> {
        match self.args.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Unit {
    pub items: Vec<Item>,
}

impl PartialEq for Unit {
    fn eq(&self, o: &Self) -> bool {
        self.items == o.items
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Class(ClassDecl),
    Enum(EnumDecl),
}

#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl PartialEq for ClassDecl {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.fields == o.fields && self.methods == o.methods
    }
}

#[derive(Debug, Clone)]
pub struct EnumDecl {
    pub name: String,
    pub constants: Vec<String>,
    pub span: Span,
}

impl PartialEq for EnumDecl {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name && self.constants == o.constants
    }
}

#[derive(Debug, Clone)]
pub struct FieldDecl {
    pub is_static: bool,
    pub is_final: bool,
    pub ty: TypeRef,
    pub name: String,
    pub init: Option<Expr>,
    pub span: Span,
}

impl PartialEq for FieldDecl {
    fn eq(&self, o: &Self) -> bool {
        (self.is_static, self.is_final, &self.ty, &self.name, &self.init) == (o.is_static, o.is_final, &o.ty, &o.name, &o.init)
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
}

impl PartialEq for Param {
    fn eq(&self, o: &Self) -> bool {
        self.ty == o.ty && self.name == o.name
    }
}

#[derive(Debug, Clone)]
pub struct MethodDecl {
    pub is_static: bool,
    /// `None` for constructors.
    pub ret: Option<TypeRef>,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

impl PartialEq for MethodDecl {
    fn eq(&self, o: &Self) -> bool {
        (self.is_static, &self.ret, &self.name, &self.params, &self.body) == (o.is_static, &o.ret, &o.name, &o.params, &o.body)
    }
}

impl MethodDecl {
    pub fn returns_boolean(&self) -> bool {
        self.ret.as_ref().is_some_and(TypeRef::is_boolean)
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

impl PartialEq for Block {
    fn eq(&self, o: &Self) -> bool {
        self.stmts == o.stmts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binary(self) -> Option<BinOp> {
        match self {
            AssignOp::Set => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseLabel {
    Int(i64),
    Str(String),
    /// Enum constant, possibly qualified (`Type.CONST` keeps only `CONST`).
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCase {
    /// Empty for `default`.
    pub labels: Vec<CaseLabel>,
    pub body: Vec<Stmt>,
}

impl SwitchCase {
    pub fn is_default(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Block(Block),
    Local { ty: TypeRef, name: String, init: Option<Expr> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    Switch { scrutinee: Expr, cases: Vec<SwitchCase> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, update: Option<Box<Stmt>>, body: Box<Stmt> },
    ForEach { ty: Option<TypeRef>, var: String, iter: Expr, body: Box<Stmt> },
    Return(Option<Expr>),
    Throw(Expr),
    Break,
    Continue,
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    This,
    Name(String),
    Field { target: Box<Expr>, name: String },
    Call { target: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    New { ty: TypeRef, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Visits this expression and every subexpression, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Field { target, .. } => target.walk(f),
            ExprKind::Call { target, args, .. } => {
                if let Some(t) = target {
                    t.walk(f);
                }
                args.iter().for_each(|a| a.walk(f));
            }
            ExprKind::New { args, .. } => args.iter().for_each(|a| a.walk(f)),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Unary { expr, .. } => expr.walk(f),
            _ => {}
        }
    }
}

impl Stmt {
    /// Visits this statement and every nested statement, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(b) => b.stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::If { then, otherwise, .. } => {
                then.walk(f);
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
            StmtKind::Switch { cases, .. } => cases.iter().flat_map(|c| &c.body).for_each(|s| s.walk(f)),
            StmtKind::For { init, update, body, .. } => {
                if let Some(i) = init {
                    i.walk(f);
                }
                if let Some(u) = update {
                    u.walk(f);
                }
                body.walk(f);
            }
            StmtKind::ForEach { body, .. } => body.walk(f),
            _ => {}
        }
    }

    /// Expressions directly owned by this statement (not by nested statements).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Local { init, .. } => init.iter().collect(),
            StmtKind::Assign { target, value, .. } => vec![target, value],
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::Switch { scrutinee, .. } => vec![scrutinee],
            StmtKind::For { cond, .. } => cond.iter().collect(),
            StmtKind::ForEach { iter, .. } => vec![iter],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Throw(e) | StmtKind::Expr(e) => vec![e],
            StmtKind::Block(_) | StmtKind::Break | StmtKind::Continue => Vec::new(),
        }
    }
}
