//! Recursive-descent parser for `.mj` compilation units.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::{SourceError, Span};

const MODIFIERS: &[&str] = &["public", "private", "protected", "static", "final", "abstract"];
const UNSUPPORTED_STMTS: &[(&str, &str)] = &[
    ("while", "while loop"),
    ("do", "do-while loop"),
    ("try", "try-catch"),
    ("catch", "try-catch"),
    ("synchronized", "synchronized block"),
    ("assert", "assert statement"),
    ("yield", "yield statement"),
];

/// Parses one compilation unit.
pub fn parse_unit(src: &str) -> Result<Unit, SourceError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, eof: Span::new(src.len(), src.len(), 0, 0) };
    p.unit()
}

/// Parses a single expression (used by tests and tooling).
pub fn parse_expr(src: &str) -> Result<Expr, SourceError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, eof: Span::new(src.len(), src.len(), 0, 0) };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: Span,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.eof)
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos - 1].span
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let hit = self.is_word(w);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn unexpected(&self, wanted: &str) -> SourceError {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("'{}'", s),
            Some(Tok::Int(v)) => v.to_string(),
            Some(Tok::Str(s)) => format!("\"{}\"", s),
            Some(Tok::Sym(s)) => format!("'{}'", s),
        };
        SourceError::syntax(self.span(), format!("expected {}, found {}", wanted, found))
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SourceError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{}'", s)))
        }
    }

    fn ident(&mut self) -> Result<String, SourceError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn qualified(&mut self) -> Result<String, SourceError> {
        let mut name = self.ident()?;
        while self.is_sym(".") && matches!(self.peek_at(1), Some(Tok::Ident(_))) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn unit(&mut self) -> Result<Unit, SourceError> {
        if self.eat_word("package") {
            self.qualified()?;
            self.expect_sym(";")?;
        }
        while self.eat_word("import") {
            self.eat_word("static");
            self.qualified()?;
            if self.eat_sym(".") {
                self.expect_sym("*")?;
            }
            self.expect_sym(";")?;
        }
        let mut items = Vec::new();
        while self.peek().is_some() {
            items.push(self.item()?);
        }
        Ok(Unit { items })
    }

    /// Modifiers and marker annotations; returns (static, final).
    fn modifiers(&mut self) -> Result<(bool, bool), SourceError> {
        let (mut is_static, mut is_final) = (false, false);
        loop {
            if self.is_sym("@") {
                self.pos += 1;
                self.qualified()?;
                if self.is_sym("(") {
                    return Err(SourceError::unsupported(self.span(), "annotation arguments"));
                }
                continue;
            }
            match self.peek() {
                Some(Tok::Ident(w)) if MODIFIERS.contains(&w.as_str()) => {
                    is_static |= w == "static";
                    is_final |= w == "final";
                    self.pos += 1;
                }
                _ => return Ok((is_static, is_final)),
            }
        }
    }

    fn item(&mut self) -> Result<Item, SourceError> {
        let start = self.span();
        self.modifiers()?;
        if self.eat_word("enum") {
            let name = self.ident()?;
            self.expect_sym("{")?;
            let mut constants = Vec::new();
            while !self.is_sym("}") && !self.is_sym(";") {
                constants.push(self.ident()?);
                if self.is_sym("(") {
                    return Err(SourceError::unsupported(self.span(), "enum constant arguments"));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            if self.eat_sym(";") && !self.is_sym("}") {
                return Err(SourceError::unsupported(self.span(), "enum body members"));
            }
            self.expect_sym("}")?;
            return Ok(Item::Enum(EnumDecl { name, constants, span: start.to(self.prev_span()) }));
        }
        if self.is_word("interface") || self.is_word("record") {
            return Err(SourceError::unsupported(self.span(), "interface or record declaration"));
        }
        if !self.eat_word("class") {
            return Err(self.unexpected("'class' or 'enum'"));
        }
        let name = self.ident()?;
        if self.is_sym("<") {
            return Err(SourceError::unsupported(self.span(), "generic class declaration"));
        }
        if self.eat_word("extends") {
            self.type_ref()?;
        }
        if self.eat_word("implements") {
            self.type_ref()?;
            while self.eat_sym(",") {
                self.type_ref()?;
            }
        }
        self.expect_sym("{")?;
        let (mut fields, mut methods) = (Vec::new(), Vec::new());
        while !self.eat_sym("}") {
            if self.peek().is_none() {
                return Err(self.unexpected("'}'"));
            }
            self.member(&name, &mut fields, &mut methods)?;
        }
        Ok(Item::Class(ClassDecl { name, fields, methods, span: start.to(self.prev_span()) }))
    }

    fn member(&mut self, class: &str, fields: &mut Vec<FieldDecl>, methods: &mut Vec<MethodDecl>) -> Result<(), SourceError> {
        let start = self.span();
        let (is_static, is_final) = self.modifiers()?;
        if self.is_word("class") || self.is_word("enum") || self.is_word("interface") {
            return Err(SourceError::unsupported(self.span(), "nested type declaration"));
        }
        if self.is_sym("{") {
            return Err(SourceError::unsupported(self.span(), "initializer block"));
        }
        let ctor = self.is_word(class) && matches!(self.peek_at(1), Some(Tok::Sym("(")));
        let ret = if ctor { None } else { Some(self.type_ref()?) };
        let name = self.ident()?;
        if self.eat_sym("(") {
            let mut params = Vec::new();
            if !self.eat_sym(")") {
                loop {
                    self.eat_word("final");
                    let ty = self.type_ref()?;
                    if self.is_sym(".") {
                        return Err(SourceError::unsupported(self.span(), "varargs"));
                    }
                    params.push(Param { ty, name: self.ident()? });
                    if self.eat_sym(")") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
            }
            if self.eat_word("throws") {
                self.qualified()?;
                while self.eat_sym(",") {
                    self.qualified()?;
                }
            }
            if self.is_sym(";") {
                return Err(SourceError::unsupported(self.span(), "method without body"));
            }
            let body = self.block()?;
            methods.push(MethodDecl { is_static, ret, name, params, body, span: start.to(self.prev_span()) });
            return Ok(());
        }
        let ty = ret.expect("constructors always have a parameter list");
        let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
        if self.is_sym(",") {
            return Err(SourceError::unsupported(self.span(), "multiple declarators"));
        }
        self.expect_sym(";")?;
        fields.push(FieldDecl { is_static, is_final, ty, name, init, span: start.to(self.prev_span()) });
        Ok(())
    }

    fn type_ref(&mut self) -> Result<TypeRef, SourceError> {
        let name = self.qualified()?;
        let mut args = Vec::new();
        if self.eat_sym("<") {
            if !self.is_sym(">") {
                loop {
                    if self.is_sym("?") {
                        return Err(SourceError::unsupported(self.span(), "wildcard type"));
                    }
                    args.push(self.type_ref()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(">")?;
        }
        if self.is_sym("[") {
            return Err(SourceError::unsupported(self.span(), "array type"));
        }
        Ok(TypeRef { name, args })
    }

    fn block(&mut self) -> Result<Block, SourceError> {
        let start = self.span();
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.eat_sym("}") {
            if self.peek().is_none() {
                return Err(self.unexpected("'}'"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts, span: start.to(self.prev_span()) })
    }

    fn stmt(&mut self) -> Result<Stmt, SourceError> {
        let start = self.span();
        let kind = self.stmt_kind()?;
        Ok(Stmt { kind, span: start.to(self.prev_span()) })
    }

    fn stmt_kind(&mut self) -> Result<StmtKind, SourceError> {
        if let Some(Tok::Ident(w)) = self.peek() {
            if let Some((_, what)) = UNSUPPORTED_STMTS.iter().find(|(k, _)| k == w) {
                return Err(SourceError::unsupported(self.span(), what));
            }
        }
        if self.is_sym("{") {
            return Ok(StmtKind::Block(self.block()?));
        }
        if self.eat_word("if") {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then = Box::new(self.stmt()?);
            let otherwise = if self.eat_word("else") { Some(Box::new(self.stmt()?)) } else { None };
            return Ok(StmtKind::If { cond, then, otherwise });
        }
        if self.eat_word("switch") {
            return self.switch();
        }
        if self.eat_word("for") {
            return self.for_stmt();
        }
        if self.eat_word("return") {
            let e = if self.is_sym(";") { None } else { Some(self.expr()?) };
            self.expect_sym(";")?;
            return Ok(StmtKind::Return(e));
        }
        if self.eat_word("throw") {
            let e = self.expr()?;
            self.expect_sym(";")?;
            return Ok(StmtKind::Throw(e));
        }
        if self.eat_word("break") {
            self.expect_sym(";").map_err(|_| SourceError::unsupported(self.span(), "labeled break"))?;
            return Ok(StmtKind::Break);
        }
        if self.eat_word("continue") {
            self.expect_sym(";").map_err(|_| SourceError::unsupported(self.span(), "labeled continue"))?;
            return Ok(StmtKind::Continue);
        }
        let s = self.simple_stmt()?;
        self.expect_sym(";")?;
        Ok(s)
    }

    /// Local declaration, assignment, increment or expression, without `;`.
    fn simple_stmt(&mut self) -> Result<StmtKind, SourceError> {
        if let Some(local) = self.try_local()? {
            return Ok(local);
        }
        let target = self.expr()?;
        let op = match self.peek() {
            Some(Tok::Sym("=")) => Some(AssignOp::Set),
            Some(Tok::Sym("+=")) => Some(AssignOp::Add),
            Some(Tok::Sym("-=")) => Some(AssignOp::Sub),
            Some(Tok::Sym("*=")) => Some(AssignOp::Mul),
            Some(Tok::Sym("/=")) => Some(AssignOp::Div),
            _ => None,
        };
        if let Some(op) = op {
            self.check_assignable(&target)?;
            self.pos += 1;
            let value = self.expr()?;
            return Ok(StmtKind::Assign { target, op, value });
        }
        for (sym, op) in [("++", AssignOp::Add), ("--", AssignOp::Sub)] {
            if self.is_sym(sym) {
                self.check_assignable(&target)?;
                let one = Expr::new(ExprKind::Int(1), self.span());
                self.pos += 1;
                return Ok(StmtKind::Assign { target, op, value: one });
            }
        }
        Ok(StmtKind::Expr(target))
    }

    fn check_assignable(&self, e: &Expr) -> Result<(), SourceError> {
        match e.kind {
            ExprKind::Name(_) | ExprKind::Field { .. } => Ok(()),
            _ => Err(SourceError::syntax(e.span, "left side of assignment is not a variable or field")),
        }
    }

    /// `[final] Type name [= expr]` if the tokens form a declaration.
    fn try_local(&mut self) -> Result<Option<StmtKind>, SourceError> {
        let save = self.pos;
        let had_final = self.eat_word("final");
        if !matches!(self.peek(), Some(Tok::Ident(_))) {
            self.pos = save;
            return Ok(None);
        }
        let ty = match self.type_ref() {
            Ok(t) => t,
            Err(e) if had_final => return Err(e),
            Err(_) => {
                self.pos = save;
                return Ok(None);
            }
        };
        let is_decl = matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.peek_at(1), Some(Tok::Sym("=")) | Some(Tok::Sym(";")) | Some(Tok::Sym(",")));
        if !is_decl {
            if had_final {
                return Err(self.unexpected("variable name"));
            }
            self.pos = save;
            return Ok(None);
        }
        let name = self.ident()?;
        if self.is_sym(",") {
            return Err(SourceError::unsupported(self.span(), "multiple declarators"));
        }
        let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
        Ok(Some(StmtKind::Local { ty, name, init }))
    }

    fn switch(&mut self) -> Result<StmtKind, SourceError> {
        self.expect_sym("(")?;
        let scrutinee = self.expr()?;
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut cases: Vec<SwitchCase> = Vec::new();
        while !self.eat_sym("}") {
            let mut labels = Vec::new();
            if self.eat_word("default") {
            } else if self.eat_word("case") {
                loop {
                    labels.push(self.case_label()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            } else {
                return Err(self.unexpected("'case' or 'default'"));
            }
            if self.is_sym("->") {
                return Err(SourceError::unsupported(self.span(), "arrow-form switch case"));
            }
            self.expect_sym(":")?;
            let mut body = Vec::new();
            while !(self.is_word("case") || self.is_word("default") || self.is_sym("}")) {
                if self.peek().is_none() {
                    return Err(self.unexpected("'}'"));
                }
                body.push(self.stmt()?);
            }
            cases.push(SwitchCase { labels, body });
        }
        Ok(StmtKind::Switch { scrutinee, cases })
    }

    fn case_label(&mut self) -> Result<CaseLabel, SourceError> {
        let negative = self.eat_sym("-");
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(CaseLabel::Int(if negative { -v } else { v }))
            }
            Some(Tok::Str(s)) if !negative => {
                self.pos += 1;
                Ok(CaseLabel::Str(s))
            }
            Some(Tok::Ident(_)) if !negative => {
                let q = self.qualified()?;
                Ok(CaseLabel::Name(q.rsplit('.').next().unwrap().to_string()))
            }
            _ => Err(self.unexpected("case label")),
        }
    }

    fn for_stmt(&mut self) -> Result<StmtKind, SourceError> {
        self.expect_sym("(")?;
        // for-each: `(Type x : e)` or `(x : e)`.
        let save = self.pos;
        self.eat_word("final");
        if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::Sym(":"))) {
            let var = self.ident()?;
            self.pos += 1;
            return self.for_each_rest(None, var);
        }
        if let Ok(ty) = self.type_ref() {
            if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::Sym(":"))) {
                let var = self.ident()?;
                self.pos += 1;
                return self.for_each_rest(Some(ty), var);
            }
        }
        self.pos = save;
        let init = if self.is_sym(";") { None } else { Some(Box::new(self.simple_in_for()?)) };
        self.expect_sym(";")?;
        let cond = if self.is_sym(";") { None } else { Some(self.expr()?) };
        self.expect_sym(";")?;
        let update = if self.is_sym(")") { None } else { Some(Box::new(self.simple_in_for()?)) };
        if self.is_sym(",") {
            return Err(SourceError::unsupported(self.span(), "comma in for header"));
        }
        self.expect_sym(")")?;
        let body = Box::new(self.stmt()?);
        Ok(StmtKind::For { init, cond, update, body })
    }

    fn simple_in_for(&mut self) -> Result<Stmt, SourceError> {
        let start = self.span();
        let kind = self.simple_stmt()?;
        Ok(Stmt { kind, span: start.to(self.prev_span()) })
    }

    fn for_each_rest(&mut self, ty: Option<TypeRef>, var: String) -> Result<StmtKind, SourceError> {
        let iter = self.expr()?;
        self.expect_sym(")")?;
        let body = Box::new(self.stmt()?);
        Ok(StmtKind::ForEach { ty, var, iter, body })
    }

    pub fn expr(&mut self) -> Result<Expr, SourceError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Rem,
            _ => return None,
        })
    }

    fn check_trailing(&self) -> Result<(), SourceError> {
        let what = match self.peek() {
            Some(Tok::Sym("?")) => "conditional expression",
            Some(Tok::Sym("->")) => "lambda expression",
            Some(Tok::Sym("::")) => "method reference",
            Some(Tok::Sym("[")) => "array access",
            Some(Tok::Sym("&")) | Some(Tok::Sym("|")) | Some(Tok::Sym("^")) => "bitwise operator",
            Some(Tok::Ident(w)) if w == "instanceof" => "instanceof",
            _ => return Ok(()),
        };
        Err(SourceError::unsupported(self.span(), what))
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min: u8) -> Result<Expr, SourceError> {
        let mut lhs = self.unary()?;
        loop {
            self.check_trailing()?;
            let Some(op) = self.binop() else { break };
            if op.precedence() < min {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SourceError> {
        let start = self.span();
        let op = if self.eat_sym("!") {
            UnOp::Not
        } else if self.eat_sym("-") {
            UnOp::Neg
        } else if self.is_sym("++") || self.is_sym("--") || self.is_sym("~") {
            return Err(SourceError::unsupported(self.span(), "prefix operator"));
        } else {
            return self.postfix();
        };
        let e = self.unary()?;
        let span = start.to(e.span);
        Ok(Expr::new(ExprKind::Unary { op, expr: Box::new(e) }, span))
    }

    fn args(&mut self) -> Result<Vec<Expr>, SourceError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn postfix(&mut self) -> Result<Expr, SourceError> {
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            if self.is_sym("<") {
                return Err(SourceError::unsupported(self.span(), "explicit type arguments"));
            }
            let name = self.ident()?;
            let kind = if self.is_sym("(") {
                ExprKind::Call { target: Some(Box::new(e.clone())), name, args: self.args()? }
            } else {
                ExprKind::Field { target: Box::new(e.clone()), name }
            };
            e = Expr::new(kind, e.span.to(self.prev_span()));
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, SourceError> {
        let start = self.span();
        let kind = match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                ExprKind::Int(v)
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                ExprKind::Str(s)
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Sym(")"))) {
                    return Err(SourceError::unsupported(start, "lambda expression"));
                }
                let inner = self.expr()?;
                if self.is_sym(",") {
                    return Err(SourceError::unsupported(start, "lambda expression"));
                }
                self.expect_sym(")")?;
                if self.is_sym("->") {
                    return Err(SourceError::unsupported(start, "lambda expression"));
                }
                let looks_cast = matches!(inner.kind, ExprKind::Name(_))
                    && matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Int(_)) | Some(Tok::Str(_)) | Some(Tok::Sym("(")));
                if looks_cast {
                    return Err(SourceError::unsupported(start, "cast expression"));
                }
                return Ok(Expr::new(inner.kind, start.to(self.prev_span())));
            }
            Some(Tok::Ident(w)) => {
                self.pos += 1;
                match w.as_str() {
                    "true" => ExprKind::Bool(true),
                    "false" => ExprKind::Bool(false),
                    "null" => ExprKind::Null,
                    "this" => ExprKind::This,
                    "super" => return Err(SourceError::unsupported(start, "super reference")),
                    "switch" => return Err(SourceError::unsupported(start, "switch expression")),
                    "new" => {
                        let ty = self.type_ref()?;
                        if self.is_sym("{") {
                            return Err(SourceError::unsupported(self.span(), "anonymous class"));
                        }
                        ExprKind::New { ty, args: self.args()? }
                    }
                    _ if self.is_sym("(") => ExprKind::Call { target: None, name: w, args: self.args()? },
                    _ => {
                        if self.is_sym("->") {
                            return Err(SourceError::unsupported(start, "lambda expression"));
                        }
                        ExprKind::Name(w)
                    }
                }
            }
            _ => return Err(self.unexpected("expression")),
        };
        Ok(Expr::new(kind, start.to(self.prev_span())))
    }
}
