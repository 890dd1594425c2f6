//! Line-oriented constraint language used for ground truth and for every
//! constraint artifact the tools write.
//!
//! ```text
//! # comment
//! not present(bankAccount) and not present(card) -> invalid @class(inter)
//! requires(paymentMethod.type == "iDEAL", returnUrl) @cat(A3)
//! offset > 80 -> invalid @class(single)
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use super::atom::{Atom, CmpOp, Literal, ParamPath};
use super::formula::{atom_text, Formula};
use super::{Constraint, ConstraintClass, ConstraintError, Origin};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Op(CmpOp),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Label(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Spanned>, ConstraintError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ConstraintError::Syntax { line: line_no, col: col + 1, msg };
    while i < chars.len() {
        let c = chars[i];
        let col = i;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                continue;
            }
            '#' => break,
            '(' => out.push(Spanned { tok: Tok::LParen, col }),
            ')' => out.push(Spanned { tok: Tok::RParen, col }),
            '{' => out.push(Spanned { tok: Tok::LBrace, col }),
            '}' => out.push(Spanned { tok: Tok::RBrace, col }),
            '[' => out.push(Spanned { tok: Tok::LBracket, col }),
            ']' => out.push(Spanned { tok: Tok::RBracket, col }),
            ',' => out.push(Spanned { tok: Tok::Comma, col }),
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(col, "unterminated string literal".into())),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('n') => s.push('\n'),
                                Some(&e) => s.push(e),
                                None => return Err(err(i, "dangling escape".into())),
                            }
                            i += 2;
                            continue;
                        }
                        Some(&ch) => s.push(ch),
                    }
                    i += 1;
                }
                out.push(Spanned { tok: Tok::Str(s), col });
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Spanned { tok: Tok::Arrow, col });
                i += 1;
            }
            '=' | '!' | '<' | '>' => {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let (op, width) = match CmpOp::from_symbol(&two) {
                    Some(op) if two.len() == 2 => (op, 2),
                    _ => match CmpOp::from_symbol(&c.to_string()) {
                        Some(op) => (op, 1),
                        None => return Err(err(col, format!("unexpected character '{}'", c))),
                    },
                };
                out.push(Spanned { tok: Tok::Op(op), col });
                i += width - 1;
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                if j == start {
                    return Err(err(col, "empty label".into()));
                }
                out.push(Spanned { tok: Tok::Label(chars[start..j].iter().collect()), col });
                i = j - 1;
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let n: f64 = text
                    .parse()
                    .map_err(|_| err(col, format!("bad number '{}'", text)))?;
                out.push(Spanned { tok: Tok::Num(n), col });
                i = j - 1;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let hyphen_word = d == '-' && chars.get(j + 1).is_some_and(|n| n.is_alphabetic());
                    if d.is_alphanumeric() || d == '_' || d == '.' || hyphen_word {
                        j += 1;
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Ident(chars[i..j].iter().collect()), col });
                i = j - 1;
            }
            other => return Err(err(col, format!("unexpected character '{}'", other))),
        }
        i += 1;
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "and", "or", "not", "present", "len", "in", "invalid", "unparsed", "true", "false",
    "requires", "exactly-one", "all-or-none",
];

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    line_len: usize,
    catalog: Option<&'a HashSet<String>>,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ConstraintError {
        let col = self.toks.get(self.pos).map(|t| t.col + 1).unwrap_or(self.line_len + 1);
        ConstraintError::Syntax { line: self.line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ConstraintError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {}", what)))
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn path(&mut self) -> Result<ParamPath, ConstraintError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                if let Some(cat) = self.catalog {
                    if !cat.contains(&s) {
                        return Err(ConstraintError::UnknownPath { line: self.line, path: s });
                    }
                }
                self.pos += 1;
                Ok(ParamPath::new(s))
            }
            _ => Err(self.err("expected parameter path")),
        }
    }

    fn statement(&mut self) -> Result<Constraint, ConstraintError> {
        let precondition = if self.peek_keyword("requires") {
            self.requires()?
        } else if self.peek_keyword("exactly-one") {
            self.pos += 1;
            let ps = self.path_list()?;
            exactly_one(&ps)
        } else if self.peek_keyword("all-or-none") {
            self.pos += 1;
            let ps = self.path_list()?;
            all_or_none(&ps)
        } else {
            let f = self.formula()?;
            self.expect(Tok::Arrow, "'->'")?;
            if !self.peek_keyword("invalid") {
                return Err(self.err("expected 'invalid'"));
            }
            self.pos += 1;
            f
        };
        let mut c = Constraint::new(precondition, Origin::GroundTruth);
        c.source_ref = format!("line {}", self.line);
        while let Some(Tok::Label(name)) = self.peek().cloned() {
            self.pos += 1;
            self.expect(Tok::LParen, "'('")?;
            let value = match self.next() {
                Some(Tok::Ident(v)) => v,
                _ => return Err(self.err("expected label value")),
            };
            self.expect(Tok::RParen, "')'")?;
            match name.as_str() {
                "class" => {
                    c.class = Some(match value.as_str() {
                        "inter" => ConstraintClass::Inter,
                        "single" => ConstraintClass::Single,
                        _ => return Err(self.err(format!("unknown class '{}'", value))),
                    })
                }
                "cat" => c.category = Some(value),
                _ => return Err(self.err(format!("unknown label '@{}'", name))),
            }
        }
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(c)
    }

    fn path_list(&mut self) -> Result<Vec<ParamPath>, ConstraintError> {
        self.expect(Tok::LParen, "'('")?;
        let mut ps = vec![self.path()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            ps.push(self.path()?);
        }
        self.expect(Tok::RParen, "')'")?;
        if ps.len() < 2 {
            return Err(self.err("expected at least two parameters"));
        }
        Ok(ps)
    }

    fn requires(&mut self) -> Result<Formula, ConstraintError> {
        self.pos += 1;
        self.expect(Tok::LParen, "'('")?;
        // A bare path as the trigger means "is present".
        let bare = matches!(self.peek(), Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()))
            && matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Comma));
        let trigger = if bare { Formula::present(self.path()?) } else { self.formula()? };
        self.expect(Tok::Comma, "','")?;
        let targets = if self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            let mut ts = vec![self.path()?];
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                ts.push(self.path()?);
            }
            self.expect(Tok::RBracket, "']'")?;
            ts
        } else {
            vec![self.path()?]
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(requires(trigger, &targets))
    }

    fn formula(&mut self) -> Result<Formula, ConstraintError> {
        let mut parts = vec![self.conjunction()?];
        while self.peek_keyword("or") {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Formula, ConstraintError> {
        let mut parts = vec![self.unary()?];
        while self.peek_keyword("and") {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn unary(&mut self) -> Result<Formula, ConstraintError> {
        if self.peek_keyword("not") {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ConstraintError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(kw)) => match kw.as_str() {
                "true" => {
                    self.pos += 1;
                    Ok(Formula::True)
                }
                "false" => {
                    self.pos += 1;
                    Ok(Formula::False)
                }
                "present" => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "'('")?;
                    let p = self.path()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Formula::present(p))
                }
                "unparsed" => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "'('")?;
                    let text = match self.next() {
                        Some(Tok::Str(s)) => s,
                        _ => return Err(self.err("expected string")),
                    };
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Formula::leaf(Atom::unparsed(text)))
                }
                "len" => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "'('")?;
                    let p = self.path()?;
                    self.expect(Tok::RParen, "')'")?;
                    let op = match self.next() {
                        Some(Tok::Op(op)) => op,
                        _ => return Err(self.err("expected comparison operator")),
                    };
                    match self.next() {
                        Some(Tok::Num(n)) if n >= 0.0 && n.fract() == 0.0 => {
                            Ok(Formula::leaf(Atom::len(p, op, n as u64)))
                        }
                        _ => Err(self.err("length bound must be a non-negative integer")),
                    }
                }
                _ if KEYWORDS.contains(&kw.as_str()) => Err(self.err(format!("unexpected '{}'", kw))),
                _ => self.comparison(),
            },
            _ => Err(self.err("expected formula")),
        }
    }

    fn comparison(&mut self) -> Result<Formula, ConstraintError> {
        let p = self.path()?;
        if self.peek_keyword("in") {
            self.pos += 1;
            self.expect(Tok::LBrace, "'{'")?;
            let mut values = BTreeSet::new();
            loop {
                values.insert(self.literal()?);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RBrace) => break,
                    _ => return Err(self.err("expected ',' or '}'")),
                }
            }
            return Ok(Formula::leaf(Atom::InSet { path: p, values }));
        }
        let op = match self.next() {
            Some(Tok::Op(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected comparison operator or 'in'"));
            }
        };
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Formula::leaf(Atom::cmp(p, op, n)))
            }
            Some(Tok::Ident(s)) if s == "true" || s == "false" => {
                self.pos += 1;
                self.equality(p, op, Literal::Bool(s == "true"))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                self.equality(p, op, Literal::Str(s))
            }
            Some(Tok::Ident(_)) => {
                let q = self.path()?;
                Ok(Formula::leaf(Atom::cmp_params(p, op, q)))
            }
            _ => Err(self.err("expected literal or parameter path")),
        }
    }

    fn equality(&self, p: ParamPath, op: CmpOp, lit: Literal) -> Result<Formula, ConstraintError> {
        match op {
            CmpOp::Eq => Ok(Formula::leaf(Atom::eq(p, lit))),
            CmpOp::Ne => Ok(Formula::not(Formula::leaf(Atom::eq(p, lit)))),
            _ => Err(self.err("ordering comparison needs a numeric bound")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ConstraintError> {
        match self.next() {
            Some(Tok::Str(s)) => Ok(Literal::Str(s)),
            Some(Tok::Num(n)) => Ok(Literal::num(n)),
            Some(Tok::Ident(s)) if s == "true" => Ok(Literal::Bool(true)),
            Some(Tok::Ident(s)) if s == "false" => Ok(Literal::Bool(false)),
            _ => {
                self.pos -= 1;
                Err(self.err("expected literal"))
            }
        }
    }
}

/// `trigger` holds while some target is absent.
pub fn requires(trigger: Formula, targets: &[ParamPath]) -> Formula {
    let missing: Vec<Formula> = targets.iter().map(Formula::absent).collect();
    let missing = if missing.len() == 1 { missing.into_iter().next().unwrap() } else { Formula::Or(missing) };
    Formula::and([trigger, missing])
}

/// None present, or two or more present.
pub fn exactly_one(ps: &[ParamPath]) -> Formula {
    let none = Formula::And(ps.iter().map(Formula::absent).collect());
    let mut pairs = Vec::new();
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            pairs.push(Formula::and([Formula::present(&ps[i]), Formula::present(&ps[j])]));
        }
    }
    let mut alts = vec![none];
    alts.extend(pairs);
    Formula::Or(alts)
}

/// Some present and some absent.
pub fn all_or_none(ps: &[ParamPath]) -> Formula {
    Formula::and([
        Formula::Or(ps.iter().map(Formula::present).collect()),
        Formula::Or(ps.iter().map(Formula::absent).collect()),
    ])
}

fn parse_impl(text: &str, catalog: Option<&HashSet<String>>) -> Result<Vec<Constraint>, ConstraintError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut p = Parser { toks, pos: 0, line: line_no, line_len: line.chars().count(), catalog };
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Parses a constraint document, one statement per line.
pub fn parse_dsl(text: &str) -> Result<Vec<Constraint>, ConstraintError> {
    parse_impl(text, None)
}

/// Like [`parse_dsl`], rejecting paths outside `catalog`.
pub fn parse_dsl_with_catalog(text: &str, catalog: &HashSet<String>) -> Result<Vec<Constraint>, ConstraintError> {
    parse_impl(text, Some(catalog))
}

pub fn formula_to_dsl(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(f, 0, &mut s);
    s
}

// precedence: 0 = or, 1 = and, 2 = unary
fn write_formula(f: &Formula, ctx: u8, out: &mut String) {
    match f {
        Formula::Or(cs) | Formula::And(cs) => {
            let (prec, word) = if matches!(f, Formula::Or(_)) { (0, " or ") } else { (1, " and ") };
            let paren = ctx > prec;
            if paren {
                out.push('(');
            }
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(word);
                }
                write_formula(c, prec + 1, out);
            }
            if paren {
                out.push(')');
            }
        }
        Formula::Not(c) => {
            out.push_str("not ");
            write_formula(c, 2, out);
        }
        Formula::Leaf(a) => {
            // Comparison atoms bind tighter than `not`, so only parenthesize
            // under negation for readability of `not (a == "x")`.
            let text = atom_text(a);
            let bare = matches!(a, Atom::Present { .. } | Atom::Unparsed { .. } | Atom::Len { .. });
            if ctx == 2 && !bare {
                let _ = write!(out, "({})", text);
            } else {
                out.push_str(&text);
            }
        }
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
    }
}

/// Renders one constraint as a DSL statement.
pub fn to_dsl(c: &Constraint) -> String {
    let mut s = format!("{} -> invalid", formula_to_dsl(&c.precondition));
    if let Some(class) = c.class {
        let _ = write!(s, " @class({})", class);
    }
    if let Some(cat) = &c.category {
        let _ = write!(s, " @cat({})", cat);
    }
    s
}

/// Renders a document; source references become trailing comments.
pub fn write_document(cs: &[Constraint]) -> String {
    let mut out = String::new();
    for c in cs {
        out.push_str(&to_dsl(c));
        if !c.source_ref.is_empty() && c.origin != Origin::GroundTruth {
            let _ = write!(out, "  # {}", c.source_ref.replace('\n', " "));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Constraint {
        let mut cs = parse_dsl(text).unwrap();
        assert_eq!(cs.len(), 1);
        cs.pop().unwrap()
    }

    #[test]
    fn value_dependent_requirement() {
        let c = one(r#"paymentMethod.type == "iDEAL" and not present(returnUrl) -> invalid"#);
        assert_eq!(
            c.precondition,
            Formula::and([
                Formula::leaf(Atom::eq("paymentMethod.type", Literal::str("iDEAL"))),
                Formula::absent("returnUrl"),
            ])
        );
    }

    #[test]
    fn or_requirement() {
        let c = one("not present(bankAccount) and not present(card) -> invalid");
        assert_eq!(c.precondition, Formula::and([Formula::absent("bankAccount"), Formula::absent("card")]));
    }

    #[test]
    fn empty_document() {
        assert!(parse_dsl("").unwrap().is_empty());
        assert!(parse_dsl("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn sugar_expands() {
        let c = one("requires(A, B)");
        assert_eq!(c.precondition, Formula::and([Formula::present("A"), Formula::absent("B")]));
        let c = one(r#"requires(A == "v", B)"#);
        assert_eq!(
            c.precondition,
            Formula::and([Formula::leaf(Atom::eq("A", Literal::str("v"))), Formula::absent("B")])
        );
        let c = one("requires(A, [B, C])");
        assert_eq!(
            c.precondition,
            Formula::and([Formula::present("A"), Formula::or([Formula::absent("B"), Formula::absent("C")])])
        );
        let c = one("exactly-one(A, B)");
        assert_eq!(
            c.precondition,
            Formula::or([
                Formula::and([Formula::absent("A"), Formula::absent("B")]),
                Formula::and([Formula::present("A"), Formula::present("B")]),
            ])
        );
        assert!(matches!(one("all-or-none(A, B, C)").precondition, Formula::And(_)));
    }

    #[test]
    fn atoms_and_labels() {
        let c = one(r#"len(reference) > 80 or country in {"NL", "BE"} or a <= b or x != "y" -> invalid @class(single) @cat(B2)"#);
        assert_eq!(c.class, Some(ConstraintClass::Single));
        assert_eq!(c.category.as_deref(), Some("B2"));
        let Formula::Or(parts) = &c.precondition else { panic!() };
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[0], Formula::leaf(Atom::len("reference", CmpOp::Gt, 80)));
        assert_eq!(parts[2], Formula::leaf(Atom::cmp_params("a", CmpOp::Le, "b")));
        assert_eq!(parts[3], Formula::not(Formula::leaf(Atom::eq("x", Literal::str("y")))));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_dsl("present(a) -> invalid\npresent(a) and -> invalid").unwrap_err();
        match err {
            ConstraintError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn catalog_rejects_unknown_paths() {
        let cat: HashSet<String> = ["a".to_string()].into();
        assert!(parse_dsl_with_catalog("present(a) -> invalid", &cat).is_ok());
        let err = parse_dsl_with_catalog("present(b) -> invalid", &cat).unwrap_err();
        assert!(matches!(err, ConstraintError::UnknownPath { line: 1, .. }));
    }

    #[test]
    fn printing_round_trips() {
        let text = r#"not (a == "x" or present(b)) and len(c) >= 2 and unparsed("f(\"q\")") -> invalid @class(inter)"#;
        let c = one(text);
        let again = one(&to_dsl(&c));
        assert_eq!(c.precondition.normalize(), again.precondition.normalize());
        assert_eq!(again.class, Some(ConstraintClass::Inter));
    }
}
