//! A brute-force truth-table evaluator for the constraint DSL that shares no
//! code with the library: its own tokenizer, parser and atom semantics.
//! Values range over a fixed universe wide enough to witness every
//! satisfiable formula produced by [`Gen`].

use rand::rngs::StdRng;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum V {
    Absent,
    Int(i64),
    Str(String),
}

pub fn universe() -> Vec<V> {
    let mut u = vec![V::Absent];
    u.extend((-5..=9).map(V::Int));
    u.extend(["", "x", "y", "zz", "www", "vvvv"].map(|s| V::Str(s.to_string())));
    u
}

#[derive(Clone, Debug)]
enum Lit {
    Int(i64),
    Str(String),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Op {
    fn ints(self, a: i64, b: i64) -> bool {
        match self {
            Op::Lt => a < b,
            Op::Le => a <= b,
            Op::Gt => a > b,
            Op::Ge => a >= b,
            Op::Eq => a == b,
            Op::Ne => a != b,
        }
    }
}

#[derive(Clone, Debug)]
enum F {
    Const(bool),
    Present(usize),
    CmpLit(usize, Op, Lit),
    CmpVar(usize, Op, usize),
    Len(usize, Op, i64),
    In(usize, Vec<Lit>),
    Not(Box<F>),
    And(Vec<F>),
    Or(Vec<F>),
    /// Count of present params: invalid unless exactly one.
    ExactlyOne(Vec<usize>),
    AllOrNone(Vec<usize>),
}

fn lit_matches(l: &Lit, v: &V) -> bool {
    match (l, v) {
        (Lit::Int(a), V::Int(b)) => a == b,
        (Lit::Str(a), V::Str(b)) => a == b,
        _ => false,
    }
}

fn eval(f: &F, point: &[V]) -> bool {
    match f {
        F::Const(b) => *b,
        F::Present(i) => point[*i] != V::Absent,
        F::CmpLit(i, op, Lit::Int(n)) => matches!(&point[*i], V::Int(v) if op.ints(*v, *n)),
        F::CmpLit(i, op, Lit::Str(s)) => match (&point[*i], op) {
            (V::Str(v), Op::Eq) => v == s,
            (V::Str(v), Op::Ne) => v != s,
            _ => false,
        },
        F::CmpVar(i, op, j) => match (&point[*i], &point[*j]) {
            (V::Int(a), V::Int(b)) => op.ints(*a, *b),
            (V::Str(a), V::Str(b)) => match op {
                Op::Eq => a == b,
                Op::Ne => a != b,
                _ => false,
            },
            _ => false,
        },
        F::Len(i, op, n) => matches!(&point[*i], V::Str(s) if op.ints(s.chars().count() as i64, *n)),
        F::In(i, lits) => lits.iter().any(|l| lit_matches(l, &point[*i])),
        F::Not(g) => !eval(g, point),
        F::And(gs) => gs.iter().all(|g| eval(g, point)),
        F::Or(gs) => gs.iter().any(|g| eval(g, point)),
        F::ExactlyOne(ps) => ps.iter().filter(|p| point[**p] != V::Absent).count() != 1,
        F::AllOrNone(ps) => {
            let n = ps.iter().filter(|p| point[**p] != V::Absent).count();
            n > 0 && n < ps.len()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum T {
    Word(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
}

fn tokens(s: &str) -> Vec<T> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || "_.-".contains(cs[i])) {
                // `-` only inside the sugar keywords
                if cs[i] == '-' && !(i + 1 < cs.len() && cs[i + 1].is_ascii_alphabetic()) {
                    break;
                }
                i += 1;
            }
            out.push(T::Word(cs[st..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '-' && i + 1 < cs.len() && cs[i + 1].is_ascii_digit()) {
            let st = i;
            i += 1;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            out.push(T::Int(cs[st..i].iter().collect::<String>().parse().unwrap()));
        } else if c == '"' {
            let st = i + 1;
            i += 1;
            while cs[i] != '"' {
                i += 1;
            }
            out.push(T::Str(cs[st..i].iter().collect()));
            i += 1;
        } else {
            let two: String = cs[i..(i + 2).min(cs.len())].iter().collect();
            let sym = ["->", "<=", ">=", "==", "!="].into_iter().find(|s| *s == two);
            match sym {
                Some(s) => {
                    out.push(T::Sym(s));
                    i += 2;
                }
                None => {
                    let s = ["(", ")", "[", "]", "{", "}", ",", "<", ">"]
                        .into_iter()
                        .find(|s| s.starts_with(c))
                        .unwrap_or_else(|| panic!("oracle: unexpected '{}'", c));
                    out.push(T::Sym(s));
                    i += 1;
                }
            }
        }
    }
    out
}

struct P<'a> {
    t: Vec<T>,
    i: usize,
    names: &'a mut Vec<String>,
}

impl P<'_> {
    fn peek(&self) -> Option<&T> {
        self.t.get(self.i)
    }
    fn word(&self, w: &str) -> bool {
        self.peek() == Some(&T::Word(w.into()))
    }
    fn sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(T::Sym(x)) if *x == s) {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn want(&mut self, s: &str) {
        assert!(self.sym(s), "oracle: expected {} at {:?}", s, self.peek());
    }
    fn var(&mut self) -> usize {
        let Some(T::Word(w)) = self.t.get(self.i).cloned() else { panic!("oracle: expected name") };
        self.i += 1;
        match self.names.iter().position(|n| *n == w) {
            Some(k) => k,
            None => {
                self.names.push(w);
                self.names.len() - 1
            }
        }
    }
    fn vars(&mut self) -> Vec<usize> {
        self.want("(");
        let mut vs = vec![self.var()];
        while self.sym(",") {
            vs.push(self.var());
        }
        self.want(")");
        vs
    }
    fn lit(&mut self) -> Lit {
        let l = match self.t[self.i].clone() {
            T::Int(n) => Lit::Int(n),
            T::Str(s) => Lit::Str(s),
            t => panic!("oracle: expected literal, got {:?}", t),
        };
        self.i += 1;
        l
    }
    fn op(&mut self) -> Op {
        let T::Sym(s) = self.t[self.i] else { panic!("oracle: expected operator") };
        self.i += 1;
        match s {
            "<" => Op::Lt,
            "<=" => Op::Le,
            ">" => Op::Gt,
            ">=" => Op::Ge,
            "==" => Op::Eq,
            "!=" => Op::Ne,
            _ => panic!("oracle: bad operator {}", s),
        }
    }

    fn statement(&mut self) -> F {
        if self.word("requires") {
            self.i += 1;
            self.want("(");
            let bare = matches!(self.t.get(self.i + 1), Some(T::Sym(",")));
            let trig = if bare { F::Present(self.var()) } else { self.or() };
            self.want(",");
            let targets = if self.sym("[") {
                let mut ts = vec![self.var()];
                while self.sym(",") {
                    ts.push(self.var());
                }
                self.want("]");
                ts
            } else {
                vec![self.var()]
            };
            self.want(")");
            let missing = targets.into_iter().map(|t| F::Not(Box::new(F::Present(t)))).collect();
            return F::And(vec![trig, F::Or(missing)]);
        }
        if self.word("exactly-one") {
            self.i += 1;
            return F::ExactlyOne(self.vars());
        }
        if self.word("all-or-none") {
            self.i += 1;
            return F::AllOrNone(self.vars());
        }
        let f = self.or();
        self.want("->");
        assert!(self.word("invalid"));
        self.i += 1;
        f
    }
    fn or(&mut self) -> F {
        let mut v = vec![self.and()];
        while self.word("or") {
            self.i += 1;
            v.push(self.and());
        }
        if v.len() == 1 { v.pop().unwrap() } else { F::Or(v) }
    }
    fn and(&mut self) -> F {
        let mut v = vec![self.unary()];
        while self.word("and") {
            self.i += 1;
            v.push(self.unary());
        }
        if v.len() == 1 { v.pop().unwrap() } else { F::And(v) }
    }
    fn unary(&mut self) -> F {
        if self.word("not") {
            self.i += 1;
            return F::Not(Box::new(self.unary()));
        }
        if self.sym("(") {
            let f = self.or();
            self.want(")");
            return f;
        }
        for (w, b) in [("true", true), ("false", false)] {
            if self.word(w) {
                self.i += 1;
                return F::Const(b);
            }
        }
        if self.word("present") {
            self.i += 1;
            self.want("(");
            let v = self.var();
            self.want(")");
            return F::Present(v);
        }
        if self.word("len") {
            self.i += 1;
            self.want("(");
            let v = self.var();
            self.want(")");
            let op = self.op();
            let Lit::Int(n) = self.lit() else { panic!("oracle: len bound") };
            return F::Len(v, op, n);
        }
        let v = self.var();
        if self.word("in") {
            self.i += 1;
            self.want("{");
            let mut ls = vec![self.lit()];
            while self.sym(",") {
                ls.push(self.lit());
            }
            self.want("}");
            return F::In(v, ls);
        }
        let op = self.op();
        if let Some(T::Word(_)) = self.peek() {
            return F::CmpVar(v, op, self.var());
        }
        F::CmpLit(v, op, self.lit())
    }
}

fn parse(stmt: &str, names: &mut Vec<String>) -> F {
    let mut p = P { t: tokens(stmt), i: 0, names };
    let f = p.statement();
    assert_eq!(p.i, p.t.len(), "oracle: trailing input in {}", stmt);
    f
}

/// Whether two DSL statements reject exactly the same requests.
pub fn equivalent(a: &str, b: &str) -> bool {
    let mut names = Vec::new();
    let fa = parse(a, &mut names);
    let fb = parse(b, &mut names);
    let u = universe();
    let n = names.len();
    let mut idx = vec![0usize; n];
    let mut point: Vec<V> = vec![V::Absent; n];
    loop {
        for k in 0..n {
            point[k] = u[idx[k]].clone();
        }
        if eval(&fa, &point) != eval(&fb, &point) {
            return false;
        }
        let mut k = 0;
        loop {
            if k == n {
                return true;
            }
            idx[k] += 1;
            if idx[k] < u.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Random DSL statements over a small parameter pool.
pub struct Gen {
    pub params: Vec<&'static str>,
}

const OPS: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];
const STRS: [&str; 3] = ["x", "zz", "www"];

impl Gen {
    fn p(&self, r: &mut StdRng) -> &'static str {
        self.params[r.gen_range(0..self.params.len())]
    }

    fn lit(&self, r: &mut StdRng) -> String {
        if r.gen_bool(0.6) {
            r.gen_range(0..=4).to_string()
        } else {
            format!("\"{}\"", STRS[r.gen_range(0..STRS.len())])
        }
    }

    pub fn atom(&self, r: &mut StdRng) -> String {
        let op = OPS[r.gen_range(0..OPS.len())];
        match r.gen_range(0..7) {
            0 | 1 => format!("present({})", self.p(r)),
            2 => format!("{} {} {}", self.p(r), op, r.gen_range(0..=4)),
            3 => format!("{} == \"{}\"", self.p(r), STRS[r.gen_range(0..STRS.len())]),
            4 => format!("len({}) {} {}", self.p(r), op, r.gen_range(0..=3)),
            5 => {
                let n = r.gen_range(1..=3);
                let ls: Vec<String> = (0..n).map(|_| self.lit(r)).collect();
                format!("{} in {{{}}}", self.p(r), ls.join(", "))
            }
            _ => format!("{} {} {}", self.p(r), op, self.p(r)),
        }
    }

    pub fn formula(&self, r: &mut StdRng, depth: u32) -> String {
        if depth == 0 || r.gen_bool(0.3) {
            return self.atom(r);
        }
        match r.gen_range(0..3) {
            0 => format!("not ({})", self.formula(r, depth - 1)),
            1 => format!("({}) and ({})", self.formula(r, depth - 1), self.formula(r, depth - 1)),
            _ => format!("({}) or ({})", self.formula(r, depth - 1), self.formula(r, depth - 1)),
        }
    }

    /// Plain statements and the sugar forms.
    pub fn statement(&self, r: &mut StdRng) -> String {
        match r.gen_range(0..8) {
            0 => format!("requires({}, {})", self.p(r), self.p(r)),
            1 => format!("requires({} == \"x\", [{}, {}])", self.p(r), self.p(r), self.p(r)),
            2 => format!("exactly-one({}, {})", self.p(r), self.p(r)),
            3 => format!("all-or-none({}, {}, {})", self.p(r), self.p(r), self.p(r)),
            _ => format!("{} -> invalid", self.formula(r, 3)),
        }
    }

    /// A second statement that is often, but not always, equivalent.
    pub fn partner(&self, r: &mut StdRng, s: &str) -> String {
        let Some(body) = s.strip_suffix(" -> invalid") else {
            return self.statement(r);
        };
        match r.gen_range(0..6) {
            0 => format!("not (not ({})) -> invalid", body),
            1 => format!("({}) and true -> invalid", body),
            2 => format!("({}) or ({}) -> invalid", body, self.atom(r)),
            3 => format!("({}) and (present({}) or not present({})) -> invalid", body, "a", "a"),
            4 => self.statement(r),
            _ => body.replacen("<=", "<", 1).replacen(" and ", " or ", 1) + " -> invalid",
        }
    }
}
