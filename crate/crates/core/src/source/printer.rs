//! Canonical source rendering; reparsing the output yields an equal tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_unit(u: &Unit) -> String {
    let mut out = String::new();
    for item in &u.items {
        match item {
            Item::Enum(e) => {
                let _ = writeln!(out, "enum {} {{ {} }}", e.name, e.constants.join(", "));
            }
            Item::Class(c) => print_class(&mut out, c),
        }
    }
    out
}

fn print_class(out: &mut String, c: &ClassDecl) {
    let _ = writeln!(out, "class {} {{", c.name);
    for f in &c.fields {
        out.push_str("    ");
        if f.is_static {
            out.push_str("static ");
        }
        if f.is_final {
            out.push_str("final ");
        }
        let _ = write!(out, "{} {}", print_type(&f.ty), f.name);
        if let Some(e) = &f.init {
            let _ = write!(out, " = {}", print_expr(e));
        }
        out.push_str(";\n");
    }
    for m in &c.methods {
        out.push_str("    ");
        if m.is_static {
            out.push_str("static ");
        }
        if let Some(r) = &m.ret {
            let _ = write!(out, "{} ", print_type(r));
        }
        let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", print_type(&p.ty), p.name)).collect();
        let _ = write!(out, "{}({}) ", m.name, params.join(", "));
        print_block(out, &m.body, 1);
        out.push('\n');
    }
    out.push_str("}\n");
}

pub fn print_type(t: &TypeRef) -> String {
    if t.args.is_empty() {
        t.name.clone()
    } else {
        let args: Vec<String> = t.args.iter().map(print_type).collect();
        format!("{}<{}>", t.name, args.join(", "))
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, b: &Block, level: usize) {
    out.push_str("{\n");
    for s in &b.stmts {
        print_stmt(out, s, level + 1);
    }
    indent(out, level);
    out.push('}');
}

/// Statement body after `if (..)`/`else`/loop headers.
fn print_nested(out: &mut String, s: &Stmt, level: usize) {
    if let StmtKind::Block(b) = &s.kind {
        out.push(' ');
        print_block(out, b, level);
        out.push('\n');
    } else {
        out.push('\n');
        print_stmt(out, s, level + 1);
    }
}

pub fn print_stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Block(b) => {
            print_block(out, b, level);
            out.push('\n');
        }
        StmtKind::If { cond, then, otherwise } => {
            let _ = write!(out, "if ({})", print_expr(cond));
            print_nested(out, then, level);
            if let Some(o) = otherwise {
                indent(out, level);
                out.push_str("else");
                print_nested(out, o, level);
            }
        }
        StmtKind::Switch { scrutinee, cases } => {
            let _ = writeln!(out, "switch ({}) {{", print_expr(scrutinee));
            for c in cases {
                indent(out, level + 1);
                if c.is_default() {
                    out.push_str("default:\n");
                } else {
                    let labels: Vec<String> = c.labels.iter().map(print_label).collect();
                    let _ = writeln!(out, "case {}:", labels.join(", "));
                }
                for s in &c.body {
                    print_stmt(out, s, level + 2);
                }
            }
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::For { init, cond, update, body } => {
            let init = init.as_ref().map(|s| print_simple(&s.kind)).unwrap_or_default();
            let cond = cond.as_ref().map(print_expr).unwrap_or_default();
            let update = update.as_ref().map(|s| print_simple(&s.kind)).unwrap_or_default();
            let _ = write!(out, "for ({}; {}; {})", init, cond, update);
            print_nested(out, body, level);
        }
        StmtKind::ForEach { ty, var, iter, body } => {
            let ty = ty.as_ref().map(|t| format!("{} ", print_type(t))).unwrap_or_default();
            let _ = write!(out, "for ({}{} : {})", ty, var, print_expr(iter));
            print_nested(out, body, level);
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", print_expr(e));
        }
        StmtKind::Throw(e) => {
            let _ = writeln!(out, "throw {};", print_expr(e));
        }
        StmtKind::Break => out.push_str("break;\n"),
        StmtKind::Continue => out.push_str("continue;\n"),
        other => {
            let _ = writeln!(out, "{};", print_simple(other));
        }
    }
}

fn print_simple(k: &StmtKind) -> String {
    match k {
        StmtKind::Local { ty, name, init: None } => format!("{} {}", print_type(ty), name),
        StmtKind::Local { ty, name, init: Some(e) } => format!("{} {} = {}", print_type(ty), name, print_expr(e)),
        StmtKind::Assign { target, op, value } => format!("{} {} {}", print_expr(target), op.symbol(), print_expr(value)),
        StmtKind::Expr(e) => print_expr(e),
        _ => unreachable!("only simple statements appear in for headers"),
    }
}

fn print_label(l: &CaseLabel) -> String {
    match l {
        CaseLabel::Int(v) => v.to_string(),
        CaseLabel::Str(s) => quote(s),
        CaseLabel::Name(n) => n.clone(),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => 7,
        _ => 8,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let s = print_expr(e);
    if prec(e) < min {
        format!("({})", s)
    } else {
        s
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Str(s) => quote(s),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Null => "null".into(),
        ExprKind::This => "this".into(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Field { target, name } => format!("{}.{}", wrap(target, 8), name),
        ExprKind::Call { target, name, args } => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            match target {
                Some(t) => format!("{}.{}({})", wrap(t, 8), name, args.join(", ")),
                None => format!("{}({})", name, args.join(", ")),
            }
        }
        ExprKind::New { ty, args } => {
            let args: Vec<String> = args.iter().map(print_expr).collect();
            format!("new {}({})", print_type(ty), args.join(", "))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            format!("{} {} {}", wrap(lhs, p), op.symbol(), wrap(rhs, p + 1))
        }
        ExprKind::Unary { op, expr } => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            format!("{}{}", sym, wrap(expr, 8))
        }
    }
}
