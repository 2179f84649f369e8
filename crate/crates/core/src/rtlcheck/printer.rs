//! Canonical text output for [`RtlAst`].
//!
//! Every `if` body and case arm is wrapped in `begin`/`end`, so dangling-else
//! ambiguity cannot arise. Nested operator expressions are parenthesized.

use std::fmt::Write;

use super::ast::*;

pub fn serialize(ast: &RtlAst) -> String {
    let mut out = String::new();
    for (i, m) in ast.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        module(&mut out, m);
    }
    out
}

fn module(out: &mut String, m: &ModuleDecl) {
    write!(out, "module {}", m.name).unwrap();
    match &m.header {
        PortHeader::None => {}
        PortHeader::Names(names) => write!(out, "({})", names.join(", ")).unwrap(),
        PortHeader::Ansi(ports) => {
            out.push_str("(\n");
            for (i, p) in ports.iter().enumerate() {
                out.push_str("    ");
                out.push_str(p.direction.keyword());
                type_prefix(out, p.kind, p.signed, p.range.as_ref());
                write!(out, " {}", p.name).unwrap();
                if i + 1 < ports.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push(')');
        }
    }
    out.push_str(";\n");
    for item in &m.items {
        module_item(out, item);
    }
    out.push_str("endmodule\n");
}

fn type_prefix(out: &mut String, kind: Option<NetKind>, signed: bool, range: Option<&Range>) {
    if let Some(k) = kind {
        write!(out, " {}", k.keyword()).unwrap();
    }
    if signed {
        out.push_str(" signed");
    }
    if let Some(r) = range {
        write!(out, " {}", range_text(r)).unwrap();
    }
}

fn range_text(r: &Range) -> String {
    format!("[{}:{}]", expr(&r.msb), expr(&r.lsb))
}

fn module_item(out: &mut String, item: &Item) {
    match item {
        Item::PortDecl(pd) => {
            out.push_str("    ");
            out.push_str(pd.direction.keyword());
            type_prefix(out, pd.kind, pd.signed, pd.range.as_ref());
            writeln!(out, " {};", pd.names.join(", ")).unwrap();
        }
        Item::Decl(d) => {
            out.push_str("    ");
            out.push_str(match d.kind {
                DeclKind::Net(k) => k.keyword(),
                DeclKind::Parameter => "parameter",
                DeclKind::Localparam => "localparam",
            });
            if d.signed {
                out.push_str(" signed");
            }
            if let Some(r) = &d.range {
                write!(out, " {}", range_text(r)).unwrap();
            }
            let names: Vec<String> = d
                .names
                .iter()
                .map(|n| {
                    let mut s = n.name.clone();
                    if let Some(a) = &n.array {
                        write!(s, " {}", range_text(a)).unwrap();
                    }
                    if let Some(init) = &n.init {
                        write!(s, " = {}", expr(init)).unwrap();
                    }
                    s
                })
                .collect();
            writeln!(out, " {};", names.join(", ")).unwrap();
        }
        Item::ContinuousAssign { lhs, rhs, .. } => {
            writeln!(out, "    assign {} = {};", expr(lhs), expr(rhs)).unwrap();
        }
        Item::Always {
            kind,
            sensitivity,
            body,
            ..
        } => {
            write!(out, "    {}", kind.keyword()).unwrap();
            match sensitivity {
                Sensitivity::Implicit => {}
                Sensitivity::Star => out.push_str(" @(*)"),
                Sensitivity::List(list) => {
                    let items: Vec<String> = list
                        .iter()
                        .map(|s| match s.edge {
                            Some(Edge::Posedge) => format!("posedge {}", expr(&s.signal)),
                            Some(Edge::Negedge) => format!("negedge {}", expr(&s.signal)),
                            None => expr(&s.signal),
                        })
                        .collect();
                    write!(out, " @({})", items.join(" or ")).unwrap();
                }
            }
            out.push(' ');
            stmt(out, body, 1);
        }
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

/// Writes a statement starting at the current column; ends with a newline.
fn stmt(out: &mut String, s: &Stmt, level: usize) {
    match s {
        Stmt::Null { .. } => out.push_str(";\n"),
        Stmt::Assign {
            lhs, rhs, blocking, ..
        } => {
            let op = if *blocking { "=" } else { "<=" };
            writeln!(out, "{} {} {};", expr(lhs), op, expr(rhs)).unwrap();
        }
        Stmt::Block { label, stmts, .. } => {
            out.push_str("begin");
            if let Some(l) = label {
                write!(out, " : {l}").unwrap();
            }
            out.push('\n');
            for inner in stmts {
                indent(out, level + 1);
                stmt(out, inner, level + 1);
            }
            indent(out, level);
            out.push_str("end\n");
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            write!(out, "if ({}) ", expr(cond)).unwrap();
            wrapped(out, then_branch, level);
            if let Some(e) = else_branch {
                indent(out, level);
                out.push_str("else ");
                wrapped(out, e, level);
            }
        }
        Stmt::Case {
            kind,
            subject,
            arms,
            default,
            ..
        } => {
            writeln!(out, "{} ({})", kind.keyword(), expr(subject)).unwrap();
            for arm in arms {
                indent(out, level + 1);
                let labels: Vec<String> = arm.labels.iter().map(expr).collect();
                write!(out, "{}: ", labels.join(", ")).unwrap();
                wrapped(out, &arm.body, level + 1);
            }
            if let Some(d) = default {
                indent(out, level + 1);
                out.push_str("default: ");
                wrapped(out, d, level + 1);
            }
            indent(out, level);
            out.push_str("endcase\n");
        }
    }
}

/// Non-block branch bodies are wrapped in `begin`/`end`. The parser collapses
/// unlabeled single-statement blocks, so the wrapper does not survive a
/// re-parse.
fn wrapped(out: &mut String, s: &Stmt, level: usize) {
    if let Stmt::Block { .. } = s {
        stmt(out, s, level);
        return;
    }
    out.push_str("begin\n");
    indent(out, level + 1);
    stmt(out, s, level + 1);
    indent(out, level);
    out.push_str("end\n");
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Ident(name) => name.clone(),
        Expr::Literal(l) => l.to_string(),
        Expr::Unary(op, inner) => format!("{}{}", op.symbol(), operand(inner)),
        Expr::Binary(op, a, b) => format!("{} {} {}", operand(a), op.symbol(), operand(b)),
        Expr::Ternary(c, a, b) => format!("{} ? {} : {}", operand(c), operand(a), operand(b)),
        Expr::Index(base, i) => format!("{}[{}]", expr(base), expr(i)),
        Expr::Slice(base, m, l) => format!("{}[{}:{}]", expr(base), expr(m), expr(l)),
        Expr::Concat(parts) => {
            let inner: Vec<String> = parts.iter().map(expr).collect();
            format!("{{{}}}", inner.join(", "))
        }
        Expr::Replicate(n, parts) => {
            let inner: Vec<String> = parts.iter().map(expr).collect();
            format!("{{{}{{{}}}}}", operand(n), inner.join(", "))
        }
    }
}

/// Sub-expressions that are themselves operators get parentheses.
fn operand(e: &Expr) -> String {
    match e {
        Expr::Unary(..) | Expr::Binary(..) | Expr::Ternary(..) => format!("({})", expr(e)),
        _ => expr(e),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    #[test]
    fn minimal_module_round_trips() {
        let ast =
            parse("module m(input a, output reg b); always @(posedge a) b <= 1'b0; endmodule")
                .unwrap();
        let text = serialize(&ast);
        assert_eq!(parse(&text).unwrap(), ast);
        assert!(text.contains("always @(posedge a) b <= 1'b0;"));
    }

    #[test]
    fn empty_ast_is_empty_text() {
        assert_eq!(serialize(&RtlAst::default()), "");
    }

    #[test]
    fn nested_if_else_keeps_association() {
        // The else belongs to the inner if.
        let src = "module m(input a, input b, output reg q);\nalways @(*) if (a) if (b) q = 1'b1; else q = 1'b0;\nendmodule";
        let ast = parse(src).unwrap();
        let text = serialize(&ast);
        let again = parse(&text).unwrap();
        assert_eq!(again, ast);
        let Item::Always { body, .. } = &again.modules[0].items[0] else {
            panic!()
        };
        let Stmt::If {
            then_branch,
            else_branch,
            ..
        } = body
        else {
            panic!()
        };
        assert!(else_branch.is_none());
        assert!(matches!(**then_branch, Stmt::If { else_branch: Some(_), .. }));
    }

    #[test]
    fn unary_chains_do_not_fuse() {
        let ast = parse("module m(input a, output b); assign b = - -a; endmodule").unwrap();
        let text = serialize(&ast);
        assert!(text.contains("-(-a)"), "{text}");
        assert_eq!(parse(&text).unwrap(), ast);
    }
}
