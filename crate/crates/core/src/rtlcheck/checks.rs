//! Structural check semantics.
//!
//! A statement is *guarded* by a condition when it sits in the taken branch of
//! that condition: the then-branch of an `if`, the true arm of a `?:`, or a
//! case arm (guarded by the subject and the arm's labels). Else branches do
//! not count as guarded by the `if` condition. Matching is textual: a guard
//! signal guards an assignment if its name occurs in any enclosing condition.

use super::ast::*;
use super::parser::parse_expr;
use super::{CheckOutcome, CheckRule, SecurityCheck};

/// One assignment found in the design, with its enclosing conditions.
#[derive(Debug)]
struct Site<'a> {
    targets: Vec<&'a str>,
    rhs: &'a Expr,
    guards: Vec<&'a Expr>,
    span: Span,
}

fn collect_sites(ast: &RtlAst) -> Vec<Site<'_>> {
    let mut sites = Vec::new();
    for module in &ast.modules {
        for item in &module.items {
            match item {
                Item::ContinuousAssign { lhs, rhs, span } => sites.push(Site {
                    targets: lhs.target_names(),
                    rhs,
                    guards: Vec::new(),
                    span: *span,
                }),
                Item::Always { body, .. } => walk(body, &mut Vec::new(), &mut sites),
                Item::Decl(d) => {
                    for n in &d.names {
                        if let (DeclKind::Net(_), Some(init)) = (d.kind, &n.init) {
                            sites.push(Site {
                                targets: vec![n.name.as_str()],
                                rhs: init,
                                guards: Vec::new(),
                                span: d.span,
                            });
                        }
                    }
                }
                Item::PortDecl(_) => {}
            }
        }
    }
    sites
}

fn walk<'a>(stmt: &'a Stmt, guards: &mut Vec<&'a Expr>, sites: &mut Vec<Site<'a>>) {
    match stmt {
        Stmt::Block { stmts, .. } => stmts.iter().for_each(|s| walk(s, guards, sites)),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            guards.push(cond);
            walk(then_branch, guards, sites);
            guards.pop();
            if let Some(e) = else_branch {
                walk(e, guards, sites);
            }
        }
        Stmt::Case {
            subject,
            arms,
            default,
            ..
        } => {
            for arm in arms {
                let depth = guards.len();
                guards.push(subject);
                guards.extend(arm.labels.iter());
                walk(&arm.body, guards, sites);
                guards.truncate(depth);
            }
            if let Some(d) = default {
                guards.push(subject);
                walk(d, guards, sites);
                guards.pop();
            }
        }
        Stmt::Assign { lhs, rhs, span, .. } => sites.push(Site {
            targets: lhs.target_names(),
            rhs,
            guards: guards.clone(),
            span: *span,
        }),
        Stmt::Null { .. } => {}
    }
}

/// Literal values the right-hand side can produce, each with the `?:`
/// conditions under which it is selected.
fn literal_outcomes<'a>(rhs: &'a Expr, conds: &mut Vec<&'a Expr>, out: &mut Vec<(&'a Literal, Vec<&'a Expr>)>) {
    match rhs {
        Expr::Literal(l) => out.push((l, conds.clone())),
        Expr::Ternary(c, a, b) => {
            conds.push(c);
            literal_outcomes(a, conds, out);
            conds.pop();
            literal_outcomes(b, conds, out);
        }
        _ => {}
    }
}

/// Conditions of the `?:` chain along true arms at the top of `rhs`.
fn ternary_guards(rhs: &Expr) -> Vec<&Expr> {
    let mut out = Vec::new();
    let mut e = rhs;
    while let Expr::Ternary(c, a, _) = e {
        out.push(c.as_ref());
        e = a;
    }
    out
}

fn mentions_any(guards: &[&Expr], names: &[String]) -> bool {
    guards
        .iter()
        .any(|g| names.iter().any(|n| g.references(n)))
}

pub fn evaluate_ast(ast: &RtlAst, check: &SecurityCheck) -> CheckOutcome {
    match &check.rule {
        CheckRule::ForbidAssignment {
            signal,
            literal,
            allowed_guard_signals,
        } => {
            let forbidden = match parse_expr(literal) {
                Ok(Expr::Literal(l)) => l,
                _ => {
                    return CheckOutcome::Indeterminate(format!("`{literal}` is not a literal"));
                }
            };
            let sites = collect_sites(ast);
            let mut bad = Vec::new();
            for site in sites.iter().filter(|s| s.targets.contains(&signal.as_str())) {
                let mut outcomes = Vec::new();
                literal_outcomes(site.rhs, &mut Vec::new(), &mut outcomes);
                for (lit, extra) in outcomes {
                    if !lit.same_value(&forbidden) {
                        continue;
                    }
                    let mut guards = site.guards.clone();
                    guards.extend(extra);
                    if !mentions_any(&guards, allowed_guard_signals) {
                        bad.push(site.span);
                    }
                }
            }
            if bad.is_empty() {
                CheckOutcome::Pass
            } else {
                let allowed = if allowed_guard_signals.is_empty() {
                    "never allowed".to_string()
                } else {
                    format!("allowed only under {}", allowed_guard_signals.join("/"))
                };
                CheckOutcome::Fail(format!(
                    "`{signal}` is assigned {literal} at {} ({allowed})",
                    join_spans(&bad)
                ))
            }
        }
        CheckRule::RequireGuard { signal, guard } => {
            let sites = collect_sites(ast);
            let relevant: Vec<&Site<'_>> = sites
                .iter()
                .filter(|s| s.targets.contains(&signal.as_str()))
                .collect();
            if relevant.is_empty() {
                return CheckOutcome::Fail(format!("`{signal}` is never assigned"));
            }
            let guard = std::slice::from_ref(guard);
            let bad: Vec<Span> = relevant
                .iter()
                .filter(|s| {
                    let mut guards = s.guards.clone();
                    guards.extend(ternary_guards(s.rhs));
                    !mentions_any(&guards, guard)
                })
                .map(|s| s.span)
                .collect();
            if bad.is_empty() {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail(format!(
                    "`{signal}` assigned without a `{}` guard at {}",
                    guard[0],
                    join_spans(&bad)
                ))
            }
        }
        CheckRule::RequireSignal { signal } => {
            if ast.modules.iter().any(|m| m.declares(signal)) {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail(format!("`{signal}` is not declared"))
            }
        }
        CheckRule::ExternalCommand { .. } => {
            CheckOutcome::Indeterminate("external command requires source text".to_string())
        }
    }
}

fn join_spans(spans: &[Span]) -> String {
    spans
        .iter()
        .map(|s| format!("line {}", s.line))
        .collect::<Vec<_>>()
        .join(", ")
}
