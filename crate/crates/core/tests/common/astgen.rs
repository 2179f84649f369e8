//! Random syntax trees restricted to what the printer and parser agree on.
//!
//! Unlabeled blocks never hold exactly one statement (the parser collapses
//! those) and every literal with a width also has a base.

use proptest::prelude::*;
use selfhwdebug::rtlcheck::ast::*;

pub fn ident() -> impl Strategy<Value = String> + Clone {
    "[a-z][a-z0-9]{0,4}".prop_map(|s| format!("n_{s}"))
}

fn digits(base: Base) -> BoxedStrategy<String> {
    match base {
        Base::Binary => "[01xz]{1,8}".boxed(),
        Base::Octal => "[0-7]{1,4}".boxed(),
        Base::Decimal => "[1-9][0-9]{0,3}".boxed(),
        Base::Hex => "[0-9a-fxz]{1,6}".boxed(),
    }
}

pub fn literal() -> impl Strategy<Value = Literal> {
    let plain = (0u32..100_000).prop_map(|v| Literal::decimal(v as u64));
    let base = prop_oneof![Just(Base::Binary), Just(Base::Octal), Just(Base::Decimal), Just(Base::Hex)];
    let based = (base, proptest::option::of(1u32..=64), any::<bool>()).prop_flat_map(|(b, width, signed)| {
        digits(b).prop_map(move |digits| Literal {
            width,
            signed,
            base: Some(b),
            digits,
        })
    });
    prop_oneof![plain, based]
}

fn unary_op() -> impl Strategy<Value = UnaryOp> {
    use UnaryOp::*;
    proptest::sample::select(vec![Not, BitNot, Neg, Plus, RedAnd, RedOr, RedXor, RedNand, RedNor, RedXnor])
}

fn binary_op() -> impl Strategy<Value = BinaryOp> {
    proptest::sample::select(BinaryOp::ALL.to_vec())
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![ident().prop_map(Expr::Ident), literal().prop_map(Expr::Literal)];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let base = ident().prop_map(Expr::Ident);
        let count = prop_oneof![
            ident().prop_map(Expr::Ident),
            (1u64..9).prop_map(|n| Expr::Literal(Literal::decimal(n)))
        ];
        prop_oneof![
            (unary_op(), inner.clone()).prop_map(|(op, e)| Expr::Unary(op, Box::new(e))),
            (binary_op(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| Expr::Ternary(Box::new(c), Box::new(a), Box::new(b))),
            (base.clone(), inner.clone()).prop_map(|(b, i)| Expr::Index(Box::new(b), Box::new(i))),
            (base, inner.clone(), inner.clone())
                .prop_map(|(b, m, l)| Expr::Slice(Box::new(b), Box::new(m), Box::new(l))),
            proptest::collection::vec(inner.clone(), 1..4).prop_map(Expr::Concat),
            (count, proptest::collection::vec(inner, 1..3))
                .prop_map(|(n, parts)| Expr::Replicate(Box::new(n), parts)),
        ]
    })
}

fn small_expr() -> impl Strategy<Value = Expr> + Clone {
    prop_oneof![
        ident().prop_map(Expr::Ident),
        (0u64..64).prop_map(|n| Expr::Literal(Literal::decimal(n)))
    ]
}

pub fn lvalue() -> impl Strategy<Value = Expr> {
    let single = prop_oneof![
        ident().prop_map(Expr::Ident),
        (ident(), small_expr()).prop_map(|(b, i)| Expr::Index(Box::new(Expr::Ident(b)), Box::new(i))),
        (ident(), small_expr(), small_expr())
            .prop_map(|(b, m, l)| Expr::Slice(Box::new(Expr::Ident(b)), Box::new(m), Box::new(l))),
    ];
    prop_oneof![
        3 => single.clone(),
        1 => proptest::collection::vec(single, 1..4).prop_map(Expr::Concat),
    ]
}

fn range() -> impl Strategy<Value = Range> {
    (small_expr(), small_expr()).prop_map(|(msb, lsb)| Range { msb, lsb })
}

fn net_kind() -> impl Strategy<Value = NetKind> {
    prop_oneof![Just(NetKind::Wire), Just(NetKind::Reg), Just(NetKind::Logic)]
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Input), Just(Direction::Output), Just(Direction::Inout)]
}

fn assign() -> impl Strategy<Value = Stmt> {
    (lvalue(), expr(), any::<bool>()).prop_map(|(lhs, rhs, blocking)| Stmt::Assign {
        lhs,
        rhs,
        blocking,
        span: Span::default(),
    })
}

fn block_stmts(inner: BoxedStrategy<Stmt>) -> impl Strategy<Value = Stmt> {
    let labeled = (ident(), proptest::collection::vec(inner.clone(), 0..4)).prop_map(|(l, stmts)| Stmt::Block {
        label: Some(l),
        stmts,
        span: Span::default(),
    });
    let unlabeled = proptest::collection::vec(inner, 0..4)
        .prop_filter("single-statement blocks collapse", |v| v.len() != 1)
        .prop_map(|stmts| Stmt::Block {
            label: None,
            stmts,
            span: Span::default(),
        });
    prop_oneof![labeled, unlabeled]
}

pub fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![
        6 => assign(),
        1 => Just(Stmt::Null { span: Span::default() }),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        let case_kind = prop_oneof![Just(CaseKind::Case), Just(CaseKind::Casez), Just(CaseKind::Casex)];
        let arm = (proptest::collection::vec(expr(), 1..3), inner.clone())
            .prop_map(|(labels, body)| CaseArm { labels, body });
        prop_oneof![
            block_stmts(inner.clone()),
            (expr(), inner.clone(), proptest::option::of(inner.clone())).prop_map(|(cond, t, e)| Stmt::If {
                cond,
                then_branch: Box::new(t),
                else_branch: e.map(Box::new),
                span: Span::default(),
            }),
            (
                case_kind,
                expr(),
                proptest::collection::vec(arm, 1..4),
                proptest::option::of(inner)
            )
                .prop_map(|(kind, subject, arms, default)| Stmt::Case {
                    kind,
                    subject,
                    arms,
                    default: default.map(Box::new),
                    span: Span::default(),
                }),
        ]
    })
}

fn sensitivity_for(kind: AlwaysKind) -> BoxedStrategy<Sensitivity> {
    match kind {
        AlwaysKind::AlwaysComb | AlwaysKind::AlwaysLatch => Just(Sensitivity::Implicit).boxed(),
        _ => {
            let edge = proptest::option::of(prop_oneof![Just(Edge::Posedge), Just(Edge::Negedge)]);
            let item = (edge, ident()).prop_map(|(edge, s)| SensItem {
                edge,
                signal: Expr::Ident(s),
            });
            prop_oneof![
                Just(Sensitivity::Star),
                proptest::collection::vec(item, 1..3).prop_map(Sensitivity::List),
            ]
            .boxed()
        }
    }
}

fn always() -> impl Strategy<Value = Item> {
    let kind = prop_oneof![
        Just(AlwaysKind::Always),
        Just(AlwaysKind::AlwaysComb),
        Just(AlwaysKind::AlwaysFf),
        Just(AlwaysKind::AlwaysLatch)
    ];
    kind.prop_flat_map(|k| {
        (sensitivity_for(k), stmt()).prop_map(move |(sensitivity, body)| Item::Always {
            kind: k,
            sensitivity,
            body,
            span: Span::default(),
        })
    })
}

fn decl() -> impl Strategy<Value = Item> {
    let net = (net_kind(), any::<bool>(), proptest::option::of(range())).prop_flat_map(|(k, signed, packed)| {
        let declarator = (ident(), proptest::option::of(range()), proptest::option::of(expr()))
            .prop_map(|(name, array, init)| Declarator { name, array, init });
        proptest::collection::vec(declarator, 1..3).prop_map(move |names| {
            Item::Decl(Decl {
                kind: DeclKind::Net(k),
                signed,
                range: packed.clone(),
                names,
                span: Span::default(),
            })
        })
    });
    let param_kind = prop_oneof![Just(DeclKind::Parameter), Just(DeclKind::Localparam)];
    let param = (
        param_kind,
        any::<bool>(),
        proptest::option::of(range()),
        proptest::collection::vec((ident(), expr()), 1..3),
    )
        .prop_map(|(kind, signed, range, names)| {
            Item::Decl(Decl {
                kind,
                signed,
                range,
                names: names
                    .into_iter()
                    .map(|(name, init)| Declarator {
                        name,
                        array: None,
                        init: Some(init),
                    })
                    .collect(),
                span: Span::default(),
            })
        });
    prop_oneof![net, param]
}

fn port_decl() -> impl Strategy<Value = Item> {
    (
        direction(),
        proptest::option::of(net_kind()),
        any::<bool>(),
        proptest::option::of(range()),
        proptest::collection::vec(ident(), 1..3),
    )
        .prop_map(|(direction, kind, signed, range, names)| {
            Item::PortDecl(PortDecl {
                direction,
                kind,
                signed,
                range,
                names,
                span: Span::default(),
            })
        })
}

fn body_item() -> impl Strategy<Value = Item> {
    prop_oneof![
        2 => decl(),
        2 => (lvalue(), expr()).prop_map(|(lhs, rhs)| Item::ContinuousAssign { lhs, rhs, span: Span::default() }),
        3 => always(),
    ]
}

pub fn module() -> impl Strategy<Value = ModuleDecl> {
    let port = (
        ident(),
        direction(),
        proptest::option::of(net_kind()),
        any::<bool>(),
        proptest::option::of(range()),
    )
        .prop_map(|(name, direction, kind, signed, range)| Port {
            name,
            direction,
            kind,
            signed,
            range,
        });
    let ansi = (
        proptest::collection::vec(port, 1..4),
        proptest::collection::vec(body_item(), 0..4),
    )
        .prop_map(|(ports, items)| (PortHeader::Ansi(ports), items));
    let names = (
        proptest::collection::vec(ident(), 0..4),
        proptest::collection::vec(port_decl(), 0..3),
        proptest::collection::vec(body_item(), 0..4),
    )
        .prop_map(|(names, mut ports, items)| {
            ports.extend(items);
            (PortHeader::Names(names), ports)
        });
    let none = proptest::collection::vec(body_item(), 0..4).prop_map(|items| (PortHeader::None, items));
    (ident(), prop_oneof![ansi, names, none]).prop_map(|(name, (header, items))| ModuleDecl {
        name,
        header,
        items,
        span: Span::default(),
    })
}

pub fn ast() -> impl Strategy<Value = RtlAst> {
    proptest::collection::vec(module(), 1..3).prop_map(|modules| RtlAst { modules })
}
