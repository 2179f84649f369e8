//! Syntax tree for the supported Verilog subset.
//!
//! Nodes that carry a [`Span`] keep it for diagnostics only. Spans never take
//! part in equality, so a tree re-parsed from its serialized text compares
//! equal to the original.

use std::fmt;

/// Start position of a node in its source text (1-based line and column).
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RtlAst {
    pub modules: Vec<ModuleDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub header: PortHeader,
    pub items: Vec<Item>,
    pub span: Span,
}

/// Port list in the module header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PortHeader {
    /// `module m;`
    None,
    /// `module m(a, b);` with directions declared in the body.
    Names(Vec<String>),
    /// `module m(input a, output reg [3:0] b);`
    Ansi(Vec<Port>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
    Inout,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Inout => "inout",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetKind {
    Wire,
    Reg,
    Logic,
}

impl NetKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
            NetKind::Logic => "logic",
        }
    }
}

/// `[msb:lsb]`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

impl Range {
    /// Width in bits when both bounds are plain numbers.
    pub fn width(&self) -> Option<u64> {
        let msb = self.msb.const_value()?;
        let lsb = self.lsb.const_value()?;
        Some(msb.abs_diff(lsb) as u64 + 1)
    }
}

/// One ANSI-style header port.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub kind: Option<NetKind>,
    pub signed: bool,
    pub range: Option<Range>,
}

impl Port {
    pub fn width(&self) -> Option<u64> {
        match &self.range {
            None => Some(1),
            Some(r) => r.width(),
        }
    }
}

/// Body-level port declaration for non-ANSI modules (`input [3:0] a, b;`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDecl {
    pub direction: Direction,
    pub kind: Option<NetKind>,
    pub signed: bool,
    pub range: Option<Range>,
    pub names: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    Net(NetKind),
    Parameter,
    Localparam,
}

/// A declared name with optional unpacked dimension and initializer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub array: Option<Range>,
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub kind: DeclKind,
    pub signed: bool,
    pub range: Option<Range>,
    pub names: Vec<Declarator>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    PortDecl(PortDecl),
    Decl(Decl),
    ContinuousAssign {
        lhs: Expr,
        rhs: Expr,
        span: Span,
    },
    Always {
        kind: AlwaysKind,
        sensitivity: Sensitivity,
        body: Stmt,
        span: Span,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlwaysKind {
    Always,
    AlwaysComb,
    AlwaysFf,
    AlwaysLatch,
}

impl AlwaysKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AlwaysKind::Always => "always",
            AlwaysKind::AlwaysComb => "always_comb",
            AlwaysKind::AlwaysFf => "always_ff",
            AlwaysKind::AlwaysLatch => "always_latch",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensItem {
    pub edge: Option<Edge>,
    pub signal: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sensitivity {
    /// No event control (only valid for `always_comb` / `always_latch`).
    Implicit,
    /// `@*` or `@(*)`
    Star,
    List(Vec<SensItem>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    Case,
    Casez,
    Casex,
}

impl CaseKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CaseKind::Case => "case",
            CaseKind::Casez => "casez",
            CaseKind::Casex => "casex",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Block {
        label: Option<String>,
        stmts: Vec<Stmt>,
        span: Span,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    Case {
        kind: CaseKind,
        subject: Expr,
        arms: Vec<CaseArm>,
        default: Option<Box<Stmt>>,
        span: Span,
    },
    Assign {
        lhs: Expr,
        rhs: Expr,
        blocking: bool,
        span: Span,
    },
    /// A lone `;`.
    Null { span: Span },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Block { span, .. }
            | Stmt::If { span, .. }
            | Stmt::Case { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::Null { span } => *span,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    Binary,
    Octal,
    Decimal,
    Hex,
}

impl Base {
    pub fn radix(self) -> u32 {
        match self {
            Base::Binary => 2,
            Base::Octal => 8,
            Base::Decimal => 10,
            Base::Hex => 16,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Base::Binary => 'b',
            Base::Octal => 'o',
            Base::Decimal => 'd',
            Base::Hex => 'h',
        }
    }

    pub fn from_letter(c: char) -> Option<Base> {
        match c.to_ascii_lowercase() {
            'b' => Some(Base::Binary),
            'o' => Some(Base::Octal),
            'd' => Some(Base::Decimal),
            'h' => Some(Base::Hex),
            _ => None,
        }
    }
}

/// Numeric literal. `digits` is kept lowercase with underscores removed.
///
/// Plain decimal numbers such as `42` have neither width nor base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub width: Option<u32>,
    pub signed: bool,
    pub base: Option<Base>,
    pub digits: String,
}

impl Literal {
    pub fn decimal(value: u64) -> Self {
        Literal {
            width: None,
            signed: false,
            base: None,
            digits: value.to_string(),
        }
    }

    pub fn sized(width: u32, base: Base, digits: impl Into<String>) -> Self {
        Literal {
            width: Some(width),
            signed: false,
            base: Some(base),
            digits: digits.into(),
        }
    }

    /// Numeric value, or `None` if the digits hold x/z/? or overflow.
    pub fn value(&self) -> Option<u128> {
        let radix = self.base.map_or(10, Base::radix);
        u128::from_str_radix(&self.digits, radix).ok()
    }

    /// Literals denote the same constant (width is ignored).
    pub fn same_value(&self, other: &Literal) -> bool {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => a == b,
            (None, None) => self.base == other.base && self.digits == other.digits,
            _ => false,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.width, self.base) {
            (None, None) => write!(f, "{}", self.digits),
            (width, base) => {
                if let Some(w) = width {
                    write!(f, "{w}")?;
                }
                let s = if self.signed { "s" } else { "" };
                let b = base.unwrap_or(Base::Decimal).letter();
                write!(f, "'{s}{b}{}", self.digits)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    BitNot,
    Neg,
    Plus,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
            UnaryOp::RedNand => "~&",
            UnaryOp::RedNor => "~|",
            UnaryOp::RedXnor => "~^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Pow,
    Mul,
    Div,
    Mod,
    Add,
    Sub,
    Shl,
    Shr,
    AShl,
    AShr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    BitAnd,
    BitXor,
    BitXnor,
    BitOr,
    LogAnd,
    LogOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Pow => "**",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            AShl => "<<<",
            AShr => ">>>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            CaseEq => "===",
            CaseNe => "!==",
            BitAnd => "&",
            BitXor => "^",
            BitXnor => "~^",
            BitOr => "|",
            LogAnd => "&&",
            LogOr => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Pow => 12,
            Mul | Div | Mod => 11,
            Add | Sub => 10,
            Shl | Shr | AShl | AShr => 9,
            Lt | Le | Gt | Ge => 8,
            Eq | Ne | CaseEq | CaseNe => 7,
            BitAnd => 6,
            BitXor | BitXnor => 5,
            BitOr => 4,
            LogAnd => 3,
            LogOr => 2,
        }
    }

    pub const ALL: [BinaryOp; 24] = {
        use BinaryOp::*;
        [
            Pow, Mul, Div, Mod, Add, Sub, Shl, Shr, AShl, AShr, Lt, Le, Gt, Ge, Eq, Ne, CaseEq,
            CaseNe, BitAnd, BitXor, BitXnor, BitOr, LogAnd, LogOr,
        ]
    };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Ident(String),
    Literal(Literal),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `a[i]`
    Index(Box<Expr>, Box<Expr>),
    /// `a[msb:lsb]`
    Slice(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    /// `{n{a, b}}`
    Replicate(Box<Expr>, Vec<Expr>),
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn const_value(&self) -> Option<u128> {
        match self {
            Expr::Literal(l) => l.value(),
            _ => None,
        }
    }

    /// True if `name` occurs anywhere in the expression.
    pub fn references(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_idents(&mut |id| found |= id == name);
        found
    }

    pub fn visit_idents<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Ident(name) => f(name),
            Expr::Literal(_) => {}
            Expr::Unary(_, e) => e.visit_idents(f),
            Expr::Binary(_, a, b) | Expr::Index(a, b) => {
                a.visit_idents(f);
                b.visit_idents(f);
            }
            Expr::Ternary(a, b, c) | Expr::Slice(a, b, c) => {
                a.visit_idents(f);
                b.visit_idents(f);
                c.visit_idents(f);
            }
            Expr::Concat(parts) => parts.iter().for_each(|p| p.visit_idents(f)),
            Expr::Replicate(n, parts) => {
                n.visit_idents(f);
                parts.iter().for_each(|p| p.visit_idents(f));
            }
        }
    }

    /// Signals written when this expression is an assignment target.
    pub fn target_names(&self) -> Vec<&str> {
        match self {
            Expr::Ident(name) => vec![name.as_str()],
            Expr::Index(base, _) | Expr::Slice(base, _, _) => base.target_names(),
            Expr::Concat(parts) => parts.iter().flat_map(Expr::target_names).collect(),
            _ => Vec::new(),
        }
    }
}

impl ModuleDecl {
    /// All ports, from the header (ANSI) or from body declarations.
    pub fn ports(&self) -> Vec<(String, Direction, Option<u64>)> {
        match &self.header {
            PortHeader::Ansi(ports) => ports
                .iter()
                .map(|p| (p.name.clone(), p.direction, p.width()))
                .collect(),
            _ => self
                .items
                .iter()
                .filter_map(|item| match item {
                    Item::PortDecl(pd) => Some(pd),
                    _ => None,
                })
                .flat_map(|pd| {
                    let width = pd.range.as_ref().map_or(Some(1), Range::width);
                    pd.names.iter().map(move |n| (n.clone(), pd.direction, width))
                })
                .collect(),
        }
    }

    /// Names introduced by ports and declarations.
    pub fn declared_names(&self) -> Vec<&str> {
        let mut names = Vec::new();
        match &self.header {
            PortHeader::Ansi(ports) => names.extend(ports.iter().map(|p| p.name.as_str())),
            PortHeader::Names(list) => names.extend(list.iter().map(String::as_str)),
            PortHeader::None => {}
        }
        for item in &self.items {
            match item {
                Item::PortDecl(pd) => names.extend(pd.names.iter().map(String::as_str)),
                Item::Decl(d) => names.extend(d.names.iter().map(|n| n.name.as_str())),
                _ => {}
            }
        }
        names
    }

    pub fn declares(&self, name: &str) -> bool {
        self.declared_names().contains(&name)
    }
}

/// Identifier used in an expression but never declared in its module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndeclaredIdent {
    pub module: String,
    pub name: String,
    pub span: Span,
}

impl RtlAst {
    /// Undeclared identifiers. Snippets are often fragmentary, so these are
    /// warnings rather than parse errors.
    pub fn undeclared_identifiers(&self) -> Vec<UndeclaredIdent> {
        let mut out = Vec::new();
        for module in &self.modules {
            let declared = module.declared_names();
            let mut seen = std::collections::HashSet::new();
            let mut check = |e: &Expr, span: Span| {
                e.visit_idents(&mut |id| {
                    if !declared.contains(&id) && seen.insert(id.to_string()) {
                        out.push(UndeclaredIdent {
                            module: module.name.clone(),
                            name: id.to_string(),
                            span,
                        });
                    }
                });
            };
            for item in &module.items {
                match item {
                    Item::ContinuousAssign { lhs, rhs, span } => {
                        check(lhs, *span);
                        check(rhs, *span);
                    }
                    Item::Always {
                        sensitivity, body, span, ..
                    } => {
                        if let Sensitivity::List(list) = sensitivity {
                            list.iter().for_each(|s| check(&s.signal, *span));
                        }
                        walk_stmt_exprs(body, &mut check);
                    }
                    Item::Decl(d) => {
                        for n in &d.names {
                            if let Some(init) = &n.init {
                                check(init, d.span);
                            }
                        }
                    }
                    Item::PortDecl(_) => {}
                }
            }
        }
        out
    }
}

fn walk_stmt_exprs(stmt: &Stmt, f: &mut impl FnMut(&Expr, Span)) {
    match stmt {
        Stmt::Block { stmts, .. } => stmts.iter().for_each(|s| walk_stmt_exprs(s, f)),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            span,
        } => {
            f(cond, *span);
            walk_stmt_exprs(then_branch, f);
            if let Some(e) = else_branch {
                walk_stmt_exprs(e, f);
            }
        }
        Stmt::Case {
            subject,
            arms,
            default,
            span,
            ..
        } => {
            f(subject, *span);
            for arm in arms {
                arm.labels.iter().for_each(|l| f(l, *span));
                walk_stmt_exprs(&arm.body, f);
            }
            if let Some(d) = default {
                walk_stmt_exprs(d, f);
            }
        }
        Stmt::Assign { lhs, rhs, span, .. } => {
            f(lhs, *span);
            f(rhs, *span);
        }
        Stmt::Null { .. } => {}
    }
}
