//! Recursive-descent parser with precedence climbing for expressions.

use super::ast::*;
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::RtlError;

pub fn parse(source: &str) -> Result<RtlAst, RtlError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut modules = Vec::new();
    while !p.at_eof() {
        modules.push(p.module()?);
    }
    if modules.is_empty() {
        return Err(p.expected("module"));
    }
    Ok(RtlAst { modules })
}

/// Parses a single expression (used for literal values in check files).
pub fn parse_expr(source: &str) -> Result<Expr, RtlError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.expected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_nth(&self, n: usize) -> &TokenKind {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), TokenKind::Eof)
    }

    fn advance(&mut self) -> TokenKind {
        let kind = self.tokens[self.pos].kind.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        kind
    }

    fn expected(&self, what: &str) -> RtlError {
        RtlError::Parse {
            position: self.span(),
            expected: what.to_string(),
            found: self.peek().describe(),
        }
    }

    fn unsupported(&self, construct: &str) -> RtlError {
        RtlError::Unsupported {
            position: self.span(),
            construct: construct.to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), TokenKind::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: Keyword) -> bool {
        matches!(self.peek(), TokenKind::Keyword(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), RtlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<(), RtlError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.expected(k.as_str()))
        }
    }

    fn ident(&mut self) -> Result<String, RtlError> {
        match self.peek() {
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.expected("identifier")),
        }
    }

    fn module(&mut self) -> Result<ModuleDecl, RtlError> {
        let span = self.span();
        self.expect_kw(Keyword::Module)?;
        let name = self.ident()?;
        if self.is_punct("#") {
            return Err(self.unsupported("module parameter port list"));
        }
        let header = if self.eat_punct("(") {
            self.port_header()?
        } else {
            PortHeader::None
        };
        self.expect_punct(";")?;
        let mut items = Vec::new();
        while !self.eat_kw(Keyword::Endmodule) {
            self.module_item(&mut items)?;
        }
        Ok(ModuleDecl {
            name,
            header,
            items,
            span,
        })
    }

    fn port_header(&mut self) -> Result<PortHeader, RtlError> {
        if self.eat_punct(")") {
            return Ok(PortHeader::Names(Vec::new()));
        }
        if matches!(self.peek(), TokenKind::Ident(_)) {
            let mut names = vec![self.ident()?];
            while self.eat_punct(",") {
                names.push(self.ident()?);
            }
            self.expect_punct(")")?;
            return Ok(PortHeader::Names(names));
        }
        let mut ports = Vec::new();
        let mut current: Option<(Direction, Option<NetKind>, bool, Option<Range>)> = None;
        loop {
            if let Some(direction) = self.direction() {
                let kind = self.net_kind();
                let signed = self.eat_kw(Keyword::Signed);
                let range = self.opt_range()?;
                current = Some((direction, kind, signed, range));
            } else if current.is_none() {
                return Err(self.expected("port direction"));
            }
            let (direction, kind, signed, range) = current.clone().expect("set above");
            let name = self.ident()?;
            ports.push(Port {
                name,
                direction,
                kind,
                signed,
                range,
            });
            if self.eat_punct(")") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok(PortHeader::Ansi(ports))
    }

    fn direction(&mut self) -> Option<Direction> {
        let d = match self.peek() {
            TokenKind::Keyword(Keyword::Input) => Direction::Input,
            TokenKind::Keyword(Keyword::Output) => Direction::Output,
            TokenKind::Keyword(Keyword::Inout) => Direction::Inout,
            _ => return None,
        };
        self.advance();
        Some(d)
    }

    fn net_kind(&mut self) -> Option<NetKind> {
        let k = match self.peek() {
            TokenKind::Keyword(Keyword::Wire) => NetKind::Wire,
            TokenKind::Keyword(Keyword::Reg) => NetKind::Reg,
            TokenKind::Keyword(Keyword::Logic) => NetKind::Logic,
            _ => return None,
        };
        self.advance();
        Some(k)
    }

    fn opt_range(&mut self) -> Result<Option<Range>, RtlError> {
        if !self.eat_punct("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect_punct(":")?;
        let lsb = self.expr()?;
        self.expect_punct("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn module_item(&mut self, items: &mut Vec<Item>) -> Result<(), RtlError> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Keyword(Keyword::Input | Keyword::Output | Keyword::Inout) => {
                let direction = self.direction().expect("matched");
                let kind = self.net_kind();
                let signed = self.eat_kw(Keyword::Signed);
                let range = self.opt_range()?;
                let mut names = vec![self.ident()?];
                while self.eat_punct(",") {
                    names.push(self.ident()?);
                }
                self.expect_punct(";")?;
                items.push(Item::PortDecl(PortDecl {
                    direction,
                    kind,
                    signed,
                    range,
                    names,
                    span,
                }));
            }
            TokenKind::Keyword(Keyword::Wire | Keyword::Reg | Keyword::Logic) => {
                let kind = DeclKind::Net(self.net_kind().expect("matched"));
                items.push(Item::Decl(self.decl_rest(kind, span)?));
            }
            TokenKind::Keyword(Keyword::Parameter) => {
                self.advance();
                items.push(Item::Decl(self.decl_rest(DeclKind::Parameter, span)?));
            }
            TokenKind::Keyword(Keyword::Localparam) => {
                self.advance();
                items.push(Item::Decl(self.decl_rest(DeclKind::Localparam, span)?));
            }
            TokenKind::Keyword(Keyword::Assign) => {
                self.advance();
                loop {
                    let span = self.span();
                    let lhs = self.lvalue()?;
                    self.expect_punct("=")?;
                    let rhs = self.expr()?;
                    items.push(Item::ContinuousAssign { lhs, rhs, span });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
            }
            TokenKind::Keyword(
                k @ (Keyword::Always | Keyword::AlwaysComb | Keyword::AlwaysFf | Keyword::AlwaysLatch),
            ) => {
                self.advance();
                let kind = match k {
                    Keyword::Always => AlwaysKind::Always,
                    Keyword::AlwaysComb => AlwaysKind::AlwaysComb,
                    Keyword::AlwaysFf => AlwaysKind::AlwaysFf,
                    _ => AlwaysKind::AlwaysLatch,
                };
                let sensitivity = self.sensitivity(kind)?;
                let body = self.stmt()?;
                items.push(Item::Always {
                    kind,
                    sensitivity,
                    body,
                    span,
                });
            }
            TokenKind::Keyword(
                k @ (Keyword::Initial
                | Keyword::Generate
                | Keyword::Function
                | Keyword::Task
                | Keyword::Integer
                | Keyword::Genvar
                | Keyword::For),
            ) => return Err(self.unsupported(k.as_str())),
            TokenKind::Ident(_) if matches!(self.peek_nth(1), TokenKind::Ident(_) | TokenKind::Punct("#")) => {
                return Err(self.unsupported("module instantiation"));
            }
            _ => return Err(self.expected("module item")),
        }
        Ok(())
    }

    fn decl_rest(&mut self, kind: DeclKind, span: Span) -> Result<Decl, RtlError> {
        let signed = self.eat_kw(Keyword::Signed);
        let range = self.opt_range()?;
        let mut names = Vec::new();
        loop {
            let name = self.ident()?;
            let array = self.opt_range()?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            if matches!(kind, DeclKind::Parameter | DeclKind::Localparam) && init.is_none() {
                return Err(self.expected("`=`"));
            }
            names.push(Declarator { name, array, init });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(Decl {
            kind,
            signed,
            range,
            names,
            span,
        })
    }

    fn sensitivity(&mut self, kind: AlwaysKind) -> Result<Sensitivity, RtlError> {
        if !self.eat_punct("@") {
            if matches!(kind, AlwaysKind::AlwaysComb | AlwaysKind::AlwaysLatch) {
                return Ok(Sensitivity::Implicit);
            }
            if self.is_punct("#") {
                return Err(self.unsupported("delay control"));
            }
            return Err(self.expected("`@`"));
        }
        if self.eat_punct("*") {
            return Ok(Sensitivity::Star);
        }
        self.expect_punct("(")?;
        if self.eat_punct("*") {
            self.expect_punct(")")?;
            return Ok(Sensitivity::Star);
        }
        let mut list = Vec::new();
        loop {
            let edge = if self.eat_kw(Keyword::Posedge) {
                Some(Edge::Posedge)
            } else if self.eat_kw(Keyword::Negedge) {
                Some(Edge::Negedge)
            } else {
                None
            };
            let signal = self.lvalue()?;
            list.push(SensItem { edge, signal });
            if self.eat_punct(")") {
                break;
            }
            if !self.eat_kw(Keyword::Or) {
                self.expect_punct(",")?;
            }
        }
        Ok(Sensitivity::List(list))
    }

    fn stmt(&mut self) -> Result<Stmt, RtlError> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Punct(";") => {
                self.advance();
                Ok(Stmt::Null { span })
            }
            TokenKind::Keyword(Keyword::Begin) => {
                self.advance();
                let label = if self.eat_punct(":") {
                    Some(self.ident()?)
                } else {
                    None
                };
                let mut stmts = Vec::new();
                while !self.eat_kw(Keyword::End) {
                    if self.at_eof() {
                        return Err(self.expected("end"));
                    }
                    stmts.push(self.stmt()?);
                }
                // Optional `end : label`.
                if label.is_some() && self.is_punct(":") {
                    self.advance();
                    self.ident()?;
                }
                if label.is_none() && stmts.len() == 1 {
                    return Ok(stmts.pop().expect("len checked"));
                }
                Ok(Stmt::Block { label, stmts, span })
            }
            TokenKind::Keyword(Keyword::If) => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_branch = Box::new(self.stmt()?);
                let else_branch = if self.eat_kw(Keyword::Else) {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    span,
                })
            }
            TokenKind::Keyword(k @ (Keyword::Case | Keyword::Casez | Keyword::Casex)) => {
                self.advance();
                let kind = match k {
                    Keyword::Case => CaseKind::Case,
                    Keyword::Casez => CaseKind::Casez,
                    _ => CaseKind::Casex,
                };
                self.case_rest(kind, span)
            }
            TokenKind::Keyword(k @ (Keyword::For | Keyword::While)) => Err(self.unsupported(k.as_str())),
            TokenKind::SystemIdent(name) => Err(self.unsupported(&format!("system task {name}"))),
            TokenKind::Punct("#") => Err(self.unsupported("delay control")),
            TokenKind::Ident(_) | TokenKind::Punct("{") => {
                let lhs = self.lvalue()?;
                let blocking = if self.eat_punct("=") {
                    true
                } else if self.eat_punct("<=") {
                    false
                } else {
                    return Err(self.expected("`=` or `<=`"));
                };
                let rhs = self.expr()?;
                self.expect_punct(";")?;
                Ok(Stmt::Assign {
                    lhs,
                    rhs,
                    blocking,
                    span,
                })
            }
            _ => Err(self.expected("statement")),
        }
    }

    fn case_rest(&mut self, kind: CaseKind, span: Span) -> Result<Stmt, RtlError> {
        self.expect_punct("(")?;
        let subject = self.expr()?;
        self.expect_punct(")")?;
        let mut arms = Vec::new();
        let mut default = None;
        while !self.eat_kw(Keyword::Endcase) {
            if self.at_eof() {
                return Err(self.expected("endcase"));
            }
            if self.eat_kw(Keyword::Default) {
                self.eat_punct(":");
                if default.is_some() {
                    return Err(RtlError::Parse {
                        position: self.span(),
                        expected: "a single default arm".to_string(),
                        found: "a second `default`".to_string(),
                    });
                }
                default = Some(Box::new(self.stmt()?));
                continue;
            }
            let mut labels = vec![self.expr()?];
            while self.eat_punct(",") {
                labels.push(self.expr()?);
            }
            self.expect_punct(":")?;
            let body = self.stmt()?;
            arms.push(CaseArm { labels, body });
        }
        Ok(Stmt::Case {
            kind,
            subject,
            arms,
            default,
            span,
        })
    }

    /// Assignment target: identifier with selects, or a concatenation of those.
    fn lvalue(&mut self) -> Result<Expr, RtlError> {
        if self.eat_punct("{") {
            let mut parts = vec![self.lvalue()?];
            while self.eat_punct(",") {
                parts.push(self.lvalue()?);
            }
            self.expect_punct("}")?;
            return Ok(Expr::Concat(parts));
        }
        let base = Expr::Ident(self.ident()?);
        self.selects(base)
    }

    fn selects(&mut self, mut base: Expr) -> Result<Expr, RtlError> {
        while self.eat_punct("[") {
            let first = self.expr()?;
            if self.eat_punct(":") {
                let lsb = self.expr()?;
                self.expect_punct("]")?;
                base = Expr::Slice(Box::new(base), Box::new(first), Box::new(lsb));
            } else {
                self.expect_punct("]")?;
                base = Expr::Index(Box::new(base), Box::new(first));
            }
        }
        Ok(base)
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, RtlError> {
        let cond = self.binary(0)?;
        if self.eat_punct("?") {
            let a = self.expr()?;
            self.expect_punct(":")?;
            let b = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let TokenKind::Punct(p) = self.peek() else {
            return None;
        };
        BinaryOp::ALL.into_iter().find(|op| op.symbol() == *p)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, RtlError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            // `**` is left-associative in Verilog-2005 as well.
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, RtlError> {
        let op = match self.peek() {
            TokenKind::Punct("!") => Some(UnaryOp::Not),
            TokenKind::Punct("~") => Some(UnaryOp::BitNot),
            TokenKind::Punct("-") => Some(UnaryOp::Neg),
            TokenKind::Punct("+") => Some(UnaryOp::Plus),
            TokenKind::Punct("&") => Some(UnaryOp::RedAnd),
            TokenKind::Punct("|") => Some(UnaryOp::RedOr),
            TokenKind::Punct("^") => Some(UnaryOp::RedXor),
            TokenKind::Punct("~&") => Some(UnaryOp::RedNand),
            TokenKind::Punct("~|") => Some(UnaryOp::RedNor),
            TokenKind::Punct("~^") => Some(UnaryOp::RedXnor),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.unary()?;
            return Ok(Expr::Unary(op, Box::new(operand)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, RtlError> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                if self.is_punct("(") {
                    return Err(self.unsupported("function call"));
                }
                self.selects(Expr::Ident(name))
            }
            TokenKind::Number(lit) => {
                self.advance();
                Ok(Expr::Literal(lit))
            }
            TokenKind::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            TokenKind::Punct("{") => {
                self.advance();
                let first = self.expr()?;
                if self.eat_punct("{") {
                    let mut parts = vec![self.expr()?];
                    while self.eat_punct(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect_punct("}")?;
                    self.expect_punct("}")?;
                    return Ok(Expr::Replicate(Box::new(first), parts));
                }
                let mut parts = vec![first];
                while self.eat_punct(",") {
                    parts.push(self.expr()?);
                }
                self.expect_punct("}")?;
                Ok(Expr::Concat(parts))
            }
            TokenKind::SystemIdent(name) => Err(self.unsupported(&format!("system function {name}"))),
            TokenKind::Str => Err(self.unsupported("string literal")),
            _ => Err(self.expected("expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_module() {
        let ast =
            parse("module m(input a, output reg b); always @(posedge a) b <= 1'b0; endmodule")
                .unwrap();
        assert_eq!(ast.modules.len(), 1);
        let m = &ast.modules[0];
        assert_eq!(m.name, "m");
        assert_eq!(m.ports().len(), 2);
        let always = m
            .items
            .iter()
            .filter(|i| matches!(i, Item::Always { .. }))
            .count();
        assert_eq!(always, 1);
    }

    #[test]
    fn empty_source_expects_module() {
        match parse("") {
            Err(RtlError::Parse { expected, .. }) => assert_eq!(expected, "module"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("// only a comment\n"), Err(RtlError::Parse { .. })));
    }

    #[test]
    fn precedence_climbing() {
        let e = parse_expr("a | b & c == d + e * f").unwrap();
        let expected = parse_expr("a | (b & (c == (d + (e * f))))").unwrap();
        assert_eq!(e, expected);
        let left = parse_expr("a - b - c").unwrap();
        assert_eq!(left, parse_expr("(a - b) - c").unwrap());
    }

    #[test]
    fn ternary_is_right_associative() {
        let e = parse_expr("a ? b : c ? d : e").unwrap();
        assert_eq!(e, parse_expr("a ? b : (c ? d : e)").unwrap());
    }

    #[test]
    fn non_ansi_ports_and_decls() {
        let src = "module n(a, b, q);\n input a, b;\n output [3:0] q;\n reg [3:0] q;\n wire t = a & b;\n assign q = {4{t}};\nendmodule";
        let ast = parse(src).unwrap();
        let m = &ast.modules[0];
        assert_eq!(m.header, PortHeader::Names(vec!["a".into(), "b".into(), "q".into()]));
        let ports = m.ports();
        assert_eq!(ports.len(), 3);
        assert_eq!(ports[2].2, Some(4));
    }

    #[test]
    fn case_with_default_anywhere() {
        let src = "module c(input [1:0] s, output reg y);\nalways @(*) begin\n case (s)\n default: y = 1'b0;\n 2'd1, 2'd2: y = 1'b1;\n endcase\nend\nendmodule";
        let ast = parse(src).unwrap();
        let Item::Always { body, .. } = &ast.modules[0].items[0] else {
            panic!()
        };
        // Single-statement blocks collapse to the statement.
        let Stmt::Case { arms, default, .. } = body else {
            panic!()
        };
        assert_eq!(arms.len(), 1);
        assert_eq!(arms[0].labels.len(), 2);
        assert!(default.is_some());
    }

    #[test]
    fn sensitivity_forms() {
        let src = "module s(input clk, input rst_n, output reg q);\nalways @(posedge clk or negedge rst_n) q <= 1'b0;\nalways @* q = 1'b1;\nalways_comb q = 1'b1;\nendmodule";
        let ast = parse(src).unwrap();
        let sens: Vec<_> = ast.modules[0]
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Always { sensitivity, .. } => Some(sensitivity.clone()),
                _ => None,
            })
            .collect();
        assert!(matches!(&sens[0], Sensitivity::List(l) if l.len() == 2));
        assert_eq!(sens[1], Sensitivity::Star);
        assert_eq!(sens[2], Sensitivity::Implicit);
    }

    #[test]
    fn unsupported_constructs_are_named() {
        for (src, name) in [
            ("module m; initial begin end endmodule", "initial"),
            ("module m; sub u0(.a(b)); endmodule", "module instantiation"),
            ("module m #(parameter W = 1) (input a); endmodule", "module parameter port list"),
            ("module m; always @(*) $display(\"x\"); endmodule", "system task $display"),
            ("module m; generate endgenerate endmodule", "generate"),
        ] {
            match parse(src) {
                Err(RtlError::Unsupported { construct, .. }) => assert_eq!(construct, name),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_error_reports_position() {
        match parse("module m;\n assign = 1;\nendmodule") {
            Err(RtlError::Parse { position, .. }) => assert_eq!(position.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_endmodule() {
        assert!(parse("module m; wire a;").is_err());
    }

    #[test]
    fn localparam_and_arrays() {
        let src = "module m;\n localparam IDLE = 2'd0, RUN = 2'd1;\n reg [7:0] mem [0:15];\nendmodule";
        let ast = parse(src).unwrap();
        assert!(ast.modules[0].declares("RUN"));
        assert!(ast.modules[0].declares("mem"));
    }
}
