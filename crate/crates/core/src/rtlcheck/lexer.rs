//! Tokenizer for the Verilog subset.

use super::ast::{Base, Literal, Span};
use super::RtlError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Keyword(Keyword),
    Number(Literal),
    /// Operator or punctuation, e.g. `<=`, `(`, `;`.
    Punct(&'static str),
    /// `$display` and friends; always rejected by the parser.
    SystemIdent(String),
    Str,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    Module,
    Endmodule,
    Input,
    Output,
    Inout,
    Wire,
    Reg,
    Logic,
    Signed,
    Parameter,
    Localparam,
    Assign,
    Always,
    AlwaysComb,
    AlwaysFf,
    AlwaysLatch,
    Posedge,
    Negedge,
    Or,
    Begin,
    End,
    If,
    Else,
    Case,
    Casez,
    Casex,
    Endcase,
    Default,
    // Recognised only so the parser can name them in an UnsupportedConstruct.
    Initial,
    Generate,
    Endgenerate,
    Function,
    Task,
    For,
    While,
    Integer,
    Genvar,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match word {
            "module" => Module,
            "endmodule" => Endmodule,
            "input" => Input,
            "output" => Output,
            "inout" => Inout,
            "wire" => Wire,
            "reg" => Reg,
            "logic" => Logic,
            "signed" => Signed,
            "parameter" => Parameter,
            "localparam" => Localparam,
            "assign" => Assign,
            "always" => Always,
            "always_comb" => AlwaysComb,
            "always_ff" => AlwaysFf,
            "always_latch" => AlwaysLatch,
            "posedge" => Posedge,
            "negedge" => Negedge,
            "or" => Or,
            "begin" => Begin,
            "end" => End,
            "if" => If,
            "else" => Else,
            "case" => Case,
            "casez" => Casez,
            "casex" => Casex,
            "endcase" => Endcase,
            "default" => Default,
            "initial" => Initial,
            "generate" => Generate,
            "endgenerate" => Endgenerate,
            "function" => Function,
            "task" => Task,
            "for" => For,
            "while" => While,
            "integer" => Integer,
            "genvar" => Genvar,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Module => "module",
            Endmodule => "endmodule",
            Input => "input",
            Output => "output",
            Inout => "inout",
            Wire => "wire",
            Reg => "reg",
            Logic => "logic",
            Signed => "signed",
            Parameter => "parameter",
            Localparam => "localparam",
            Assign => "assign",
            Always => "always",
            AlwaysComb => "always_comb",
            AlwaysFf => "always_ff",
            AlwaysLatch => "always_latch",
            Posedge => "posedge",
            Negedge => "negedge",
            Or => "or",
            Begin => "begin",
            End => "end",
            If => "if",
            Else => "else",
            Case => "case",
            Casez => "casez",
            Casex => "casex",
            Endcase => "endcase",
            Default => "default",
            Initial => "initial",
            Generate => "generate",
            Endgenerate => "endgenerate",
            Function => "function",
            Task => "task",
            For => "for",
            While => "while",
            Integer => "integer",
            Genvar => "genvar",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Keyword(k) => format!("`{}`", k.as_str()),
            TokenKind::Number(l) => format!("number `{l}`"),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::SystemIdent(s) => format!("`{s}`"),
            TokenKind::Str => "string literal".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "**", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~&", "~|",
    "~^", "^~", "(", ")", "[", "]", "{", "}", ";", ",", ":", "?", "@", "#", ".", "=", "+", "-",
    "*", "/", "%", "<", ">", "!", "~", "&", "|", "^",
];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn eat_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn skip_inline_ws(&mut self) {
        self.eat_while(|c| c == ' ' || c == '\t');
    }

    fn snippet(&self) -> String {
        self.rest().chars().take(16).collect()
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

fn lex_error(cur: &Cursor<'_>, span: Span) -> RtlError {
    RtlError::Lex {
        position: span,
        snippet: cur.snippet(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, RtlError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let span = cur.span();
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span,
            });
            return Ok(tokens);
        };
        let kind = if is_ident_start(c) {
            let word = cur.eat_while(is_ident_char);
            match Keyword::from_word(word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            }
        } else if c == '\\' {
            // Escaped identifier; terminated by whitespace.
            cur.bump();
            let word = cur.eat_while(|c| !c.is_whitespace());
            if word.is_empty() {
                return Err(lex_error(&cur, span));
            }
            TokenKind::Ident(word.to_string())
        } else if c == '$' {
            cur.bump();
            let word = cur.eat_while(is_ident_char);
            TokenKind::SystemIdent(format!("${word}"))
        } else if c == '`' {
            return Err(RtlError::Unsupported {
                position: span,
                construct: "compiler directive".to_string(),
            });
        } else if c == '"' {
            cur.bump();
            loop {
                match cur.bump() {
                    None | Some('\n') => return Err(lex_error(&cur, span)),
                    Some('\\') => {
                        cur.bump();
                    }
                    Some('"') => break,
                    Some(_) => {}
                }
            }
            TokenKind::Str
        } else if c.is_ascii_digit() || (c == '\'' && is_base_start(&cur, 1)) {
            TokenKind::Number(lex_number(&mut cur, span)?)
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.rest().starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            // `^~` is the same operator as `~^`.
            TokenKind::Punct(if *p == "^~" { "~^" } else { p })
        } else {
            return Err(lex_error(&cur, span));
        };
        tokens.push(Token { kind, span });
    }
}

/// Skips whitespace, comments and `timescale lines.
fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), RtlError> {
    loop {
        let rest = cur.rest();
        if rest.starts_with(|c: char| c.is_whitespace()) {
            cur.eat_while(char::is_whitespace);
        } else if rest.starts_with("//") {
            cur.eat_while(|c| c != '\n');
        } else if rest.starts_with("/*") {
            let span = cur.span();
            cur.bump();
            cur.bump();
            loop {
                if cur.rest().starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(RtlError::Lex {
                        position: span,
                        snippet: "/* (unterminated comment)".to_string(),
                    });
                }
            }
        } else if rest.starts_with("`timescale") {
            cur.eat_while(|c| c != '\n');
        } else {
            return Ok(());
        }
    }
}

/// True if the characters at `offset` (after a `'`) start a base specifier.
fn is_base_start(cur: &Cursor<'_>, offset: usize) -> bool {
    let mut n = offset;
    if matches!(cur.peek_at(n), Some('s' | 'S')) {
        n += 1;
    }
    cur.peek_at(n).and_then(Base::from_letter).is_some()
}

fn lex_number(cur: &mut Cursor<'_>, span: Span) -> Result<Literal, RtlError> {
    let size_text = cur.eat_while(|c| c.is_ascii_digit() || c == '_');
    // A size may be separated from its base by spaces: `8 'hFF`.
    let save = (cur.pos, cur.line, cur.col);
    cur.skip_inline_ws();
    if cur.peek() != Some('\'') || !is_base_start(cur, 1) {
        (cur.pos, cur.line, cur.col) = save;
        let digits: String = size_text.chars().filter(|&c| c != '_').collect();
        let digits = normalize_decimal(&digits);
        return Ok(Literal {
            width: None,
            signed: false,
            base: None,
            digits,
        });
    }
    let width = if size_text.is_empty() {
        None
    } else {
        let w: u32 = size_text
            .replace('_', "")
            .parse()
            .map_err(|_| lex_error(cur, span))?;
        if w == 0 {
            return Err(RtlError::Lex {
                position: span,
                snippet: format!("{size_text}' (zero width)"),
            });
        }
        Some(w)
    };
    cur.bump(); // '
    let signed = matches!(cur.peek(), Some('s' | 'S'));
    if signed {
        cur.bump();
    }
    let base = cur.bump().and_then(Base::from_letter).expect("checked by is_base_start");
    cur.skip_inline_ws();
    let raw = cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '?');
    let digits: String = raw
        .chars()
        .filter(|&c| c != '_')
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let valid = !digits.is_empty()
        && digits.chars().all(|c| match c {
            'x' | 'z' | '?' => base != Base::Decimal || digits.len() == 1,
            _ => c.is_digit(base.radix()),
        });
    if !valid {
        return Err(RtlError::Lex {
            position: span,
            snippet: format!("'{}{}", base.letter(), raw),
        });
    }
    let digits = if base == Base::Decimal {
        normalize_decimal(&digits)
    } else {
        digits
    };
    Ok(Literal {
        width,
        signed,
        base: Some(base),
        digits,
    })
}

fn normalize_decimal(digits: &str) -> String {
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return digits.to_string();
    }
    let trimmed = digits.trim_start_matches('0');
    if trimmed.is_empty() {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn sized_literals() {
        let toks = kinds("1'b0 8'hFF 4'b10_1x 'd7 16 'h dead_BEEF 3'sd2");
        let lits: Vec<String> = toks
            .iter()
            .filter_map(|t| match t {
                TokenKind::Number(l) => Some(l.to_string()),
                _ => None,
            })
            .collect();
        assert_eq!(lits, ["1'b0", "8'hff", "4'b101x", "'d7", "16'hdeadbeef", "3'sd2"]);
    }

    #[test]
    fn plain_decimal_keeps_no_base() {
        match &kinds("007")[0] {
            TokenKind::Number(l) => {
                assert_eq!(l.base, None);
                assert_eq!(l.digits, "7");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_digits_and_zero_width() {
        assert!(matches!(tokenize("4'b102"), Err(RtlError::Lex { .. })));
        assert!(matches!(tokenize("0'b1"), Err(RtlError::Lex { .. })));
        assert!(matches!(tokenize("8'h"), Err(RtlError::Lex { .. })));
    }

    #[test]
    fn comments_and_timescale_are_skipped() {
        let toks = kinds("`timescale 1ns/1ps\n// hi\nmodule /* x\n y */ m;");
        assert_eq!(
            toks,
            vec![
                TokenKind::Keyword(Keyword::Module),
                TokenKind::Ident("m".into()),
                TokenKind::Punct(";"),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn other_directives_are_unsupported() {
        assert!(matches!(
            tokenize("`define X 1"),
            Err(RtlError::Unsupported { .. })
        ));
    }

    #[test]
    fn maximal_munch_operators() {
        let toks = kinds("a <<< b !== c ^~ d");
        assert!(toks.contains(&TokenKind::Punct("<<<")));
        assert!(toks.contains(&TokenKind::Punct("!==")));
        assert!(toks.contains(&TokenKind::Punct("~^")));
    }

    #[test]
    fn positions_are_tracked() {
        let toks = tokenize("module\n  m;").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
    }

    #[test]
    fn unterminated_comment_is_lex_error() {
        assert!(matches!(tokenize("/* open"), Err(RtlError::Lex { .. })));
    }
}
