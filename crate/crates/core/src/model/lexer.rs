//! Tokenizer for the clause DSL.

use super::ast::Span;
use crate::rational::{rat_from_decimal, Rat};
use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Num(Rat),
    LParen,
    RParen,
    Comma,
    Dot,
    If, // :-
    Plus,
    Minus,
    Star,
    Slash,
    OpEq, // #=
    OpNe, // #<>
    OpLt, // #<
    OpLe, // #=<
    OpGt, // #>
    OpGe, // #>=
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Var(s) => format!("variable `{s}`"),
            Tok::Num(_) => "number".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::If => "`:-`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::OpEq => "`#=`".to_string(),
            Tok::OpNe => "`#<>`".to_string(),
            Tok::OpLt => "`#<`".to_string(),
            Tok::OpLe => "`#=<`".to_string(),
            Tok::OpGt => "`#>`".to_string(),
            Tok::OpGe => "`#>=`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedTok {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            line: span.line,
            col: span.col,
            message: message.into(),
            expected: Vec::new(),
            found: String::new(),
        }
    }
}

pub fn tokenize(text: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    loop {
        let span = Span { line, col };
        let Some(&c) = chars.peek() else {
            out.push(SpannedTok { tok: Tok::Eof, span });
            return Ok(out);
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '%' => {
                // comment to end of line
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' => {
                bump!();
                out.push(SpannedTok { tok: Tok::LParen, span });
            }
            ')' => {
                bump!();
                out.push(SpannedTok { tok: Tok::RParen, span });
            }
            ',' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Comma, span });
            }
            '+' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Plus, span });
            }
            '-' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Minus, span });
            }
            '*' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Star, span });
            }
            '/' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Slash, span });
            }
            '.' => {
                bump!();
                out.push(SpannedTok { tok: Tok::Dot, span });
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'-') {
                    bump!();
                    out.push(SpannedTok { tok: Tok::If, span });
                } else {
                    return Err(ParseError::new(span, "expected `:-`"));
                }
            }
            '#' => {
                bump!();
                let tok = match chars.peek() {
                    Some('=') => {
                        bump!();
                        if chars.peek() == Some(&'<') {
                            bump!();
                            Tok::OpLe
                        } else {
                            Tok::OpEq
                        }
                    }
                    Some('<') => {
                        bump!();
                        if chars.peek() == Some(&'>') {
                            bump!();
                            Tok::OpNe
                        } else {
                            Tok::OpLt
                        }
                    }
                    Some('>') => {
                        bump!();
                        if chars.peek() == Some(&'=') {
                            bump!();
                            Tok::OpGe
                        } else {
                            Tok::OpGt
                        }
                    }
                    _ => {
                        return Err(ParseError::new(
                            span,
                            "expected a constraint operator after `#` (#=, #<, #=<, #>, #>=, #<>)",
                        ))
                    }
                };
                out.push(SpannedTok { tok, span });
            }
            c if c.is_ascii_digit() => {
                let mut whole = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        whole.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                // a '.' starts a decimal only when a digit follows; otherwise
                // it terminates the clause
                let mut frac = String::new();
                let mut lookahead = chars.clone();
                if lookahead.next() == Some('.') {
                    if matches!(lookahead.next(), Some(d) if d.is_ascii_digit()) {
                        bump!(); // consume '.'
                        while let Some(&d) = chars.peek() {
                            if d.is_ascii_digit() {
                                frac.push(d);
                                bump!();
                            } else {
                                break;
                            }
                        }
                    }
                }
                let r = if frac.is_empty() {
                    Rat::from_integer(whole.parse::<BigInt>().expect("digits"))
                } else {
                    rat_from_decimal(&whole, &frac)
                        .ok_or_else(|| ParseError::new(span, "invalid numeric literal"))?
                };
                out.push(SpannedTok { tok: Tok::Num(r), span });
            }
            c if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(SpannedTok { tok: Tok::Ident(s), span });
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(SpannedTok { tok: Tok::Var(s), span });
            }
            other => {
                return Err(ParseError::new(span, format!("unexpected character `{other}`")));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_frac};

    #[test]
    fn clause_dot_vs_decimal_point() {
        let toks = tokenize("happens(e, 2.5). horizon(10).").unwrap();
        let nums: Vec<Rat> = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Num(r) => Some(r.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(nums, vec![rat_frac(5, 2), rat(10)]);
        let dots = toks.iter().filter(|t| t.tok == Tok::Dot).count();
        assert_eq!(dots, 2);
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("% a comment\nfluent(f). % trailing\n").unwrap();
        assert!(matches!(&toks[0].tok, Tok::Ident(s) if s == "fluent"));
    }

    #[test]
    fn constraint_operators() {
        let toks = tokenize("#= #< #=< #> #>= #<>").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert_eq!(
            kinds[..6],
            [&Tok::OpEq, &Tok::OpLt, &Tok::OpLe, &Tok::OpGt, &Tok::OpGe, &Tok::OpNe]
        );
    }

    #[test]
    fn spans_track_lines() {
        let toks = tokenize("a.\nb.").unwrap();
        assert_eq!(toks[2].span.line, 2);
        assert_eq!(toks[2].span.col, 1);
    }
}
