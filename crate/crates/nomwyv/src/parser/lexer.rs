//! Hand-rolled lexer for the surface syntax. Comments run from `//` to end
//! of line. Store locations have the spelling `#N` so that the parser can
//! reject them with a dedicated diagnostic.

use crate::syntax::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    KwName,
    KwSubtype,
    KwType,
    KwVal,
    KwDef,
    KwNew,
    KwLet,
    KwIn,
    KwAssert,
    KwTop,
    KwBot,
    AtShape,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    FatArrow,
    ThinArrow,
    LeBound,
    GeBound,
    EqSign,
    SubtypeOf,
    NotSubtypeOf,
    LocLit(u32),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::KwName => "`name`".into(),
            Tok::KwSubtype => "`subtype`".into(),
            Tok::KwType => "`type`".into(),
            Tok::KwVal => "`val`".into(),
            Tok::KwDef => "`def`".into(),
            Tok::KwNew => "`new`".into(),
            Tok::KwLet => "`let`".into(),
            Tok::KwIn => "`in`".into(),
            Tok::KwAssert => "`assert`".into(),
            Tok::KwTop => "`Top`".into(),
            Tok::KwBot => "`Bot`".into(),
            Tok::AtShape => "`@shape`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::ThinArrow => "`->`".into(),
            Tok::LeBound => "`<=`".into(),
            Tok::GeBound => "`>=`".into(),
            Tok::EqSign => "`=`".into(),
            Tok::SubtypeOf => "`<:`".into(),
            Tok::NotSubtypeOf => "`</:`".into(),
            Tok::LocLit(n) => format!("store location `#{n}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub struct LexError {
    pub span: Span,
    pub message: String,
}

pub fn lex(text: &str) -> (Vec<Token>, Vec<LexError>) {
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(ch) = c {
                if ch == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    loop {
        let (start_line, start_col) = (line, col);
        let c = match chars.peek().copied() {
            Some(c) => c,
            None => break,
        };
        let span1 = |len: u32| Span::new(start_line, start_col, len);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    while let Some(&ch) = chars.peek() {
                        if ch == '\n' {
                            break;
                        }
                        bump!();
                    }
                } else {
                    errors.push(LexError {
                        span: span1(1),
                        message: "stray `/`; comments are written `//`".into(),
                    });
                }
            }
            '{' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::LBrace,
                    span: span1(1),
                });
            }
            '}' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::RBrace,
                    span: span1(1),
                });
            }
            '(' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::LParen,
                    span: span1(1),
                });
            }
            ')' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::RParen,
                    span: span1(1),
                });
            }
            ':' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::Colon,
                    span: span1(1),
                });
            }
            ',' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::Comma,
                    span: span1(1),
                });
            }
            '.' => {
                bump!();
                tokens.push(Token {
                    tok: Tok::Dot,
                    span: span1(1),
                });
            }
            '=' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    tokens.push(Token {
                        tok: Tok::FatArrow,
                        span: span1(2),
                    });
                } else {
                    tokens.push(Token {
                        tok: Tok::EqSign,
                        span: span1(1),
                    });
                }
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    tokens.push(Token {
                        tok: Tok::ThinArrow,
                        span: span1(2),
                    });
                } else {
                    errors.push(LexError {
                        span: span1(1),
                        message: "stray `-`; expected `->`".into(),
                    });
                }
            }
            '<' => {
                bump!();
                match chars.peek() {
                    Some('=') => {
                        bump!();
                        tokens.push(Token {
                            tok: Tok::LeBound,
                            span: span1(2),
                        });
                    }
                    Some(':') => {
                        bump!();
                        tokens.push(Token {
                            tok: Tok::SubtypeOf,
                            span: span1(2),
                        });
                    }
                    Some('/') => {
                        bump!();
                        if chars.peek() == Some(&':') {
                            bump!();
                            tokens.push(Token {
                                tok: Tok::NotSubtypeOf,
                                span: span1(3),
                            });
                        } else {
                            errors.push(LexError {
                                span: span1(2),
                                message: "expected `</:`".into(),
                            });
                        }
                    }
                    _ => errors.push(LexError {
                        span: span1(1),
                        message: "stray `<`; expected `<=`, `<:`, or `</:`".into(),
                    }),
                }
            }
            '>' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    tokens.push(Token {
                        tok: Tok::GeBound,
                        span: span1(2),
                    });
                } else {
                    errors.push(LexError {
                        span: span1(1),
                        message: "stray `>`; expected `>=`".into(),
                    });
                }
            }
            '@' => {
                bump!();
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        word.push(ch);
                        bump!();
                    } else {
                        break;
                    }
                }
                if word == "shape" {
                    tokens.push(Token {
                        tok: Tok::AtShape,
                        span: span1(6),
                    });
                } else {
                    errors.push(LexError {
                        span: span1(1 + word.len() as u32),
                        message: format!("unknown annotation `@{word}`; only `@shape` exists"),
                    });
                }
            }
            '#' => {
                bump!();
                let mut digits = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_digit() {
                        digits.push(ch);
                        bump!();
                    } else {
                        break;
                    }
                }
                if digits.is_empty() {
                    errors.push(LexError {
                        span: span1(1),
                        message: "stray `#`".into(),
                    });
                } else {
                    tokens.push(Token {
                        tok: Tok::LocLit(digits.parse().unwrap_or(u32::MAX)),
                        span: span1(1 + digits.len() as u32),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' || ch == '$' {
                        word.push(ch);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match word.as_str() {
                    "name" => Tok::KwName,
                    "subtype" => Tok::KwSubtype,
                    "type" => Tok::KwType,
                    "val" => Tok::KwVal,
                    "def" => Tok::KwDef,
                    "new" => Tok::KwNew,
                    "let" => Tok::KwLet,
                    "in" => Tok::KwIn,
                    "assert" => Tok::KwAssert,
                    "Top" => Tok::KwTop,
                    "Bot" => Tok::KwBot,
                    _ => Tok::Ident(word.clone()),
                };
                tokens.push(Token {
                    tok,
                    span: span1(word.len() as u32),
                });
            }
            other => {
                bump!();
                errors.push(LexError {
                    span: span1(1),
                    message: format!("unknown character `{other}`"),
                });
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col, 0),
    });
    (tokens, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        let (tokens, errors) = lex(text);
        assert!(errors.is_empty(), "unexpected lex errors");
        tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_disambiguate() {
        assert_eq!(
            toks("<= >= = <: </: => ->"),
            vec![
                Tok::LeBound,
                Tok::GeBound,
                Tok::EqSign,
                Tok::SubtypeOf,
                Tok::NotSubtypeOf,
                Tok::FatArrow,
                Tok::ThinArrow,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_keywords() {
        assert_eq!(
            toks("name x // trailing\nTop"),
            vec![Tok::KwName, Tok::Ident("x".into()), Tok::KwTop, Tok::Eof]
        );
    }

    #[test]
    fn loc_literals_lex() {
        assert_eq!(toks("#12"), vec![Tok::LocLit(12), Tok::Eof]);
    }

    #[test]
    fn every_byte_sequence_lexes() {
        // Errors, not panics, on junk.
        let (_, errors) = lex("?? @@ % ^ &");
        assert!(!errors.is_empty());
    }
}
