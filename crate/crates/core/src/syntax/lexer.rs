//! Tokenizer shared by model and specification files.

use super::{Span, SyntaxError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Define,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Iff,
    Prime,
    DotDot,
    FatArrow,
    Caret,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Define => ":=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Iff => "<->",
            Tok::Prime => "'",
            Tok::DotDot => "..",
            Tok::FatArrow => "=>",
            Tok::Caret => "^",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        let span = Span { line, col };
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => advance(1, &mut i, &mut col),
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                col += (i - start) as u32;
                let v = text.parse::<i64>().map_err(|_| {
                    SyntaxError::new(span, format!("integer literal `{text}` out of range"))
                })?;
                out.push((Tok::Int(v), span));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                col += (i - start) as u32;
                out.push((Tok::Ident(src[start..i].to_string()), span));
            }
            _ => {
                let two = bytes.get(i..i + 2).unwrap_or(&[]);
                let three = bytes.get(i..i + 3).unwrap_or(&[]);
                let (tok, n) = if three == b"<->" {
                    (Tok::Iff, 3)
                } else {
                    match two {
                        b":=" => (Tok::Define, 2),
                        b"!=" => (Tok::Ne, 2),
                        b"<=" => (Tok::Le, 2),
                        b">=" => (Tok::Ge, 2),
                        b"->" => (Tok::Arrow, 2),
                        b".." => (Tok::DotDot, 2),
                        b"=>" => (Tok::FatArrow, 2),
                        b"&&" => (Tok::Amp, 2),
                        b"||" => (Tok::Pipe, 2),
                        b"==" => (Tok::Eq, 2),
                        _ => {
                            let t = match c {
                                b'{' => Tok::LBrace,
                                b'}' => Tok::RBrace,
                                b'(' => Tok::LParen,
                                b')' => Tok::RParen,
                                b',' => Tok::Comma,
                                b':' => Tok::Colon,
                                b'=' => Tok::Eq,
                                b'<' => Tok::Lt,
                                b'>' => Tok::Gt,
                                b'+' => Tok::Plus,
                                b'-' => Tok::Minus,
                                b'!' => Tok::Bang,
                                b'&' => Tok::Amp,
                                b'|' => Tok::Pipe,
                                b'\'' => Tok::Prime,
                                b'^' => Tok::Caret,
                                _ => {
                                    let ch = src[i..].chars().next().unwrap();
                                    return Err(SyntaxError::new(
                                        span,
                                        format!("unexpected character `{ch}`"),
                                    ));
                                }
                            };
                            (t, 1)
                        }
                    }
                };
                advance(n, &mut i, &mut col);
                out.push((tok, span));
            }
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_positions() {
        let toks = tokenize("trans u : x = a => x' = b // c\n  O<=2 y").unwrap();
        let kinds: Vec<Tok> = toks.iter().map(|(t, _)| t.clone()).collect();
        assert_eq!(kinds[0], Tok::Ident("trans".into()));
        assert!(kinds.contains(&Tok::FatArrow));
        assert!(kinds.contains(&Tok::Prime));
        assert!(kinds.contains(&Tok::Le));
        let o = toks
            .iter()
            .find(|(t, _)| *t == Tok::Ident("O".into()))
            .unwrap();
        assert_eq!((o.1.line, o.1.col), (2, 3));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x = $").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (1, 5));
    }
}
