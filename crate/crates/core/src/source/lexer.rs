use super::{SourceError, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// Operators and punctuation, longest match first.
    Sym(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] = &[
    "->", "::", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "(", ")", "{", "}", "[", "]",
    ";", ",", ".", ":", "?", "@", "=", "<", ">", "!", "+", "-", "*", "/", "%", "&", "|", "^", "~",
];

/// Tokenizes one source file. Comments (`//`, `/* */`) are skipped.
pub fn lex(src: &str) -> Result<Vec<Token>, SourceError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for &b in &bytes[*i..*i + n] {
            if b == b'\n' {
                *line += 1;
                *col = 1;
            } else if b & 0xC0 != 0x80 {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if src[i..].starts_with("//") {
            let n = src[i..].find('\n').unwrap_or(src.len() - i);
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if src[i..].starts_with("/*") {
            let Some(n) = src[i + 2..].find("*/") else {
                return Err(SourceError::lexical(Span::new(i, src.len(), line, col), "unterminated comment"));
            };
            advance(&mut i, &mut line, &mut col, n + 4);
            continue;
        }
        let (start, sline, scol) = (i, line, col);
        let tok = if c.is_ascii_alphabetic() || c == b'_' || c == b'$' {
            let n = bytes[i..].iter().take_while(|b| b.is_ascii_alphanumeric() || **b == b'_' || **b == b'$').count();
            let word = src[i..i + n].to_string();
            advance(&mut i, &mut line, &mut col, n);
            Tok::Ident(word)
        } else if c.is_ascii_digit() {
            let n = bytes[i..].iter().take_while(|b| b.is_ascii_digit()).count();
            let text = &src[i..i + n];
            let span = Span::new(i, i + n, line, col);
            if bytes.get(i + n).is_some_and(|b| *b == b'.' || b.is_ascii_alphabetic()) {
                return Err(SourceError::unsupported(span, "non-integer numeric literal"));
            }
            let v: i64 = text.parse().map_err(|_| SourceError::lexical(span, "integer literal out of range"))?;
            advance(&mut i, &mut line, &mut col, n);
            Tok::Int(v)
        } else if c == b'"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                let Some(ch) = src[j..].chars().next() else {
                    return Err(SourceError::lexical(Span::new(i, src.len(), line, col), "unterminated string"));
                };
                match ch {
                    '"' => break,
                    '\n' => return Err(SourceError::lexical(Span::new(i, j, line, col), "newline in string")),
                    '\\' => {
                        let esc = src[j + 1..].chars().next().unwrap_or(' ');
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            '"' => '"',
                            '\\' => '\\',
                            _ => return Err(SourceError::lexical(Span::new(j, j + 2, line, col), "unknown escape")),
                        });
                        j += 1 + esc.len_utf8();
                    }
                    other => {
                        s.push(other);
                        j += other.len_utf8();
                    }
                }
            }
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            Tok::Str(s)
        } else if c == b'\'' {
            return Err(SourceError::unsupported(Span::new(i, i + 1, line, col), "character literal"));
        } else {
            let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) else {
                let ch = src[i..].chars().next().unwrap();
                return Err(SourceError::lexical(Span::new(i, i + ch.len_utf8(), line, col), format!("unexpected character '{}'", ch)));
            };
            advance(&mut i, &mut line, &mut col, sym.len());
            Tok::Sym(sym)
        };
        out.push(Token { tok, span: Span::new(start, i, sline, scol) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = lex("if (a != null) // c\n  throw x;").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[2], Tok::Ident("a".into()));
        assert_eq!(kinds[3], Tok::Sym("!="));
        assert_eq!(toks[6].span.line, 2);
        assert_eq!(toks[6].span.col, 3);
    }

    #[test]
    fn strings_and_errors() {
        assert_eq!(lex(r#""a\"b""#).unwrap()[0].tok, Tok::Str("a\"b".into()));
        assert!(lex("\"open").is_err());
        assert!(lex("1.5").is_err());
        assert!(lex("#").is_err());
    }
}
