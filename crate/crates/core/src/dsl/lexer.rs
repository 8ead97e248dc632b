use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Number { value: f64, text: String },
    Ident(String),
    Let,
    Assign,
    Semi,
    Newline,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut depth = 0usize;

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let single = |tok| Token { tok, span };
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(single(Tok::Newline));
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => {
                depth += 1;
                out.push(single(Tok::LParen));
            }
            ')' => {
                depth = depth.saturating_sub(1);
                out.push(single(Tok::RParen));
            }
            '=' => out.push(single(Tok::Assign)),
            ';' => out.push(single(Tok::Semi)),
            '+' => out.push(single(Tok::Plus)),
            '-' => out.push(single(Tok::Minus)),
            '*' => out.push(single(Tok::Star)),
            '/' => out.push(single(Tok::Slash)),
            '^' => out.push(single(Tok::Caret)),
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                let hex = c == '0' && matches!(chars.get(i + 1), Some('x' | 'X'));
                if hex {
                    i += 2;
                    while i < chars.len() {
                        let d = chars[i];
                        let sign_after_p = matches!(d, '+' | '-') && matches!(chars[i - 1], 'p' | 'P');
                        if d.is_ascii_hexdigit() || matches!(d, '.' | 'p' | 'P') || sign_after_p {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                } else {
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                        let mut j = i + 1;
                        if j < chars.len() && matches!(chars[j], '+' | '-') {
                            j += 1;
                        }
                        if j < chars.len() && chars[j].is_ascii_digit() {
                            i = j;
                            while i < chars.len() && chars[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = parse_number(&text).map_err(|message| Error::Syntax { span, message })?;
                out.push(Token {
                    tok: Tok::Number { value, text },
                    span,
                });
                col += i - start;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = if word == "let" { Tok::Let } else { Tok::Ident(word) };
                out.push(Token { tok, span });
                col += i - start;
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    span,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, column: col },
    });
    Ok(out)
}

/// Decimal literals are correctly rounded; hex-float literals must be
/// exactly representable.
pub(crate) fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let value = if text.starts_with("0x") || text.starts_with("0X") {
        hexf_parse::parse_hexf64(text, false)
            .map_err(|e| format!("invalid hex-float literal `{text}`: {e}"))?
    } else {
        text.parse::<f64>()
            .map_err(|_| format!("invalid number `{text}`"))?
    };
    if !value.is_finite() {
        return Err(format!("literal `{text}` overflows binary64"));
    }
    Ok(value)
}
