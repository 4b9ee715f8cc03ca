//! Tokenizer for `.tlp` sources. `%` starts a comment running to end of line.

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
    Dot,
    ColonDash,
    Eq,
    Slash,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let n = chars.len();

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            out.push(Token { tok: $tok, line: $line, col: $col })
        };
    }

    while i < n {
        let c = chars[i];
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '%' => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                push!(Tok::LParen, line, col);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Tok::RParen, line, col);
                i += 1;
                col += 1;
            }
            '[' => {
                push!(Tok::LBracket, line, col);
                i += 1;
                col += 1;
            }
            ']' => {
                push!(Tok::RBracket, line, col);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Tok::Comma, line, col);
                i += 1;
                col += 1;
            }
            '|' => {
                push!(Tok::Bar, line, col);
                i += 1;
                col += 1;
            }
            '.' => {
                push!(Tok::Dot, line, col);
                i += 1;
                col += 1;
            }
            '=' => {
                push!(Tok::Eq, line, col);
                i += 1;
                col += 1;
            }
            '/' => {
                push!(Tok::Slash, line, col);
                i += 1;
                col += 1;
            }
            ':' => {
                if i + 1 < n && chars[i + 1] == '-' {
                    push!(Tok::ColonDash, line, col);
                    i += 2;
                    col += 2;
                } else {
                    return Err(SyntaxError::Syntax {
                        line,
                        col,
                        msg: "expected ':-'".into(),
                    });
                }
            }
            '-' => {
                let start_col = col;
                if i + 1 < n && chars[i + 1].is_ascii_digit() {
                    let mut j = i + 1;
                    while j < n && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    let text: String = chars[i..j].iter().collect();
                    let v = text.parse::<i64>().map_err(|_| SyntaxError::Syntax {
                        line,
                        col: start_col,
                        msg: format!("integer out of range: {text}"),
                    })?;
                    push!(Tok::Int(v), line, start_col);
                    col += j - i;
                    i = j;
                } else {
                    return Err(SyntaxError::Syntax {
                        line,
                        col,
                        msg: "stray '-'".into(),
                    });
                }
            }
            _ if c.is_ascii_digit() => {
                let start_col = col;
                let mut j = i;
                while j < n && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let v = text.parse::<i64>().map_err(|_| SyntaxError::Syntax {
                    line,
                    col: start_col,
                    msg: format!("integer out of range: {text}"),
                })?;
                push!(Tok::Int(v), line, start_col);
                col += j - i;
                i = j;
            }
            _ if c.is_ascii_lowercase() => {
                let start_col = col;
                let mut j = i;
                while j < n && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push!(Tok::Ident(text), line, start_col);
                col += j - i;
                i = j;
            }
            _ if c.is_ascii_uppercase() || c == '_' => {
                let start_col = col;
                let mut j = i;
                while j < n && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                push!(Tok::Var(text), line, start_col);
                col += j - i;
                i = j;
            }
            _ => {
                return Err(SyntaxError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
