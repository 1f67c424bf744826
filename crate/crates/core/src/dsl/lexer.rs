use crate::diagnostics::{Diagnostic, DiagnosticCode};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Dot,
    /// Any other single character (operators the grammar does not know).
    Other(char),
    Newline,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
}

pub(crate) fn line_text(source: &str, line: usize) -> &str {
    source.lines().nth(line.saturating_sub(1)).unwrap_or("").trim()
}

pub(crate) fn parse_error(source: &str, line: usize, what: &str) -> Diagnostic {
    Diagnostic::new(
        DiagnosticCode::ParseError,
        format!("{what} (line {line}: `{}`)", line_text(source, line)),
        format!("line {line}"),
    )
}

/// Splits source into tokens. Newlines inside brackets are dropped so that
/// calls may span several lines; `#` starts a comment.
pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut depth: usize = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                if depth == 0 && !matches!(out.last(), Some(Token { tok: Tok::Newline, .. }) | None) {
                    out.push(Token { tok: Tok::Newline, line });
                }
                line += 1;
                i += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                line += 1;
                i += 2;
            }
            c if c.is_whitespace() => i += 1,
            '\'' | '"' => {
                let quote = c;
                let start_line = line;
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err(parse_error(source, start_line, "unterminated string literal"));
                    };
                    if ch == quote {
                        i += 1;
                        break;
                    }
                    if ch == '\\' && matches!(chars.get(i + 1), Some('\'' | '"' | '\\')) {
                        s.push(chars[i + 1]);
                        i += 2;
                        continue;
                    }
                    if ch == '\n' {
                        line += 1;
                    }
                    s.push(ch);
                    i += 1;
                }
                out.push(Token { tok: Tok::Str(s), line: start_line });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Number(chars[start..i].iter().collect()), line });
            }
            _ => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '=' => Tok::Eq,
                    '.' => Tok::Dot,
                    other => Tok::Other(other),
                };
                match tok {
                    Tok::LParen | Tok::LBracket => depth += 1,
                    Tok::RParen | Tok::RBracket => depth = depth.saturating_sub(1),
                    _ => {}
                }
                out.push(Token { tok, line });
                i += 1;
            }
        }
    }
    if !matches!(out.last(), Some(Token { tok: Tok::Newline, .. }) | None) {
        out.push(Token { tok: Tok::Newline, line });
    }
    Ok(out)
}
