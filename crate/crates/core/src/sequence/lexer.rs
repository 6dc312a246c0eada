use super::{ParseErrorKind, Position, SequenceError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Var(String),
    At,
    Colon,
    Slash,
    LBrace,
    RBrace,
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Position,
    /// Whether whitespace separates this token from the previous one.
    pub spaced: bool,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, SequenceError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut spaced = true;
    let err = |pos: Position, message: String| SequenceError::Parse { pos, kind: ParseErrorKind::Lexical, message };
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, col };
        if c == '\n' {
            out.push(Token { tok: Tok::Newline, pos, spaced });
            i += 1;
            line += 1;
            col = 1;
            spaced = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            spaced = true;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            '@' => {
                i += 1;
                Tok::At
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            '$' => {
                i += 1;
                if i >= chars.len() || !is_ident_start(chars[i]) {
                    return Err(err(pos, "expected a variable name after '$'".into()));
                }
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Var(chars[start + 1..i].iter().collect())
            }
            c if c.is_ascii_digit()
                || c == '.'
                || ((c == '-' || c == '+')
                    && i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_digit() || chars[i + 1] == '.')) =>
            {
                if c == '-' || c == '+' {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // Exponent only when digits follow, so "3e" stays a unit.
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Number(v),
                    _ => return Err(err(pos, format!("malformed number '{text}'"))),
                }
            }
            c if is_ident_start(c) => {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(pos, format!("unexpected character '{other}'"))),
        };
        col += i - start;
        out.push(Token { tok, pos, spaced });
        spaced = false;
    }
    out.push(Token { tok: Tok::Eof, pos: Position { line, col }, spaced: true });
    Ok(out)
}
