use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    // keywords
    StarMap,
    Parameter,
    Field,
    Path,
    Objective,
    If,
    And,
    Or,
    Not,
    Over,
    Distance,
    Altitude,
    // symbols
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Tilde,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    pub fn text(&self) -> &'static str {
        match self {
            Tok::StarMap => "star_map",
            Tok::Parameter => "parameter",
            Tok::Field => "field",
            Tok::Path => "path",
            Tok::Objective => "objective",
            Tok::If => "if",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Not => "not",
            Tok::Over => "over",
            Tok::Distance => "distance",
            Tok::Altitude => "altitude",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Tilde => "~",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Ident(_) => "identifier",
            Tok::Str(_) => "string",
            Tok::Num(_) => "number",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "star_map" => Tok::StarMap,
        "parameter" => Tok::Parameter,
        "field" => Tok::Field,
        "path" => Tok::Path,
        "objective" => Tok::Objective,
        "if" => Tok::If,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "over" => Tok::Over,
        "distance" => Tok::Distance,
        "altitude" => Tok::Altitude,
        _ => return None,
    })
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
        expected: Vec::new(),
    };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(1, &mut i, &mut col);
                }
                continue;
            }
            '"' => {
                let mut s = String::new();
                advance(1, &mut i, &mut col);
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(err(
                                start_line,
                                start_col,
                                "unterminated string literal".into(),
                            ))
                        }
                        Some('"') => {
                            advance(1, &mut i, &mut col);
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => return Err(err(line, col, "invalid escape in string".into())),
                            }
                            advance(2, &mut i, &mut col);
                        }
                        Some(&ch) => {
                            s.push(ch);
                            advance(1, &mut i, &mut col);
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: start_line,
                    column: start_col,
                });
                continue;
            }
            c if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                let start = i;
                advance(1, &mut i, &mut col);
                while chars.get(i).is_some_and(|d| d.is_ascii_digit()) {
                    advance(1, &mut i, &mut col);
                }
                if chars.get(i) == Some(&'.')
                    && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
                {
                    advance(1, &mut i, &mut col);
                    while chars.get(i).is_some_and(|d| d.is_ascii_digit()) {
                        advance(1, &mut i, &mut col);
                    }
                }
                if matches!(chars.get(i), Some('e' | 'E')) {
                    let mut j = i + 1;
                    if matches!(chars.get(j), Some('+' | '-')) {
                        j += 1;
                    }
                    if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                        let n = j - i;
                        advance(n, &mut i, &mut col);
                        while chars.get(i).is_some_and(|d| d.is_ascii_digit()) {
                            advance(1, &mut i, &mut col);
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let n: f64 = text
                    .parse()
                    .map_err(|_| err(start_line, start_col, format!("invalid number `{text}`")))?;
                out.push(Token {
                    tok: Tok::Num(n),
                    line: start_line,
                    column: start_col,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while chars
                    .get(i)
                    .is_some_and(|d| d.is_ascii_alphanumeric() || *d == '_')
                {
                    advance(1, &mut i, &mut col);
                }
                let word: String = chars[start..i].iter().collect();
                let valid = word.starts_with(|c: char| c.is_ascii_lowercase())
                    && word
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
                if !valid {
                    return Err(err(
                        start_line,
                        start_col,
                        format!("invalid identifier `{word}`: identifiers match [a-z][a-z0-9_]*"),
                    ));
                }
                let tok = keyword(&word).unwrap_or(Tok::Ident(word));
                out.push(Token {
                    tok,
                    line: start_line,
                    column: start_col,
                });
                continue;
            }
            _ => {}
        }
        let two = |next: char| chars.get(i + 1) == Some(&next);
        let (tok, n) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '~' => (Tok::Tilde, 1),
            '<' if two('=') => (Tok::Le, 2),
            '>' if two('=') => (Tok::Ge, 2),
            '<' => (Tok::Lt, 1),
            '>' => (Tok::Gt, 1),
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        out.push(Token {
            tok,
            line: start_line,
            column: start_col,
        });
        advance(n, &mut i, &mut col);
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_periods() {
        assert_eq!(
            toks("x < 5.0."),
            [
                Tok::Ident("x".into()),
                Tok::Lt,
                Tok::Num(5.0),
                Tok::Dot,
                Tok::Eof
            ]
        );
        assert_eq!(toks("100."), [Tok::Num(100.0), Tok::Dot, Tok::Eof]);
        assert_eq!(
            toks("1e-3 -2.5"),
            [Tok::Num(1e-3), Tok::Num(-2.5), Tok::Eof]
        );
    }

    #[test]
    fn comments_strings_positions() {
        let t = tokenize("# hi\n  star_map(\"a\\\"b\"). # tail").unwrap();
        assert_eq!(
            t[0],
            Token {
                tok: Tok::StarMap,
                line: 2,
                column: 3
            }
        );
        assert_eq!(t[2].tok, Tok::Str("a\"b".into()));
        assert_eq!(t.last().unwrap().tok, Tok::Eof);
    }

    #[test]
    fn lexical_errors() {
        let e = tokenize("Foo if bar.").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        assert!(tokenize("a if b $ c.").is_err());
        assert!(tokenize("star_map(\"open").is_err());
    }
}
