use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Identifier, value label or number literal.
    Word(String),
    Str(String),
    Arrow,
    BiArrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Eq,
    Bar,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Arrow => "`->`".into(),
            Tok::BiArrow => "`<->`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Bar => "`|`".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let bump = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => bump(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(Error::Syntax { line: tl, col: tc, message: "unterminated string".into() });
                }
                out.push(Token { tok: Tok::Str(chars[start..j].iter().collect()), line: tl, col: tc });
                let n = j + 1 - i;
                bump(n, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Token { tok: Tok::Arrow, line: tl, col: tc });
                bump(2, &mut i, &mut col);
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                out.push(Token { tok: Tok::BiArrow, line: tl, col: tc });
                bump(3, &mut i, &mut col);
            }
            '{' | '}' | '[' | ']' | ';' | ',' | '=' | '|' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '=' => Tok::Eq,
                    _ => Tok::Bar,
                };
                out.push(Token { tok, line: tl, col: tc });
                bump(1, &mut i, &mut col);
            }
            c if is_word_char(c) || ((c == '-' || c == '+') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.')) => {
                let numeric = c.is_ascii_digit() || c == '.' || c == '-' || c == '+';
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exp_sign = numeric && (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if is_word_char(d) || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Word(chars[i..j].iter().collect()), line: tl, col: tc });
                let n = j - i;
                bump(n, &mut i, &mut col);
            }
            other => {
                return Err(Error::Syntax { line: tl, col: tc, message: format!("unexpected character `{other}`") });
            }
        }
    }
    Ok(out)
}
