//! Line-level tokenizer. Comments run from `#` to end of line.

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    Eq,
    LParen,
    RParen,
    Comma,
    Dot,
    Minus,
    Plus,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based character column.
    pub col: usize,
}

/// Tokenizes one line. On failure returns the offending column and a message.
pub(crate) fn lex_line(line: &str) -> Result<Vec<Token>, (usize, String)> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '=' => Some(Tok::Eq),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '-' => Some(Tok::Minus),
            '+' => Some(Tok::Plus),
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => Some(Tok::Dot),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            let digits = |i: &mut usize| {
                let s = *i;
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
                *i - s
            };
            let mut n = digits(&mut i);
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                n += digits(&mut i);
            }
            if n == 0 {
                return Err((col, "malformed number".into()));
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if digits(&mut i) == 0 {
                    return Err((col, "malformed exponent".into()));
                }
            }
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                return Err((i + 1, format!("unexpected character {:?} after number", chars[i])));
            }
            out.push(Token { tok: Tok::Number(chars[start..i].iter().collect()), col });
            continue;
        }
        return Err((col, format!("unexpected character {c:?}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex_line(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_statement() {
        assert_eq!(
            toks("c = pl.Crank((0,-1.5e-3), .5) # hi"),
            vec![
                Tok::Ident("c".into()),
                Tok::Eq,
                Tok::Ident("pl".into()),
                Tok::Dot,
                Tok::Ident("Crank".into()),
                Tok::LParen,
                Tok::LParen,
                Tok::Number("0".into()),
                Tok::Comma,
                Tok::Minus,
                Tok::Number("1.5e-3".into()),
                Tok::RParen,
                Tok::Comma,
                Tok::Number(".5".into()),
                Tok::RParen,
            ]
        );
    }

    #[test]
    fn reports_columns() {
        assert_eq!(lex_line("a = 1 $").unwrap_err().0, 7);
        assert_eq!(lex_line("a = 1e").unwrap_err().0, 5);
        assert_eq!(lex_line("a = 12abc").unwrap_err().0, 7);
        assert!(lex_line("# only a comment").unwrap().is_empty());
    }
}
