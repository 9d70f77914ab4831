//! Tokenizer and s-expression reader with source positions.

use std::fmt;

use super::{ErrorKind, ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, span: SourceSpan },
    List { items: Vec<Sexp>, span: SourceSpan },
}

impl Sexp {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Sexp::Atom { span, .. } | Sexp::List { span, .. } => span,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// The first atom of a list, used as its keyword.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|items| items.first()).and_then(Sexp::atom)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { text, .. } => f.write_str(text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "-_?!:.=+*/<>#@".contains(c)
}

#[derive(Debug, PartialEq, Eq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

fn tokenize(text: &str, file: &str) -> Result<Vec<(Token, SourceSpan)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let span = |len: usize| SourceSpan::new(file, line, col, len);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
            }
            '(' => {
                out.push((Token::Open, span(1)));
                chars.next();
                col += 1;
            }
            ')' => {
                out.push((Token::Close, span(1)));
                chars.next();
                col += 1;
            }
            c if is_symbol_char(c) => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    text.push(c.to_ascii_lowercase());
                    chars.next();
                }
                let len = text.chars().count();
                out.push((Token::Atom(text), span(len)));
                col += len;
            }
            other => {
                return Err(ParseError::new(ErrorKind::Lexical, span(1), format!("unexpected character {other:?}")));
            }
        }
    }
    Ok(out)
}

/// Reads every top-level expression in `text`.
pub fn read_all(text: &str, file: &str) -> Result<Vec<Sexp>, ParseError> {
    let tokens = tokenize(text, file)?;
    let mut stack: Vec<(SourceSpan, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    for (tok, span) in tokens {
        match tok {
            Token::Open => stack.push((span, Vec::new())),
            Token::Close => {
                let Some((open, items)) = stack.pop() else {
                    return Err(ParseError::new(ErrorKind::Syntax, span, "unbalanced ')'"));
                };
                let list = Sexp::List { items, span: open };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            Token::Atom(text) => {
                let atom = Sexp::Atom { text, span };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((open, _)) = stack.pop() {
        return Err(ParseError::new(ErrorKind::Syntax, open, "'(' is never closed"));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_lowercases() {
        let xs = read_all("(Define (Domain D)) ; note\n(a)", "f").unwrap();
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[0].to_string(), "(define (domain d))");
        assert_eq!(xs[1].span().line, 2);
    }

    #[test]
    fn atom_spans_cover_the_atom() {
        let xs = read_all("  (foo barbaz)", "f").unwrap();
        let items = xs[0].list().unwrap();
        let s = items[1].span();
        assert_eq!((s.line, s.column, s.length), (1, 8, 6));
    }

    #[test]
    fn bad_character_is_lexical() {
        let e = read_all("(a\n  $b)", "f").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Lexical);
        assert_eq!((e.span.line, e.span.column), (2, 3));
    }

    #[test]
    fn unbalanced_parens_are_syntax_errors() {
        let e = read_all("(a (b)", "f").unwrap_err();
        assert_eq!((e.kind, e.span.line, e.span.column), (ErrorKind::Syntax, 1, 1));
        let e = read_all("(a))", "f").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (1, 4));
    }
}
