//! Minimal s-expression reader shared by the expression and domain grammars.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Splits `(head arg...)` into the head symbol and its arguments.
    pub fn head(&self) -> Result<(&str, &[SExpr]), ParseError> {
        let items = self
            .as_list()
            .ok_or_else(|| ParseError::at(self.pos(), "expected a list"))?;
        let (first, rest) = items
            .split_first()
            .ok_or_else(|| ParseError::at(self.pos(), "empty list"))?;
        let name = first
            .as_atom()
            .ok_or_else(|| ParseError::at(first.pos(), "expected a symbol in head position"))?;
        Ok((name, rest))
    }

    pub fn number(&self) -> Result<f64, ParseError> {
        let text = self
            .as_atom()
            .ok_or_else(|| ParseError::at(self.pos(), "expected a number"))?;
        let value = match text {
            "inf" | "+inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => text
                .parse::<f64>()
                .map_err(|_| ParseError::at(self.pos(), format!("invalid number `{text}`")))?,
        };
        if value.is_nan() {
            return Err(ParseError::at(self.pos(), "NaN is not allowed"));
        }
        Ok(value)
    }

    pub fn finite(&self) -> Result<f64, ParseError> {
        let v = self.number()?;
        if !v.is_finite() {
            return Err(ParseError::at(self.pos(), "expected a finite number"));
        }
        Ok(v)
    }

    pub fn index(&self) -> Result<usize, ParseError> {
        let text = self
            .as_atom()
            .ok_or_else(|| ParseError::at(self.pos(), "expected an index"))?;
        text.parse::<usize>()
            .map_err(|_| ParseError::at(self.pos(), format!("invalid index `{text}`")))
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(s, _) => f.write_str(s),
            SExpr::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Checks the argument count of a form.
pub fn expect_arity(form: &SExpr, args: &[SExpr], n: usize) -> Result<(), ParseError> {
    if args.len() != n {
        return Err(ParseError::at(
            form.pos(),
            format!("expected {n} argument(s), found {}", args.len()),
        ));
    }
    Ok(())
}

/// Formats a float so that `str::parse` recovers it exactly.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

/// Parses exactly one expression; `;` starts a comment running to end of line.
pub fn parse(text: &str) -> Result<SExpr, ParseError> {
    let mut reader = Reader::new(text);
    reader.skip_ws();
    let expr = reader.read()?;
    reader.skip_ws();
    if let Some(_) = reader.peek() {
        return Err(ParseError::at(reader.pos(), "trailing input after expression"));
    }
    Ok(expr)
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr, ParseError> {
        let start = self.pos();
        match self.peek() {
            None => Err(ParseError::at(start, "unexpected end of input")),
            Some(')') => Err(ParseError::at(start, "unexpected `)`")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(ParseError::at(start, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut atom = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(atom, start))
            }
        }
    }
}
