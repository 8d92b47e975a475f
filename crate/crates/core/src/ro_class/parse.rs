//! Text grammar for regularity indices.
//!
//! ```text
//! expr   := term ('*' term)*
//! term   := atom ('^' number)?
//! atom   := 'pow(' number ')' | 'log(' number ')' | 'loglog(' number ')'
//!         | 'rho(' number ')' | 'one' | 'table(' path [',' number] ')'
//!         | '(' expr ')'
//! number := ['+'|'-'] decimal ['/' decimal]
//! ```
//!
//! Adjacent power-log atoms merge into one `PowerLog` node. `rho(a)` applies
//! `rho_shift(·, a)` to everything to its left within the same product.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{RegularityIndex, Table};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

pub fn parse_index(text: &str) -> Result<RegularityIndex, ParseError> {
    parse_index_in(text, None)
}

/// Parses with `table(...)` paths resolved against `base`.
pub fn parse_index_in(text: &str, base: Option<&Path>) -> Result<RegularityIndex, ParseError> {
    let mut c = Cursor::new(text, base);
    let phi = c.expr()?;
    c.finish()?;
    Ok(phi)
}

pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    base: Option<&'a Path>,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &str, base: Option<&'a Path>) -> Self {
        Self { chars: text.chars().collect(), pos: 0, base }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { column: self.pos + 1, message: message.into() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn eat(&mut self, ch: char) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, ch: char) -> Result<(), ParseError> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{ch}'")))
        }
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
        }
    }

    pub(crate) fn save(&self) -> usize {
        self.pos
    }

    pub(crate) fn restore(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub(crate) fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn decimal(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_exp = false;
        while self.pos < self.chars.len() {
            let ch = self.chars[self.pos];
            let sign_in_exp = (ch == '-' || ch == '+')
                && seen_exp
                && matches!(self.chars.get(self.pos - 1), Some('e') | Some('E'));
            if ch.is_ascii_digit() || ch == '.' || sign_in_exp {
                self.pos += 1;
            } else if (ch == 'e' || ch == 'E') && !seen_exp && self.pos > start {
                seen_exp = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error(if text.is_empty() {
                "expected a number".to_string()
            } else {
                format!("invalid number '{text}'")
            })
        })
    }

    pub(crate) fn number(&mut self) -> Result<f64, ParseError> {
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let mut v = self.decimal()?;
        if self.eat('/') {
            let d = self.decimal()?;
            if d == 0.0 {
                return Err(self.error("division by zero"));
            }
            v /= d;
        }
        Ok(if neg { -v } else { v })
    }

    fn paren_number(&mut self) -> Result<f64, ParseError> {
        self.expect('(')?;
        let v = self.number()?;
        self.expect(')')?;
        Ok(v)
    }

    fn raw_until(&mut self, stops: &[char]) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && !stops.contains(&self.chars[self.pos]) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect::<String>().trim().to_string()
    }

    pub(crate) fn expr(&mut self) -> Result<RegularityIndex, ParseError> {
        let mut acc: Option<(RegularityIndex, bool)> = None;
        loop {
            acc = Some(self.term(acc)?);
            if !self.eat('*') {
                break;
            }
        }
        Ok(acc.expect("at least one term").0)
    }

    /// Parses one term and folds it into the running product. The flag
    /// records whether the accumulated value may still absorb bare atoms.
    fn term(
        &mut self,
        acc: Option<(RegularityIndex, bool)>,
    ) -> Result<(RegularityIndex, bool), ParseError> {
        let at = self.save();
        let name = self.ident();
        if name.as_deref() == Some("rho") {
            let a = self.paren_number()?;
            let (base, bare) = acc.unwrap_or((RegularityIndex::one(), true));
            let shifted = base.rho_shift(a);
            let bare = bare && matches!(shifted, RegularityIndex::PowerLog { .. });
            return Ok((shifted, bare));
        }
        self.restore(at);
        let (mut atom, grouped) = self.atom()?;
        if self.eat('^') {
            let e = self.number()?;
            atom = match atom {
                RegularityIndex::PowerLog { s, r, k } if !grouped => {
                    RegularityIndex::PowerLog { s: s * e, r: r * e, k: k * e }
                }
                other => other.powered(e),
            };
        }
        let atom_bare = !grouped && matches!(atom, RegularityIndex::PowerLog { .. });
        Ok(match acc {
            None => (atom, atom_bare),
            Some((prev, prev_bare)) => multiply(prev, prev_bare, atom, atom_bare),
        })
    }

    fn atom(&mut self) -> Result<(RegularityIndex, bool), ParseError> {
        if self.eat('(') {
            let inner = self.expr()?;
            self.expect(')')?;
            return Ok((inner, true));
        }
        self.skip_ws();
        let at = self.save();
        let name = self.ident().ok_or_else(|| self.error("expected a factor"))?;
        match name.as_str() {
            "pow" => Ok((RegularityIndex::power(self.paren_number()?), false)),
            "log" => Ok((RegularityIndex::power_log(0.0, self.paren_number()?, 0.0), false)),
            "loglog" => Ok((RegularityIndex::power_log(0.0, 0.0, self.paren_number()?), false)),
            "one" => Ok((RegularityIndex::one(), false)),
            "table" => {
                self.expect('(')?;
                let path_at = self.save();
                let raw = self.raw_until(&[',', ')']);
                if raw.is_empty() {
                    return Err(self.error("expected a table path"));
                }
                let slope = if self.eat(',') { Some(self.number()?) } else { None };
                self.expect(')')?;
                let path = match self.base {
                    Some(b) if Path::new(&raw).is_relative() => b.join(&raw),
                    _ => PathBuf::from(&raw),
                };
                Table::from_file(&path, slope)
                    .map(|t| (RegularityIndex::Tabulated(t), false))
                    .map_err(|e| {
                        self.restore(path_at);
                        self.error(e.to_string())
                    })
            }
            other => {
                self.restore(at);
                Err(self.error(format!("unknown factor '{other}'")))
            }
        }
    }
}

fn multiply(
    a: RegularityIndex,
    a_bare: bool,
    b: RegularityIndex,
    b_bare: bool,
) -> (RegularityIndex, bool) {
    use RegularityIndex::*;
    match (a, b) {
        (PowerLog { s: s1, r: r1, k: k1 }, PowerLog { s: s2, r: r2, k: k2 }) if a_bare && b_bare => {
            (PowerLog { s: s1 + s2, r: r1 + r2, k: k1 + k2 }, true)
        }
        (Product(mut fs), b) => {
            fs.push(b);
            (Product(fs), false)
        }
        (a, b) => (Product(vec![a, b]), false),
    }
}
