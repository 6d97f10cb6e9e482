//! Line-oriented text containers for datasets and trained models.
//!
//! Both formats are plain UTF-8: `key value` header lines, then blocks of
//! comma-separated rows. Scalars are written with the shortest text that
//! parses back to the identical bit pattern, so round trips are exact.

use std::fmt::Write as _;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;

/// Malformed container, located by 1-based line number and field name.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, field `{field}`: {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line, field: field.into(), message: message.into() }
    }
}

/// Cursor over the non-empty lines of a document.
pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
                .filter(|(_, l)| !l.trim().is_empty()),
        );
        Self { inner: it.peekable(), last: 0 }
    }

    pub(crate) fn line_no(&self) -> usize {
        self.last
    }

    pub(crate) fn next_line(&mut self, field: &str) -> Result<(usize, &'a str), ParseError> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(ParseError::new(self.last + 1, field, "unexpected end of input")),
        }
    }

    pub(crate) fn peek_is_none(&mut self) -> bool {
        self.inner.peek().is_none()
    }

    /// Reads `key value`, returning the value with surrounding spaces trimmed.
    pub(crate) fn expect_key(&mut self, key: &str) -> Result<(usize, &'a str), ParseError> {
        let (n, line) = self.next_line(key)?;
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(ParseError::new(n, key, format!("expected key `{key}`, found `{k}`")));
        }
        Ok((n, v.trim()))
    }

    pub(crate) fn expect_parsed<V: std::str::FromStr>(&mut self, key: &str) -> Result<V, ParseError>
    where
        V::Err: std::fmt::Display,
    {
        let (n, v) = self.expect_key(key)?;
        v.parse().map_err(|e: V::Err| ParseError::new(n, key, e.to_string()))
    }

    /// Reads `rows` lines of `cols` comma-separated scalars.
    pub(crate) fn read_matrix<T: Real>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
    ) -> Result<Matrix<T>, ParseError> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (n, line) = self.next_line(name)?;
            let before = data.len();
            for (c, tok) in line.split(',').enumerate() {
                let v = T::parse_text(tok)
                    .ok_or_else(|| ParseError::new(n, format!("{name}[{r},{c}]"), format!("bad number `{}`", tok.trim())))?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(ParseError::new(
                    n,
                    name,
                    format!("expected {cols} values, found {}", data.len() - before),
                ));
            }
        }
        Ok(Matrix::from_vec(rows, cols, data).expect("shape checked per row"))
    }
}

pub(crate) fn write_row<T: Real>(out: &mut String, row: &[T]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub(crate) fn write_matrix<T: Real>(out: &mut String, m: &Matrix<T>) {
    for row in m.row_iter() {
        write_row(out, row);
    }
}
