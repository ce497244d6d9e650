//! Helpers shared by the line-oriented text formats.

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Appends `name v_1 ... v_n\n`.
pub fn push_line<V: std::fmt::Display>(out: &mut String, name: &str, values: impl IntoIterator<Item = V>) {
    out.push_str(name);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

pub fn push_values<V: std::fmt::Display>(out: &mut String, values: impl IntoIterator<Item = V>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Splits a file into its body and trailing `checksum <hex>` line, and
/// verifies the digest of the body.
pub fn split_checksummed(text: &str) -> Result<&str> {
    let trimmed = text
        .strip_suffix('\n')
        .ok_or_else(|| Error::Truncated("missing final newline".into()))?;
    let cut = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let (body, last) = trimmed.split_at(cut);
    let stored = last
        .strip_prefix("checksum ")
        .ok_or_else(|| Error::Truncated("missing checksum line".into()))?;
    let computed = sha256_hex(body.as_bytes());
    if stored != computed {
        return Err(Error::ChecksumMismatch {
            stored: stored.to_string(),
            computed,
        });
    }
    Ok(body)
}

/// Line cursor with 1-based line numbers for error messages.
pub struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    pub fn line(&self) -> usize {
        self.line
    }

    pub fn next_raw(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(Error::Truncated(format!("expected {what}"))),
        }
    }

    /// Next line, which must start with `keyword`; returns the remaining fields.
    pub fn keyed(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let raw = self.next_raw(keyword)?;
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some(k) if k == keyword => Ok(fields.collect()),
            other => Err(self.error(format!("expected `{keyword}`, found {:?}", other.unwrap_or("")))),
        }
    }

    pub fn fields(&mut self, what: &str) -> Result<Vec<&'a str>> {
        Ok(self.next_raw(what)?.split_whitespace().collect())
    }

    pub fn finish(&mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some((i, l)) => Err(Error::Format {
                line: i + 1,
                msg: format!("unexpected trailing content {l:?}"),
            }),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            line: self.line,
            msg: msg.into(),
        }
    }

    pub fn parse<V: FromStr>(&self, s: &str) -> Result<V> {
        s.parse().map_err(|_| self.error(format!("cannot parse {s:?}")))
    }

    pub fn parse_all<V: FromStr>(&self, fields: &[&str], expected: usize) -> Result<Vec<V>> {
        if fields.len() != expected {
            return Err(self.error(format!("expected {expected} values, found {}", fields.len())));
        }
        fields.iter().map(|f| self.parse(f)).collect()
    }
}
