//! Flat `key=value` text documents.
//!
//! One entry per line, keys unique, `#` starts a comment line. Reals are
//! written with 17 significant digits so they parse back to the same bits;
//! arrays are comma-separated.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KvError {
    #[error("line {line}: expected `key=value`")]
    Malformed { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
}

/// Format a real with 17 significant digits (round-trippable).
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn fmt_reals(xs: &[f64]) -> String {
    xs.iter()
        .map(|&x| fmt_real(x))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Default, Clone)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn str(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key}={value}");
        self
    }

    pub fn real(&mut self, key: &str, value: f64) -> &mut Self {
        self.str(key, fmt_real(value))
    }

    pub fn reals(&mut self, key: &str, values: &[f64]) -> &mut Self {
        self.str(key, fmt_reals(values))
    }

    pub fn ints<T: std::fmt::Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.str(key, joined)
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

/// Parsed document, entries kept in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct KvDocument {
    entries: Vec<(String, String)>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(KvError::Malformed { line: i + 1 })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(KvError::Malformed { line: i + 1 });
            }
            if entries.iter().any(|(existing, _)| *existing == key) {
                return Err(KvError::DuplicateKey { line: i + 1, key });
            }
            entries.push((key, v.trim().to_string()));
        }
        Ok(KvDocument { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.into()))
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<T, KvError> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| KvError::BadValue {
            key: key.into(),
            value: raw.into(),
        })
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, KvError> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| KvError::BadValue {
                    key: key.into(),
                    value: s.into(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_lookup() {
        let doc = KvDocument::parse("# header\nn=12\n\nv = 0.5\nxs=1,2,3\n").unwrap();
        assert_eq!(doc.parse_value::<usize>("n").unwrap(), 12);
        assert_eq!(doc.parse_value::<f64>("v").unwrap(), 0.5);
        assert_eq!(doc.parse_list::<u32>("xs").unwrap(), vec![1, 2, 3]);
        assert_eq!(doc.keys().collect::<Vec<_>>(), vec!["n", "v", "xs"]);
        assert_eq!(
            doc.parse_value::<f64>("missing"),
            Err(KvError::MissingKey("missing".into()))
        );
    }

    #[test]
    fn rejects_bad_documents() {
        assert_eq!(
            KvDocument::parse("a=1\nnoequals\n"),
            Err(KvError::Malformed { line: 2 })
        );
        assert!(matches!(
            KvDocument::parse("a=1\na=2"),
            Err(KvError::DuplicateKey { line: 2, .. })
        ));
        let doc = KvDocument::parse("a=x").unwrap();
        assert!(doc.parse_value::<f64>("a").is_err());
    }

    #[test]
    fn non_finite_reals_roundtrip() {
        assert!(fmt_real(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(
            fmt_real(f64::INFINITY).parse::<f64>().unwrap(),
            f64::INFINITY
        );
    }

    proptest! {
        #[test]
        fn reals_roundtrip_bitwise(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let s = fmt_real(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
