//! Line-delimited machine-readable records: `kind key=value key=value`.
//! Values are percent-escaped so a record always round-trips through one
//! line of text.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Record {
        Record {
            kind: kind.into(),
            fields: Vec::new(),
        }
    }

    pub fn field(mut self, key: impl Into<String>, value: impl ToString) -> Record {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut out = escape(&self.kind);
        for (k, v) in &self.fields {
            out.push(' ');
            out.push_str(&escape(k));
            out.push('=');
            out.push_str(&escape(v));
        }
        out
    }

    pub fn parse_line(line: &str) -> Result<Record> {
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let kind = unescape(parts.next().ok_or_else(|| Error::Parse {
            line: 1,
            column: 1,
            message: "empty record".into(),
        })?)?;
        let mut fields = Vec::new();
        for part in parts {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
                line: 1,
                column: 1,
                message: format!("field `{part}` has no `=`"),
            })?;
            fields.push((unescape(k)?, unescape(v)?));
        }
        Ok(Record { kind, fields })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b' ' | b'=' | b'%' | b'\n' | b'\r' | b'\t' => {
                out.push('%');
                out.push_str(&format!("{b:02X}"));
            }
            _ => out.push(b as char),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 2 > bytes.len() {
                return Err(Error::Parse {
                    line: 1,
                    column: i + 1,
                    message: "truncated escape".into(),
                });
            }
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).map_err(|_| Error::Parse {
                line: 1,
                column: i + 1,
                message: "bad escape".into(),
            })?;
            let b = u8::from_str_radix(hex, 16).map_err(|_| Error::Parse {
                line: 1,
                column: i + 1,
                message: "bad escape".into(),
            })?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::Parse {
        line: 1,
        column: 1,
        message: "record is not UTF-8".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_record_roundtrip() {
        let r = Record::new("bounds")
            .field("metric", "PN")
            .field("lower", 0.175)
            .field("note", "has spaces = and % signs");
        let line = r.to_line();
        assert!(!line.contains("  "));
        assert_eq!(Record::parse_line(&line).unwrap(), r);
    }

    proptest! {
        #[test]
        fn arbitrary_ascii_roundtrips(
            kind in "[a-z]{1,8}",
            key in "[a-z]{1,8}",
            value in "[ -~]{0,24}",
        ) {
            let r = Record::new(kind).field(key, value);
            let parsed = Record::parse_line(&r.to_line()).unwrap();
            prop_assert_eq!(parsed, r);
        }
    }
}
