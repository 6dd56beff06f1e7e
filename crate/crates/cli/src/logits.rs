//! The `scod-logits v1` interchange format.
//!
//! ```text
//! scod-logits v1 L=3 E=2
//! in,1,0.5,2.25,-1,0.8,0.1,-0.3
//! out,-,1.5,0.25,0,-,0.4,0.9
//! ```
//!
//! Each record holds an origin (`in`, `out`, `wild`, `strict_in`), a class
//! label or `-`, `L` class logits, the OOD logit or `-`, and `E` embedding
//! coordinates.

use std::fmt::Write as _;

use scod::distributions::Origin;

use crate::error::{CliError, CliResult};

const MAGIC: &str = "scod-logits v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub origin: Origin,
    pub label: Option<usize>,
    pub logits: Vec<f64>,
    pub ood_logit: Option<f64>,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitsFile {
    pub num_classes: usize,
    pub embedding_dim: usize,
    pub records: Vec<Record>,
}

fn origin_name(o: Origin) -> &'static str {
    match o {
        Origin::Inlier => "in",
        Origin::Outlier => "out",
        Origin::Wild => "wild",
        Origin::StrictInlier => "strict_in",
    }
}

fn parse_header(line: &str) -> CliResult<(usize, usize)> {
    let err = || {
        CliError::Data(format!(
            "line 1: expected header `{MAGIC} L=<n> E=<m>`, got `{line}`"
        ))
    };
    let rest = line.strip_prefix(MAGIC).ok_or_else(err)?;
    let mut parts = rest.split_whitespace();
    let l = parts
        .next()
        .and_then(|p| p.strip_prefix("L="))
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(err)?;
    let e = parts
        .next()
        .and_then(|p| p.strip_prefix("E="))
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(err)?;
    if parts.next().is_some() || l == 0 {
        return Err(err());
    }
    Ok((l, e))
}

fn parse_record(line: &str, l: usize, e: usize) -> Result<Record, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let expected = 2 + l + 1 + e;
    if fields.len() != expected {
        return Err(format!(
            "expected {expected} fields for L={l} E={e}, found {}",
            fields.len()
        ));
    }
    let origin = match fields[0] {
        "in" => Origin::Inlier,
        "out" => Origin::Outlier,
        "wild" => Origin::Wild,
        "strict_in" => Origin::StrictInlier,
        other => return Err(format!("unknown origin `{other}`")),
    };
    let label = match fields[1] {
        "-" => None,
        v => {
            let y: usize = v.parse().map_err(|_| format!("bad label `{v}`"))?;
            if y >= l {
                return Err(format!("label {y} out of range for L={l}"));
            }
            Some(y)
        }
    };
    match (origin, label) {
        (Origin::Inlier, None) => return Err("inlier record without a label".into()),
        (Origin::Outlier | Origin::Wild, Some(_)) => {
            return Err("only inlier records carry labels".into())
        }
        _ => {}
    }
    let num = |s: &str| -> Result<f64, String> {
        let v: f64 = s.parse().map_err(|_| format!("bad number `{s}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value `{s}`"))
        }
    };
    let logits = fields[2..2 + l]
        .iter()
        .map(|s| num(s))
        .collect::<Result<Vec<_>, _>>()?;
    let ood_logit = match fields[2 + l] {
        "-" => None,
        v => Some(num(v)?),
    };
    let embedding = fields[3 + l..]
        .iter()
        .map(|s| num(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Record {
        origin,
        label,
        logits,
        ood_logit,
        embedding,
    })
}

impl LogitsFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| CliError::Data("empty logits file".into()))?;
        let (l, e) = parse_header(header.trim())?;
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let rec = parse_record(line, l, e).map_err(|m| {
                CliError::Data(format!(
                    "record {} (line {}): {m}",
                    records.len() + 1,
                    i + 1
                ))
            })?;
            records.push(rec);
        }
        if records.is_empty() {
            return Err(CliError::Data(
                "logits file has a header but no records".into(),
            ));
        }
        Ok(Self {
            num_classes: l,
            embedding_dim: e,
            records,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} L={} E={}\n", self.num_classes, self.embedding_dim);
        for r in &self.records {
            out.push_str(origin_name(r.origin));
            match r.label {
                Some(y) => write!(out, ",{y}").unwrap(),
                None => out.push_str(",-"),
            }
            for v in &r.logits {
                write!(out, ",{v}").unwrap();
            }
            match r.ood_logit {
                Some(s) => write!(out, ",{s}").unwrap(),
                None => out.push_str(",-"),
            }
            for v in &r.embedding {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.records.iter().filter(|r| r.origin == origin).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text =
            "scod-logits v1 L=2 E=1\nin,1,0.5,-2,0.25,3\nout,-,1,2,-,0.1\nstrict_in,-,0,0,1e-3,7\n";
        let f = LogitsFile::parse(text).unwrap();
        assert_eq!(f.records.len(), 3);
        assert_eq!(f.records[0].label, Some(1));
        assert_eq!(f.records[1].ood_logit, None);
        assert_eq!(LogitsFile::parse(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn reports_record_and_line() {
        let text = "scod-logits v1 L=2 E=0\nin,0,1,2,-\n\nin,0,1,-\n";
        match LogitsFile::parse(text) {
            Err(CliError::Data(m)) => assert!(m.starts_with("record 2 (line 4)"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_headers_and_values() {
        for text in [
            "",
            "scod-logits v2 L=2 E=0\n",
            "scod-logits v1 L=0 E=0\nin,0,-\n",
            "scod-logits v1 L=1 E=0\n",
        ] {
            assert!(
                matches!(LogitsFile::parse(text), Err(CliError::Data(_))),
                "{text:?}"
            );
        }
        for rec in [
            "in,-,1,-",
            "out,0,1,-",
            "in,3,1,-",
            "in,0,nan,-",
            "zoo,0,1,-",
            "in,0,x,-",
        ] {
            let text = format!("scod-logits v1 L=1 E=0\n{rec}\n");
            assert!(
                matches!(LogitsFile::parse(&text), Err(CliError::Data(_))),
                "{rec}"
            );
        }
    }
}
