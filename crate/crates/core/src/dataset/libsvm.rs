//! LIBSVM / svmlight text format.
//!
//! ```text
//! <label> <index>:<value> <index>:<value> ...
//! ```
//!
//! Labels are `+1`, `1` or `-1`. A line whose first token already contains a
//! colon is an unlabeled instance. Indices are 1-based and strictly ascending.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{Dataset, Instance, Label};
use crate::error::{Error, Result};

pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut instances = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        instances.push(parse_line(line).map_err(|msg| Error::Parse { line: n + 1, msg })?);
    }
    Ok(Dataset::new(instances))
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

fn parse_line(line: &str) -> std::result::Result<Instance, String> {
    let mut tokens = line.split_whitespace().peekable();
    let label = match tokens.peek() {
        Some(t) if !t.contains(':') => {
            let t = tokens.next().unwrap();
            Some(match t {
                "+1" | "1" => Label::Pos,
                "-1" => Label::Neg,
                other => return Err(format!("label must be +1, 1 or -1, found {other:?}")),
            })
        }
        _ => None,
    };

    let mut features = Vec::new();
    let mut prev = 0u32;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| format!("expected <index>:<value>, found {tok:?}"))?;
        let idx: u32 = idx
            .parse()
            .map_err(|_| format!("invalid feature index {idx:?}"))?;
        if idx == 0 {
            return Err("feature indices are 1-based".into());
        }
        if idx <= prev {
            return Err(format!(
                "feature index {idx} is not ascending (previous {prev})"
            ));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("invalid feature value {val:?}"))?;
        if !val.is_finite() {
            return Err(format!("feature {idx} has non-finite value {val}"));
        }
        features.push((idx, val));
        prev = idx;
    }
    Instance::new(features, label).map_err(|e| e.to_string())
}

/// Serializes a dataset; every value is printed in shortest round-trip form.
pub fn to_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for x in data.instances() {
        let mut first = true;
        if let Some(l) = x.label() {
            out.push_str(if l.is_pos() { "+1" } else { "-1" });
            first = false;
        }
        for &(i, v) in x.features() {
            if !first {
                out.push(' ');
            }
            write!(out, "{i}:{v}").unwrap();
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(to_libsvm(data).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_two_lines() {
        let d = parse_libsvm_str("+1 1:0.5 3:-2\n-1 2:1").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.dim(), 3);
        let labels: Vec<_> = d.instances().iter().map(|x| x.label()).collect();
        assert_eq!(labels, vec![Some(Label::Pos), Some(Label::Neg)]);
        assert_eq!(d.instances()[0].features(), &[(1, 0.5), (3, -2.0)]);
    }

    #[test]
    fn empty_stream() {
        let d = parse_libsvm_str("").unwrap();
        assert_eq!(d.len(), 0);
        assert_eq!(d.dim(), 0);
    }

    #[test]
    fn rejects_descending_indices() {
        match parse_libsvm_str("+1 3:1 1:2") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn error_carries_line_number() {
        let err = parse_libsvm_str("+1 1:1\n\n-1 2:x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(matches!(
            parse_libsvm_str("+1 1:1 1:2"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_libsvm_str("+1 1:nan").is_err());
        assert!(parse_libsvm_str("+1 1:inf").is_err());
        assert!(parse_libsvm_str("+1 1").is_err());
    }

    #[test]
    fn rejects_zero_one_labels() {
        assert!(parse_libsvm_str("0 1:1").is_err());
        assert!(parse_libsvm_str("2 1:1").is_err());
        assert!(parse_libsvm_str("1 1:1").is_ok());
    }

    #[test]
    fn unlabeled_lines() {
        let d = parse_libsvm_str("1:0.25 4:1\n").unwrap();
        assert_eq!(d.instances()[0].label(), None);
        assert_eq!(d.dim(), 4);
        assert_eq!(to_libsvm(&d), "1:0.25 4:1\n");
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (
            proptest::collection::btree_map(1u32..50, -1e6f64..1e6, 0..6),
            prop_oneof![Just(None), Just(Some(Label::Pos)), Just(Some(Label::Neg))],
        )
            .prop_map(|(feats, label)| Instance::new(feats.into_iter().collect(), label).unwrap())
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(xs in proptest::collection::vec(arb_instance(), 0..8)) {
            // an unlabeled instance without features serializes to an empty line
            let xs: Vec<_> = xs
                .into_iter()
                .filter(|x| x.label().is_some() || !x.features().is_empty())
                .collect();
            let d = Dataset::new(xs);
            let back = parse_libsvm_str(&to_libsvm(&d)).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
