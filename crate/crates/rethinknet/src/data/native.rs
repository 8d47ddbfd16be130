//! The native sparse text format.
//!
//! Line 1: `N d K`. Then N lines, each `labels<TAB>features` where `labels`
//! is a comma-separated list of relevant label indices (empty for none) and
//! `features` is a space-separated list of `index:value` pairs (entries not
//! listed are 0). Values are written with the shortest representation that
//! parses back to the same f64, so save followed by load is the identity.

use std::fmt::Write as _;
use std::path::Path;

use crate::costs::LabelVector;
use crate::error::{Error, Result};
use crate::kernels::Tensor;

use super::Dataset;

pub fn load_native(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&display, 1, "empty file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(&display, 1, "header must be `N d K`"))?;
    let [n, d, k] = dims[..] else {
        return Err(Error::parse(&display, 1, "header must be `N d K`"));
    };
    if n == 0 || d == 0 || k == 0 {
        return Err(Error::parse(&display, 1, "N, d and K must all be >= 1"));
    }

    let mut features = Tensor::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if row >= n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(
                &display,
                line_no,
                format!("more than the declared {n} example lines"),
            ));
        }
        let (label_part, feature_part) = line.split_once('\t').ok_or_else(|| {
            Error::parse(&display, line_no, "example line needs a TAB separator")
        })?;

        let mut bits = vec![0u8; k];
        let label_part = label_part.trim();
        if !label_part.is_empty() {
            for token in label_part.split(',') {
                let index: usize = token.trim().parse().map_err(|_| {
                    Error::parse(&display, line_no, format!("bad label index {token:?}"))
                })?;
                if index >= k {
                    return Err(Error::parse(
                        &display,
                        line_no,
                        format!("label index {index} out of range 0..{k}"),
                    ));
                }
                bits[index] = 1;
            }
        }
        labels.push(LabelVector::new(bits)?);

        let mut seen = vec![false; d];
        for pair in feature_part.split_whitespace() {
            let (idx_tok, val_tok) = pair.split_once(':').ok_or_else(|| {
                Error::parse(&display, line_no, format!("feature entry {pair:?} needs index:value"))
            })?;
            let index: usize = idx_tok.parse().map_err(|_| {
                Error::parse(&display, line_no, format!("bad feature index {idx_tok:?}"))
            })?;
            if index >= d {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("feature index {index} out of range 0..{d}"),
                ));
            }
            if seen[index] {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("feature index {index} given twice"),
                ));
            }
            seen[index] = true;
            let value: f64 = val_tok.parse().map_err(|_| {
                Error::parse(&display, line_no, format!("bad feature value {val_tok:?}"))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(&display, line_no, "non-finite feature value"));
            }
            features[[row, index]] = value;
        }
        row += 1;
    }
    if row != n {
        // Point at the line where the next example should have been.
        return Err(Error::parse(
            &display,
            row + 2,
            format!("declared {n} examples but found {row}"),
        ));
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "native".into());
    Dataset::with_default_names(name, features, labels)
}

pub fn save_native(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        ds.n_examples(),
        ds.n_features(),
        ds.n_labels()
    );
    for (row, lv) in ds.features.rows().into_iter().zip(&ds.labels) {
        let relevant: Vec<String> = lv
            .bits()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i.to_string())
            .collect();
        out.push_str(&relevant.join(","));
        out.push('\t');
        let mut first = true;
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{j}:{v}");
                first = false;
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
