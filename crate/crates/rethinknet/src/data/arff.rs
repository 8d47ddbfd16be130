//! Loader for a practical subset of the ARFF format: numeric attributes,
//! binary {0,1} nominal attributes, dense and sparse data rows, `%` comments.
//! Dates, strings, relational attributes and missing values are rejected.
//!
//! Which attributes are labels is decided by a [`LabelSpec`]: either the
//! trailing K attributes, or an XML list of `<label name="..."/>` elements
//! as shipped alongside multi-label repository files (order-significant).

use std::path::{Path, PathBuf};

use crate::costs::LabelVector;
use crate::error::{Error, Result};
use crate::kernels::Tensor;

use super::Dataset;

/// How to identify the label attributes of an ARFF file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSpec {
    /// The last K declared attributes are the labels.
    LastK(usize),
    /// Path to an XML file listing label names in order.
    Xml(PathBuf),
}

impl LabelSpec {
    /// Parses the CLI form `last_k:<K>` or `xml:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(k) = spec.strip_prefix("last_k:") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Config(format!("invalid label count in {spec:?}")))?;
            if k == 0 {
                return Err(Error::Config("label count must be >= 1".into()));
            }
            Ok(LabelSpec::LastK(k))
        } else if let Some(path) = spec.strip_prefix("xml:") {
            Ok(LabelSpec::Xml(PathBuf::from(path)))
        } else {
            Err(Error::Config(format!(
                "label spec must be last_k:<K> or xml:<path>, got {spec:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttrType {
    Numeric,
    BinaryNominal,
}

struct Attribute {
    name: String,
    ty: AttrType,
}

/// Extracts label names, in document order, from a label-list XML file.
/// Only `<label name="..."/>` elements are consulted.
pub fn parse_label_xml(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let mut names = Vec::new();
    let mut rest = text.as_str();
    while let Some(pos) = rest.find("<label") {
        let tail = &rest[pos + "<label".len()..];
        // Skip other tags sharing the prefix, e.g. the <labels> root.
        if !tail.starts_with(|c: char| c.is_whitespace() || c == '/' || c == '>') {
            rest = tail;
            continue;
        }
        let end = tail.find('>').ok_or_else(|| {
            Error::Schema(format!("{}: unterminated <label> element", path.display()))
        })?;
        let element = &tail[..end];
        let name = element
            .find("name=")
            .map(|at| &element[at + "name=".len()..])
            .and_then(|v| {
                let quote = v.chars().next()?;
                if quote != '"' && quote != '\'' {
                    return None;
                }
                let inner = &v[1..];
                inner.find(quote).map(|close| inner[..close].to_string())
            })
            .ok_or_else(|| {
                Error::Schema(format!(
                    "{}: <label> element without a quoted name attribute",
                    path.display()
                ))
            })?;
        names.push(name);
        rest = &tail[end..];
    }
    if names.is_empty() {
        return Err(Error::Schema(format!(
            "{}: no <label name=\"...\"/> elements found",
            path.display()
        )));
    }
    Ok(names)
}

/// Strips an optional matching pair of single or double quotes.
fn unquote(token: &str) -> &str {
    let bytes = token.as_bytes();
    if bytes.len() >= 2 && (bytes[0] == b'\'' || bytes[0] == b'"') && bytes[bytes.len() - 1] == bytes[0]
    {
        &token[1..token.len() - 1]
    } else {
        token
    }
}

fn parse_attribute(path: &str, line_no: usize, line: &str) -> Result<Attribute> {
    // Syntax: @attribute <name> <type>. The name may be quoted and the type
    // may be a numeric keyword or a nominal {a,b,...} set.
    let body = line["@attribute".len()..].trim();
    if body.is_empty() {
        return Err(Error::parse(path, line_no, "missing attribute name"));
    }
    let (raw_name, raw_type) = if body.starts_with('\'') || body.starts_with('"') {
        let quote = body.chars().next().unwrap();
        let close = body[1..]
            .find(quote)
            .ok_or_else(|| Error::parse(path, line_no, "unterminated quoted attribute name"))?;
        (&body[..close + 2], body[close + 2..].trim())
    } else {
        match body.find(char::is_whitespace) {
            Some(ws) => (&body[..ws], body[ws..].trim()),
            None => (body, ""),
        }
    };
    if raw_type.is_empty() {
        return Err(Error::parse(path, line_no, "missing attribute type"));
    }
    let name = unquote(raw_name).to_string();
    let ty = if raw_type.starts_with('{') {
        let close = raw_type
            .find('}')
            .ok_or_else(|| Error::parse(path, line_no, "unterminated nominal value set"))?;
        let mut values: Vec<&str> = raw_type[1..close]
            .split(',')
            .map(|v| unquote(v.trim()))
            .collect();
        values.sort_unstable();
        if values == ["0", "1"] {
            AttrType::BinaryNominal
        } else {
            return Err(Error::parse(
                path,
                line_no,
                format!("only binary {{0,1}} nominal attributes are supported, got {raw_type}"),
            ));
        }
    } else {
        match raw_type.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrType::Numeric,
            other => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("unsupported attribute type {other:?}"),
                ))
            }
        }
    };
    Ok(Attribute { name, ty })
}

fn parse_value(path: &str, line_no: usize, attr: &Attribute, token: &str) -> Result<f64> {
    let token = unquote(token.trim());
    if token == "?" {
        return Err(Error::parse(
            path,
            line_no,
            format!("missing value for attribute {:?}", attr.name),
        ));
    }
    let value: f64 = token.parse().map_err(|_| {
        Error::parse(
            path,
            line_no,
            format!("non-numeric token {token:?} for attribute {:?}", attr.name),
        )
    })?;
    if !value.is_finite() {
        return Err(Error::parse(
            path,
            line_no,
            format!("non-finite value for attribute {:?}", attr.name),
        ));
    }
    if attr.ty == AttrType::BinaryNominal && value != 0.0 && value != 1.0 {
        return Err(Error::parse(
            path,
            line_no,
            format!("nominal attribute {:?} only admits 0 or 1", attr.name),
        ));
    }
    Ok(value)
}

/// Loads an ARFF file, separating feature and label attributes per `label_spec`.
/// Labels keep the order given by the spec; features keep declaration order.
pub fn load_arff(path: impl AsRef<Path>, label_spec: &LabelSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)?;

    let mut relation = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "arff".into());
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                relation = unquote(line["@relation".len()..].trim()).to_string();
            } else if lower.starts_with("@attribute") {
                attributes.push(parse_attribute(&display, line_no, line)?);
            } else if lower.starts_with("@data") {
                if attributes.is_empty() {
                    return Err(Error::parse(&display, line_no, "@data before any @attribute"));
                }
                in_data = true;
            } else {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("unrecognized header line {line:?}"),
                ));
            }
            continue;
        }

        let n_attrs = attributes.len();
        let mut values = vec![0.0; n_attrs];
        if line.starts_with('{') {
            // Sparse row: {index value, index value, ...}; omitted attributes are 0.
            let close = line
                .rfind('}')
                .ok_or_else(|| Error::parse(&display, line_no, "unterminated sparse row"))?;
            let inner = line[1..close].trim();
            if !inner.is_empty() {
                for entry in inner.split(',') {
                    let mut parts = entry.trim().splitn(2, char::is_whitespace);
                    let index: usize = parts
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|_| Error::parse(&display, line_no, "bad sparse index"))?;
                    let token = parts.next().ok_or_else(|| {
                        Error::parse(&display, line_no, "sparse entry missing a value")
                    })?;
                    if index >= n_attrs {
                        return Err(Error::parse(
                            &display,
                            line_no,
                            format!("sparse index {index} out of range 0..{n_attrs}"),
                        ));
                    }
                    values[index] = parse_value(&display, line_no, &attributes[index], token)?;
                }
            }
        } else {
            let tokens: Vec<&str> = line.split(',').collect();
            if tokens.len() != n_attrs {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("expected {n_attrs} values, got {}", tokens.len()),
                ));
            }
            for (j, token) in tokens.iter().enumerate() {
                values[j] = parse_value(&display, line_no, &attributes[j], token)?;
            }
        }
        rows.push((line_no, values));
    }

    if !in_data {
        return Err(Error::Schema(format!("{display}: no @data section")));
    }
    if rows.is_empty() {
        return Err(Error::Schema(format!("{display}: no data rows")));
    }

    // Resolve which attribute indices are labels, in label order.
    let label_indices: Vec<usize> = match label_spec {
        LabelSpec::LastK(k) => {
            if *k >= attributes.len() {
                return Err(Error::Schema(format!(
                    "{display}: {k} labels over {} attributes leave no features",
                    attributes.len()
                )));
            }
            (attributes.len() - k..attributes.len()).collect()
        }
        LabelSpec::Xml(xml_path) => {
            let names = parse_label_xml(xml_path)?;
            let indices = names
                .iter()
                .map(|name| {
                    attributes
                        .iter()
                        .position(|a| &a.name == name)
                        .ok_or_else(|| {
                            Error::Schema(format!(
                                "{display}: label {name:?} from the XML list is not an attribute"
                            ))
                        })
                })
                .collect::<Result<Vec<usize>>>()?;
            let mut seen = vec![false; attributes.len()];
            for &i in &indices {
                if seen[i] {
                    return Err(Error::Schema(format!(
                        "{display}: label {:?} listed twice in the XML",
                        attributes[i].name
                    )));
                }
                seen[i] = true;
            }
            indices
        }
    };
    let is_label = {
        let mut mask = vec![false; attributes.len()];
        for &i in &label_indices {
            mask[i] = true;
        }
        mask
    };
    let feature_indices: Vec<usize> = (0..attributes.len()).filter(|&i| !is_label[i]).collect();
    if feature_indices.is_empty() {
        return Err(Error::Schema(format!(
            "{display}: every attribute is a label; no features remain"
        )));
    }

    let n = rows.len();
    let d = feature_indices.len();
    let mut features = Tensor::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (row_idx, (line_no, values)) in rows.iter().enumerate() {
        for (j, &attr_idx) in feature_indices.iter().enumerate() {
            features[[row_idx, j]] = values[attr_idx];
        }
        let bits: Vec<u8> = label_indices
            .iter()
            .map(|&attr_idx| {
                let v = values[attr_idx];
                if v == 0.0 || v == 1.0 {
                    Ok(v as u8)
                } else {
                    Err(Error::parse(
                        &display,
                        *line_no,
                        format!("label attribute {:?} has non-binary value {v}", attributes[attr_idx].name),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        labels.push(LabelVector::new(bits)?);
    }

    let feature_names = feature_indices
        .iter()
        .map(|&i| attributes[i].name.clone())
        .collect();
    let label_names = label_indices
        .iter()
        .map(|&i| attributes[i].name.clone())
        .collect();
    Dataset::new(relation, features, labels, feature_names, label_names)
}
