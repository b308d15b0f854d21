//! Plain-text tensor files.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! format_version 1
//! kind super_symmetric
//! dims 3 3 3 3
//! entries 2
//! 1 1 1 1 2.8830000000000002e-1
//! 1 1 2 3 -2.9390000000000000e-1
//! ```
//!
//! Indices are 1-based. A `super_symmetric` file lists one entry per
//! permutation class, under its non-decreasing index; `general` and
//! `partial_symmetric` files list nonzero entries by full index. Entries not
//! listed are zero. Values are written with 17 significant digits so a
//! write/read cycle reproduces every bit.

use std::fmt::Write as _;
use std::str::FromStr;

use tensorpca::extensions::PartialSymmetricTensor;
use tensorpca::{GeneralTensor, SuperSymmetricTensor};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    SuperSymmetric,
    General,
    PartialSymmetric,
}

impl TensorKind {
    pub fn name(self) -> &'static str {
        match self {
            TensorKind::SuperSymmetric => "super_symmetric",
            TensorKind::General => "general",
            TensorKind::PartialSymmetric => "partial_symmetric",
        }
    }
}

impl FromStr for TensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "super_symmetric" => Ok(TensorKind::SuperSymmetric),
            "general" => Ok(TensorKind::General),
            "partial_symmetric" => Ok(TensorKind::PartialSymmetric),
            other => Err(format!(
                "unknown kind '{other}' (expected super_symmetric, general or partial_symmetric)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    SuperSymmetric(SuperSymmetricTensor),
    General(GeneralTensor),
    PartialSymmetric(PartialSymmetricTensor),
}

impl TensorData {
    pub fn kind(&self) -> TensorKind {
        match self {
            TensorData::SuperSymmetric(_) => TensorKind::SuperSymmetric,
            TensorData::General(_) => TensorKind::General,
            TensorData::PartialSymmetric(_) => TensorKind::PartialSymmetric,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match self {
            TensorData::SuperSymmetric(t) => vec![t.n(); t.order()],
            TensorData::General(t) => t.dims().to_vec(),
            TensorData::PartialSymmetric(t) => t.dense().dims().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column,
        message: message.into(),
    })
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_entry(out: &mut String, idx: &[usize], v: f64) {
    for i in idx {
        let _ = write!(out, "{} ", i + 1);
    }
    out.push_str(&format_value(v));
    out.push('\n');
}

/// Serializes a tensor. Output is deterministic for a given tensor.
pub fn write_tensor(t: &TensorData) -> String {
    let dims = t.dims();
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    match t {
        TensorData::SuperSymmetric(s) => entries.extend(s.entries().map(|(k, v)| (k.to_vec(), v))),
        TensorData::General(g) => g.for_each(|idx, v| {
            if v != 0.0 {
                entries.push((idx.to_vec(), v));
            }
        }),
        TensorData::PartialSymmetric(p) => p.dense().for_each(|idx, v| {
            if v != 0.0 {
                entries.push((idx.to_vec(), v));
            }
        }),
    }
    let mut out = String::new();
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "kind {}", t.kind().name());
    let dims_str: Vec<String> = dims.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "dims {}", dims_str.join(" "));
    let _ = writeln!(out, "entries {}", entries.len());
    for (idx, v) in &entries {
        write_entry(&mut out, idx, *v);
    }
    out
}

struct Header {
    kind: TensorKind,
    dims: Vec<usize>,
    count: usize,
}

/// A line number with its `(column, token)` pairs.
type TokenLine<'a> = (usize, Vec<(usize, &'a str)>);

fn expect_key<'a>(
    lines: &mut impl Iterator<Item = TokenLine<'a>>,
    key: &str,
    last_line: usize,
) -> Result<TokenLine<'a>, ParseError> {
    let Some((ln, toks)) = lines.next() else {
        return err(last_line + 1, 1, format!("unexpected end of file, expected '{key}'"));
    };
    if toks[0].1 != key {
        return err(ln, toks[0].0, format!("expected '{key}', found '{}'", toks[0].1));
    }
    Ok((ln, toks[1..].to_vec()))
}

fn parse_usize(ln: usize, (col, tok): (usize, &str), what: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .or_else(|_| err(ln, col, format!("invalid {what} '{tok}'")))
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = (usize, Vec<(usize, &'a str)>)>) -> Result<Header, ParseError> {
    let (ln, rest) = expect_key(lines, "format_version", 0)?;
    let [v] = rest[..] else {
        return err(ln, 1, "format_version takes one value");
    };
    let version = parse_usize(ln, v, "format version")?;
    if version != FORMAT_VERSION as usize {
        return err(ln, v.0, format!("unsupported format version {version}"));
    }

    let (ln, rest) = expect_key(lines, "kind", ln)?;
    let [k] = rest[..] else {
        return err(ln, 1, "kind takes one value");
    };
    let kind = TensorKind::from_str(k.1).or_else(|e| err(ln, k.0, e))?;

    let (ln, rest) = expect_key(lines, "dims", ln)?;
    if rest.is_empty() {
        return err(ln, 1, "dims needs at least one value");
    }
    let mut dims = Vec::with_capacity(rest.len());
    for tok in rest {
        let d = parse_usize(ln, tok, "dimension")?;
        if d == 0 {
            return err(ln, tok.0, "dimensions must be positive");
        }
        dims.push(d);
    }
    match kind {
        TensorKind::SuperSymmetric if dims.iter().any(|&d| d != dims[0]) => {
            return err(ln, 1, "super_symmetric tensors need equal dimensions");
        }
        TensorKind::PartialSymmetric if !(dims.len() == 4 && dims[0] == dims[2] && dims[1] == dims[3]) => {
            return err(ln, 1, "partial_symmetric tensors need dims n m n m");
        }
        _ => {}
    }

    let (ln, rest) = expect_key(lines, "entries", ln)?;
    let [c] = rest[..] else {
        return err(ln, 1, "entries takes one value");
    };
    let count = parse_usize(ln, c, "entry count")?;
    Ok(Header { kind, dims, count })
}

/// Parses a tensor file.
pub fn read_tensor(text: &str) -> Result<TensorData, ParseError> {
    let total_lines = text.lines().count();
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let toks = tokens(l);
        (!toks.is_empty() && !toks[0].1.starts_with('#')).then_some((i + 1, toks))
    });
    let header = parse_header(&mut lines)?;
    let order = header.dims.len();
    let mut entries: Vec<(usize, usize, Vec<usize>, f64)> = Vec::with_capacity(header.count);
    for (ln, toks) in lines.by_ref() {
        if entries.len() == header.count {
            return err(
                ln,
                toks[0].0,
                format!("more entries than the declared {}", header.count),
            );
        }
        if toks.len() != order + 1 {
            return err(
                ln,
                toks[0].0,
                format!("expected {order} indices and a value, found {} fields", toks.len()),
            );
        }
        let mut idx = Vec::with_capacity(order);
        for (k, tok) in toks[..order].iter().enumerate() {
            let i = parse_usize(ln, *tok, "index")?;
            if i == 0 || i > header.dims[k] {
                return err(ln, tok.0, format!("index {i} out of range 1..={}", header.dims[k]));
            }
            idx.push(i - 1);
        }
        let (col, vtok) = toks[order];
        let v: f64 = vtok
            .parse()
            .or_else(|_| err(ln, col, format!("invalid value '{vtok}'")))?;
        if !v.is_finite() {
            return err(ln, col, "values must be finite");
        }
        if header.kind == TensorKind::SuperSymmetric && idx.windows(2).any(|w| w[0] > w[1]) {
            return err(ln, toks[0].0, "super_symmetric entries must use non-decreasing indices");
        }
        entries.push((ln, toks[0].0, idx, v));
    }
    if entries.len() != header.count {
        return err(
            total_lines + 1,
            1,
            format!("declared {} entries, found {}", header.count, entries.len()),
        );
    }

    let mut sorted: Vec<&(usize, usize, Vec<usize>, f64)> = entries.iter().collect();
    sorted.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)));
    for w in sorted.windows(2) {
        if w[0].2 == w[1].2 {
            return err(w[1].0, w[1].1, format!("duplicate entry (first on line {})", w[0].0));
        }
    }

    let first_line = entries.first().map_or(total_lines, |e| e.0);
    let build_err = |e: tensorpca::Error| ParseError {
        line: first_line,
        column: 1,
        message: e.to_string(),
    };
    match header.kind {
        TensorKind::SuperSymmetric => {
            let n = header.dims[0];
            let t = SuperSymmetricTensor::from_entries(n, order, entries.into_iter().map(|e| (e.2, e.3)))
                .map_err(build_err)?;
            Ok(TensorData::SuperSymmetric(t))
        }
        TensorKind::General | TensorKind::PartialSymmetric => {
            let mut t = GeneralTensor::zeros(header.dims.clone()).map_err(build_err)?;
            for (_, _, idx, v) in entries {
                t.set(&idx, v).map_err(build_err)?;
            }
            if header.kind == TensorKind::General {
                Ok(TensorData::General(t))
            } else {
                Ok(TensorData::PartialSymmetric(
                    PartialSymmetricTensor::new(t).map_err(build_err)?,
                ))
            }
        }
    }
}
