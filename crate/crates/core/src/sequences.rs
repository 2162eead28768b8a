//! Alphabets, symbol streams, side information and dataset file I/O.
//!
//! Positions are 1-indexed in the learner API: round `t` predicts
//! `output[t - 1]` from the history `output[..t - 1]` and the input row
//! `input.row(t - 1)`. Binary streams are stored as symbols `{0, 1}` and
//! converted to `{-1, +1}` only where a sign enters arithmetic.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Domain(format!("alphabet size must be >= 2, got {size}")));
        }
        if size > Symbol::MAX as usize {
            return Err(Error::Domain(format!("alphabet size {size} too large")));
        }
        Ok(Self { size })
    }

    pub fn binary() -> Self {
        Self { size: 2 }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_binary(&self) -> bool {
        self.size == 2
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s as usize) < self.size
    }
}

/// Maps a binary symbol to its sign: 0 -> -1, 1 -> +1.
#[inline]
pub fn sign_of(s: Symbol) -> f64 {
    if s == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Maps a sign back to a binary symbol; non-negative values map to 1.
#[inline]
pub fn symbol_of_sign(v: f64) -> Symbol {
    if v >= 0.0 {
        1
    } else {
        0
    }
}

/// Side-information vectors of a fixed dimension, stored row-major.
///
/// Dimension 0 is the regime without side information: every `x_t` is the
/// empty (zero) vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputStream {
    dim: usize,
    len: usize,
    data: Vec<f64>,
}

impl InputStream {
    pub fn zeros(len: usize) -> Self {
        Self {
            dim: 0,
            len,
            data: Vec::new(),
        }
    }

    /// Builds a stream from rows, rejecting rows with squared norm above 1.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(len * dim);
        for (step, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::LengthMismatch {
                    what: "input row",
                    got: row.len(),
                    expected: dim,
                });
            }
            let norm_sq: f64 = row.iter().map(|v| v * v).sum();
            if norm_sq > 1.0 {
                return Err(Error::NormTooLarge {
                    step: step + 1,
                    norm_sq,
                });
            }
            data.extend_from_slice(&row);
        }
        Ok(Self { dim, len, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Row at 0-based index.
    pub fn row(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub alphabet: Alphabet,
    pub output: Vec<Symbol>,
    pub input: InputStream,
    pub corruption_mask: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(
        alphabet: Alphabet,
        output: Vec<Symbol>,
        input: Option<InputStream>,
        corruption_mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if let Some(pos) = output.iter().position(|&s| !alphabet.contains(s)) {
            return Err(Error::SymbolOutOfAlphabet {
                symbol: output[pos] as i64,
                position: pos + 1,
                alphabet_size: alphabet.size(),
            });
        }
        let input = input.unwrap_or_else(|| InputStream::zeros(output.len()));
        if input.len() != output.len() {
            return Err(Error::LengthMismatch {
                what: "input stream",
                got: input.len(),
                expected: output.len(),
            });
        }
        if let Some(mask) = &corruption_mask {
            if mask.len() != output.len() {
                return Err(Error::LengthMismatch {
                    what: "corruption mask",
                    got: mask.len(),
                    expected: output.len(),
                });
            }
        }
        Ok(Self {
            alphabet,
            output,
            input,
            corruption_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.output.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output.is_empty()
    }

    /// Input vector for round `t` (1-indexed).
    pub fn x(&self, t: usize) -> &[f64] {
        self.input.row(t - 1)
    }

    /// History `y_1 .. y_{t-1}` visible at round `t`.
    pub fn history(&self, t: usize) -> &[Symbol] {
        &self.output[..t - 1]
    }

    /// Contiguous segments with absolute offsets; see [`split`].
    pub fn split(&self, fractions: &[f64]) -> Result<Vec<Segment>> {
        split(self.len(), fractions)
    }

    /// Whether round `t` counts towards accuracy.
    pub fn is_clean(&self, t: usize) -> bool {
        self.corruption_mask.as_ref().is_none_or(|m| !m[t - 1])
    }
}

/// Parses one whitespace-separated symbol token. Binary alphabets accept
/// `-1`/`+1` (and `0`/`1`); larger alphabets accept `0..K`.
fn parse_symbol(tok: &str, alphabet: Alphabet, line: usize, position: usize) -> Result<Symbol> {
    let normalized = tok.replace('\u{2212}', "-");
    let v: i64 = normalized
        .trim_start_matches('+')
        .parse()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("not an integer symbol: {tok:?}"),
        })?;
    let sym = if alphabet.is_binary() {
        match v {
            -1 | 0 => Some(0),
            1 => Some(1),
            _ => None,
        }
    } else if v >= 0 && (v as usize) < alphabet.size() {
        Some(v as Symbol)
    } else {
        None
    };
    sym.ok_or(Error::SymbolOutOfAlphabet {
        symbol: v,
        position,
        alphabet_size: alphabet.size(),
    })
}

pub fn parse_symbols(text: &str, alphabet: Alphabet) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let position = out.len() + 1;
            out.push(parse_symbol(tok, alphabet, lineno + 1, position)?);
        }
    }
    Ok(out)
}

pub fn parse_side_info(text: &str) -> Result<InputStream> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("not a decimal: {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    InputStream::from_rows(rows)
}

pub fn parse_mask(text: &str) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        match line.trim() {
            "" => continue,
            "0" => out.push(false),
            "1" => out.push(true),
            other => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("mask entries must be 0 or 1, got {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

/// Loads a symbol stream with optional side-information and mask files.
pub fn load_dataset(
    path: impl AsRef<Path>,
    alphabet: Alphabet,
    side_info: Option<&Path>,
    mask: Option<&Path>,
) -> Result<Dataset> {
    let output = parse_symbols(&fs::read_to_string(path)?, alphabet)?;
    let input = side_info
        .map(|p| fs::read_to_string(p).map_err(Error::from).and_then(|s| parse_side_info(&s)))
        .transpose()?;
    let mask = mask
        .map(|p| fs::read_to_string(p).map_err(Error::from).and_then(|s| parse_mask(&s)))
        .transpose()?;
    Dataset::new(alphabet, output, input, mask)
}

pub fn format_symbols(symbols: &[Symbol], alphabet: Alphabet) -> String {
    let mut out = String::with_capacity(symbols.len() * 3);
    for (i, &s) in symbols.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if alphabet.is_binary() {
            out.push_str(if s == 0 { "-1" } else { "+1" });
        } else {
            let _ = write!(out, "{s}");
        }
    }
    out.push('\n');
    out
}

pub fn format_mask(mask: &[bool]) -> String {
    mask.iter().map(|&m| if m { "1\n" } else { "0\n" }).collect()
}

/// A contiguous prefix-ordered segment of a stream. Rounds inside it keep
/// the full preceding history; only the scored range is restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// 0-based offset of the first element.
    pub start: usize,
    /// 0-based exclusive end.
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// 1-indexed rounds covered by the segment.
    pub fn rounds(&self) -> Range<usize> {
        self.start + 1..self.end + 1
    }

    pub fn symbols<'a>(&self, ds: &'a Dataset) -> &'a [Symbol] {
        &ds.output[self.start..self.end]
    }
}

/// Splits `len` positions into contiguous segments with boundaries at
/// `floor(cumulative_fraction * len)`.
pub fn split(len: usize, fractions: &[f64]) -> Result<Vec<Segment>> {
    if fractions.is_empty() {
        return Err(Error::InvalidFractions("no fractions given".into()));
    }
    if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidFractions(format!("fraction {f} not in (0, 1]")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions(format!("fractions sum to {total}, not 1")));
    }
    let mut segments = Vec::with_capacity(fractions.len());
    let mut cumulative = 0.0;
    let mut start = 0;
    for (index, f) in fractions.iter().enumerate() {
        cumulative += f;
        let end = if index + 1 == fractions.len() {
            len
        } else {
            // guard against 0.6 * 10 landing on 5.999...
            ((cumulative * len as f64) + 1e-9).floor() as usize
        };
        let end = end.min(len);
        if end <= start {
            return Err(Error::EmptySegment { index, len });
        }
        segments.push(Segment { start, end });
        start = end;
    }
    Ok(segments)
}
