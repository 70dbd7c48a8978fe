//! word2vec-compatible text format.
//!
//! ```text
//! <vocab size> <dim>
//! word v1 v2 ... v_dim
//! ```
//!
//! Values use the shortest `%.9g` rendering; only input vectors are stored.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats `v` like C's `printf("%.9g", v)`.
pub fn format_g(v: f64) -> String {
    format_g_precision(v, SIGNIFICANT_DIGITS)
}

fn format_g_precision(v: f64, precision: usize) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", precision - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= precision as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (precision as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_owned()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_text<F: Scalar, W: Write>(model: &EmbeddingMatrix<F>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", model.len(), model.dim)?;
    let mut line = String::new();
    for (i, word) in model.vocab.words().iter().enumerate() {
        line.clear();
        line.push_str(word);
        for v in model.vector(i) {
            line.push(' ');
            line.push_str(&format_g(v.to_f64_lossy()));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn read_text<F: Scalar, R: BufRead>(source_name: &str, reader: R) -> Result<EmbeddingMatrix<F>> {
    let mut lines = reader.lines();
    let io_err = |e| Error::io(source_name, e);
    let header = lines
        .next()
        .transpose()
        .map_err(io_err)?
        .ok_or_else(|| Error::parse(source_name, 1, "missing header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(source_name, 1, format!("bad header: {e}")))?;
    let [n_words, dim] = dims[..] else {
        return Err(Error::parse(source_name, 1, "header must be `<words> <dim>`"));
    };

    let mut words = Vec::with_capacity(n_words);
    let mut data = Vec::with_capacity(n_words * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(io_err)?;
        if line.is_empty() && words.len() == n_words {
            continue;
        }
        if words.len() == n_words {
            return Err(Error::parse(source_name, line_no, format!("more than {n_words} rows")));
        }
        let mut parts = line.split(' ').filter(|p| !p.is_empty());
        let word = parts
            .next()
            .ok_or_else(|| Error::parse(source_name, line_no, "empty row"))?;
        let before = data.len();
        for p in parts {
            let v: f64 = p
                .parse()
                .map_err(|_| Error::parse(source_name, line_no, format!("bad number {p:?}")))?;
            data.push(F::from_f64_lossy(v));
        }
        let got = data.len() - before;
        if got != dim {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected {dim} values, found {got}"),
            ));
        }
        words.push(word.to_owned());
    }
    if words.len() != n_words {
        return Err(Error::parse(
            source_name,
            words.len() + 2,
            format!("expected {n_words} rows, found {}", words.len()),
        ));
    }
    let vocab = Vocabulary::from_words(words)
        .map_err(|e| Error::parse(source_name, 1, e.to_string()))?;
    Ok(EmbeddingMatrix::from_input_vectors(vocab, dim, data))
}

/// Writes the model to `path` in text format.
pub fn save_text<F: Scalar>(model: &EmbeddingMatrix<F>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_text(model, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_text<F: Scalar>(path: &Path) -> Result<EmbeddingMatrix<F>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_text(&path.display().to_string(), std::io::BufReader::new(file))
}
