//! Small text helpers shared by the corpus and preprocessing stages.

use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Unicode punctuation (general category P*) or any ASCII punctuation
/// character, which also covers ASCII symbols such as `$` and `|`.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || c.general_category_group() == GeneralCategoryGroup::Punctuation
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// NFC-normalized lowercase form used for every case-insensitive comparison.
pub fn fold(s: &str) -> String {
    nfc(&s.trim().to_lowercase())
}

/// Splits raw bytes into UTF-8 lines, reporting the first invalid line.
pub(crate) fn utf8_lines<'a>(source_name: &str, bytes: &'a [u8]) -> Result<Vec<&'a str>> {
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw)
            .map_err(|e| Error::parse(source_name, i + 1, format!("invalid UTF-8: {e}")))?;
        lines.push(line);
    }
    if bytes.ends_with(b"\n") {
        lines.pop();
    }
    Ok(lines)
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads a one-word-per-line list. Blank lines and lines starting with `#`
/// are ignored; words are returned trimmed but not case-folded.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let bytes = read_bytes(path)?;
    parse_word_list(&path.display().to_string(), &bytes)
}

pub fn parse_word_list(source_name: &str, bytes: &[u8]) -> Result<Vec<String>> {
    Ok(utf8_lines(source_name, bytes)?
        .into_iter()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanish_and_ascii_punctuation() {
        for c in ['¿', '¡', '«', '»', '!', '?', '.', '$', '|', '…', '\u{2014}'] {
            assert!(is_punctuation(c), "{c}");
        }
        for c in ['a', 'ñ', '😂', '1', ' '] {
            assert!(!is_punctuation(c), "{c}");
        }
    }

    #[test]
    fn word_list_skips_comments_and_reports_bad_utf8() {
        let words = parse_word_list("x", b"# header\ncalor\n\n  janguear \n").unwrap();
        assert_eq!(words, ["calor", "janguear"]);

        let err = parse_word_list("kw.txt", b"calor\n\xff\xfe\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fold_composes() {
        // "Ä" written as A + combining diaeresis
        assert_eq!(fold("A\u{0308}"), "\u{e4}");
    }
}
