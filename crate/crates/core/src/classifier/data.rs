use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SentimentLabel;
use crate::error::{Error, Result};
use crate::preprocess::Preprocessor;
use crate::text::{read_bytes, utf8_lines};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: SentimentLabel,
}

impl LabeledExample {
    /// True when preprocessing left no tokens; such examples encode as
    /// all-PAD.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits `id<TAB>label<TAB>text` lines. A first line reading
/// `id<TAB>label<TAB>text` is treated as a header. Blank lines are skipped.
pub fn parse_labeled_tsv(source_name: &str, bytes: &[u8]) -> Result<Vec<(String, SentimentLabel, String)>> {
    let mut rows = Vec::new();
    for (line_no, line) in (1..).zip(utf8_lines(source_name, bytes)?) {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(text)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(source_name, line_no, "expected id<TAB>label<TAB>text"));
        };
        if line_no == 1 && id == "id" && label == "label" {
            continue;
        }
        let label = label
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()))?;
        rows.push((id.to_owned(), label, text.to_owned()));
    }
    Ok(rows)
}

/// Loads a labeled TSV and preprocesses each text.
pub fn load_labeled_tsv(path: &Path, pre: &Preprocessor) -> Result<Vec<LabeledExample>> {
    let bytes = read_bytes(path)?;
    let rows = parse_labeled_tsv(&path.display().to_string(), &bytes)?;
    Ok(rows
        .into_iter()
        .map(|(id, label, text)| LabeledExample {
            id,
            tokens: pre.tokens(&text).into_iter().map(|t| t.text).collect(),
            label,
        })
        .collect())
}

#[derive(Deserialize, Serialize)]
struct JsonExample {
    id: String,
    label: String,
    tokens: Vec<String>,
}

/// Loads pre-tokenized examples, one `{"id", "label", "tokens"}` object per
/// line.
pub fn load_labeled_jsonl(path: &Path) -> Result<Vec<LabeledExample>> {
    let bytes = read_bytes(path)?;
    parse_labeled_jsonl(&path.display().to_string(), &bytes)
}

pub fn parse_labeled_jsonl(source_name: &str, bytes: &[u8]) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (line_no, line) in (1..).zip(utf8_lines(source_name, bytes)?) {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonExample =
            serde_json::from_str(line).map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        let label = rec
            .label
            .parse()
            .map_err(|e: Error| Error::parse(source_name, line_no, e.to_string()))?;
        out.push(LabeledExample {
            id: rec.id,
            tokens: rec.tokens,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_with_header_and_tabs_in_text() {
        let src = b"id\tlabel\ttext\n1\tpositive\tI can't believe el calor \xF0\x9F\x98\x82\n\n2\tNEGATIVE\ta\tb\n";
        let rows = parse_labeled_tsv("t", src).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1], ("2".into(), SentimentLabel::Negative, "a\tb".into()));
        let pre = Preprocessor::default();
        let tokens: Vec<String> = pre.tokens(&rows[0].2).into_iter().map(|t| t.text).collect();
        assert_eq!(tokens, ["cannot", "believe", "calor", "😂"]);
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let err = parse_labeled_tsv("t", b"1\tpositive\tok\n2\tmixed\tno\n").unwrap_err();
        assert!(err.to_string().starts_with("t:2:"), "{err}");
        let err = parse_labeled_tsv("t", b"1\tpositive\n").unwrap_err();
        assert!(err.to_string().starts_with("t:1:"), "{err}");
    }

    #[test]
    fn jsonl_examples() {
        let src = br#"{"id":"a","label":"neutral","tokens":["hola","mundo"]}
{"id":"b","label":"positive","tokens":[]}
"#;
        let ex = parse_labeled_jsonl("j", src).unwrap();
        assert_eq!(ex[0].tokens, ["hola", "mundo"]);
        assert!(ex[1].is_empty());
        assert_eq!(ex[1].label, SentimentLabel::Positive);
    }
}
