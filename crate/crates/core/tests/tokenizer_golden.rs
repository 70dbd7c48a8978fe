//! Pins tokenizer and preprocessing output on a fixed tweet corpus.
//! Run with `UPDATE_GOLDEN=1` to rewrite the expected file after an
//! intentional change.

use std::path::PathBuf;

use csembed::preprocess::{tokenize, Preprocessor, TokenKind};
use serde_json::json;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures").join(name)
}

fn kind(k: TokenKind) -> &'static str {
    match k {
        TokenKind::Word => "word",
        TokenKind::Emoji => "emoji",
        TokenKind::Hashtag => "hashtag",
        TokenKind::Mention => "mention",
        TokenKind::Url => "url",
        TokenKind::Number => "number",
    }
}

fn render(corpus: &str) -> String {
    let pre = Preprocessor::default();
    corpus
        .lines()
        .map(|text| {
            let tokens: Vec<String> = tokenize(text).iter().map(|t| format!("{}:{}", kind(t.kind), t.text)).collect();
            let processed: Vec<String> = pre.tokens(text).into_iter().map(|t| t.text).collect();
            json!({"text": text, "tokens": tokens, "processed": processed}).to_string() + "\n"
        })
        .collect()
}

#[test]
fn corpus_matches_golden_output() {
    let corpus = std::fs::read_to_string(fixture("tokenizer_corpus.txt")).unwrap();
    assert_eq!(corpus.lines().count(), 100);
    let got = render(&corpus);
    let path = fixture("tokenizer_golden.jsonl");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    for (i, (g, w)) in got.lines().zip(want.lines()).enumerate() {
        assert_eq!(g, w, "line {}", i + 1);
    }
    assert_eq!(got.lines().count(), want.lines().count());
}
