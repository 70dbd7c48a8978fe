//! Tweet text to token sequences: tokenization, English contraction
//! expansion, stopword and punctuation removal.

mod tokenize;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::RawTweet;
use crate::error::{Error, Result};
use crate::text::{fold, nfc, parse_word_list, read_bytes, utf8_lines};

pub use tokenize::{is_emoji_grapheme, tokenize, Token, TokenKind};

pub const EN_STOPWORDS: &str = include_str!("../../data/en_stopwords.txt");
pub const ES_STOPWORDS: &str = include_str!("../../data/es_stopwords.txt");
pub const CONTRACTIONS: &str = include_str!("../../data/contractions.tsv");

/// Contraction → expansion words, keyed by lowercase contraction.
#[derive(Clone, Debug, Default)]
pub struct ContractionTable(HashMap<String, Vec<String>>);

impl ContractionTable {
    pub fn parse(source_name: &str, bytes: &[u8]) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in utf8_lines(source_name, bytes)?.into_iter().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, i + 1, "expected contraction<TAB>expansion"))?;
            let words: Vec<String> = to.split_whitespace().map(fold).collect();
            if words.is_empty() {
                return Err(Error::parse(source_name, i + 1, "empty expansion"));
            }
            map.insert(fold(from), words);
        }
        Ok(ContractionTable(map))
    }

    pub fn shipped() -> Self {
        Self::parse("contractions.tsv", CONTRACTIONS.as_bytes()).expect("shipped table parses")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.0.get(word).map(Vec::as_slice)
    }
}

pub type StopwordSet = HashSet<String>;

pub fn parse_stopwords(source_name: &str, bytes: &[u8]) -> Result<StopwordSet> {
    Ok(parse_word_list(source_name, bytes)?.iter().map(|w| fold(w)).collect())
}

/// Replaces mapped contractions by their expansion words.
pub fn expand_contractions(tokens: Vec<Token>, table: &ContractionTable) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match (tok.kind, table.get(&tok.text)) {
            (TokenKind::Word, Some(expansion)) => out.extend(expansion.iter().map(Token::word)),
            _ => out.push(tok),
        }
    }
    out
}

/// Drops stopwords and punctuation-only tokens. Emoji are never dropped.
pub fn remove_stopwords_and_punct(tokens: Vec<Token>, en: &StopwordSet, es: &StopwordSet) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| match t.kind {
            TokenKind::Emoji => true,
            TokenKind::Word => !(t.is_punctuation_only() || en.contains(&t.text) || es.contains(&t.text)),
            _ => !t.is_punctuation_only(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessedDocument {
    pub source_id: String,
    pub tokens: Vec<Token>,
}

impl ProcessedDocument {
    /// Documents left without tokens are kept but flagged.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            id: self.source_id.clone(),
            tokens: self.texts(),
        }
    }
}

/// On-disk JSONL form of a processed document: `{"id": ..., "tokens": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Reads a processed-document JSONL file. Every line must parse.
pub fn read_documents(path: &Path) -> Result<Vec<DocumentRecord>> {
    let bytes = read_bytes(path)?;
    let name = path.display().to_string();
    let mut docs = Vec::new();
    for (i, line) in utf8_lines(&name, &bytes)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(line).map_err(|e| Error::parse(&name, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Immutable preprocessing configuration.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    pub en_stopwords: StopwordSet,
    pub es_stopwords: StopwordSet,
    pub contractions: ContractionTable,
}

impl Default for Preprocessor {
    /// Uses the stopword lists and contraction table shipped in `data/`.
    fn default() -> Self {
        Preprocessor {
            en_stopwords: parse_stopwords("en_stopwords.txt", EN_STOPWORDS.as_bytes()).unwrap(),
            es_stopwords: parse_stopwords("es_stopwords.txt", ES_STOPWORDS.as_bytes()).unwrap(),
            contractions: ContractionTable::shipped(),
        }
    }
}

impl Preprocessor {
    pub fn from_files(en_stopwords: &Path, es_stopwords: &Path, contractions: &Path) -> Result<Self> {
        let load = |p: &Path| read_bytes(p).map(|b| (p.display().to_string(), b));
        let (en_name, en) = load(en_stopwords)?;
        let (es_name, es) = load(es_stopwords)?;
        let (c_name, c) = load(contractions)?;
        Ok(Preprocessor {
            en_stopwords: parse_stopwords(&en_name, &en)?,
            es_stopwords: parse_stopwords(&es_name, &es)?,
            contractions: ContractionTable::parse(&c_name, &c)?,
        })
    }

    pub fn tokens(&self, text: &str) -> Vec<Token> {
        let tokens = tokenize(&nfc(text));
        let tokens = expand_contractions(tokens, &self.contractions);
        remove_stopwords_and_punct(tokens, &self.en_stopwords, &self.es_stopwords)
    }

    pub fn document(&self, tweet: &RawTweet) -> ProcessedDocument {
        ProcessedDocument {
            source_id: tweet.id.clone(),
            tokens: self.tokens(&tweet.text),
        }
    }
}

/// Runs the full pipeline on one tweet.
pub fn preprocess_document(tweet: &RawTweet, config: &Preprocessor) -> ProcessedDocument {
    config.document(tweet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    fn set(words: &[&str]) -> StopwordSet {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn shipped_data_loads() {
        let p = Preprocessor::default();
        assert_eq!(p.en_stopwords.len(), 179);
        assert_eq!(p.es_stopwords.len(), 313);
        assert!(p.contractions.len() >= 120);
    }

    #[test]
    fn contraction_examples() {
        let table = ContractionTable::shipped();
        let got = expand_contractions(vec![Token::word("can't")], &table);
        assert_eq!(got, [Token::word("cannot")]);
        let got = expand_contractions(vec![Token::word("don't")], &table);
        assert_eq!(got, [Token::word("do"), Token::word("not")]);
        let got = expand_contractions(vec![Token::word("hola")], &table);
        assert_eq!(got, [Token::word("hola")]);
        // only word tokens are expanded
        let got = expand_contractions(vec![Token::new(TokenKind::Hashtag, "#can't")], &table);
        assert_eq!(got[0].text, "#can't");
    }

    #[test]
    fn stopword_examples() {
        let en = set(&["the"]);
        let es = set(&[]);
        let got = remove_stopwords_and_punct(vec![Token::word("the"), Token::word("calor")], &en, &es);
        assert_eq!(got, [Token::word("calor")]);

        let got = remove_stopwords_and_punct(vec![Token::emoji("😂")], &set(&["😂"]), &set(&["😂"]));
        assert_eq!(got, [Token::emoji("😂")]);

        let got = remove_stopwords_and_punct(vec![Token::word("¿?"), Token::word("«»")], &en, &es);
        assert!(got.is_empty());
    }

    #[test]
    fn pipeline_example() {
        let p = Preprocessor::default();
        let tweet = RawTweet {
            id: "7".into(),
            text: "I can't believe el calor 😂!!".into(),
            lang: "en".into(),
            created_at: None,
        };
        let doc = preprocess_document(&tweet, &p);
        assert_eq!(doc.source_id, "7");
        assert_eq!(texts(&doc.tokens), ["cannot", "believe", "calor", "😂"]);
        assert!(!doc.is_empty());
    }

    #[test]
    fn empty_documents_are_flagged() {
        let p = Preprocessor::default();
        assert!(p.tokens("").is_empty());
        assert!(p.tokens("the la el").is_empty());
    }

    #[test]
    fn bad_contraction_line() {
        let err = ContractionTable::parse("c.tsv", b"can't\tcannot\nbroken line\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
