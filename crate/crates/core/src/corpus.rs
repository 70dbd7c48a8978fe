//! Code-switch keyword lists, tweet ingestion and keyword filtering.
//!
//! Tweets are read from JSONL files that mimic crawler output. A tweet is
//! considered code-switched when it was tagged as English upstream and
//! contains at least one Spanish or Spanglish keyword as a whole token.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{fold, is_punctuation, nfc};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    pub lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl RawTweet {
    /// Normalizes `text` to NFC and checks the record invariants.
    pub fn validated(mut self) -> std::result::Result<Self, String> {
        self.text = nfc(&self.text);
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        if self.lang.len() != 2 || !self.lang.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(format!("invalid lang code {:?}", self.lang));
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeywordSource {
    Spanish,
    Spanglish,
}

pub const MIN_KEYWORD_LEN: usize = 4;

/// Ordered, duplicate-free set of lowercase query words.
#[derive(Clone, Debug, Default)]
pub struct KeywordList {
    words: Vec<String>,
    sources: Vec<KeywordSource>,
    lookup: HashSet<String>,
}

impl KeywordList {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, KeywordSource)> + '_ {
        self.words.iter().map(String::as_str).zip(self.sources.iter().copied())
    }

    pub fn source(&self, word: &str) -> Option<KeywordSource> {
        self.words.iter().position(|w| w == word).map(|i| self.sources[i])
    }

    fn push(&mut self, word: String, source: KeywordSource) {
        if self.lookup.insert(word.clone()) {
            self.words.push(word);
            self.sources.push(source);
        }
    }
}

/// Builds the keyword list from candidate words.
///
/// Spanish candidates are dropped when shorter than four characters, when
/// they also occur in `portuguese_dict`, or when they are proper nouns.
/// Spanglish candidates skip the Portuguese check but obey the other two
/// rules. All comparisons are on NFC-normalized lowercase forms.
pub fn build_keyword_list<S: AsRef<str>>(
    spanish_candidates: &[S],
    spanglish_candidates: &[S],
    portuguese_dict: &[S],
    proper_nouns: &[S],
) -> Result<KeywordList> {
    let folded = |words: &[S]| -> HashSet<String> { words.iter().map(|w| fold(w.as_ref())).collect() };
    let portuguese = folded(portuguese_dict);
    let proper = folded(proper_nouns);

    let long_enough = |w: &str| w.chars().count() >= MIN_KEYWORD_LEN;
    let mut list = KeywordList::default();
    for w in spanish_candidates.iter().map(|w| fold(w.as_ref())) {
        if long_enough(&w) && !portuguese.contains(&w) && !proper.contains(&w) {
            list.push(w, KeywordSource::Spanish);
        }
    }
    for w in spanglish_candidates.iter().map(|w| fold(w.as_ref())) {
        if long_enough(&w) && !proper.contains(&w) {
            list.push(w, KeywordSource::Spanglish);
        }
    }

    if list.is_empty() {
        return Err(Error::EmptyKeywordList);
    }
    Ok(list)
}

/// A JSONL line that could not be turned into a [`RawTweet`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipRecord {
    pub line: usize,
    pub reason: String,
}

/// Streams tweets out of a JSONL reader in file order.
///
/// Malformed lines are yielded as `Err(SkipRecord)` and do not stop the
/// stream. Blank lines are ignored entirely.
pub struct TweetReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    pub parsed: usize,
    pub skipped: usize,
}

impl<R: BufRead> TweetReader<R> {
    pub fn new(reader: R) -> Self {
        TweetReader {
            lines: reader.lines(),
            line_no: 0,
            parsed: 0,
            skipped: 0,
        }
    }
}

impl<R: BufRead> Iterator for TweetReader<R> {
    type Item = std::io::Result<std::result::Result<RawTweet, SkipRecord>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    self.line_no += 1;
                    self.skipped += 1;
                    return Some(Ok(Err(SkipRecord {
                        line: self.line_no,
                        reason: "invalid UTF-8".into(),
                    })));
                }
                Err(e) => return Some(Err(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str::<RawTweet>(&line)
                .map_err(|e| e.to_string())
                .and_then(RawTweet::validated);
            return Some(Ok(match record {
                Ok(t) => {
                    self.parsed += 1;
                    Ok(t)
                }
                Err(reason) => {
                    self.skipped += 1;
                    Err(SkipRecord {
                        line: self.line_no,
                        reason,
                    })
                }
            }));
        }
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub tweets: Vec<RawTweet>,
    pub skipped: Vec<SkipRecord>,
}

/// Reads a whole JSONL file. Fails if more than half of the non-blank lines
/// are malformed.
pub fn ingest_jsonl(path: &Path) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(&path.display().to_string(), BufReader::new(file))
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
}

pub fn ingest_reader<R: BufRead>(source_name: &str, reader: R) -> Result<Ingested> {
    let mut out = Ingested::default();
    for item in TweetReader::new(reader) {
        match item.map_err(|e| Error::io(source_name, e))? {
            Ok(t) => out.tweets.push(t),
            Err(skip) => out.skipped.push(skip),
        }
    }
    let total = out.tweets.len() + out.skipped.len();
    if out.skipped.len() * 2 > total {
        return Err(Error::MostlyMalformed {
            source_name: source_name.to_owned(),
            malformed: out.skipped.len(),
            total,
        });
    }
    Ok(out)
}

fn match_tokens(lowered: &str) -> impl Iterator<Item = &str> {
    lowered
        .split(|c: char| c.is_whitespace() || is_punctuation(c))
        .filter(|t| !t.is_empty())
}

/// Whether any keyword occurs as a whole token of `text`.
pub fn has_keyword(text: &str, keywords: &KeywordList) -> bool {
    let lowered = fold(text);
    let hit = match_tokens(&lowered).any(|t| keywords.contains(t));
    hit
}

fn dedup_key(text: &str) -> String {
    fold(text).split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keeps English-tagged tweets with at least one whole-token keyword hit,
/// dropping later exact duplicates (compared case-insensitively with
/// collapsed whitespace).
pub fn filter_code_switched<'a, I>(tweets: I, keywords: &'a KeywordList) -> impl Iterator<Item = RawTweet> + 'a
where
    I: IntoIterator<Item = RawTweet>,
    I::IntoIter: 'a,
{
    let mut seen = HashSet::new();
    tweets.into_iter().filter(move |t| {
        t.lang == "en" && has_keyword(&t.text, keywords) && seen.insert(dedup_key(&t.text))
    })
}
