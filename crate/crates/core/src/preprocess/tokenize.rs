use serde::{Deserialize, Serialize};
use unicode_properties::UnicodeEmoji;
use unicode_segmentation::UnicodeSegmentation;

use crate::text::{is_punctuation, nfc};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Emoji,
    Hashtag,
    Mention,
    Url,
    Number,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            kind,
        }
    }

    pub fn word(text: impl Into<String>) -> Self {
        Token::new(TokenKind::Word, text)
    }

    pub fn emoji(text: impl Into<String>) -> Self {
        Token::new(TokenKind::Emoji, text)
    }

    pub fn is_punctuation_only(&self) -> bool {
        self.text.chars().all(is_punctuation)
    }
}

/// A grapheme cluster counts as an emoji when every scalar in it carries the
/// Emoji or Emoji_Component property and it is not plain ASCII (digits, `#`
/// and `*` have the Emoji property on their own).
pub fn is_emoji_grapheme(g: &str) -> bool {
    !g.is_empty() && !g.is_ascii() && g.chars().all(|c| c.is_emoji_char_or_emoji_component())
}

fn is_url(s: &str) -> bool {
    let lower = s.chars().take(8).collect::<String>().to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://")
}

fn is_number(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ':' | '/' | '-' | '%'))
}

fn lower(s: &str) -> String {
    nfc(&s.to_lowercase())
}

/// Classifies one whitespace/emoji-free run of text.
fn word_like(run: &str) -> Option<Token> {
    let run = run.replace('\u{2019}', "'");
    let s = run
        .trim_start_matches(|c: char| is_punctuation(c) && c != '@' && c != '#')
        .trim_end_matches(is_punctuation);
    if s.is_empty() {
        return None;
    }
    for (sigil, kind) in [('@', TokenKind::Mention), ('#', TokenKind::Hashtag)] {
        if let Some(rest) = s.strip_prefix(sigil) {
            return if rest.chars().all(is_punctuation) {
                None
            } else {
                Some(Token::new(kind, lower(s)))
            };
        }
    }
    if is_number(s) {
        return Some(Token::new(TokenKind::Number, s));
    }
    Some(Token::word(lower(s)))
}

/// Splits tweet text into typed tokens.
///
/// Whitespace separates chunks. A chunk starting with `http://` or
/// `https://` (after leading punctuation) is one URL token. Otherwise emoji
/// grapheme clusters become standalone tokens and the text between them is
/// stripped of surrounding punctuation and lowercased.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let trimmed = chunk.trim_start_matches(is_punctuation);
        if is_url(trimmed) {
            let url = trimmed.trim_end_matches(|c: char| is_punctuation(c) && c != '/');
            out.push(Token::new(TokenKind::Url, url));
            continue;
        }

        let mut run_start = 0;
        for (offset, g) in chunk.grapheme_indices(true) {
            if is_emoji_grapheme(g) {
                out.extend(word_like(&chunk[run_start..offset]));
                out.push(Token::emoji(g));
                run_start = offset + g.len();
            }
        }
        out.extend(word_like(&chunk[run_start..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(tokens: &[Token]) -> Vec<(TokenKind, &str)> {
        tokens.iter().map(|t| (t.kind, t.text.as_str())).collect()
    }

    #[test]
    fn punctuation_stripped_emoji_kept() {
        assert_eq!(tokenize("¡Hola!! 😂"), [Token::word("hola"), Token::emoji("😂")]);
    }

    #[test]
    fn apostrophes_are_internal() {
        assert_eq!(tokenize("can't wait"), [Token::word("can't"), Token::word("wait")]);
        assert_eq!(tokenize("Can’t"), [Token::word("can't")]);
        assert_eq!(tokenize("'quoted'"), [Token::word("quoted")]);
    }

    #[test]
    fn urls_hashtags_mentions() {
        use TokenKind::*;
        let got = tokenize("see https://t.co/x #fun");
        assert_eq!(kinds(&got), [(Word, "see"), (Url, "https://t.co/x"), (Hashtag, "#fun")]);

        let got = tokenize("(@Bad_Bunny) #ElCalor! 2019 3.5");
        assert_eq!(
            kinds(&got),
            [(Mention, "@bad_bunny"), (Hashtag, "#elcalor"), (Number, "2019"), (Number, "3.5")]
        );

        let got = tokenize("(HTTPS://Example.com/A).");
        assert_eq!(kinds(&got), [(Url, "HTTPS://Example.com/A")]);
    }

    #[test]
    fn zwj_and_skin_tone_sequences_stay_whole() {
        let family = "👨\u{200D}👩\u{200D}👧";
        let thumbs = "👍🏽";
        let flag = "🇵🇷";
        let text = format!("{family}{thumbs} calor{flag}");
        let got = tokenize(&text);
        assert_eq!(
            got,
            [
                Token::emoji(family),
                Token::emoji(thumbs),
                Token::word("calor"),
                Token::emoji(flag),
            ]
        );
    }

    #[test]
    fn emoji_property_edge_cases() {
        assert!(is_emoji_grapheme("❤\u{FE0F}"));
        assert!(is_emoji_grapheme("1\u{FE0F}\u{20E3}"));
        assert!(!is_emoji_grapheme("1"));
        assert!(!is_emoji_grapheme("#"));
        assert!(!is_emoji_grapheme("ñ"));
    }

    #[test]
    fn bare_sigils_and_punctuation_vanish() {
        assert!(tokenize("@ # ¿? ... !!!").is_empty());
        assert!(tokenize("   \t\n").is_empty());
        assert!(tokenize("").is_empty());
    }
}
