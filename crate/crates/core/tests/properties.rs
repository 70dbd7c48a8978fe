use csembed::classifier::{adamax_step, AdamaxParams, SentimentLabel};
use csembed::corpus::{build_keyword_list, filter_code_switched, has_keyword, RawTweet, MIN_KEYWORD_LEN};
use csembed::embeddings::{read_text, write_text, CbowConfig, EmbeddingMatrix, Vocabulary};
use csembed::evaluation::{confusion, metrics};
use csembed::preprocess::{Preprocessor, TokenKind};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "hola", "the", "and", "que", "para", "love", "calor", "feliz", "mucho", "I'm", "don't", "día", "niño",
    "weekend", "janguear", "#finde", "@amiga", "https://t.co/x1", "42", "😂", "❤️", "👍🏽", "!!!", "...", ",",
    "?", "¿", "PLAYA", "Canción", "de", "la", "y",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(
        (prop::sample::select(WORDS), prop::sample::select(&[" ", "  ", "\t", ", ", "! "][..])),
        0..16,
    )
    .prop_map(|parts| parts.into_iter().map(|(w, sep)| format!("{w}{sep}")).collect())
}

fn label_strategy() -> impl Strategy<Value = SentimentLabel> {
    prop::sample::select(&SentimentLabel::ALL[..])
}

proptest! {
    #[test]
    fn preprocessing_is_idempotent(text in text_strategy()) {
        let pre = Preprocessor::default();
        let once: Vec<String> = pre.tokens(&text).into_iter().map(|t| t.text).collect();
        let twice: Vec<String> = pre.tokens(&once.join(" ")).into_iter().map(|t| t.text).collect();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn preprocessing_drops_stopwords_and_punctuation(text in text_strategy()) {
        let pre = Preprocessor::default();
        for t in pre.tokens(&text) {
            prop_assert!(!t.text.is_empty());
            prop_assert!(!t.is_punctuation_only(), "{:?}", t);
            prop_assert!(!pre.en_stopwords.contains(&t.text), "{:?}", t);
            prop_assert!(!pre.es_stopwords.contains(&t.text), "{:?}", t);
            prop_assert!(!t.text.chars().any(char::is_whitespace));
        }
    }

    #[test]
    fn preprocessing_keeps_emoji(text in text_strategy()) {
        let pre = Preprocessor::default();
        let emoji_in = WORDS
            .iter()
            .filter(|w| ["😂", "❤️", "👍🏽"].contains(w))
            .map(|w| text.matches(w).count())
            .sum::<usize>();
        let emoji_out = pre.tokens(&text).iter().filter(|t| t.kind == TokenKind::Emoji).count();
        prop_assert_eq!(emoji_in, emoji_out);
    }

    #[test]
    fn filter_output_is_an_ordered_english_subset(
        rows in prop::collection::vec((text_strategy(), prop::sample::select(&["en", "es", "pt"][..])), 0..20)
    ) {
        let keywords = build_keyword_list(&["calor", "feliz", "niño", "que"], &["janguear"], &["para"], &["Canción"])
            .unwrap();
        let tweets: Vec<RawTweet> = rows
            .iter()
            .enumerate()
            .map(|(i, (text, lang))| RawTweet { id: i.to_string(), text: text.clone(), lang: lang.to_string(), created_at: None })
            .collect();
        let kept: Vec<RawTweet> = filter_code_switched(tweets.clone(), &keywords).collect();
        let mut last = None;
        for t in &kept {
            let i: usize = t.id.parse().unwrap();
            prop_assert_eq!(&tweets[i], t);
            prop_assert_eq!(t.lang.as_str(), "en");
            prop_assert!(has_keyword(&t.text, &keywords));
            prop_assert!(last.is_none_or(|l| l < i));
            last = Some(i);
        }
        let eligible = tweets.iter().filter(|t| t.lang == "en" && has_keyword(&t.text, &keywords)).count();
        prop_assert!(kept.len() <= eligible);
        prop_assert_eq!(kept.is_empty(), eligible == 0);
    }

    #[test]
    fn keyword_list_invariants(
        spanish in prop::collection::vec("[a-zñ]{1,7}", 0..12),
        spanglish in prop::collection::vec("[a-z]{1,7}", 0..4),
        portuguese in prop::collection::vec("[a-z]{1,7}", 0..6),
        proper in prop::collection::vec("[a-z]{1,7}", 0..3),
    ) {
        match build_keyword_list(&spanish, &spanglish, &portuguese, &proper) {
            Ok(list) => {
                let mut seen = std::collections::HashSet::new();
                for (w, _) in list.iter() {
                    prop_assert!(w.chars().count() >= MIN_KEYWORD_LEN);
                    prop_assert!(!proper.iter().any(|p| p == w));
                    prop_assert!(seen.insert(w.to_owned()));
                    prop_assert!(spanish.iter().chain(&spanglish).any(|c| c == w));
                }
                for w in &spanish {
                    let keep = w.chars().count() >= MIN_KEYWORD_LEN && !portuguese.contains(w) && !proper.contains(w);
                    prop_assert_eq!(list.contains(w), keep || (spanglish.contains(w) && !proper.contains(w) && w.chars().count() >= MIN_KEYWORD_LEN));
                }
            }
            Err(e) => prop_assert!(matches!(e, csembed::Error::EmptyKeywordList)),
        }
    }

    #[test]
    fn perfect_predictions_score_one(golds in prop::collection::vec(label_strategy(), 1..60)) {
        let report = metrics(&confusion(&golds, &golds).unwrap()).unwrap();
        prop_assert_eq!(report.accuracy, 1.0);
        for c in &report.classes {
            if c.support > 0 {
                prop_assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
            }
        }
    }

    #[test]
    fn metric_identities(pairs in prop::collection::vec((label_strategy(), label_strategy()), 1..80), seed in any::<u64>()) {
        let (golds, preds): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let m = confusion(&golds, &preds).unwrap();
        let report = metrics(&m).unwrap();
        prop_assert_eq!(m.total(), golds.len() as u64);
        prop_assert!((report.accuracy - m.trace() as f64 / m.total() as f64).abs() < 1e-12);
        for c in &report.classes {
            prop_assert!((0.0..=1.0).contains(&c.f1));
            prop_assert!(c.f1 <= 2.0 * c.precision.min(c.recall) + 1e-12);
        }

        let mut shuffled = pairs.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = ((seed.wrapping_mul(i as u64 + 1) >> 7) % n as u64) as usize;
            shuffled.swap(i, j);
        }
        let (g2, p2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        prop_assert_eq!(confusion(&g2, &p2).unwrap(), m);
    }

    #[test]
    fn adamax_steps_are_bounded_by_the_corrected_rate(
        grads in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 4), 1..12),
        lr in 1e-5f64..1e-1,
    ) {
        let hp = AdamaxParams::with_lr(lr);
        let mut p = vec![0.0f64; 4];
        let (mut m, mut u, mut step) = (vec![0.0; 4], vec![0.0; 4], 0u64);
        for g in &grads {
            let before = p.clone();
            adamax_step(&mut p, g, &mut m, &mut u, &mut step, &hp);
            let bound = lr / (1.0 - hp.beta1.powi(step as i32));
            for (a, b) in before.iter().zip(&p) {
                prop_assert!((a - b).abs() <= bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn text_format_round_trips(values in prop::collection::vec(-1e6f32..1e6, 6), tiny in -1e-30f32..1e-30) {
        let words = vec!["hola".to_owned(), "😂".to_owned()];
        let vocab = Vocabulary::from_counts(words, vec![3, 2], 1).unwrap();
        let mut input = values.clone();
        input[5] = tiny;
        let model = EmbeddingMatrix::from_input_vectors(vocab, 3, input.clone());
        let mut buf = Vec::new();
        write_text(&model, &mut buf).unwrap();
        let back: EmbeddingMatrix<f32> = read_text("mem", &buf[..]).unwrap();
        prop_assert_eq!(back.input, input);
        prop_assert_eq!(back.vocab.words(), model.vocab.words());
    }

    #[test]
    fn cbow_config_key_values_round_trip(
        dim in 1usize..400, window in 1usize..10, epochs in 1usize..50, workers in 1usize..16,
        negatives in 1usize..20, min_count in 1u64..10, lr in 1e-4f64..1.0, seed in any::<u64>(),
    ) {
        let cfg = CbowConfig { dim, window, epochs, workers, negatives, min_count, initial_lr: lr, seed, ..CbowConfig::default() };
        prop_assert_eq!(CbowConfig::from_key_values(&cfg.to_key_values()).unwrap(), cfg);
    }
}
