//! Deterministic fixture data used by tests, the acceptance suite and the
//! files under `data/fixtures/`.

use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{io, BiLstmModel, ClassifierConfig, LabeledExample, SentimentLabel};
use crate::embeddings::{write_text, EmbeddingMatrix, Vocabulary};
use crate::evaluation::ConfusionMatrix;
use crate::preprocess::DocumentRecord;

pub const SYNTHETIC_SENTENCES: usize = 4000;
const SYNTHETIC_SEED: u64 = 20_200_911;
const CONTEXT_WORDS: usize = 25;

/// Slot words: `a`, `b`, then `s01` to `s23`.
pub fn synthetic_slot_words() -> Vec<String> {
    let mut w = vec!["a".to_owned(), "b".to_owned()];
    w.extend((1..=23).map(|i| format!("s{i:02}")));
    w
}

/// The four context words that surround slot `k`. Slots 0 and 1 (`a` and
/// `b`) share `c00..c03`; every other slot shares at most one word with
/// that set.
pub fn synthetic_context_set(slot: usize) -> [String; 4] {
    let c = |i: usize| format!("c{i:02}");
    if slot < 2 {
        return [c(0), c(1), c(2), c(3)];
    }
    let j = slot - 2;
    let free = CONTEXT_WORDS - 4;
    [c(4 + j % free), c(4 + (j + 7) % free), c(4 + (j + 14) % free), c(j % 4)]
}

/// Sentences `[c, c, slot, c, c]` with the context words drawn from the
/// slot's context set. 50-word vocabulary, 20,000 tokens.
pub fn synthetic_ab_corpus() -> Vec<DocumentRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(SYNTHETIC_SEED);
    let slots = synthetic_slot_words();
    let sets: Vec<[String; 4]> = (0..slots.len()).map(synthetic_context_set).collect();
    (0..SYNTHETIC_SENTENCES)
        .map(|i| {
            let k = rng.random_range(0..slots.len());
            let mut ctx = || sets[k].choose(&mut rng).expect("non-empty").clone();
            let tokens = vec![ctx(), ctx(), slots[k].clone(), ctx(), ctx()];
            DocumentRecord {
                id: format!("syn-{i:04}"),
                tokens,
            }
        })
        .collect()
}

const OVERFIT_WORDS: [[&str; 6]; 3] = [
    ["feliz", "genial", "love", "awesome", "bueno", "great"],
    ["mesa", "table", "lunes", "monday", "casa", "house"],
    ["triste", "hate", "malo", "terrible", "awful", "odio"],
];
const OVERFIT_FILLER: [&str; 2] = ["hoy", "today"];

/// 30 labeled examples (10 per class) over a 20-word vocabulary. Each
/// example has two or three words of its own class, one word of another
/// class and a filler word, shuffled.
pub fn overfit_examples() -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    (0..30)
        .map(|i| {
            let class = i % 3;
            let own = 2 + rng.random_range(0..2);
            let mut tokens: Vec<String> = OVERFIT_WORDS[class]
                .choose_multiple(&mut rng, own)
                .map(|w| w.to_string())
                .collect();
            let other = (class + 1 + rng.random_range(0..2)) % 3;
            tokens.push(OVERFIT_WORDS[other].choose(&mut rng).unwrap().to_string());
            tokens.push(OVERFIT_FILLER.choose(&mut rng).unwrap().to_string());
            tokens.shuffle(&mut rng);
            LabeledExample {
                id: format!("fit-{i:02}"),
                tokens,
                label: SentimentLabel::from_index(class).unwrap(),
            }
        })
        .collect()
}

/// The 20 words of the overfit fixture.
pub fn overfit_vocabulary() -> Vec<String> {
    OVERFIT_WORDS
        .iter()
        .flatten()
        .chain(&OVERFIT_FILLER)
        .map(|w| w.to_string())
        .collect()
}

/// Confusion counts of the published three-class evaluation.
pub fn reference_confusion() -> ConfusionMatrix {
    ConfusionMatrix::from_cells([[1042, 457, 0], [639, 354, 0], [0, 0, 506]])
}

/// Gold/predicted label pairs realizing [`reference_confusion`], grouped by
/// cell in row-major order.
pub fn reference_pairs() -> (Vec<SentimentLabel>, Vec<SentimentLabel>) {
    let m = reference_confusion();
    let (mut golds, mut preds) = (Vec::new(), Vec::new());
    for g in SentimentLabel::ALL {
        for p in SentimentLabel::ALL {
            let n = m.cells[g.index()][p.index()] as usize;
            golds.extend(std::iter::repeat_n(g, n));
            preds.extend(std::iter::repeat_n(p, n));
        }
    }
    (golds, preds)
}

pub fn render_documents(docs: &[DocumentRecord]) -> String {
    docs.iter()
        .map(|d| serde_json::to_string(d).expect("record serializes") + "\n")
        .collect()
}

/// `id<TAB>label<TAB>text` with a header line.
pub fn render_labeled_tsv(examples: &[LabeledExample]) -> String {
    let mut out = String::from("id\tlabel\ttext\n");
    for e in examples {
        let _ = writeln!(out, "{}\t{}\t{}", e.id, e.label, e.tokens.join(" "));
    }
    out
}

/// `gold<TAB>pred` with a header line.
pub fn render_pairs_tsv(golds: &[SentimentLabel], preds: &[SentimentLabel]) -> String {
    let mut out = String::from("gold\tpred\n");
    for (g, p) in golds.iter().zip(preds) {
        let _ = writeln!(out, "{g}\t{p}");
    }
    out
}

/// Three fixed vectors in the word2vec text format.
pub fn golden_embeddings() -> EmbeddingMatrix<f32> {
    let vocab = Vocabulary::from_words(vec!["hola".into(), "día".into(), "😂".into()]).expect("distinct words");
    let input = vec![0.5, -0.25, 0.1, 1e-5, 3.0, -7.125, 0.0, 0.333_333_34, -1.0];
    EmbeddingMatrix::from_input_vectors(vocab, 3, input)
}

/// A small seeded classifier built on [`golden_embeddings`].
pub fn golden_model() -> BiLstmModel<f32> {
    let config = ClassifierConfig {
        lstm_layers: 1,
        lstm_hidden: 2,
        dense1_dim: 3,
        max_seq_len: 4,
        seed: 7,
        ..Default::default()
    };
    BiLstmModel::new(config, &golden_embeddings()).expect("valid config")
}

/// File name and contents of every shipped fixture.
pub fn shipped_files() -> Vec<(&'static str, Vec<u8>)> {
    let (golds, preds) = reference_pairs();
    let mut vectors = Vec::new();
    write_text(&golden_embeddings(), &mut vectors).expect("writing to memory");
    vec![
        ("synthetic_ab.jsonl", render_documents(&synthetic_ab_corpus()).into_bytes()),
        ("overfit.tsv", render_labeled_tsv(&overfit_examples()).into_bytes()),
        ("reference_pairs.tsv", render_pairs_tsv(&golds, &preds).into_bytes()),
        ("golden_vectors.txt", vectors),
        ("golden_model.bin", io::encode(&golden_model())),
    ]
}
