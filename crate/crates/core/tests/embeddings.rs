use csembed::embeddings::{save_text, load_text, top_k_neighbors, train_cbow, CbowConfig};
use csembed::fixtures::synthetic_ab_corpus;
use csembed::{Embeddings, Embeddings64};

fn corpus() -> Vec<Vec<String>> {
    synthetic_ab_corpus().into_iter().map(|d| d.tokens).collect()
}

fn config(workers: usize) -> CbowConfig {
    CbowConfig { dim: 16, epochs: 4, workers, seed: 11, ..CbowConfig::default() }
}

#[test]
fn one_worker_is_bit_reproducible() {
    let docs = corpus();
    let (a, la): (Embeddings, _) = train_cbow(&docs, &config(1)).unwrap();
    let (b, lb): (Embeddings, _) = train_cbow(&docs, &config(1)).unwrap();
    assert_eq!(a.input, b.input);
    assert_eq!(a.output, b.output);
    assert_eq!(la.epoch_losses, lb.epoch_losses);
}

#[test]
fn several_workers_still_learn() {
    let docs = corpus();
    let (model, log): (Embeddings, _) = train_cbow(&docs, &config(4)).unwrap();
    assert!(model.is_finite());
    assert_eq!(log.vocab_size, 50);
    assert_eq!(log.corpus_tokens, 20_000);
    assert!(log.epoch_losses.last().unwrap() < log.epoch_losses.first().unwrap());
}

#[test]
fn saved_vectors_reload_in_either_width() {
    let docs = corpus();
    let (model, _): (Embeddings, _) = train_cbow(&docs, &config(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.txt");
    save_text(&model, &path).unwrap();
    let narrow: Embeddings = load_text(&path).unwrap();
    assert_eq!(narrow.input, model.input);
    let wide: Embeddings64 = load_text(&path).unwrap();
    let top_narrow = top_k_neighbors(&narrow, "a", 5).unwrap();
    let top_wide = top_k_neighbors(&wide, "a", 5).unwrap();
    let narrow_words: Vec<&String> = top_narrow.iter().map(|(w, _)| w).collect();
    let wide_words: Vec<&String> = top_wide.iter().map(|(w, _)| w).collect();
    assert_eq!(narrow_words, wide_words);
}
