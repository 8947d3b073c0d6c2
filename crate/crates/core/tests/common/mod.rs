#![allow(dead_code)]

use proptest::prelude::*;
use sieve_core::{AnnotatedSentence, ConstituentSpan, Document, RetrievalBundle, Token};

pub const WORDS: [&str; 12] = [
    "Paris", "paris", "the", "city", "river", "who", "is", "a", "Seine", "old", "?", ".",
];

pub fn sentence_strategy(max_len: usize) -> impl Strategy<Value = AnnotatedSentence> {
    prop::collection::vec(0..WORDS.len(), 1..=max_len).prop_flat_map(|ids| {
        let n = ids.len();
        let spans = prop::collection::vec((0..n, 1..=3usize, any::<bool>()), 0..4);
        (Just(ids), spans).prop_map(move |(ids, spans)| {
            let tokens = ids
                .iter()
                .map(|&i| Token::new(WORDS[i], &WORDS[i].to_lowercase(), "NN", "O"))
                .collect();
            let constituents = spans
                .into_iter()
                .map(|(s, len, base)| ConstituentSpan::new(s, (s + len).min(n), "NP", base))
                .collect();
            AnnotatedSentence::new(tokens, constituents)
        })
    })
}

pub fn bundle_strategy(max_docs: usize, max_sentences: usize) -> impl Strategy<Value = RetrievalBundle> {
    (
        sentence_strategy(6),
        prop::collection::vec(
            prop::collection::vec(sentence_strategy(8), 1..=max_sentences),
            1..=max_docs,
        ),
        prop::sample::select(vec!["Paris", "the Seine", "old city", "river"]),
    )
        .prop_map(|(question, docs, answer)| bundle("q", question, docs, &[answer]))
}

pub fn bundle(
    id: &str,
    question: AnnotatedSentence,
    docs: Vec<Vec<AnnotatedSentence>>,
    answers: &[&str],
) -> RetrievalBundle {
    let documents = docs
        .into_iter()
        .enumerate()
        .map(|(d, sentences)| {
            let doc_id = format!("{id}-d{d}");
            let sentences = sentences
                .into_iter()
                .enumerate()
                .map(|(i, mut s)| {
                    s.doc_id = doc_id.clone();
                    s.sentence_index = i;
                    s
                })
                .collect();
            Document {
                doc_id,
                rank: d + 1,
                sentences,
            }
        })
        .collect();
    RetrievalBundle {
        question_id: id.to_string(),
        question,
        documents,
        answers: answers.iter().map(|a| a.to_string()).collect(),
    }
}
