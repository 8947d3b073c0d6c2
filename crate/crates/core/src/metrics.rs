//! Answer normalization, answer containment, exact match and token F1.

use std::collections::HashMap;

use crate::corpus::AnnotatedSentence;

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '‘' | '’' | '“' | '”' | '–' | '—' | '…' | '«' | '»' | '¿' | '¡')
}

/// Lowercase, strip punctuation, drop articles, collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lower: String = s.to_lowercase().chars().filter(|c| !is_punct(*c)).collect();
    lower
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn normalized_tokens(s: &str) -> Vec<String> {
    normalize_answer(s)
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

fn sentence_tokens(sentence: &AnnotatedSentence) -> Vec<String> {
    normalized_tokens(&sentence.texts().collect::<Vec<_>>().join(" "))
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && needle.len() <= haystack.len() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Whether any gold answer appears, token-contiguously after normalization,
/// inside one of the given sentences.
pub fn contains_answer<'a, I>(sentences: I, answers: &[String]) -> bool
where
    I: IntoIterator<Item = &'a AnnotatedSentence>,
{
    let golds: Vec<Vec<String>> = answers.iter().map(|a| normalized_tokens(a)).collect();
    sentences
        .into_iter()
        .any(|s| sentence_contains(&sentence_tokens(s), &golds))
}

/// Pre-normalized gold answers, for checking many sentences.
#[derive(Debug, Clone)]
pub struct AnswerMatcher {
    golds: Vec<Vec<String>>,
}

impl AnswerMatcher {
    pub fn new(answers: &[String]) -> Self {
        AnswerMatcher {
            golds: answers.iter().map(|a| normalized_tokens(a)).collect(),
        }
    }

    pub fn matches(&self, sentence: &AnnotatedSentence) -> bool {
        sentence_contains(&sentence_tokens(sentence), &self.golds)
    }
}

fn sentence_contains(tokens: &[String], golds: &[Vec<String>]) -> bool {
    golds.iter().any(|g| contains_run(tokens, g))
}

pub fn exact_match(prediction: &str, answers: &[String]) -> bool {
    let p = normalize_answer(prediction);
    answers.iter().any(|a| normalize_answer(a) == p)
}

fn f1_single(prediction: &str, gold: &str) -> f64 {
    let p = normalized_tokens(prediction);
    let g = normalized_tokens(gold);
    if p.is_empty() || g.is_empty() {
        return if p == g { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token-overlap F1 in [0, 1], maximized over gold answers.
pub fn f1_score(prediction: &str, answers: &[String]) -> f64 {
    answers.iter().map(|a| f1_single(prediction, a)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use proptest::prelude::*;

    fn sent(words: &[&str]) -> AnnotatedSentence {
        AnnotatedSentence::new(words.iter().map(|w| Token::new(w, w, "NN", "O")).collect(), vec![])
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_answer("The Beatles!"), "beatles");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("a  dog"), "dog");
        assert_eq!(normalize_answer("Theatre  an Anthem"), "theatre anthem");
    }

    #[test]
    fn containment_is_token_level() {
        let answers = vec!["The Eiffel Tower".to_string()];
        assert!(contains_answer(
            [&sent(&["I", "saw", "the", "eiffel", "tower", "."])],
            &answers
        ));
        assert!(!contains_answer([&sent(&["I", "saw", "the", "tower"])], &answers));
        let art = vec!["art".to_string()];
        assert!(!contains_answer([&sent(&["a", "party"])], &art));
        assert!(contains_answer([&sent(&["no"]), &sent(&["modern", "art", "!"])], &art));
        assert!(AnswerMatcher::new(&art).matches(&sent(&["art"])));
    }

    #[test]
    fn em_and_f1() {
        let gold = vec!["b c".to_string()];
        assert!(exact_match("The B c.", &gold));
        assert!((f1_score("x b", &gold) - 0.5).abs() < 1e-12);
        // articles are dropped before counting
        assert!((f1_score("a b", &gold) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1_score("x", &gold), 0.0);
        assert_eq!(f1_score("b c", &gold), 1.0);
    }

    proptest! {
        #[test]
        fn f1_at_least_em(pred in "[abc ]{0,8}", gold in "[abc ]{1,8}") {
            let golds = vec![gold];
            let f1 = f1_score(&pred, &golds);
            prop_assert!((0.0..=1.0).contains(&f1));
            if exact_match(&pred, &golds) {
                prop_assert_eq!(f1, 1.0);
            }
        }
    }
}
