//! Synthetic, pre-annotated datasets for tests and benchmarks.
//!
//! `QaWorld` produces template questions about invented authors, works,
//! cities and years, with retrieved documents that mix direct answer
//! sentences, answers stated one sentence after the topic is mentioned,
//! topic mentions without the answer, and unrelated facts. `separable`
//! produces data whose answer tokens and other tokens sit on opposite sides
//! of a hyperplane in embedding space.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_dataset, AnnotatedSentence, ConstituentSpan, Document, RetrievalBundle, Token};
use crate::embedding::{EmbeddingTable, DEFAULT_OOV_BUCKETS};

const LEMMAS: &[(&str, &str)] = &[
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("wrote", "write"),
    ("written", "write"),
    ("born", "bear"),
    ("published", "publish"),
    ("appeared", "appear"),
    ("lived", "live"),
    ("praised", "praise"),
    ("adapted", "adapt"),
    ("admired", "admire"),
    ("visited", "visit"),
    ("moved", "move"),
    ("studied", "study"),
    ("remains", "remain"),
    ("follows", "follow"),
    ("has", "have"),
    ("made", "make"),
    ("set", "set"),
    ("did", "do"),
    ("chapters", "chapter"),
    ("readers", "reader"),
    ("critics", "critic"),
    ("languages", "language"),
    ("translated", "translate"),
    ("sailors", "sailor"),
];

const VERBS: &[&str] = &[
    "is",
    "was",
    "were",
    "wrote",
    "written",
    "born",
    "published",
    "appeared",
    "lived",
    "praised",
    "adapted",
    "admired",
    "visited",
    "moved",
    "studied",
    "remains",
    "follows",
    "has",
    "made",
    "set",
    "did",
    "translated",
];

const FUNCTION_WORDS: &[(&str, &str)] = &[
    ("a", "DT"),
    ("the", "DT"),
    ("many", "JJ"),
    ("in", "IN"),
    ("by", "IN"),
    ("of", "IN"),
    ("for", "IN"),
    ("to", "IN"),
    ("into", "IN"),
    ("it", "PRP"),
    ("who", "WP"),
    ("when", "WRB"),
    ("where", "WRB"),
];

fn lemma_of(text: &str) -> String {
    let lower = text.to_lowercase();
    LEMMAS
        .iter()
        .find(|(t, _)| *t == lower)
        .map_or(lower, |(_, l)| l.to_string())
}

fn pos_of(text: &str, ner: &str) -> &'static str {
    let lower = text.to_lowercase();
    if ner != "O" {
        return if text.chars().all(|c| c.is_ascii_digit()) {
            "CD"
        } else {
            "NNP"
        };
    }
    if !text.chars().any(char::is_alphanumeric) {
        return ".";
    }
    if let Some((_, p)) = FUNCTION_WORDS.iter().find(|(w, _)| *w == lower) {
        return p;
    }
    if VERBS.contains(&lower.as_str()) {
        return "VBD";
    }
    "NN"
}

/// Parses bracket markup into an annotated sentence.
///
/// `[NP:PERSON Anna Berg] wrote [NP a novel] .` yields five tokens, two base
/// constituents (the first tagged PERSON) and a sentence-level constituent.
pub fn markup(text: &str) -> AnnotatedSentence {
    let mut tokens = Vec::new();
    let mut constituents = Vec::new();
    let mut open: Option<(usize, String, String)> = None;
    for raw in text.split_whitespace() {
        if let Some(head) = raw.strip_prefix('[') {
            let (label, ner) = head.split_once(':').unwrap_or((head, "O"));
            open = Some((tokens.len(), label.to_string(), ner.to_string()));
            continue;
        }
        let (word, closes) = match raw.strip_suffix(']') {
            Some(w) => (w, true),
            None => (raw, false),
        };
        let ner = open.as_ref().map_or("O", |(_, _, n)| n.as_str());
        tokens.push(Token::new(word, &lemma_of(word), pos_of(word, ner), ner));
        if closes {
            let (start, label, _) = open.take().expect("closing bracket without opening");
            constituents.push(ConstituentSpan::new(start, tokens.len(), &label, true));
        }
    }
    assert!(open.is_none(), "unclosed bracket in `{text}`");
    if tokens.len() > 1 {
        constituents.push(ConstituentSpan::new(0, tokens.len(), "S", false));
    }
    AnnotatedSentence::new(tokens, constituents)
}

const FIRST_NAMES: &[&str] = &[
    "Anna", "Boris", "Clara", "Dmitri", "Elena", "Felix", "Greta", "Hugo", "Ines", "Jonas", "Karin", "Lukas", "Marta",
    "Nils", "Olga", "Pavel", "Rosa", "Stefan", "Tilda", "Viktor",
];
const ONSETS: &[&str] = &[
    "Bel", "Cor", "Dar", "Fen", "Gal", "Hal", "Kor", "Lin", "Mor", "Nor", "Os", "Pel", "Ros", "Tal", "Vel", "Wen",
];
const CODAS: &[&str] = &["berg", "dahl", "holm", "vik", "stad", "mann", "quist", "lund"];
const CITY_ENDS: &[&str] = &["ora", "avia", "heim", "port", "ania", "burg"];
const ADJECTIVES: &[&str] = &[
    "Silent",
    "Broken",
    "Golden",
    "Hidden",
    "Distant",
    "Crimson",
    "Winter",
    "Frozen",
    "Quiet",
    "Burning",
    "Hollow",
    "Wandering",
    "Secret",
    "Pale",
    "Endless",
    "Lonely",
    "Northern",
    "Bitter",
    "Shining",
    "Sleeping",
    "Velvet",
    "Iron",
    "Scarlet",
    "Restless",
    "Ancient",
];
const NOUNS: &[&str] = &[
    "Harbor",
    "Garden",
    "Lantern",
    "Mirror",
    "Orchard",
    "River",
    "Tower",
    "Voyage",
    "Meadow",
    "Letter",
    "Bridge",
    "Forest",
    "Island",
    "Shadow",
    "Summer",
    "Kingdom",
    "Window",
    "Valley",
    "Compass",
    "Anchor",
    "Feather",
    "Chapel",
    "Lighthouse",
    "Winterland",
    "Crown",
];
const KINDS: &[&str] = &["novel", "play", "poem", "opera"];

const NEUTRAL: &[&str] = &[
    "The story follows [NP a young sailor] .",
    "[NP The book] has [NP twelve chapters] .",
    "[NP It] is set in [NP a small village] .",
    "[NP The ending] surprised [NP many readers] .",
    "[NP The language] is [NP plain and direct] .",
    "[NP The weather] was [NP mild] that [NP season] .",
    "[NP Sailors] crowded [NP the docks] .",
];

#[derive(Debug, Clone)]
struct Person {
    name: String,
    birthplace: usize,
}

#[derive(Debug, Clone)]
struct Work {
    title: String,
    kind: &'static str,
    author: usize,
    year: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuestionKind {
    Author,
    Year,
    Birthplace,
}

/// Knobs for [`QaWorld::bundles`].
#[derive(Debug, Clone)]
pub struct QaConfig {
    pub documents: usize,
    pub units_per_document: (usize, usize),
    /// Probability that no retrieved document states the answer.
    pub unanswerable_rate: f64,
    /// Probability that an answer is stated directly rather than in the
    /// sentence after a topic mention.
    pub direct_rate: f64,
    /// Probability that a topic mention also names another entity of the
    /// answer's type.
    pub hard_distractor_rate: f64,
    pub topic_mentions: (usize, usize),
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            documents: 10,
            units_per_document: (3, 6),
            unanswerable_rate: 0.1,
            direct_rate: 0.45,
            hard_distractor_rate: 0.25,
            topic_mentions: (10, 16),
        }
    }
}

/// An invented world of people, cities and works.
#[derive(Debug, Clone)]
pub struct QaWorld {
    persons: Vec<Person>,
    cities: Vec<String>,
    works: Vec<Work>,
}

impl QaWorld {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut surnames: Vec<String> = ONSETS
            .iter()
            .flat_map(|o| CODAS.iter().map(move |c| format!("{o}{c}")))
            .collect();
        surnames.shuffle(&mut rng);
        let mut cities: Vec<String> = ONSETS
            .iter()
            .flat_map(|o| CITY_ENDS.iter().map(move |e| format!("{o}{e}")))
            .collect();
        cities.shuffle(&mut rng);
        cities.truncate(60);
        let mut names = BTreeSet::new();
        while names.len() < 150 {
            let first = FIRST_NAMES[rng.gen_range(0..FIRST_NAMES.len())];
            let last = &surnames[rng.gen_range(0..surnames.len())];
            names.insert(format!("{first} {last}"));
        }
        let mut names: Vec<String> = names.into_iter().collect();
        names.shuffle(&mut rng);
        let persons: Vec<Person> = names
            .into_iter()
            .map(|name| Person {
                name,
                birthplace: rng.gen_range(0..cities.len()),
            })
            .collect();
        let mut titles: Vec<String> = ADJECTIVES
            .iter()
            .flat_map(|a| NOUNS.iter().map(move |n| format!("{a} {n}")))
            .collect();
        titles.shuffle(&mut rng);
        let works = titles
            .into_iter()
            .map(|title| Work {
                title,
                kind: KINDS[rng.gen_range(0..KINDS.len())],
                author: rng.gen_range(0..persons.len()),
                year: rng.gen_range(1750..1990),
            })
            .collect();
        QaWorld { persons, cities, works }
    }

    pub fn work_count(&self) -> usize {
        self.works.len()
    }

    /// Embeddings for every word in the world. Words of one entity type
    /// share a centroid; everything else is spread uniformly.
    pub fn embeddings(&self, dim: usize, seed: u64) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = EmbeddingTable::new(dim, DEFAULT_OOV_BUCKETS);
        let centroid = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let groups: Vec<(Vec<f64>, Vec<String>)> = vec![
            (
                centroid(&mut rng),
                self.persons
                    .iter()
                    .flat_map(|p| p.name.split(' ').map(str::to_string).collect::<Vec<_>>())
                    .collect(),
            ),
            (centroid(&mut rng), self.cities.clone()),
            (centroid(&mut rng), (1750..1990).map(|y: u32| y.to_string()).collect()),
            (
                centroid(&mut rng),
                ADJECTIVES.iter().chain(NOUNS).map(|w| w.to_string()).collect(),
            ),
        ];
        for (c, words) in groups {
            for w in words {
                let v: Vec<f64> = c.iter().map(|x| x + rng.gen_range(-0.35..0.35)).collect();
                table.insert(&w.to_lowercase(), v);
            }
        }
        // every non-entity word the templates can produce
        let mut other: BTreeSet<String> = BTreeSet::new();
        let sample = self.bundles("vocab", 0, self.works.len(), &QaConfig::default(), 0);
        for b in &sample {
            for t in b
                .question
                .tokens
                .iter()
                .chain(b.sentences().flat_map(|(_, s)| &s.tokens))
            {
                if t.ner == "O" {
                    other.insert(t.text.to_lowercase());
                }
            }
        }
        for w in other {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            table.insert(&w, v);
        }
        table
    }

    /// `count` questions about works `offset..offset + count`, ids
    /// `{prefix}-{n}`. Each split should use a disjoint work range.
    pub fn bundles(
        &self,
        prefix: &str,
        offset: usize,
        count: usize,
        config: &QaConfig,
        seed: u64,
    ) -> Vec<RetrievalBundle> {
        assert!(
            offset + count <= self.works.len(),
            "not enough works for {count} questions"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let kind = match rng.gen_range(0..3) {
                    0 => QuestionKind::Author,
                    1 => QuestionKind::Year,
                    _ => QuestionKind::Birthplace,
                };
                self.bundle(&format!("{prefix}-{i:04}"), offset + i, kind, config, &mut rng)
            })
            .collect()
    }

    fn other_person(&self, not: usize, rng: &mut ChaCha8Rng) -> &Person {
        loop {
            let i = rng.gen_range(0..self.persons.len());
            if i != not {
                return &self.persons[i];
            }
        }
    }

    fn other_work(&self, not: usize, rng: &mut ChaCha8Rng) -> &Work {
        loop {
            let i = rng.gen_range(0..self.works.len());
            if i != not {
                return &self.works[i];
            }
        }
    }

    fn other_city(&self, not: usize, rng: &mut ChaCha8Rng) -> &str {
        loop {
            let i = rng.gen_range(0..self.cities.len());
            if i != not {
                return &self.cities[i];
            }
        }
    }

    fn other_year(&self, not: u32, rng: &mut ChaCha8Rng) -> u32 {
        loop {
            let y = rng.gen_range(1750..1990);
            if y != not {
                return y;
            }
        }
    }

    fn noise(&self, work: usize, rng: &mut ChaCha8Rng) -> String {
        let w = self.other_work(work, rng);
        let p = &self.persons[w.author];
        let city = &self.cities[p.birthplace];
        match rng.gen_range(0..6) {
            0 => format!("[NP:PERSON {}] was born in [NP:GPE {city}] .", p.name),
            1 => format!(
                "[NP:PERSON {}] wrote [NP:WORK_OF_ART {}] in [NP:DATE {}] .",
                p.name, w.title, w.year
            ),
            2 => format!("[NP:GPE {city}] is [NP a port city] ."),
            3 => format!("[NP:WORK_OF_ART {}] is [NP a {}] .", w.title, w.kind),
            _ => NEUTRAL[rng.gen_range(0..NEUTRAL.len())].to_string(),
        }
    }

    fn bundle(
        &self,
        id: &str,
        work: usize,
        kind: QuestionKind,
        config: &QaConfig,
        rng: &mut ChaCha8Rng,
    ) -> RetrievalBundle {
        let w = &self.works[work];
        let author = &self.persons[w.author];
        let city = &self.cities[author.birthplace];
        let (question, answer, topic) = match kind {
            QuestionKind::Author => (
                format!("[WHNP Who] wrote [NP:WORK_OF_ART {}] ?", w.title),
                author.name.clone(),
                format!("[NP:WORK_OF_ART {}]", w.title),
            ),
            QuestionKind::Year => (
                format!("[WHADVP When] was [NP:WORK_OF_ART {}] [VP published] ?", w.title),
                w.year.to_string(),
                format!("[NP:WORK_OF_ART {}]", w.title),
            ),
            QuestionKind::Birthplace => (
                format!("[WHADVP Where] was [NP:PERSON {}] [VP born] ?", author.name),
                city.clone(),
                format!("[NP:PERSON {}]", author.name),
            ),
        };

        // units are short runs of sentences that stay together in a document
        let mut units: Vec<Vec<String>> = Vec::new();
        let answered = !rng.gen_bool(config.unanswerable_rate);
        let answer_units = if answered {
            1 + usize::from(rng.gen_bool(0.3))
        } else {
            0
        };
        for _ in 0..answer_units {
            let direct = rng.gen_bool(config.direct_rate);
            let unit = match (kind, direct) {
                (QuestionKind::Author, true) => vec![format!(
                    "[NP:PERSON {}] wrote {topic} in [NP:DATE {}] .",
                    author.name, w.year
                )],
                (QuestionKind::Author, false) => vec![
                    format!("{topic} is [NP a {}] .", w.kind),
                    format!("[NP It] was written by [NP:PERSON {}] .", author.name),
                ],
                (QuestionKind::Year, true) => vec![format!("{topic} was published in [NP:DATE {}] .", w.year)],
                (QuestionKind::Year, false) => vec![
                    format!("{topic} is [NP a {}] by [NP:PERSON {}] .", w.kind, author.name),
                    format!("[NP It] first appeared in [NP:DATE {}] .", w.year),
                ],
                (QuestionKind::Birthplace, true) => vec![format!("{topic} was born in [NP:GPE {city}] .")],
                (QuestionKind::Birthplace, false) => vec![
                    format!("{topic} was [NP the child] of [NP a sailor] ."),
                    format!("[NP The family] lived in [NP:GPE {city}] ."),
                ],
            };
            units.push(unit);
        }
        let mentions = rng.gen_range(config.topic_mentions.0..=config.topic_mentions.1);
        for _ in 0..mentions {
            let hard = rng.gen_bool(config.hard_distractor_rate);
            let first = match (kind, hard) {
                (QuestionKind::Author, true) => {
                    let p = self.other_person(w.author, rng);
                    format!("{topic} was adapted by [NP:PERSON {}] .", p.name)
                }
                (QuestionKind::Year, true) => {
                    let y = self.other_year(w.year, rng);
                    format!("[NP A film] of {topic} was made in [NP:DATE {y}] .")
                }
                (QuestionKind::Birthplace, true) => {
                    let c = self.other_city(author.birthplace, rng);
                    format!("{topic} visited [NP:GPE {c}] .")
                }
                (QuestionKind::Birthplace, false) => {
                    TOPIC_PERSON[rng.gen_range(0..TOPIC_PERSON.len())].replace("{T}", &topic)
                }
                _ => TOPIC_WORK[rng.gen_range(0..TOPIC_WORK.len())].replace("{T}", &topic),
            };
            let follower = NEUTRAL[rng.gen_range(0..NEUTRAL.len())].to_string();
            units.push(vec![first, follower]);
        }
        let n_docs = config.documents;
        let slots: usize = (0..n_docs)
            .map(|_| rng.gen_range(config.units_per_document.0..=config.units_per_document.1))
            .sum();
        while units.len() < slots {
            units.push(vec![self.noise(work, rng)]);
        }
        // answer units go first so they land before shuffling spreads them
        let (head, tail) = units.split_at_mut(answer_units);
        tail.shuffle(rng);
        let mut docs: Vec<Vec<String>> = vec![Vec::new(); n_docs];
        for unit in head.iter() {
            // answers skew towards the better-ranked documents
            let d = rng.gen_range(0..n_docs).min(rng.gen_range(0..n_docs));
            docs[d].extend(unit.iter().cloned());
        }
        for (i, unit) in tail.iter().enumerate() {
            let d = if i < n_docs { i } else { rng.gen_range(0..n_docs) };
            docs[d].extend(unit.iter().cloned());
        }
        for doc in &mut docs {
            // rotate so answer units are not always at the document start
            if doc.len() > 1 {
                let k = rng.gen_range(0..doc.len());
                doc.rotate_left(k);
            }
        }
        let documents = docs
            .into_iter()
            .enumerate()
            .map(|(d, sentences)| {
                let doc_id = format!("{id}-d{:02}", d + 1);
                let sentences = sentences
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let mut s = markup(s);
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
            question: markup(&question),
            documents,
            answers: vec![answer],
        }
    }
}

const TOPIC_WORK: &[&str] = &[
    "{T} was adapted for [NP the stage] .",
    "[NP Critics] praised {T} .",
    "{T} remains [NP popular] .",
    "[NP Many readers] admired {T} .",
    "{T} was translated into [NP many languages] .",
];

const TOPIC_PERSON: &[&str] = &[
    "{T} studied [NP music] .",
    "[NP Many readers] admired {T} .",
    "{T} moved to [NP the coast] .",
    "[NP Critics] praised {T} .",
];

/// Bundles where every answer token lies near `+u` and every other token near
/// `-u` in embedding space, for a fixed random direction `u`.
///
/// Each bundle has three documents of four sentences; one or two sentences
/// contain the two-token answer as their own constituent.
pub fn separable(prefix: &str, count: usize, dim: usize, seed: u64) -> (Vec<RetrievalBundle>, EmbeddingTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = {
        let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        raw.iter().map(|x| 2.0 * x / n).collect()
    };
    let vocab = 200;
    let mut table = EmbeddingTable::new(dim, DEFAULT_OOV_BUCKETS);
    for i in 0..vocab {
        for (name, sign) in [("ans", 1.0), ("oth", -1.0)] {
            let v = u.iter().map(|x| sign * x + rng.gen_range(-0.3..0.3)).collect();
            table.insert(&format!("{name}{i}"), v);
        }
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        table.insert(&format!("q{i}"), q);
    }
    let word = |rng: &mut ChaCha8Rng, name: &str| format!("{name}{}", rng.gen_range(0..vocab));
    let bundles = (0..count)
        .map(|n| {
            let id = format!("{prefix}-{n:04}");
            let answer = format!("{} {}", word(&mut rng, "ans"), word(&mut rng, "ans"));
            let question = (0..5).map(|_| word(&mut rng, "q")).collect::<Vec<_>>().join(" ");
            let question = markup(&format!("[NP {question}] ?"));
            let hits = 1 + usize::from(rng.gen_bool(0.5));
            let mut slots: Vec<bool> = (0..12).map(|i| i < hits).collect();
            slots.shuffle(&mut rng);
            let documents = slots
                .chunks(4)
                .enumerate()
                .map(|(d, doc)| {
                    let doc_id = format!("{id}-d{}", d + 1);
                    let sentences = doc
                        .iter()
                        .enumerate()
                        .map(|(i, &hit)| {
                            let mut chunks: Vec<String> = (0..3)
                                .map(|_| format!("[NP {} {}]", word(&mut rng, "oth"), word(&mut rng, "oth")))
                                .collect();
                            if hit {
                                let k = rng.gen_range(0..3);
                                chunks[k] = format!("[NP {answer}]");
                            }
                            let mut s = markup(&chunks.join(" "));
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
                question_id: id,
                question,
                documents,
                answers: vec![answer],
            }
        })
        .collect();
    (bundles, table)
}

pub const QA_SEED: u64 = 2024;
pub const QA_DIM: usize = 16;
pub const QA_TRAIN_QUESTIONS: usize = 400;
pub const QA_EVAL_QUESTIONS: usize = 200;
pub const SEPARABLE_SEED: u64 = 11;
pub const SEPARABLE_DIM: usize = 8;
pub const SEPARABLE_TRAIN: usize = 600;
pub const SEPARABLE_HELDOUT: usize = 200;

fn write_bundles(path: &Path, bundles: &[RetrievalBundle]) -> io::Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), bundles)
}

fn write_table(path: &Path, table: &EmbeddingTable) -> io::Result<()> {
    table.write(BufWriter::new(File::create(path)?))
}

/// Writes the bundled fixtures: `qa/{train,eval}.jsonl` with
/// `qa/embeddings.txt`, and `separable/{train,heldout}.jsonl` with
/// `separable/embeddings.txt`.
pub fn write_fixtures(root: &Path) -> io::Result<()> {
    let qa = root.join("qa");
    fs::create_dir_all(&qa)?;
    let world = QaWorld::new(QA_SEED);
    let cfg = QaConfig::default();
    write_bundles(
        &qa.join("train.jsonl"),
        &world.bundles("train", 0, QA_TRAIN_QUESTIONS, &cfg, QA_SEED + 1),
    )?;
    write_bundles(
        &qa.join("eval.jsonl"),
        &world.bundles("eval", QA_TRAIN_QUESTIONS, QA_EVAL_QUESTIONS, &cfg, QA_SEED + 2),
    )?;
    write_table(&qa.join("embeddings.txt"), &world.embeddings(QA_DIM, QA_SEED + 3))?;

    let sep = root.join("separable");
    fs::create_dir_all(&sep)?;
    // train and held-out share one vocabulary: generate together, then split
    let (all, table) = separable(
        "sep",
        SEPARABLE_TRAIN + SEPARABLE_HELDOUT,
        SEPARABLE_DIM,
        SEPARABLE_SEED,
    );
    write_bundles(&sep.join("train.jsonl"), &all[..SEPARABLE_TRAIN])?;
    write_bundles(&sep.join("heldout.jsonl"), &all[SEPARABLE_TRAIN..])?;
    write_table(&sep.join("embeddings.txt"), &table)
}
