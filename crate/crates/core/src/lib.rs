//! Sentence selection for coarse-to-fine open-domain question answering.
//!
//! Each selector scores the sentences of a question's retrieved documents;
//! the pipeline keeps the top k and hands their concatenation to a reader.

pub mod adapter;
pub mod ansfind;
pub mod bow;
pub mod corpus;
pub mod embedding;
pub mod evdmatch;
pub mod metrics;
pub mod modelio;
pub mod nn;
pub mod pipeline;
pub mod selector;
pub mod synth;
pub mod tfidf;
pub mod training;

pub use adapter::{AdapterCommand, AdapterError, ExternalSelector, ReaderAdapter, ReaderAnswer};
pub use ansfind::{AnsFindModel, AnsFindSelector, AnsFindTrainConfig, Candidate};
pub use bow::{BowModel, BowSelector, BowTrainConfig};
pub use corpus::{load_dataset, AnnotatedSentence, ConstituentSpan, CorpusError, Document, RetrievalBundle, Token};
pub use embedding::{load_embeddings, EmbeddingError, EmbeddingTable};
pub use evdmatch::{EnsembleSelector, EvdMatchSelector};
pub use modelio::{ModelFile, ModelIoError};
pub use pipeline::{
    benchmark, evaluate, retrieval_upper_bound, run_pipeline, BenchReport, EvalReport, PipelineConfig, PipelineError,
    SelectionResult,
};
pub use selector::{score_all, select_top_k, ScoredSentence, SelectError, SelectionScore, Selector};
pub use tfidf::TfIdfSelector;
pub use training::{TrainError, TrainReport};
