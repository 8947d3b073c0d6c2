//! Line-delimited JSON protocol for external selectors and readers.
//!
//! The child process reads one request object per line on stdin and writes
//! one response object per line on stdout. A process that times out,
//! answers with malformed JSON or exits is discarded; the next request
//! starts a fresh one.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, RetrievalBundle};
use crate::selector::{QuestionScorer, SelectError, SelectionScore, Selector};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("empty adapter command")]
    EmptyCommand,
    #[error("failed to start `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("adapter timed out after {0:?}")]
    Timeout(Duration),
    #[error("adapter exited ({status})")]
    Exited { status: String },
    #[error("malformed adapter response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Request {
    #[serde(rename = "score")]
    Score {
        question_id: String,
        question: Vec<String>,
        sentences: Vec<Vec<String>>,
    },
    #[serde(rename = "read")]
    Read {
        question_id: String,
        question: Vec<String>,
        context: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Response {
    #[serde(rename = "scores")]
    Scores { question_id: String, scores: Vec<f64> },
    #[serde(rename = "answer")]
    Answer {
        question_id: String,
        answer: String,
        score: f64,
    },
}

/// Program and arguments, split on whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdapterCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl AdapterCommand {
    pub fn parse(line: &str) -> Result<Self, AdapterError> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or(AdapterError::EmptyCommand)?;
        Ok(AdapterCommand {
            program,
            args: parts.collect(),
        })
    }

    pub fn display(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub struct AdapterProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl AdapterProcess {
    pub fn spawn(command: &AdapterCommand) -> Result<Self, AdapterError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn {
                command: command.display(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(AdapterProcess {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exit_status(&mut self) -> String {
        // give a dying process a moment to be reaped
        for _ in 0..20 {
            if let Ok(Some(status)) = self.child.try_wait() {
                return status.to_string();
            }
            thread::sleep(Duration::from_millis(5));
        }
        "closed stdout".to_string()
    }

    /// Sends one line and waits for one line back.
    pub fn call_raw(&mut self, line: &str, timeout: Duration) -> Result<String, AdapterError> {
        let sent = writeln!(self.stdin, "{line}").and_then(|_| self.stdin.flush());
        if let Err(e) = sent {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Err(AdapterError::Exited {
                    status: self.exit_status(),
                });
            }
            return Err(e.into());
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => Ok(reply),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(AdapterError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(AdapterError::Exited {
                status: self.exit_status(),
            }),
        }
    }

    pub fn call(&mut self, request: &Request, timeout: Duration) -> Result<Response, AdapterError> {
        let line = serde_json::to_string(request).map_err(|e| AdapterError::Malformed(e.to_string()))?;
        let reply = self.call_raw(&line, timeout)?;
        serde_json::from_str(&reply).map_err(|e| AdapterError::Malformed(format!("{e}: {reply:.200}")))
    }
}

impl Drop for AdapterProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Idle adapter processes shared by pipeline workers. A worker checks a
/// process out for the duration of one request, so there is at most one
/// process per concurrent worker.
pub struct AdapterPool {
    command: AdapterCommand,
    timeout: Duration,
    idle: Mutex<Vec<AdapterProcess>>,
}

impl AdapterPool {
    pub fn new(command: AdapterCommand, timeout: Duration) -> Self {
        AdapterPool {
            command,
            timeout,
            idle: Mutex::new(Vec::new()),
        }
    }

    pub fn command(&self) -> &AdapterCommand {
        &self.command
    }

    pub fn call(&self, request: &Request) -> Result<Response, AdapterError> {
        let process = self.idle.lock().expect("adapter pool lock").pop();
        let mut process = match process {
            Some(p) => p,
            None => AdapterProcess::spawn(&self.command)?,
        };
        let result = process.call(request, self.timeout);
        if result.is_ok() {
            self.idle.lock().expect("adapter pool lock").push(process);
        }
        result
    }
}

fn texts<'a, I: IntoIterator<Item = &'a crate::corpus::Token>>(tokens: I) -> Vec<String> {
    tokens.into_iter().map(|t| t.text.clone()).collect()
}

/// Selector whose scores come from an external process.
pub struct ExternalSelector {
    pool: AdapterPool,
}

impl ExternalSelector {
    pub fn new(command: AdapterCommand, timeout: Duration) -> Self {
        ExternalSelector {
            pool: AdapterPool::new(command, timeout),
        }
    }

    /// Scores for every sentence of the bundle in (rank, index) order.
    pub fn request_scores(&self, bundle: &RetrievalBundle) -> Result<Vec<f64>, AdapterError> {
        let sentences: Vec<Vec<String>> = bundle.sentences().map(|(_, s)| texts(&s.tokens)).collect();
        let expected = sentences.len();
        let request = Request::Score {
            question_id: bundle.question_id.clone(),
            question: texts(&bundle.question.tokens),
            sentences,
        };
        match self.pool.call(&request)? {
            Response::Scores { question_id, scores } => {
                if question_id != bundle.question_id {
                    return Err(AdapterError::Malformed(format!(
                        "response for `{question_id}`, expected `{}`",
                        bundle.question_id
                    )));
                }
                if scores.len() != expected {
                    return Err(AdapterError::Malformed(format!(
                        "{} scores for {expected} sentences",
                        scores.len()
                    )));
                }
                if scores.iter().any(|s| !s.is_finite()) {
                    return Err(AdapterError::Malformed("non-finite score".into()));
                }
                Ok(scores)
            }
            other => Err(AdapterError::Malformed(format!("expected scores, got {other:?}"))),
        }
    }
}

struct PreparedExternal {
    by_rank: BTreeMap<usize, Vec<f64>>,
}

impl QuestionScorer for PreparedExternal {
    fn score(&self, doc: &Document, sentence_index: usize) -> Result<SelectionScore, SelectError> {
        let score = self
            .by_rank
            .get(&doc.rank)
            .and_then(|s| s.get(sentence_index))
            .ok_or_else(|| {
                SelectError::Argument(format!("no score for rank {} sentence {sentence_index}", doc.rank))
            })?;
        SelectionScore::new(*score)
    }
}

impl Selector for ExternalSelector {
    fn name(&self) -> &str {
        "external"
    }

    fn prepare<'b>(&'b self, bundle: &'b RetrievalBundle) -> Result<Box<dyn QuestionScorer + 'b>, SelectError> {
        let scores = self.request_scores(bundle)?;
        let mut by_rank = BTreeMap::new();
        let mut it = scores.into_iter();
        for doc in &bundle.documents {
            by_rank.insert(doc.rank, it.by_ref().take(doc.sentences.len()).collect());
        }
        Ok(Box::new(PreparedExternal { by_rank }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderAnswer {
    pub answer: String,
    pub score: f64,
}

/// External reading-comprehension model.
pub struct ReaderAdapter {
    pool: AdapterPool,
}

impl ReaderAdapter {
    pub fn new(command: AdapterCommand, timeout: Duration) -> Self {
        ReaderAdapter {
            pool: AdapterPool::new(command, timeout),
        }
    }

    pub fn read(
        &self,
        question_id: &str,
        question: Vec<String>,
        context: Vec<String>,
    ) -> Result<ReaderAnswer, AdapterError> {
        let request = Request::Read {
            question_id: question_id.to_string(),
            question,
            context,
        };
        match self.pool.call(&request)? {
            Response::Answer {
                question_id: id,
                answer,
                score,
            } => {
                if id != question_id {
                    return Err(AdapterError::Malformed(format!(
                        "response for `{id}`, expected `{question_id}`"
                    )));
                }
                Ok(ReaderAnswer { answer, score })
            }
            other => Err(AdapterError::Malformed(format!("expected answer, got {other:?}"))),
        }
    }
}
