//! Loopback adapter for tests and demos.
//!
//! Speaks the JSON-lines protocol on stdin/stdout as either a selector or a
//! reader. Selected question ids can be made to answer with garbage or to
//! stall, to exercise error handling in the caller.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use sieve_core::adapter::{Request, Response};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Selector,
    Reader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Score = number of sentence tokens that also occur in the question.
    Overlap,
    /// Score every sentence 0.
    Const,
    /// Scores taken from --scores, cycled to the sentence count.
    Fixed,
    /// Write each request line back unchanged.
    Echo,
}

#[derive(Debug, Parser)]
#[command(name = "sieve-stub")]
struct Args {
    #[arg(long, value_enum, default_value_t = Role::Selector)]
    role: Role,
    #[arg(long, value_enum, default_value_t = Mode::Overlap)]
    mode: Mode,
    #[arg(long, value_delimiter = ',')]
    scores: Vec<f64>,
    /// Question ids answered with a line that is not JSON.
    #[arg(long, value_delimiter = ',')]
    malformed_ids: Vec<String>,
    /// Question ids answered only after --sleep-ms.
    #[arg(long, value_delimiter = ',')]
    sleep_ids: Vec<String>,
    #[arg(long, default_value_t = 5_000)]
    sleep_ms: u64,
}

fn question_id(r: &Request) -> &str {
    match r {
        Request::Score { question_id, .. } | Request::Read { question_id, .. } => question_id,
    }
}

fn score(args: &Args, question: &[String], sentences: &[Vec<String>]) -> Vec<f64> {
    match args.mode {
        Mode::Const | Mode::Echo => vec![0.0; sentences.len()],
        Mode::Fixed if !args.scores.is_empty() => args.scores.iter().copied().cycle().take(sentences.len()).collect(),
        Mode::Fixed => vec![0.0; sentences.len()],
        Mode::Overlap => {
            let q: HashSet<String> = question.iter().map(|t| t.to_lowercase()).collect();
            sentences
                .iter()
                .map(|s| s.iter().filter(|t| q.contains(&t.to_lowercase())).count() as f64)
                .collect()
        }
    }
}

/// First run of capitalized or numeric context tokens that are not in the
/// question; empty when there is none.
fn read(question: &[String], context: &[String]) -> String {
    let q: HashSet<&str> = question.iter().map(String::as_str).collect();
    let wanted = |t: &str| !q.contains(t) && t.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit());
    let start = context.iter().position(|t| wanted(t));
    match start {
        Some(i) => context[i..]
            .iter()
            .take_while(|t| wanted(t))
            .cloned()
            .collect::<Vec<_>>()
            .join(" "),
        None => String::new(),
    }
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if args.mode == Mode::Echo {
            writeln!(out, "{line}")?;
            out.flush()?;
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("sieve-stub: bad request: {e}");
                continue;
            }
        };
        let id = question_id(&request).to_string();
        if args.sleep_ids.contains(&id) {
            thread::sleep(Duration::from_millis(args.sleep_ms));
        }
        if args.malformed_ids.contains(&id) {
            writeln!(out, "this is not a response")?;
            out.flush()?;
            continue;
        }
        let response = match (args.role, request) {
            (
                Role::Selector,
                Request::Score {
                    question_id,
                    question,
                    sentences,
                },
            ) => Response::Scores {
                question_id,
                scores: score(&args, &question, &sentences),
            },
            (
                Role::Reader,
                Request::Read {
                    question_id,
                    question,
                    context,
                },
            ) => Response::Answer {
                question_id,
                answer: read(&question, &context),
                score: 1.0,
            },
            (role, r) => {
                eprintln!("sieve-stub: {role:?} cannot handle request for `{}`", question_id(&r));
                continue;
            }
        };
        serde_json::to_writer(&mut out, &response)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(())
}
