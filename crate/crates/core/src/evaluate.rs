//! Exact-match scoring of prediction files and the true-prefix probe.
//!
//! A prediction counts as correct only if it equals the gold target as a
//! whole string. Token accuracy, per-length tables and divergence positions
//! are reported alongside so that high-accuracy, wrong-answer behaviour can
//! be inspected.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::parse_pair_line;
use crate::error::{LnsError, Result};
use crate::sequence::{ls_prefix, Term};

pub const DEFAULT_DIAGNOSTICS: usize = 100;

const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub source: String,
    pub gold: String,
    pub predicted: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub total: u64,
    pub errors: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// Zero-based position in the input.
    pub index: usize,
    pub source: String,
    pub gold: String,
    pub predicted: String,
    pub first_divergence: Option<usize>,
    pub length_delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub token_accuracy: f64,
    pub length_mismatches: u64,
    pub per_length: BTreeMap<usize, LengthBucket>,
    pub diagnostics: Vec<ErrorRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTerm {
    pub step: usize,
    pub input: String,
    pub gold: String,
    pub predicted: String,
    pub verdict: Verdict,
    pub first_divergence: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: String,
    pub terms: Vec<ProbeTerm>,
    pub first_failure_step: Option<usize>,
}

impl ProbeReport {
    pub fn failures(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.verdict == Verdict::Fail)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "report", rename_all = "lowercase")]
pub enum Report {
    Eval(EvalReport),
    Probe(ProbeReport),
}

impl Report {
    pub fn error_count(&self) -> u64 {
        match self {
            Report::Eval(r) => r.errors,
            Report::Probe(r) => r.failures() as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RenderMode {
    Plain,
    Color,
    Structured,
}

/// Drops digit separators and trailing whitespace; nothing else is touched.
pub fn normalize(s: &str) -> String {
    s.trim_end().chars().filter(|&c| c != ' ').collect()
}

/// First index where the two strings differ, by character. `None` iff equal.
pub fn first_divergence(gold: &str, predicted: &str) -> Option<usize> {
    let mut g = gold.chars();
    let mut p = predicted.chars();
    let mut i = 0;
    loop {
        match (g.next(), p.next()) {
            (None, None) => return None,
            (Some(a), Some(b)) if a == b => i += 1,
            _ => return Some(i),
        }
    }
}

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| LnsError::io(path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Reads a gold dataset file and a prediction file and pairs them up.
pub fn load_eval_inputs(gold_path: &Path, pred_path: &Path) -> Result<Vec<Triple>> {
    let gold_text = fs::read_to_string(gold_path).map_err(|e| LnsError::io(gold_path, e))?;
    let gold = parse_gold(&gold_text).map_err(|(line, message)| LnsError::Parse {
        path: gold_path.to_path_buf(),
        message: format!("line {line}: {message}"),
    })?;
    align(gold, &read_lossy(pred_path)?)
}

/// Parses `SOURCE<TAB>TARGET` lines, raw or spaced.
pub fn parse_gold(text: &str) -> std::result::Result<Vec<(String, String)>, (usize, String)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_pair_line(line).ok_or((i + 1, "expected SOURCE<TAB>TARGET".into())))
        .collect()
}

/// Matches predictions to gold pairs.
///
/// If every prediction line carries a tab the file is keyed by source;
/// otherwise predictions are matched to gold by line number.
pub fn align(gold: Vec<(String, String)>, predictions: &str) -> Result<Vec<Triple>> {
    let lines: Vec<&str> = predictions.lines().collect();
    let keyed = !lines.is_empty() && lines.iter().all(|l| l.contains('\t'));
    if !keyed {
        if lines.len() != gold.len() {
            return Err(LnsError::LineCountMismatch {
                gold: gold.len(),
                predicted: lines.len(),
            });
        }
        return Ok(gold
            .into_iter()
            .zip(lines)
            .map(|((source, gold), p)| Triple {
                source,
                gold,
                predicted: normalize(p),
            })
            .collect());
    }

    let mut by_source = HashMap::with_capacity(lines.len());
    for line in lines {
        let (source, predicted) = line.split_once('\t').expect("keyed lines contain a tab");
        let source = normalize(source);
        if by_source
            .insert(source.clone(), normalize(predicted))
            .is_some()
        {
            return Err(LnsError::DuplicatePrediction(source));
        }
    }
    gold.into_iter()
        .map(|(source, gold)| match by_source.remove(&source) {
            Some(predicted) => Ok(Triple {
                source,
                gold,
                predicted,
            }),
            None => Err(LnsError::MissingPrediction(source)),
        })
        .collect()
}

/// Partial counts over a contiguous slice of triples; merges in order.
#[derive(Default)]
struct Tally {
    total: u64,
    errors: u64,
    matched_positions: u64,
    gold_positions: u64,
    length_mismatches: u64,
    per_length: BTreeMap<usize, LengthBucket>,
    diagnostics: Vec<ErrorRecord>,
}

impl Tally {
    fn over(triples: &[Triple], offset: usize, cap: usize) -> Tally {
        let mut tally = Tally::default();
        for (i, t) in triples.iter().enumerate() {
            let gold_len = t.gold.chars().count();
            let pred_len = t.predicted.chars().count();
            let matched = t
                .gold
                .chars()
                .zip(t.predicted.chars())
                .filter(|(a, b)| a == b)
                .count();
            tally.total += 1;
            tally.gold_positions += gold_len as u64;
            tally.matched_positions += matched as u64;
            if gold_len != pred_len {
                tally.length_mismatches += 1;
            }
            let bucket = tally
                .per_length
                .entry(t.source.chars().count())
                .or_default();
            bucket.total += 1;
            if let Some(at) = first_divergence(&t.gold, &t.predicted) {
                tally.errors += 1;
                bucket.errors += 1;
                if tally.diagnostics.len() < cap {
                    tally.diagnostics.push(ErrorRecord {
                        index: offset + i,
                        source: t.source.clone(),
                        gold: t.gold.clone(),
                        predicted: t.predicted.clone(),
                        first_divergence: Some(at),
                        length_delta: pred_len as i64 - gold_len as i64,
                    });
                }
            }
        }
        tally
    }

    fn merge(mut self, other: Tally, cap: usize) -> Tally {
        self.total += other.total;
        self.errors += other.errors;
        self.matched_positions += other.matched_positions;
        self.gold_positions += other.gold_positions;
        self.length_mismatches += other.length_mismatches;
        for (len, b) in other.per_length {
            let bucket = self.per_length.entry(len).or_default();
            bucket.total += b.total;
            bucket.errors += b.errors;
        }
        let room = cap.saturating_sub(self.diagnostics.len());
        self.diagnostics
            .extend(other.diagnostics.into_iter().take(room));
        self
    }

    fn into_report(self) -> EvalReport {
        EvalReport {
            total: self.total,
            errors: self.errors,
            error_rate: self.errors as f64 / self.total as f64,
            token_accuracy: if self.gold_positions == 0 {
                1.0
            } else {
                self.matched_positions as f64 / self.gold_positions as f64
            },
            length_mismatches: self.length_mismatches,
            per_length: self.per_length,
            diagnostics: self.diagnostics,
        }
    }
}

/// Scores aligned triples, keeping at most `diagnostics_cap` error records
/// in input order.
pub fn score(triples: &[Triple], diagnostics_cap: usize) -> Result<EvalReport> {
    if triples.is_empty() {
        return Err(LnsError::EmptyEvaluation);
    }
    Ok(Tally::over(triples, 0, diagnostics_cap).into_report())
}

/// Same result as [`score`], with the triples split across `workers` threads.
pub fn score_parallel(
    triples: &[Triple],
    diagnostics_cap: usize,
    workers: usize,
) -> Result<EvalReport> {
    if triples.is_empty() {
        return Err(LnsError::EmptyEvaluation);
    }
    let chunk = triples.len().div_ceil(workers.max(1));
    let tallies: Vec<Tally> = std::thread::scope(|scope| {
        let handles: Vec<_> = triples
            .chunks(chunk)
            .enumerate()
            .map(|(k, part)| scope.spawn(move || Tally::over(part, k * chunk, diagnostics_cap)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });
    let merged = tallies
        .into_iter()
        .reduce(|a, b| a.merge(b, diagnostics_cap))
        .expect("at least one shard");
    Ok(merged.into_report())
}

/// Grades `predictions[i]` against the image of the `i`-th orbit term of
/// `seed`, for `i` in `0..n`.
pub fn probe(predictions: &[String], n: usize, seed: &Term, budget: u64) -> Result<ProbeReport> {
    if predictions.len() != n {
        return Err(LnsError::ProbeLengthMismatch {
            expected: n,
            actual: predictions.len(),
        });
    }
    let orbit = ls_prefix(n + 1, seed, budget)?;
    let terms: Vec<ProbeTerm> = predictions
        .iter()
        .enumerate()
        .map(|(step, predicted)| {
            let gold = orbit[step + 1].to_string();
            let predicted = normalize(predicted);
            let first_divergence = first_divergence(&gold, &predicted);
            ProbeTerm {
                step,
                input: orbit[step].to_string(),
                gold,
                predicted,
                verdict: if first_divergence.is_none() {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                first_divergence,
            }
        })
        .collect();
    let first_failure_step = terms
        .iter()
        .find(|t| t.verdict == Verdict::Fail)
        .map(|t| t.step);
    Ok(ProbeReport {
        seed: seed.to_string(),
        terms,
        first_failure_step,
    })
}

/// Reads probe predictions, one per line or keyed by orbit term.
pub fn load_probe_predictions(
    path: &Path,
    n: usize,
    seed: &Term,
    budget: u64,
) -> Result<Vec<String>> {
    let text = read_lossy(path)?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() || !lines.iter().all(|l| l.contains('\t')) {
        return Ok(lines.into_iter().map(normalize).collect());
    }
    let orbit = ls_prefix(n + 1, seed, budget)?;
    let gold = orbit
        .windows(2)
        .map(|w| (w[0].to_string(), w[1].to_string()))
        .collect();
    Ok(align(gold, &text)?
        .into_iter()
        .map(|t| t.predicted)
        .collect())
}

fn highlight(predicted: &str, from: Option<usize>, color: bool) -> String {
    match from {
        Some(at) if color => {
            let split = predicted
                .char_indices()
                .nth(at)
                .map_or(predicted.len(), |(b, _)| b);
            let (head, tail) = predicted.split_at(split);
            if tail.is_empty() {
                // missing suffix: mark the cut
                format!("{head}{RED}\u{2038}{RESET}")
            } else {
                format!("{head}{RED}{tail}{RESET}")
            }
        }
        _ => predicted.to_string(),
    }
}

fn table(rows: &[Vec<String>], out: &mut String) {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| visible_width(&r[c])).max().unwrap_or(0))
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if c + 1 < row.len() {
                line.push_str(&" ".repeat(widths[c] - visible_width(cell)));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn visible_width(s: &str) -> usize {
    s.replace(RED, "").replace(RESET, "").chars().count()
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn render_report(report: &Report, mode: RenderMode) -> String {
    if mode == RenderMode::Structured {
        let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
        s.push('\n');
        return s;
    }
    let color = mode == RenderMode::Color;
    let mut out = String::new();
    match report {
        Report::Eval(r) => {
            writeln!(out, "{} / {} errors", r.errors, r.total).unwrap();
            writeln!(
                out,
                "error rate {:.6}  token accuracy {:.6}  length mismatches {}",
                r.error_rate, r.token_accuracy, r.length_mismatches
            )
            .unwrap();
            out.push('\n');
            let mut rows = vec![vec!["len".into(), "total".into(), "errors".into()]];
            rows.extend(
                r.per_length.iter().map(|(len, b)| {
                    vec![len.to_string(), b.total.to_string(), b.errors.to_string()]
                }),
            );
            table(&rows, &mut out);
            if !r.diagnostics.is_empty() {
                out.push('\n');
                let mut rows = vec![["line", "source", "gold", "predicted", "diverges", "delta"]
                    .map(String::from)
                    .to_vec()];
                rows.extend(r.diagnostics.iter().map(|d| {
                    vec![
                        (d.index + 1).to_string(),
                        d.source.clone(),
                        d.gold.clone(),
                        highlight(&d.predicted, d.first_divergence, color),
                        opt(d.first_divergence),
                        format!("{:+}", d.length_delta),
                    ]
                }));
                table(&rows, &mut out);
            }
        }
        Report::Probe(r) => {
            writeln!(out, "{} / {} errors", r.failures(), r.terms.len()).unwrap();
            match r.first_failure_step {
                Some(step) => writeln!(out, "first failure at step {step}").unwrap(),
                None => writeln!(out, "no failures").unwrap(),
            }
            out.push('\n');
            let mut rows = vec![["step", "input", "gold", "predicted", "verdict"]
                .map(String::from)
                .to_vec()];
            rows.extend(r.terms.iter().map(|t| {
                vec![
                    t.step.to_string(),
                    t.input.clone(),
                    t.gold.clone(),
                    highlight(&t.predicted, t.first_divergence, color),
                    match t.verdict {
                        Verdict::Pass => "ok".into(),
                        Verdict::Fail => "FAIL".into(),
                    },
                ]
            }));
            table(&rows, &mut out);
        }
    }
    out
}
