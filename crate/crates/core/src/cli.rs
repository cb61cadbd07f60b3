//! The `lns` command line.
//!
//! Exit codes: 0 on success (and, for `score`, `probe` and `check-data`, only
//! when nothing was wrong), 1 on domain errors or evaluation failures, 2 on
//! usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::audioactive::{
    build_closure, growth_constant, length_series, DEFAULT_ATOM_LIMIT, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOL, DEFAULT_T_CHECK,
};
use crate::datagen::{check_dataset, generate, DataFormat, DatasetSpec, Direction};
use crate::error::{LnsError, Result};
use crate::evaluate::{
    load_eval_inputs, load_probe_predictions, probe, render_report, score, RenderMode, Report,
    DEFAULT_DIAGNOSTICS,
};
use crate::sequence::{ls_prefix, say_lengths, say_n, unsay, Term, DEFAULT_BUDGET};

pub const BUDGET_ENV: &str = "LNS_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "lns",
    version,
    about = "Look-and-Say toolkit: rewriting, lengths, datasets, scoring"
)]
pub struct Cli {
    /// Random seed for dataset generation
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Maximum materialized term length in digits (overrides LNS_BUDGET)
    #[arg(long, global = true)]
    pub budget: Option<u64>,

    /// Output format for tabular results
    #[arg(long, global = true, value_enum, default_value = "plain")]
    pub format: RenderMode,

    /// Output path (directory for gen-data/atoms, report file for score/probe)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply the look-and-say step
    Say {
        term: String,
        #[arg(long, default_value_t = 1)]
        steps: usize,
    },
    /// Apply the inverse step (read as count, digit pairs)
    Reverse { term: String },
    /// Print the first N terms of the sequence
    Prefix {
        n: usize,
        #[arg(long, default_value = "1")]
        seed_term: String,
    },
    /// Print step, length and ratio to the previous length
    Lengths {
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "1")]
        seed_term: String,
        /// Iterate directly instead of using the atom decay matrix
        #[arg(long)]
        direct: bool,
        #[arg(long, default_value_t = DEFAULT_T_CHECK)]
        t_check: usize,
    },
    /// Estimate the per-step growth constant
    Constant {
        #[arg(long, default_value = "1")]
        seed_term: String,
        #[arg(long, default_value_t = DEFAULT_T_CHECK)]
        t_check: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iterations: usize,
    },
    /// Export the atom table and decay matrix
    Atoms {
        #[arg(long, default_value = "1")]
        seed_term: String,
        #[arg(long, default_value_t = DEFAULT_T_CHECK)]
        t_check: usize,
        #[arg(long, default_value_t = DEFAULT_ATOM_LIMIT)]
        atom_limit: usize,
    },
    /// Generate a train/test dataset and manifest into --out
    GenData {
        /// JSON dataset spec; flags below override its fields
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long)]
        min_len: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        max_run: Option<usize>,
        #[arg(long)]
        train_size: Option<u64>,
        #[arg(long)]
        test_size: Option<u64>,
        #[arg(long, value_enum)]
        direction: Option<Direction>,
        #[arg(long, value_enum)]
        data_format: Option<DataFormat>,
    },
    /// Re-verify a generated dataset against its manifest
    CheckData { dir: PathBuf },
    /// Score a prediction file against a gold dataset file
    Score {
        gold: PathBuf,
        pred: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIAGNOSTICS)]
        diagnostics: usize,
    },
    /// Grade predictions on the true sequence
    Probe {
        pred: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1")]
        seed_term: String,
    },
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                2
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.name());
            1
        }
    }
}

fn budget(cli: &Cli) -> Result<u64> {
    if let Some(b) = cli.budget {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| LnsError::InvalidSpec(format!("{BUDGET_ENV}={v} is not an integer"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn term(s: &str) -> Result<Term> {
    let t: Term = s.parse()?;
    if t.is_empty() {
        return Err(LnsError::EmptyInput);
    }
    Ok(t)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| LnsError::io("<stdout>", e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| LnsError::io(path, e))
}

#[derive(Serialize)]
struct LengthRow {
    step: usize,
    length: String,
    ratio: Option<f64>,
}

fn length_rows(lengths: &[BigUint]) -> Vec<LengthRow> {
    lengths
        .iter()
        .enumerate()
        .map(|(step, len)| LengthRow {
            step,
            length: len.to_string(),
            ratio: (step > 0).then(|| {
                len.to_f64().unwrap_or(f64::INFINITY)
                    / lengths[step - 1].to_f64().unwrap_or(f64::INFINITY)
            }),
        })
        .collect()
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let structured = cli.format == RenderMode::Structured;
    match &cli.command {
        Command::Say { term: s, steps } => {
            let result = say_n(&term(s)?, *steps, budget(cli)?)?;
            emit(out, &format!("{result}\n"))?;
        }
        Command::Reverse { term: s } => {
            emit(out, &format!("{}\n", unsay(&term(s)?)?))?;
        }
        Command::Prefix { n, seed_term } => {
            let terms: Vec<String> = ls_prefix(*n, &term(seed_term)?, budget(cli)?)?
                .iter()
                .map(Term::to_string)
                .collect();
            if structured {
                emit(out, &json(&terms))?;
            } else {
                emit(
                    out,
                    &terms.iter().map(|t| format!("{t}\n")).collect::<String>(),
                )?;
            }
        }
        Command::Lengths {
            steps,
            seed_term,
            direct,
            t_check,
        } => {
            let seed = term(seed_term)?;
            let lengths = if *direct {
                say_lengths(&seed, *steps)?
            } else {
                let (table, matrix) = build_closure(&seed, *t_check, DEFAULT_ATOM_LIMIT)?;
                length_series(&seed, *steps, &table, &matrix)?
            };
            let rows = length_rows(&lengths);
            if structured {
                emit(out, &json(&rows))?;
            } else {
                let mut text = String::from("step\tlength\tratio\n");
                for row in rows {
                    let ratio = row
                        .ratio
                        .map_or_else(|| "-".to_string(), |r| format!("{r:.6}"));
                    text.push_str(&format!("{}\t{}\t{ratio}\n", row.step, row.length));
                }
                emit(out, &text)?;
            }
        }
        Command::Constant {
            seed_term,
            t_check,
            tol,
            max_iterations,
        } => {
            let (table, matrix) = build_closure(&term(seed_term)?, *t_check, DEFAULT_ATOM_LIMIT)?;
            let g = growth_constant(&matrix, *tol, *max_iterations)?;
            if structured {
                #[derive(Serialize)]
                struct Constant {
                    value: f64,
                    iterations: usize,
                    atoms: usize,
                }
                emit(
                    out,
                    &json(&Constant {
                        value: g.value,
                        iterations: g.iterations,
                        atoms: table.len(),
                    }),
                )?;
            } else {
                emit(
                    out,
                    &format!(
                        "growth constant {:.12}\niterations {}\natoms {}\n",
                        g.value,
                        g.iterations,
                        table.len()
                    ),
                )?;
            }
        }
        Command::Atoms {
            seed_term,
            t_check,
            atom_limit,
        } => {
            let (table, matrix) = build_closure(&term(seed_term)?, *t_check, *atom_limit)?;
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir).map_err(|e| LnsError::io(dir, e))?;
                write_file(&dir.join("atoms.tsv"), &table.to_tsv())?;
                write_file(&dir.join("matrix.txt"), &matrix.to_rows_text())?;
                emit(
                    out,
                    &format!("{} atoms written to {}\n", table.len(), dir.display()),
                )?;
            } else if structured {
                #[derive(Serialize)]
                struct AtomRow {
                    id: usize,
                    atom: String,
                    decay: Vec<usize>,
                }
                #[derive(Serialize)]
                struct Export<'a> {
                    atoms: Vec<AtomRow>,
                    matrix: &'a [Vec<u64>],
                }
                let atoms = table
                    .atoms()
                    .iter()
                    .map(|a| AtomRow {
                        id: a.id,
                        atom: a.term.to_string(),
                        decay: table.decay(a.id).to_vec(),
                    })
                    .collect();
                emit(
                    out,
                    &json(&Export {
                        atoms,
                        matrix: matrix.rows(),
                    }),
                )?;
            } else {
                emit(out, &table.to_tsv())?;
                emit(out, "\n")?;
                emit(out, &matrix.to_rows_text())?;
            }
        }
        Command::GenData {
            spec,
            alphabet,
            min_len,
            max_len,
            max_run,
            train_size,
            test_size,
            direction,
            data_format,
        } => {
            let mut ds = match spec {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| LnsError::io(path, e))?;
                    serde_json::from_str(&text).map_err(|e| LnsError::Parse {
                        path: path.clone(),
                        message: e.to_string(),
                    })?
                }
                None => DatasetSpec::default(),
            };
            if let Some(v) = alphabet {
                ds.alphabet = v.clone();
            }
            if let Some(v) = min_len {
                ds.min_len = *v;
            }
            if let Some(v) = max_len {
                ds.max_len = *v;
            }
            if let Some(v) = max_run {
                ds.max_run = *v;
            }
            if let Some(v) = train_size {
                ds.train_size = *v;
            }
            if let Some(v) = test_size {
                ds.test_size = *v;
            }
            if let Some(v) = direction {
                ds.direction = *v;
            }
            if let Some(v) = data_format {
                ds.format = *v;
            }
            if let Some(v) = cli.seed {
                ds.seed = v;
            }
            let dir = cli
                .out
                .as_ref()
                .ok_or_else(|| LnsError::InvalidSpec("gen-data needs --out DIR".into()))?;
            let manifest = generate(&ds, dir)?;
            if structured {
                emit(out, &json(&manifest))?;
            } else {
                let mut text = String::new();
                for (name, entry) in &manifest.files {
                    text.push_str(&format!("{name}\t{}\t{}\n", entry.lines, entry.sha256));
                }
                emit(out, &text)?;
            }
        }
        Command::CheckData { dir } => {
            let report = check_dataset(dir)?;
            if structured {
                emit(out, &json(&report))?;
            } else {
                let mut text = format!(
                    "{} pairs, {} invalid, {} duplicate sources, {} checksum failures\n",
                    report.pairs,
                    report.invalid_pairs,
                    report.duplicate_sources,
                    report.checksum_failures.len()
                );
                for p in &report.problems {
                    text.push_str(&format!("  {p}\n"));
                }
                emit(out, &text)?;
            }
            return Ok(if report.is_clean() { 0 } else { 1 });
        }
        Command::Score {
            gold,
            pred,
            diagnostics,
        } => {
            let triples = load_eval_inputs(gold, pred)?;
            let report = Report::Eval(score(&triples, *diagnostics)?);
            return finish_report(cli, &report, out);
        }
        Command::Probe { pred, n, seed_term } => {
            let seed = term(seed_term)?;
            let budget = budget(cli)?;
            let predictions = load_probe_predictions(pred, *n, &seed, budget)?;
            let report = Report::Probe(probe(&predictions, *n, &seed, budget)?);
            return finish_report(cli, &report, out);
        }
    }
    Ok(0)
}

fn finish_report(cli: &Cli, report: &Report, out: &mut dyn Write) -> Result<i32> {
    if let Some(path) = &cli.out {
        write_file(path, &render_report(report, RenderMode::Structured))?;
    }
    emit(out, &render_report(report, cli.format))?;
    Ok(if report.error_count() == 0 { 0 } else { 1 })
}
