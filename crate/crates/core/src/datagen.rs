//! Reproducible (source, target) datasets over run-capped digit strings.
//!
//! Strings are drawn by picking a length uniformly in `[min_len, max_len]`,
//! digits i.i.d. from the alphabet, capping long runs and rejecting repeats.
//! The first `train_size` unique strings form the training split and the next
//! `test_size` the test split, so the two never share a source.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LnsError, Result};
use crate::sequence::{cap_runs, say, Digit, Term, MAX_COUNT};

pub const GENERATOR_VERSION: &str = concat!("lns-core/", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_FILE: &str = "train.tsv";
pub const TEST_FILE: &str = "test.tsv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `(s, say(s))`
    Forward,
    /// `(say(s), s)`
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// `SOURCE<TAB>TARGET`
    RawTsv,
    /// Same, with single spaces between digits.
    SpacedTsv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    /// Digits to draw from, e.g. `"123"`.
    pub alphabet: String,
    pub min_len: usize,
    pub max_len: usize,
    pub max_run: usize,
    pub train_size: u64,
    pub test_size: u64,
    pub seed: u64,
    pub direction: Direction,
    pub format: DataFormat,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            alphabet: "123".into(),
            min_len: 1,
            max_len: 15,
            max_run: 3,
            train_size: 2_000_000,
            test_size: 10_000,
            seed: 42,
            direction: Direction::Forward,
            format: DataFormat::RawTsv,
        }
    }
}

impl DatasetSpec {
    pub fn alphabet_digits(&self) -> Result<Vec<Digit>> {
        let term: Term = self
            .alphabet
            .parse()
            .map_err(|e| LnsError::InvalidSpec(format!("alphabet: {e}")))?;
        let mut digits = term.digits().to_vec();
        digits.sort();
        digits.dedup();
        if digits.is_empty() {
            return Err(LnsError::InvalidSpec("alphabet is empty".into()));
        }
        if digits.len() != term.len() {
            return Err(LnsError::InvalidSpec("alphabet repeats a digit".into()));
        }
        Ok(digits)
    }

    pub fn total(&self) -> u64 {
        self.train_size + self.test_size
    }

    /// Number of distinct capped strings with lengths in range.
    pub fn universe(&self) -> Result<BigUint> {
        let a = self.alphabet_digits()?.len();
        Ok((self.min_len..=self.max_len)
            .map(|len| count_capped(a, len, self.max_run))
            .sum())
    }

    pub fn validate(&self) -> Result<()> {
        self.alphabet_digits()?;
        if self.min_len == 0 {
            return Err(LnsError::InvalidSpec("min_len must be positive".into()));
        }
        if self.min_len > self.max_len {
            return Err(LnsError::InvalidSpec(format!(
                "min_len {} exceeds max_len {}",
                self.min_len, self.max_len
            )));
        }
        if self.max_len > u32::MAX as usize {
            return Err(LnsError::InvalidSpec("max_len too large".into()));
        }
        if self.max_run == 0 || self.max_run > MAX_COUNT as usize {
            return Err(LnsError::InvalidSpec(format!(
                "max_run must be in 1..={MAX_COUNT}"
            )));
        }
        let universe = self.universe()?;
        if BigUint::from(self.total()) > universe {
            return Err(LnsError::UniverseExhausted {
                requested: self.total(),
                available: universe.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetPair {
    pub source: Term,
    pub target: Term,
}

impl DatasetPair {
    /// Checks the direction invariant.
    pub fn is_valid(&self, direction: Direction) -> bool {
        let (base, image) = match direction {
            Direction::Forward => (&self.source, &self.target),
            Direction::Reversed => (&self.target, &self.source),
        };
        say(base).is_ok_and(|s| &s == image)
    }

    /// The sampled string the pair was built from.
    pub fn base(&self, direction: Direction) -> &Term {
        match direction {
            Direction::Forward => &self.source,
            Direction::Reversed => &self.target,
        }
    }

    pub fn to_line(&self, format: DataFormat) -> String {
        format!(
            "{}\t{}\n",
            format_digits(&self.source, format),
            format_digits(&self.target, format)
        )
    }
}

fn format_digits(term: &Term, format: DataFormat) -> String {
    match format {
        DataFormat::RawTsv => term.to_string(),
        DataFormat::SpacedTsv => {
            let chars: Vec<String> = term
                .digits()
                .iter()
                .map(|d| d.as_char().to_string())
                .collect();
            chars.join(" ")
        }
    }
}

/// `alphabet_size ^ length`.
pub fn count_strings(alphabet_size: usize, length: usize) -> BigUint {
    num_traits::pow(BigUint::from(alphabet_size), length)
}

/// Strings of exactly `length` digits over `alphabet_size` symbols with no
/// run longer than `max_run`.
///
/// Counts are tracked per length of the trailing run; by symmetry the last
/// digit itself does not matter.
pub fn count_capped(alphabet_size: usize, length: usize, max_run: usize) -> BigUint {
    if length == 0 {
        return BigUint::one();
    }
    if alphabet_size == 0 || max_run == 0 {
        return BigUint::zero();
    }
    // ending[r] = strings whose trailing run has length r + 1
    let mut ending = vec![BigUint::zero(); max_run];
    ending[0] = BigUint::from(alphabet_size);
    for _ in 1..length {
        let total: BigUint = ending.iter().sum();
        let mut next = vec![BigUint::zero(); max_run];
        next[0] = total * (alphabet_size - 1);
        next[1..].clone_from_slice(&ending[..max_run - 1]);
        ending = next;
    }
    ending.into_iter().sum()
}

/// All capped strings over `alphabet` with lengths in `[min_len, max_len]`,
/// shortest first, lexicographic within a length.
pub fn enumerate_capped(
    alphabet: &[Digit],
    min_len: usize,
    max_len: usize,
    max_run: usize,
) -> Vec<Term> {
    fn extend(
        prefix: &mut Vec<Digit>,
        run: usize,
        len: usize,
        alphabet: &[Digit],
        max_run: usize,
        out: &mut Vec<Term>,
    ) {
        if prefix.len() == len {
            out.push(Term::new(prefix.clone()));
            return;
        }
        for &d in alphabet {
            let next_run = if prefix.last() == Some(&d) {
                run + 1
            } else {
                1
            };
            if next_run > max_run {
                continue;
            }
            prefix.push(d);
            extend(prefix, next_run, len, alphabet, max_run, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for len in min_len..=max_len {
        extend(
            &mut Vec::with_capacity(len),
            0,
            len,
            alphabet,
            max_run,
            &mut out,
        );
    }
    out
}

/// Draws `spec.total()` distinct capped strings, deterministically from
/// `spec.seed`.
///
/// When the request covers more than half the universe, rejection sampling
/// degrades into a coupon-collector loop, so the universe is enumerated and
/// shuffled instead.
pub fn sample_capped(spec: &DatasetSpec) -> Result<Vec<Term>> {
    spec.validate()?;
    let alphabet = spec.alphabet_digits()?;
    let total = spec.total();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let universe = spec.universe()?;
    if BigUint::from(total) * 2u32 > universe {
        let mut all = enumerate_capped(&alphabet, spec.min_len, spec.max_len, spec.max_run);
        let (picked, _) = all.partial_shuffle(&mut rng, total as usize);
        return Ok(picked.to_vec());
    }

    let mut seen = HashSet::with_capacity(total as usize);
    let mut out = Vec::with_capacity(total as usize);
    let mut raw = Vec::with_capacity(spec.max_len);
    while (out.len() as u64) < total {
        let len = rng.gen_range(spec.min_len as u32..=spec.max_len as u32) as usize;
        raw.clear();
        raw.extend((0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len() as u32) as usize]));
        let capped = cap_runs(&Term::new(raw.clone()), spec.max_run)?;
        if capped.len() < spec.min_len {
            continue;
        }
        if seen.insert(capped.clone()) {
            out.push(capped);
        }
    }
    Ok(out)
}

pub fn make_pair(term: &Term, direction: Direction) -> Result<DatasetPair> {
    let image = say(term)?;
    Ok(match direction {
        Direction::Forward => DatasetPair {
            source: term.clone(),
            target: image,
        },
        Direction::Reversed => DatasetPair {
            source: image,
            target: term.clone(),
        },
    })
}

pub fn make_pairs(strings: &[Term], direction: Direction) -> Result<Vec<DatasetPair>> {
    strings.iter().map(|s| make_pair(s, direction)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub lines: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_version: String,
    pub spec: DatasetSpec,
    pub counts: BTreeMap<String, u64>,
    pub files: BTreeMap<String, FileEntry>,
    pub sampling: String,
    pub splits: String,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| LnsError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| LnsError::Parse {
            path,
            message: e.to_string(),
        })
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| LnsError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_lines(path: &Path, pairs: &[DatasetPair], format: DataFormat) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| LnsError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for pair in pairs {
        w.write_all(pair.to_line(format).as_bytes())
            .map_err(|e| LnsError::io(path, e))?;
    }
    w.flush().map_err(|e| LnsError::io(path, e))
}

/// Writes the train and test files plus `manifest.json` into `out_dir`.
pub fn write_dataset(
    pairs: &[DatasetPair],
    spec: &DatasetSpec,
    out_dir: &Path,
) -> Result<Manifest> {
    if (pairs.len() as u64) < spec.total() {
        return Err(LnsError::InvalidSpec(format!(
            "{} pairs supplied for {} requested",
            pairs.len(),
            spec.total()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| LnsError::io(out_dir, e))?;
    let train_len = spec.train_size as usize;
    let splits = [
        (TRAIN_FILE, &pairs[..train_len]),
        (
            TEST_FILE,
            &pairs[train_len..train_len + spec.test_size as usize],
        ),
    ];

    let mut counts = BTreeMap::new();
    let mut files = BTreeMap::new();
    for (name, split) in splits {
        let path = out_dir.join(name);
        write_lines(&path, split, spec.format)?;
        counts.insert(
            name.trim_end_matches(".tsv").to_string(),
            split.len() as u64,
        );
        files.insert(
            name.to_string(),
            FileEntry {
                lines: split.len() as u64,
                sha256: sha256_file(&path)?,
            },
        );
    }
    let manifest = Manifest {
        generator_version: GENERATOR_VERSION.to_string(),
        spec: spec.clone(),
        counts,
        files,
        sampling: "length uniform in [min_len, max_len], digits iid uniform over alphabet, \
                   runs capped at max_run, duplicates rejected (enumerate-and-shuffle when \
                   the request exceeds half the universe)"
            .into(),
        splits: "train and test are source-disjoint".into(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| LnsError::io(&path, e))?;
    Ok(manifest)
}

/// Samples, pairs and writes a dataset in one go.
pub fn generate(spec: &DatasetSpec, out_dir: &Path) -> Result<Manifest> {
    let strings = sample_capped(spec)?;
    let pairs = make_pairs(&strings, spec.direction)?;
    write_dataset(&pairs, spec, out_dir)
}

/// Splits a dataset line into its two fields, dropping digit separators.
pub fn parse_pair_line(line: &str) -> Option<(String, String)> {
    let (source, target) = line.split_once('\t')?;
    let strip = |s: &str| s.chars().filter(|&c| c != ' ').collect::<String>();
    Some((strip(source), strip(target.trim_end())))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub pairs: u64,
    pub invalid_pairs: u64,
    pub duplicate_sources: u64,
    pub checksum_failures: Vec<String>,
    /// First few problems, for display.
    pub problems: Vec<String>,
}

impl CheckReport {
    pub fn is_clean(&self) -> bool {
        self.invalid_pairs == 0 && self.duplicate_sources == 0 && self.checksum_failures.is_empty()
    }

    fn note(&mut self, problem: String) {
        if self.problems.len() < 20 {
            self.problems.push(problem);
        }
    }
}

/// Re-verifies every pair of a written dataset against its manifest.
pub fn check_dataset(dir: &Path) -> Result<CheckReport> {
    let manifest = Manifest::read(dir)?;
    let spec = &manifest.spec;
    let alphabet = spec.alphabet_digits()?;
    let mut report = CheckReport::default();
    let mut sources = HashSet::new();

    for (name, entry) in &manifest.files {
        let path: PathBuf = dir.join(name);
        let actual = sha256_file(&path)?;
        if actual != entry.sha256 {
            report.note(format!("{name}: checksum mismatch"));
            report.checksum_failures.push(name.clone());
        }
        let text = fs::read_to_string(&path).map_err(|e| LnsError::io(&path, e))?;
        let mut lines = 0u64;
        for (i, line) in text.lines().enumerate() {
            lines += 1;
            report.pairs += 1;
            match check_line(line, spec, &alphabet) {
                Ok(source) => {
                    if !sources.insert(source) {
                        report.duplicate_sources += 1;
                        report.note(format!("{name}:{}: duplicate source", i + 1));
                    }
                }
                Err(msg) => {
                    report.invalid_pairs += 1;
                    report.note(format!("{name}:{}: {msg}", i + 1));
                }
            }
        }
        if lines != entry.lines {
            report.note(format!(
                "{name}: {lines} lines, manifest says {}",
                entry.lines
            ));
            if !report.checksum_failures.contains(name) {
                report.checksum_failures.push(name.clone());
            }
        }
    }
    Ok(report)
}

fn check_line(
    line: &str,
    spec: &DatasetSpec,
    alphabet: &[Digit],
) -> std::result::Result<Term, String> {
    let (source, target) = parse_pair_line(line).ok_or("missing tab")?;
    let pair = DatasetPair {
        source: source.parse().map_err(|e| format!("source: {e}"))?,
        target: target.parse().map_err(|e| format!("target: {e}"))?,
    };
    if !pair.is_valid(spec.direction) {
        return Err("target is not the image of the source".into());
    }
    let base = pair.base(spec.direction);
    if !(spec.min_len..=spec.max_len).contains(&base.len()) {
        return Err(format!("length {} out of range", base.len()));
    }
    if base.digits().iter().any(|d| !alphabet.contains(d)) {
        return Err("digit outside alphabet".into());
    }
    if cap_runs(base, spec.max_run).map_err(|e| e.to_string())? != *base {
        return Err("run longer than max_run".into());
    }
    Ok(pair.source)
}
