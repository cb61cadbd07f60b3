//! Forward and inverse Look-and-Say steps over digit strings.
//!
//! Terms are strings over the digits `1..=9`. Iteration-heavy paths work on
//! [`RleString`], the maximal-run encoding, and only materialize digits at the
//! edges.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{LnsError, Result};

/// Default cap on materialized term length: 64 MiB of digits.
pub const DEFAULT_BUDGET: u64 = 64 * 1024 * 1024;

/// Largest run that can be read aloud with a single-digit count.
pub const MAX_COUNT: u32 = 9;

/// A digit in `1..=9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Digit(u8);

impl Digit {
    pub fn new(value: u8) -> Option<Digit> {
        (1..=9).contains(&value).then_some(Digit(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_char(self) -> char {
        (b'0' + self.0) as char
    }

    fn from_count(count: u32) -> Digit {
        debug_assert!((1..=MAX_COUNT).contains(&count));
        Digit(count as u8)
    }
}

impl TryFrom<char> for Digit {
    type Error = char;

    fn try_from(ch: char) -> std::result::Result<Self, char> {
        ch.to_digit(10).and_then(|v| Digit::new(v as u8)).ok_or(ch)
    }
}

/// A materialized term. May be empty as a value; operations that need a term
/// reject the empty one with [`LnsError::EmptyInput`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(Vec<Digit>);

impl Term {
    pub fn new(digits: Vec<Digit>) -> Term {
        Term(digits)
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Digit> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Digit> {
        self.0.last().copied()
    }

    /// Number of maximal runs.
    pub fn run_count(&self) -> usize {
        if self.0.is_empty() {
            return 0;
        }
        1 + self.0.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn runs(&self) -> Runs<'_> {
        Runs {
            digits: &self.0,
            pos: 0,
        }
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.0.is_empty() {
            Err(LnsError::EmptyInput)
        } else {
            Ok(())
        }
    }
}

impl FromStr for Term {
    type Err = LnsError;

    fn from_str(s: &str) -> Result<Term> {
        s.chars()
            .enumerate()
            .map(|(position, ch)| match Digit::try_from(ch) {
                Ok(d) => Ok(d),
                Err('0') => Err(LnsError::ZeroDigit { position }),
                Err(ch) => Err(LnsError::InvalidDigit { position, ch }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Term)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|d| d.as_char()).collect();
        f.write_str(&s)
    }
}

/// Iterator over `(start, digit, length)` of maximal runs.
struct Runs<'a> {
    digits: &'a [Digit],
    pos: usize,
}

impl Iterator for Runs<'_> {
    type Item = (usize, Digit, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let start = self.pos;
        let first = *self.digits.get(start)?;
        let len = self.digits[start..]
            .iter()
            .take_while(|&&d| d == first)
            .count();
        self.pos += len;
        Some((start, first, len))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RleRun {
    pub digit: Digit,
    pub count: u32,
}

/// Maximal-run encoding of a term. Adjacent runs always carry distinct digits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RleString {
    runs: Vec<RleRun>,
}

impl RleString {
    /// Builds from `(digit, count)` pairs, rejecting zero counts, invalid
    /// digits and adjacent runs of the same digit.
    pub fn from_pairs(pairs: &[(u8, u32)]) -> Result<RleString> {
        let mut runs = Vec::with_capacity(pairs.len());
        for (i, &(digit, count)) in pairs.iter().enumerate() {
            let digit = Digit::new(digit).ok_or_else(|| {
                LnsError::MalformedRle(format!("run {i}: digit {digit} outside 1..9"))
            })?;
            if count == 0 {
                return Err(LnsError::MalformedRle(format!("run {i}: zero count")));
            }
            if runs.last().is_some_and(|r: &RleRun| r.digit == digit) {
                return Err(LnsError::MalformedRle(format!(
                    "runs {} and {i} share digit {}",
                    i - 1,
                    digit.get()
                )));
            }
            runs.push(RleRun { digit, count });
        }
        Ok(RleString { runs })
    }

    pub fn runs(&self) -> &[RleRun] {
        &self.runs
    }

    pub fn to_pairs(&self) -> Vec<(u8, u32)> {
        self.runs.iter().map(|r| (r.digit.get(), r.count)).collect()
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Decoded length in digits.
    pub fn digit_len(&self) -> u64 {
        self.runs.iter().map(|r| u64::from(r.count)).sum()
    }

    fn with_capacity(n: usize) -> RleString {
        RleString {
            runs: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, digit: Digit, count: u32) {
        match self.runs.last_mut() {
            Some(last) if last.digit == digit => last.count += count,
            _ => self.runs.push(RleRun { digit, count }),
        }
    }

    fn check_counts(&self) -> Result<()> {
        let mut position = 0u64;
        for run in &self.runs {
            if run.count > MAX_COUNT {
                return Err(LnsError::RunOverflow {
                    position: position as usize,
                    length: u64::from(run.count),
                });
            }
            position += u64::from(run.count);
        }
        Ok(())
    }
}

pub fn rle_encode(term: &Term) -> Result<RleString> {
    term.require_nonempty()?;
    let mut out = RleString::with_capacity(term.len() / 2 + 1);
    for (_, digit, len) in term.runs() {
        out.runs.push(RleRun {
            digit,
            count: len as u32,
        });
    }
    Ok(out)
}

pub fn rle_decode(rle: &RleString) -> Term {
    let mut digits = Vec::with_capacity(rle.digit_len() as usize);
    for run in &rle.runs {
        digits.extend(std::iter::repeat_n(run.digit, run.count as usize));
    }
    Term(digits)
}

/// One Look-and-Say step: each maximal run `(d, c)` is read as the digits `c d`.
pub fn say(term: &Term) -> Result<Term> {
    term.require_nonempty()?;
    let mut out = Vec::with_capacity(2 * term.run_count());
    for (position, digit, len) in term.runs() {
        if len > MAX_COUNT as usize {
            return Err(LnsError::RunOverflow {
                position,
                length: len as u64,
            });
        }
        out.push(Digit::from_count(len as u32));
        out.push(digit);
    }
    Ok(Term(out))
}

/// [`say`] on the run-length form.
pub fn say_rle(rle: &RleString) -> Result<RleString> {
    if rle.is_empty() {
        return Err(LnsError::EmptyInput);
    }
    rle.check_counts()?;
    Ok(say_rle_unchecked(rle))
}

fn say_rle_unchecked(rle: &RleString) -> RleString {
    // Output has at most two runs per input run; usually fewer after merging.
    let mut out = RleString::with_capacity(rle.runs.len() * 3 / 2 + 2);
    for run in &rle.runs {
        out.push(Digit::from_count(run.count), 1);
        out.push(run.digit, 1);
    }
    out
}

/// Applies `say` `n` times on the run-length form, failing as soon as a term
/// would exceed `budget` digits.
pub fn say_n_rle(seed: &Term, n: usize, budget: u64) -> Result<RleString> {
    let mut current = rle_encode(seed)?;
    check_budget(0, current.digit_len(), budget)?;
    for step in 1..=n {
        current.check_counts()?;
        // say doubles the run count; check before allocating.
        check_budget(step, 2 * current.run_count() as u64, budget)?;
        current = say_rle_unchecked(&current);
    }
    Ok(current)
}

fn check_budget(step: usize, length: u64, budget: u64) -> Result<()> {
    if length > budget {
        Err(LnsError::LengthBudgetExceeded {
            step,
            length,
            budget,
        })
    } else {
        Ok(())
    }
}

pub fn say_n(seed: &Term, n: usize, budget: u64) -> Result<Term> {
    say_n_rle(seed, n, budget).map(|r| rle_decode(&r))
}

/// Exact length of the `n`-th iterate, computed on the run-length form.
///
/// Every step only needs the run count of the previous term, so the final
/// step is never built.
pub fn say_length(seed: &Term, n: usize) -> Result<BigUint> {
    let mut current = rle_encode(seed)?;
    if n == 0 {
        return Ok(BigUint::from(current.digit_len()));
    }
    for _ in 1..n {
        current.check_counts()?;
        current = say_rle_unchecked(&current);
    }
    current.check_counts()?;
    Ok(BigUint::from(2 * current.run_count() as u64))
}

/// Lengths of iterates `0..=n` in one pass.
pub fn say_lengths(seed: &Term, n: usize) -> Result<Vec<BigUint>> {
    let mut current = rle_encode(seed)?;
    let mut lengths = vec![BigUint::from(current.digit_len())];
    for step in 1..=n {
        current.check_counts()?;
        lengths.push(BigUint::from(2 * current.run_count() as u64));
        if step < n {
            current = say_rle_unchecked(&current);
        }
    }
    Ok(lengths)
}

/// Inverse reading: parse `(count, digit)` pairs and expand each.
///
/// Not every even-length term is a `say` image; see [`is_canonical_image`].
pub fn unsay(term: &Term) -> Result<Term> {
    term.require_nonempty()?;
    if !term.len().is_multiple_of(2) {
        return Err(LnsError::OddLength(term.len()));
    }
    let mut out = Vec::new();
    for pair in term.0.chunks_exact(2) {
        out.extend(std::iter::repeat_n(pair[1], pair[0].get() as usize));
    }
    Ok(Term(out))
}

/// True iff `s` is exactly `say(x)` for some `x`.
pub fn is_canonical_image(s: &str) -> bool {
    let Ok(term) = s.parse::<Term>() else {
        return false;
    };
    if term.is_empty() || term.len() % 2 != 0 {
        return false;
    }
    term.0
        .chunks_exact(2)
        .map(|p| p[1])
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[0] != w[1])
}

/// Shortens every run longer than `max_run` to exactly `max_run`.
pub fn cap_runs(term: &Term, max_run: usize) -> Result<Term> {
    term.require_nonempty()?;
    if max_run == 0 {
        return Err(LnsError::InvalidSpec("max_run must be positive".into()));
    }
    let mut out = Vec::with_capacity(term.len());
    for (_, digit, len) in term.runs() {
        out.extend(std::iter::repeat_n(digit, len.min(max_run)));
    }
    Ok(Term(out))
}

/// The first `n` terms of the orbit of `seed`, starting with `seed`.
pub fn ls_prefix(n: usize, seed: &Term, budget: u64) -> Result<Vec<Term>> {
    seed.require_nonempty()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    check_budget(0, seed.len() as u64, budget)?;
    let mut terms = vec![seed.clone()];
    for step in 1..n {
        let prev = &terms[step - 1];
        check_budget(step, 2 * prev.run_count() as u64, budget)?;
        let next = say(prev)?;
        terms.push(next);
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Term {
        s.parse().unwrap()
    }

    fn rle(pairs: &[(u8, u32)]) -> RleString {
        RleString::from_pairs(pairs).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            rle_encode(&t("111221")).unwrap().to_pairs(),
            [(1, 3), (2, 2), (1, 1)]
        );
        assert_eq!(rle_encode(&t("1")).unwrap().to_pairs(), [(1, 1)]);
        assert_eq!(
            rle_encode(&t("446988")).unwrap().to_pairs(),
            [(4, 2), (6, 1), (9, 1), (8, 2)]
        );
        assert!(matches!(
            rle_encode(&Term::default()),
            Err(LnsError::EmptyInput)
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(rle_decode(&rle(&[(1, 2)])), t("11"));
        assert_eq!(rle_decode(&rle(&[(3, 1), (1, 2)])), t("311"));
        assert_eq!(rle_decode(&rle(&[(2, 3)])), t("222"));
    }

    #[test]
    fn malformed_rle_rejected() {
        for bad in [&[(1u8, 2u32), (1, 1)][..], &[(2, 0)], &[(0, 1)], &[(10, 1)]] {
            assert!(
                matches!(RleString::from_pairs(bad), Err(LnsError::MalformedRle(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn parse_rejects_zero_and_junk() {
        assert!(matches!(
            "120".parse::<Term>(),
            Err(LnsError::ZeroDigit { position: 2 })
        ));
        assert!(matches!(
            "1a".parse::<Term>(),
            Err(LnsError::InvalidDigit {
                position: 1,
                ch: 'a'
            })
        ));
    }

    #[test]
    fn say_examples() {
        assert_eq!(say(&t("111221")).unwrap(), t("312211"));
        assert_eq!(say(&t("1211")).unwrap(), t("111221"));
        assert_eq!(say(&t("446988")).unwrap(), t("24161928"));
        assert_eq!(say(&t("22")).unwrap(), t("22"));
    }

    #[test]
    fn say_errors() {
        assert!(matches!(say(&Term::default()), Err(LnsError::EmptyInput)));
        assert!(matches!(
            say(&t("31111111111")),
            Err(LnsError::RunOverflow {
                position: 1,
                length: 10
            })
        ));
        // nine is still a single digit
        assert_eq!(say(&t("999999999")).unwrap(), t("99"));
    }

    #[test]
    fn say_rle_examples() {
        assert_eq!(say_rle(&rle(&[(1, 1)])).unwrap(), rle(&[(1, 2)]));
        assert_eq!(
            say_rle(&rle(&[(1, 3), (2, 2), (1, 1)])).unwrap(),
            rle(&[(3, 1), (1, 1), (2, 2), (1, 2)])
        );
        assert_eq!(
            rle_decode(&rle(&[(3, 1), (1, 1), (2, 2), (1, 2)])),
            t("312211")
        );
        assert_eq!(say_rle(&rle(&[(2, 2)])).unwrap(), rle(&[(2, 2)]));
        assert!(matches!(
            say_rle(&rle(&[(2, 10)])),
            Err(LnsError::RunOverflow { .. })
        ));
    }

    #[test]
    fn say_n_examples() {
        assert_eq!(say_n(&t("1"), 5, DEFAULT_BUDGET).unwrap(), t("312211"));
        assert_eq!(say_n(&t("1"), 0, DEFAULT_BUDGET).unwrap(), t("1"));
        // two further steps from "111221" (term 4) land on term 6
        assert_eq!(say_n(&t("1"), 6, DEFAULT_BUDGET).unwrap(), t("13112221"));
        assert_eq!(say_n(&t("1"), 7, DEFAULT_BUDGET).unwrap(), t("1113213211"));
    }

    #[test]
    fn say_n_budget() {
        // term 6 has length 8, term 7 has length 10
        assert!(say_n(&t("1"), 6, 8).is_ok());
        assert!(matches!(
            say_n(&t("1"), 7, 8),
            Err(LnsError::LengthBudgetExceeded {
                step: 7,
                length: 10,
                budget: 8
            })
        ));
        assert!(matches!(
            say_n(&t("111"), 0, 2),
            Err(LnsError::LengthBudgetExceeded { step: 0, .. })
        ));
    }

    #[test]
    fn say_length_examples() {
        assert_eq!(say_length(&t("1"), 0).unwrap(), BigUint::from(1u32));
        assert_eq!(say_length(&t("22"), 1000).unwrap(), BigUint::from(2u32));
        assert_eq!(say_length(&t("1"), 10).unwrap(), BigUint::from(26u32));
    }

    #[test]
    fn say_length_matches_materialized() {
        let lengths = say_lengths(&t("1"), 25).unwrap();
        for (n, from_series) in lengths.iter().enumerate() {
            let len = say_n(&t("1"), n, DEFAULT_BUDGET).unwrap().len();
            assert_eq!(say_length(&t("1"), n).unwrap(), BigUint::from(len), "n={n}");
            assert_eq!(from_series, &BigUint::from(len), "n={n}");
        }
    }

    #[test]
    fn unsay_examples() {
        assert_eq!(unsay(&t("312211")).unwrap(), t("111221"));
        assert_eq!(unsay(&t("11")).unwrap(), t("1"));
        assert_eq!(unsay(&t("1211")).unwrap(), t("21"));
        assert_eq!(unsay(&t("1111")).unwrap(), t("11"));
        assert_eq!(say(&t("11")).unwrap(), t("21"));
        assert!(matches!(unsay(&t("211")), Err(LnsError::OddLength(3))));
        assert!(matches!(unsay(&Term::default()), Err(LnsError::EmptyInput)));
    }

    #[test]
    fn canonical_image_examples() {
        assert!(is_canonical_image("312211"));
        assert_eq!(say(&unsay(&t("312211")).unwrap()).unwrap(), t("312211"));
        assert!(!is_canonical_image("1111"));
        assert!(!is_canonical_image("211"));
        assert!(!is_canonical_image(""));
        assert!(!is_canonical_image("1021"));
        assert!(!is_canonical_image("12x1"));
    }

    #[test]
    fn cap_runs_examples() {
        assert_eq!(cap_runs(&t("11112"), 3).unwrap(), t("1112"));
        assert_eq!(cap_runs(&t("123"), 3).unwrap(), t("123"));
        assert_eq!(cap_runs(&t("222222"), 3).unwrap(), t("222"));
        assert_eq!(cap_runs(&t("222222"), 1).unwrap(), t("2"));
        assert!(matches!(
            cap_runs(&Term::default(), 3),
            Err(LnsError::EmptyInput)
        ));
    }

    #[test]
    fn prefix_examples() {
        let six: Vec<String> = ls_prefix(6, &t("1"), DEFAULT_BUDGET)
            .unwrap()
            .iter()
            .map(Term::to_string)
            .collect();
        assert_eq!(six, ["1", "11", "21", "1211", "111221", "312211"]);
        assert_eq!(ls_prefix(1, &t("1"), DEFAULT_BUDGET).unwrap(), [t("1")]);
        let eight = ls_prefix(8, &t("1"), DEFAULT_BUDGET).unwrap();
        assert_eq!(eight[6], t("13112221"));
        assert_eq!(eight[7], t("1113213211"));
        assert!(matches!(
            ls_prefix(30, &t("1"), 100),
            Err(LnsError::LengthBudgetExceeded { .. })
        ));
    }
}
