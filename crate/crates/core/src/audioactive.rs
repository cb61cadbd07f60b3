//! Atomic decomposition of Look-and-Say orbits.
//!
//! A term splits between two neighbours when their evolutions never touch:
//! the left part always ends in the same digit, so it is enough that the
//! right part's evolution never starts with that digit. That is checked for a
//! bounded number of steps (`t_check`), and the closure of all chunks under
//! decay gives an integer matrix that advances exact lengths without ever
//! building the terms.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{LnsError, Result};
use crate::sequence::{say, say_length, say_lengths, say_n, Digit, Term};

pub const DEFAULT_T_CHECK: usize = 30;
pub const DEFAULT_ATOM_LIMIT: usize = 1_000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// How many leading digits of a right-hand neighbour are evolved when
/// checking a split.
const PREFIX_WINDOW: usize = 256;

/// How far into the orbit `length_at` looks for a term that decomposes into
/// known atoms.
const MAX_ENTRY_STEP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub id: usize,
    pub term: Term,
}

#[derive(Clone, Debug)]
pub struct AtomTable {
    atoms: Vec<Atom>,
    decay: Vec<Vec<usize>>,
    index: HashMap<Term, usize>,
    t_check: usize,
}

impl AtomTable {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn decay(&self, id: usize) -> &[usize] {
        &self.decay[id]
    }

    pub fn id_of(&self, term: &Term) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn t_check(&self) -> usize {
        self.t_check
    }

    /// Re-checks closure and that every atom's image is the concatenation of
    /// its listed decay products.
    pub fn verify(&self) -> Result<()> {
        for atom in &self.atoms {
            let products = &self.decay[atom.id];
            if products.iter().any(|&p| p >= self.atoms.len()) {
                return Err(LnsError::InexactDecay {
                    atom: atom.term.to_string(),
                });
            }
            let image = say(&atom.term)?;
            let joined: Vec<Digit> = products
                .iter()
                .flat_map(|&p| self.atoms[p].term.digits().iter().copied())
                .collect();
            if image.digits() != joined.as_slice() {
                return Err(LnsError::InexactDecay {
                    atom: atom.term.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Decomposes `term` into atoms of this table, if every chunk is known.
    pub fn decompose(&self, term: &Term) -> Result<Option<LengthState>> {
        let mut counts = vec![BigUint::zero(); self.atoms.len()];
        for chunk in find_splits(term, self.t_check)? {
            match self.index.get(&chunk) {
                Some(&id) => counts[id] += 1u32,
                None => return Ok(None),
            }
        }
        Ok(Some(LengthState { counts }))
    }

    /// Two-column `id<TAB>atom` listing.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            writeln!(out, "{}\t{}", atom.id, atom.term).unwrap();
        }
        out
    }
}

/// `rows[i][j]` is how many copies of atom `j` the decay of atom `i` yields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayMatrix {
    rows: Vec<Vec<u64>>,
    atom_lengths: Vec<u64>,
}

impl DecayMatrix {
    pub fn from_table(table: &AtomTable) -> DecayMatrix {
        let n = table.len();
        let mut rows = vec![vec![0u64; n]; n];
        for (i, products) in table.decay.iter().enumerate() {
            for &j in products {
                rows[i][j] += 1;
            }
        }
        DecayMatrix {
            rows,
            atom_lengths: table.atoms.iter().map(|a| a.term.len() as u64).collect(),
        }
    }

    /// Builds a matrix directly; `atom_lengths[i]` weights atom `i`.
    pub fn new(rows: Vec<Vec<u64>>, atom_lengths: Vec<u64>) -> Result<DecayMatrix> {
        let n = atom_lengths.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(LnsError::InvalidSpec(format!(
                "decay matrix must be {n}x{n} to match the atom lengths"
            )));
        }
        Ok(DecayMatrix { rows, atom_lengths })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn atom_lengths(&self) -> &[u64] {
        &self.atom_lengths
    }

    /// One space-separated row of integers per line.
    pub fn to_rows_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Advances atom counts by one decay step.
    pub fn step(&self, state: &LengthState) -> LengthState {
        let mut next = vec![BigUint::zero(); self.dim()];
        for (i, count) in state.counts.iter().enumerate() {
            if count.is_zero() {
                continue;
            }
            for (j, &m) in self.rows[i].iter().enumerate() {
                if m != 0 {
                    next[j] += count * m;
                }
            }
        }
        LengthState { counts: next }
    }
}

/// Atom multiplicities of one term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LengthState {
    pub counts: Vec<BigUint>,
}

impl LengthState {
    pub fn length(&self, matrix: &DecayMatrix) -> BigUint {
        self.counts
            .iter()
            .zip(&matrix.atom_lengths)
            .map(|(c, &len)| c * len)
            .sum()
    }
}

/// Splits `term` at every boundary whose two sides evolve independently for
/// `t_check` steps.
pub fn find_splits(term: &Term, t_check: usize) -> Result<Vec<Term>> {
    // validates the whole term once
    say(term)?;
    let digits = term.digits();
    let mut chunks = Vec::new();
    let mut start = 0;
    for boundary in 1..digits.len() {
        if separates(digits[boundary - 1], &digits[boundary..], t_check)? {
            chunks.push(Term::new(digits[start..boundary].to_vec()));
            start = boundary;
        }
    }
    chunks.push(Term::new(digits[start..].to_vec()));
    Ok(chunks)
}

/// Whether a left part ending in `left_last` and the right part `right`
/// stay non-interacting for steps `0..=t_check`.
fn separates(left_last: Digit, right: &[Digit], t_check: usize) -> Result<bool> {
    if right[0] == left_last {
        return Ok(false);
    }
    let mut complete = right.len() <= PREFIX_WINDOW;
    let mut window = Term::new(right[..right.len().min(PREFIX_WINDOW)].to_vec());
    for _ in 0..t_check {
        let next = if complete {
            say(&window)?
        } else {
            // the last run of a truncated window may continue past it
            let keep = window.len()
                - window
                    .digits()
                    .iter()
                    .rev()
                    .take_while(|&&d| Some(d) == window.last())
                    .count();
            if keep == 0 {
                return Ok(false);
            }
            say(&Term::new(window.digits()[..keep].to_vec()))?
        };
        if next.len() > PREFIX_WINDOW {
            complete = false;
            window = Term::new(next.digits()[..PREFIX_WINDOW].to_vec());
        } else {
            window = next;
        }
        if window.first() == Some(left_last) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Discovers the atoms reachable from `seed` and their decay products.
///
/// Atom ids are assigned in discovery order, so the table is deterministic.
pub fn build_closure(
    seed: &Term,
    t_check: usize,
    atom_limit: usize,
) -> Result<(AtomTable, DecayMatrix)> {
    let mut table = AtomTable {
        atoms: Vec::new(),
        decay: Vec::new(),
        index: HashMap::new(),
        t_check,
    };
    let register = |table: &mut AtomTable, term: Term| -> Result<usize> {
        if let Some(&id) = table.index.get(&term) {
            return Ok(id);
        }
        if table.atoms.len() >= atom_limit {
            return Err(LnsError::ClosureBudgetExceeded { limit: atom_limit });
        }
        let id = table.atoms.len();
        table.index.insert(term.clone(), id);
        table.atoms.push(Atom { id, term });
        table.decay.push(Vec::new());
        Ok(id)
    };

    for chunk in find_splits(seed, t_check)? {
        register(&mut table, chunk)?;
    }
    let mut next = 0;
    while next < table.atoms.len() {
        let image = say(&table.atoms[next].term)?;
        let mut products = Vec::new();
        for chunk in find_splits(&image, t_check)? {
            products.push(register(&mut table, chunk)?);
        }
        table.decay[next] = products;
        next += 1;
    }
    table.verify()?;
    let matrix = DecayMatrix::from_table(&table);
    Ok((table, matrix))
}

/// Lengths of iterates `0..=n` of `seed`.
///
/// The orbit is iterated directly until a term decomposes into atoms of
/// `table`; from there the atom counts are advanced with `matrix`.
pub fn length_series(
    seed: &Term,
    n: usize,
    table: &AtomTable,
    matrix: &DecayMatrix,
) -> Result<Vec<BigUint>> {
    let mut entry = None;
    let mut term = seed.clone();
    for k in 0..=n.min(MAX_ENTRY_STEP) {
        if k > 0 {
            term = say(&term)?;
        }
        if let Some(state) = table.decompose(&term)? {
            entry = Some((k, state));
            break;
        }
    }
    let Some((k, mut state)) = entry else {
        return say_lengths(seed, n);
    };
    let mut lengths = if k == 0 {
        Vec::new()
    } else {
        say_lengths(seed, k - 1)?
    };
    lengths.push(state.length(matrix));
    for _ in k..n {
        state = matrix.step(&state);
        lengths.push(state.length(matrix));
    }
    Ok(lengths)
}

/// Exact length of the `n`-th iterate of `seed` via the decay matrix.
pub fn length_at(
    seed: &Term,
    n: usize,
    table: &AtomTable,
    matrix: &DecayMatrix,
) -> Result<BigUint> {
    let mut term = seed.clone();
    for k in 0..=n.min(MAX_ENTRY_STEP) {
        if k > 0 {
            term = say(&term)?;
        }
        if let Some(mut state) = table.decompose(&term)? {
            for _ in k..n {
                state = matrix.step(&state);
            }
            return Ok(state.length(matrix));
        }
    }
    say_length(seed, n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthEstimate {
    pub value: f64,
    pub iterations: usize,
}

/// Dominant eigenvalue of the decay matrix by power iteration.
///
/// The state is a 1-norm-normalized atom-count vector, advanced by the
/// transpose of the matrix. Each step's estimate is the ratio of total
/// length after and before the step; iteration stops once two consecutive
/// estimates differ by less than `tol`.
pub fn growth_constant(
    matrix: &DecayMatrix,
    tol: f64,
    max_iterations: usize,
) -> Result<GrowthEstimate> {
    let n = matrix.dim();
    if n == 0 {
        return Err(LnsError::NonConvergence {
            iterations: 0,
            delta: f64::NAN,
        });
    }
    let lengths: Vec<f64> = matrix.atom_lengths.iter().map(|&l| l as f64).collect();
    let mut v = vec![1.0 / n as f64; n];
    let mut previous: Option<f64> = None;
    let mut delta = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let mut w = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, &m) in matrix.rows[i].iter().enumerate() {
                if m != 0 {
                    w[j] += vi * m as f64;
                }
            }
        }
        let before: f64 = v.iter().zip(&lengths).map(|(a, b)| a * b).sum();
        let after: f64 = w.iter().zip(&lengths).map(|(a, b)| a * b).sum();
        let norm: f64 = w.iter().sum();
        if norm == 0.0 || before == 0.0 || !after.is_finite() {
            // the state fell into a nilpotent part of the matrix
            return Err(LnsError::NonConvergence {
                iterations: iteration,
                delta,
            });
        }
        let estimate = after / before;
        if let Some(prev) = previous {
            delta = (estimate - prev).abs();
            if delta < tol {
                return Ok(GrowthEstimate {
                    value: estimate,
                    iterations: iteration,
                });
            }
        }
        previous = Some(estimate);
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(LnsError::NonConvergence {
        iterations: max_iterations,
        delta,
    })
}

/// Materializes the `n`-th iterate of each chunk and joins them; test helper
/// for checking split soundness against direct evolution.
pub fn evolve_chunks(chunks: &[Term], n: usize, budget: u64) -> Result<Term> {
    let mut digits = Vec::new();
    for chunk in chunks {
        digits.extend_from_slice(say_n(chunk, n, budget)?.digits());
    }
    Ok(Term::new(digits))
}
