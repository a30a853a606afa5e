//! Exhaustive backtracking search over binary matrices (optionally
//! diagonally-symmetric) maximizing the peak-sidelobe distance d1.
//!
//! Matrices are generated row by row as bit words. Redundant matrices
//! related by horizontal flips are eliminated during generation; the full
//! symmetry group is applied post hoc through canonical forms. Sidelobes of
//! complete matrices are checked in a spiral pattern around the peak so most
//! non-candidates are rejected after a few cells. Work is partitioned by row
//! prefix; workers share only an advisory atomic best-d1, so the merged
//! report is deterministic for a fixed config regardless of scheduling.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Seek, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicI64, Ordering as AtomicOrdering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{autocorrelate, row_overlap};
use crate::error::{Error, Result};
use crate::matrix::{flip_row_word, BinaryMatrix, MAX_SIDE};
use crate::spectrum::{compare, spectrum_of, DistanceSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryRestriction {
    /// Every matrix of the dimension.
    None,
    /// Only matrices equal to their transpose; search exponent n(n+1)/2.
    Diagonal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub m: usize,
    pub n: usize,
    pub restriction: SymmetryRestriction,
    /// Ranked matrices to retain in the report.
    pub top_k: usize,
    /// Prefix rows used to split work; 0 means a single assignment.
    pub partition_depth: usize,
    /// Record the s_min(p) curve over all matrices (full spectrum cost).
    pub per_p: bool,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
    /// Estimated-leaf budget; larger searches require `force`.
    pub node_budget: u128,
    pub force: bool,
    pub prune_flips: bool,
    pub spiral_check: bool,
    pub checkpoint_dir: Option<PathBuf>,
    /// In-memory candidates per worker before compaction/spill.
    pub candidate_cap: usize,
}

pub const DEFAULT_NODE_BUDGET: u128 = 1 << 34;

impl SearchConfig {
    pub fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            restriction: SymmetryRestriction::None,
            top_k: 3,
            partition_depth: if m >= 2 { 1 } else { 0 },
            per_p: false,
            threads: 0,
            node_budget: DEFAULT_NODE_BUDGET,
            force: false,
            prune_flips: true,
            spiral_check: true,
            checkpoint_dir: None,
            candidate_cap: 200_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("dimensions must be >= 1".into()));
        }
        if self.m > MAX_SIDE || self.n > MAX_SIDE {
            return Err(Error::DimensionLimit(self.m, self.n));
        }
        if self.restriction == SymmetryRestriction::Diagonal && self.m != self.n {
            return Err(Error::DiagonalRequiresSquare(self.m, self.n));
        }
        if self.partition_depth >= self.m {
            return Err(Error::InvalidArgument(format!(
                "partition depth {} must be smaller than the row count {}",
                self.partition_depth, self.m
            )));
        }
        Ok(())
    }

    /// Free bits of the generation space.
    pub fn free_bits(&self) -> u32 {
        match self.restriction {
            SymmetryRestriction::None => (self.m * self.n) as u32,
            SymmetryRestriction::Diagonal => (self.n * (self.n + 1) / 2) as u32,
        }
    }

    pub fn estimated_leaves(&self) -> u128 {
        1u128 << self.free_bits()
    }
}

/// One ranked matrix of the report, in canonical form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Optimum {
    pub matrix: BinaryMatrix,
    pub spectrum: DistanceSpectrum,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub matrices_evaluated: u64,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub m: usize,
    pub n: usize,
    pub restriction: SymmetryRestriction,
    pub best_d1: i64,
    /// Top-k symmetry classes with d1 equal to the global maximum, ranked by
    /// the dictionary-order criterion; ties broken by canonical form.
    pub optima: Vec<Optimum>,
    pub total_optimal_classes: u64,
    /// Exactly one symmetry class attains the best spectrum.
    pub unique_optimum: bool,
    pub anomalies: Vec<String>,
    /// Per-p minimum highest sidelobe over all matrices (None unless per_p).
    pub s_min_curve: Option<Vec<i64>>,
    /// Per-p symmetry classes achieving the global max d1.
    pub count_curve: Vec<u64>,
    /// Same, counting raw matrices (symmetry copies included).
    pub raw_count_curve: Vec<u64>,
    pub stats: SearchStats,
}

impl SearchReport {
    /// d1_max(p) = p - s_min(p); requires per_p curves.
    pub fn d1_max_curve(&self) -> Option<Vec<i64>> {
        self.s_min_curve.as_ref().map(|curve| {
            curve
                .iter()
                .enumerate()
                .map(|(p, &s)| if s == i64::MAX { i64::MIN } else { p as i64 - s })
                .collect()
        })
    }

    /// CSV of p, s_min, count, raw_count joined with the bound columns.
    pub fn write_curves_csv<W: Write>(
        &self,
        bounds: &crate::bounds::BoundTable,
        out: &mut W,
    ) -> Result<()> {
        writeln!(
            out,
            "p,s_min,count,raw_count,s_lower_I,s_lower_II,d1_upper_I,d1_upper_II"
        )?;
        for p in 0..=self.m * self.n {
            let s_min = match &self.s_min_curve {
                Some(c) if c[p] != i64::MAX => c[p].to_string(),
                _ => String::new(),
            };
            let b = bounds.row(p as i64);
            writeln!(
                out,
                "{p},{s_min},{},{},{},{},{},{}",
                self.count_curve[p],
                self.raw_count_curve[p],
                b.s_lower_i,
                b.s_lower_ii,
                b.d1_upper_i,
                b.d1_upper_ii
            )?;
        }
        Ok(())
    }
}

/// True (prune) iff the horizontally flipped prefix is lexicographically
/// smaller than the prefix, so each flip-pair is enumerated once.
pub fn flip_prune(prefix_rows: &[u32], n: usize) -> bool {
    prefix_state(prefix_rows, n) == Ordering::Less
}

/// Ordering of flipped prefix vs prefix: Less means prune.
fn prefix_state(prefix_rows: &[u32], n: usize) -> Ordering {
    for &r in prefix_rows {
        match flip_row_word(r, n).cmp(&r) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    Ordering::Equal
}

/// True iff every sidelobe of the complete matrix keeps d1 at or above the
/// threshold; cells are visited in an outward spiral from the peak and the
/// walk stops at the first violation.
pub fn spiral_d1_check(matrix: &BinaryMatrix, threshold_d1: i64) -> bool {
    let a = autocorrelate(matrix);
    let p = a.peak();
    let (m, n) = (matrix.row_count() as i64, matrix.col_count() as i64);
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for t1 in -(m - 1)..m {
        for t2 in -(n - 1)..n {
            if (t1, t2) != (0, 0) {
                cells.push((t1, t2));
            }
        }
    }
    cells.sort_by_key(|&(t1, t2)| (t1.abs().max(t2.abs()), t1, t2));
    for (t1, t2) in cells {
        if p - a.get(t1, t2) < threshold_d1 {
            return false;
        }
    }
    true
}

/// A unit of search work: the surviving prefix rows of a subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixAssignment {
    pub rows: Vec<u32>,
}

/// Enumerate all surviving (post-prune) prefixes of `partition_depth` rows.
/// The union of the subtree searches equals the unpartitioned search.
pub fn partition_work(config: &SearchConfig) -> Result<Vec<PrefixAssignment>> {
    config.validate()?;
    if config.partition_depth < 1 {
        return Err(Error::InvalidArgument(
            "partition depth must be >= 1".into(),
        ));
    }
    let mut out = Vec::new();
    let mut rows = Vec::new();
    extend_prefixes(config, &mut rows, &mut out);
    Ok(out)
}

fn extend_prefixes(
    config: &SearchConfig,
    rows: &mut Vec<u32>,
    out: &mut Vec<PrefixAssignment>,
) {
    if rows.len() == config.partition_depth {
        out.push(PrefixAssignment { rows: rows.clone() });
        return;
    }
    for r in row_candidates(config, rows) {
        rows.push(r);
        if !(config.prune_flips
            && config.restriction == SymmetryRestriction::None
            && flip_prune(rows, config.n))
        {
            extend_prefixes(config, rows, out);
        }
        rows.pop();
    }
}

/// Row words admissible at the next depth given the prefix.
fn row_candidates(config: &SearchConfig, prefix: &[u32]) -> Vec<u32> {
    let depth = prefix.len();
    match config.restriction {
        SymmetryRestriction::None => (0..1u32 << config.n).collect(),
        SymmetryRestriction::Diagonal => {
            let mut forced = 0u32;
            for (j, &row) in prefix.iter().enumerate() {
                forced |= ((row >> depth) & 1) << j;
            }
            let free = config.n - depth;
            (0..1u32 << free).map(|f| forced | (f << depth)).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// row-pair correlation tables

const TABLE_MAX_N: usize = 10;

struct RowTables {
    n: usize,
    w: usize,
    table: Option<Vec<u8>>,
}

impl RowTables {
    fn build(n: usize) -> Self {
        let w = 2 * n - 1;
        let table = if n <= TABLE_MAX_N {
            let size = 1usize << n;
            let mut t = vec![0u8; size * size * w];
            for a in 0..size as u32 {
                for b in 0..size as u32 {
                    let base = ((a as usize) * size + b as usize) * w;
                    for c in 0..w {
                        let tau2 = c as i64 - (n as i64 - 1);
                        t[base + c] = row_overlap(a, b, tau2) as u8;
                    }
                }
            }
            Some(t)
        } else {
            None
        };
        Self { n, w, table }
    }

    #[inline]
    fn accumulate(&self, acc: &mut [i64], a: u32, b: u32, sign: i64) {
        match &self.table {
            Some(t) => {
                let size = 1usize << self.n;
                let base = ((a as usize) * size + b as usize) * self.w;
                for c in 0..self.w {
                    acc[c] += sign * t[base + c] as i64;
                }
            }
            None => {
                for c in 0..self.w {
                    let tau2 = c as i64 - (self.n as i64 - 1);
                    acc[c] += sign * row_overlap(a, b, tau2) as i64;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// candidate storage with spill

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Candidate {
    rows: Vec<u32>,
    p: u32,
    s: i64,
}

impl Candidate {
    fn d1(&self) -> i64 {
        self.p as i64 - self.s
    }
}

struct CandidateStore {
    cap: usize,
    mem: Vec<Candidate>,
    spill: Option<BufWriter<fs::File>>,
}

impl CandidateStore {
    fn new(cap: usize) -> Self {
        Self { cap: cap.max(16), mem: Vec::new(), spill: None }
    }

    fn push(&mut self, c: Candidate, best: i64) -> Result<()> {
        self.mem.push(c);
        if self.mem.len() > self.cap {
            self.mem.retain(|c| c.d1() >= best);
            if self.mem.len() > self.cap {
                let writer = match &mut self.spill {
                    Some(w) => w,
                    None => {
                        self.spill = Some(BufWriter::new(tempfile::tempfile()?));
                        self.spill.as_mut().unwrap()
                    }
                };
                for c in self.mem.drain(..) {
                    serde_json::to_writer(&mut *writer, &c)?;
                    writer.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }

    /// All stored candidates with d1 >= min_d1.
    fn drain(mut self, min_d1: i64) -> Result<Vec<Candidate>> {
        let mut out: Vec<Candidate> =
            self.mem.into_iter().filter(|c| c.d1() >= min_d1).collect();
        if let Some(writer) = self.spill.take() {
            let mut file = writer.into_inner().map_err(|e| e.into_error())?;
            file.rewind()?;
            for line in BufReader::new(file).lines() {
                let c: Candidate = serde_json::from_str(&line?)?;
                if c.d1() >= min_d1 {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// worker

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorkerOutput {
    nodes: u64,
    evaluated: u64,
    /// Per-p min highest sidelobe, i64::MAX where unseen (per_p only).
    s_min: Vec<i64>,
    candidates: Vec<Candidate>,
}

struct Worker<'a> {
    config: &'a SearchConfig,
    tables: &'a RowTables,
    /// Flat acc indices (t1 * w + c) in outward-ring order, center excluded.
    spiral: &'a [usize],
    best: &'a AtomicI64,
    rows: Vec<u32>,
    /// Half-plane accumulator: acc[t1 * w + c] = A(t1, c - (n-1)), t1 >= 0.
    acc: Vec<i64>,
    center: usize,
    nodes: u64,
    evaluated: u64,
    s_min: Vec<i64>,
    store: CandidateStore,
}

impl<'a> Worker<'a> {
    fn new(
        config: &'a SearchConfig,
        tables: &'a RowTables,
        spiral: &'a [usize],
        best: &'a AtomicI64,
    ) -> Self {
        let w = tables.w;
        Self {
            config,
            tables,
            spiral,
            best,
            rows: Vec::with_capacity(config.m),
            acc: vec![0i64; config.m * w],
            center: config.n - 1,
            nodes: 0,
            evaluated: 0,
            s_min: vec![i64::MAX; config.m * config.n + 1],
            store: CandidateStore::new(config.candidate_cap),
        }
    }

    fn push_row(&mut self, r: u32) {
        let depth = self.rows.len();
        let w = self.tables.w;
        for j in 0..=depth {
            let t1 = depth - j;
            let a = if j == depth { r } else { self.rows[j] };
            self.tables
                .accumulate(&mut self.acc[t1 * w..(t1 + 1) * w], a, r, 1);
        }
        self.rows.push(r);
        self.nodes += 1;
    }

    fn pop_row(&mut self) {
        let r = self.rows.pop().unwrap();
        let depth = self.rows.len();
        let w = self.tables.w;
        for j in 0..=depth {
            let t1 = depth - j;
            let a = if j == depth { r } else { self.rows[j] };
            self.tables
                .accumulate(&mut self.acc[t1 * w..(t1 + 1) * w], a, r, -1);
        }
    }

    fn evaluate_leaf(&mut self) -> Result<()> {
        self.evaluated += 1;
        let p: i64 = self.rows.iter().map(|r| r.count_ones() as i64).sum();
        let thr = self.best.load(AtomicOrdering::Relaxed);
        let s = if self.config.per_p || !self.config.spiral_check {
            let mut s = 0i64;
            for (idx, &v) in self.acc.iter().enumerate() {
                if idx != self.center && v > s {
                    s = v;
                }
            }
            if self.config.per_p {
                let slot = &mut self.s_min[p as usize];
                *slot = (*slot).min(s);
            }
            s
        } else {
            let mut s = 0i64;
            for &idx in self.spiral {
                let v = self.acc[idx];
                if p - v < thr {
                    return Ok(()); // rejected inside the spiral walk
                }
                if v > s {
                    s = v;
                }
            }
            s
        };
        if p - s >= thr {
            let best_now = self
                .best
                .fetch_max(p - s, AtomicOrdering::Relaxed)
                .max(p - s);
            self.store
                .push(Candidate { rows: self.rows.clone(), p: p as u32, s }, best_now)?;
        }
        Ok(())
    }

    fn descend(&mut self, flip_state: Ordering) -> Result<()> {
        if self.rows.len() == self.config.m {
            return self.evaluate_leaf();
        }
        let prune_active = self.config.prune_flips
            && self.config.restriction == SymmetryRestriction::None;
        let depth = self.rows.len();
        let (base, step_shift, count) = match self.config.restriction {
            SymmetryRestriction::None => (0u32, 0usize, 1u32 << self.config.n),
            SymmetryRestriction::Diagonal => {
                let mut forced = 0u32;
                for (j, &row) in self.rows.iter().enumerate() {
                    forced |= ((row >> depth) & 1) << j;
                }
                (forced, depth, 1u32 << (self.config.n - depth))
            }
        };
        for f in 0..count {
            let r = base | (f << step_shift);
            let mut next_state = flip_state;
            if prune_active && flip_state == Ordering::Equal {
                match flip_row_word(r, self.config.n).cmp(&r) {
                    Ordering::Less => continue, // flipped prefix is smaller
                    other => next_state = other,
                }
            }
            self.push_row(r);
            self.descend(next_state)?;
            self.pop_row();
        }
        Ok(())
    }

    fn run(mut self, assignment: &PrefixAssignment) -> Result<WorkerOutput> {
        for &r in &assignment.rows {
            self.push_row(r);
        }
        let state = if self.config.prune_flips
            && self.config.restriction == SymmetryRestriction::None
        {
            prefix_state(&self.rows, self.config.n)
        } else {
            Ordering::Equal
        };
        self.descend(state)?;
        let min_d1 = self.best.load(AtomicOrdering::Relaxed);
        Ok(WorkerOutput {
            nodes: self.nodes,
            evaluated: self.evaluated,
            s_min: self.s_min,
            candidates: self.store.drain(min_d1)?,
        })
    }
}

fn spiral_indices(m: usize, n: usize) -> Vec<usize> {
    let w = 2 * n - 1;
    let mut cells: Vec<(i64, usize, usize)> = Vec::new();
    for t1 in 0..m {
        for c in 0..w {
            if t1 == 0 && c == n - 1 {
                continue;
            }
            let t2 = c as i64 - (n as i64 - 1);
            cells.push(((t1 as i64).max(t2.abs()), t1, c));
        }
    }
    cells.sort();
    cells.into_iter().map(|(_, t1, c)| t1 * w + c).collect()
}

// ---------------------------------------------------------------------------
// driver

fn checkpoint_path(dir: &PathBuf, idx: usize) -> PathBuf {
    dir.join(format!("assignment_{idx:06}.json"))
}

fn run_assignments(
    config: &SearchConfig,
    assignments: &[PrefixAssignment],
) -> Result<Vec<WorkerOutput>> {
    let tables = RowTables::build(config.n);
    let spiral = spiral_indices(config.m, config.n);
    let best = AtomicI64::new(0);

    if let Some(dir) = &config.checkpoint_dir {
        fs::create_dir_all(dir)?;
        let marker = dir.join("config.json");
        let summary = serde_json::json!({
            "m": config.m,
            "n": config.n,
            "restriction": config.restriction,
            "per_p": config.per_p,
            "partition_depth": config.partition_depth,
            "prune_flips": config.prune_flips,
            "assignments": assignments.len(),
        });
        if marker.exists() {
            let prev: serde_json::Value = serde_json::from_str(&fs::read_to_string(&marker)?)?;
            if prev != summary {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint directory {} was created for a different search",
                    dir.display()
                )));
            }
        } else {
            fs::write(&marker, serde_json::to_string_pretty(&summary)?)?;
        }
        // seed the advisory best from completed assignments
        for idx in 0..assignments.len() {
            let path = checkpoint_path(dir, idx);
            if path.exists() {
                let out: WorkerOutput = serde_json::from_str(&fs::read_to_string(&path)?)?;
                for c in &out.candidates {
                    best.fetch_max(c.d1(), AtomicOrdering::Relaxed);
                }
            }
        }
    }

    let run_one = |(idx, assignment): (usize, &PrefixAssignment)| -> Result<WorkerOutput> {
        if let Some(dir) = &config.checkpoint_dir {
            let path = checkpoint_path(dir, idx);
            if path.exists() {
                return Ok(serde_json::from_str(&fs::read_to_string(&path)?)?);
            }
            let out = Worker::new(config, &tables, &spiral, &best).run(assignment)?;
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, serde_json::to_string(&out)?)?;
            fs::rename(&tmp, &path)?;
            Ok(out)
        } else {
            Worker::new(config, &tables, &spiral, &best).run(assignment)
        }
    };

    let work_ordered = || -> Result<Vec<WorkerOutput>> {
        assignments
            .par_iter()
            .enumerate()
            .map(|(idx, a)| run_one((idx, a)))
            .collect()
    };

    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(work_ordered)
    } else {
        work_ordered()
    }
}

/// Run the exhaustive search described by `config`.
pub fn search(config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    if config.estimated_leaves() > config.node_budget && !config.force {
        return Err(Error::BudgetExceeded {
            estimated: config.estimated_leaves(),
            budget: config.node_budget,
        });
    }
    let start = Instant::now();
    let assignments = if config.partition_depth == 0 {
        vec![PrefixAssignment { rows: Vec::new() }]
    } else {
        partition_work(config)?
    };
    let outputs = run_assignments(config, &assignments)?;

    let mn = config.m * config.n;
    let mut nodes = 0u64;
    let mut evaluated = 0u64;
    let mut s_min = vec![i64::MAX; mn + 1];
    let mut candidates: Vec<Candidate> = Vec::new();
    for out in outputs {
        nodes += out.nodes;
        evaluated += out.evaluated;
        for (p, &s) in out.s_min.iter().enumerate() {
            s_min[p] = s_min[p].min(s);
        }
        candidates.extend(out.candidates);
    }

    let best_d1 = candidates.iter().map(Candidate::d1).max().unwrap_or(0);
    let classes: BTreeSet<BinaryMatrix> = candidates
        .iter()
        .filter(|c| c.d1() == best_d1)
        .map(|c| {
            BinaryMatrix::new(config.m, config.n, c.rows.clone())
                .expect("candidate rows are valid")
                .canonical_form()
        })
        .collect();

    let mut ranked: Vec<Optimum> = classes
        .iter()
        .map(|matrix| {
            let spectrum = spectrum_of(&autocorrelate(matrix))?;
            Ok(Optimum { matrix: matrix.clone(), spectrum })
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| {
        compare(&b.spectrum, &a.spectrum).then_with(|| a.matrix.cmp(&b.matrix))
    });

    let mut count_curve = vec![0u64; mn + 1];
    let mut raw_count_curve = vec![0u64; mn + 1];
    for opt in &ranked {
        let p = opt.spectrum.p as usize;
        count_curve[p] += 1;
        raw_count_curve[p] += opt.matrix.symmetry_orbit().len() as u64;
    }

    let mut anomalies = Vec::new();
    let unique_optimum = match ranked.as_slice() {
        [] => {
            anomalies.push("search produced no candidates".into());
            false
        }
        [_] => true,
        [first, second, ..] => {
            let unique = compare(&first.spectrum, &second.spectrum) == Ordering::Greater;
            if !unique {
                anomalies.push(format!(
                    "optimal spectrum {} is attained by more than one symmetry class",
                    first.spectrum
                ));
            }
            unique
        }
    };

    let total_optimal_classes = ranked.len() as u64;
    ranked.truncate(config.top_k.max(1));

    Ok(SearchReport {
        m: config.m,
        n: config.n,
        restriction: config.restriction,
        best_d1,
        optima: ranked,
        total_optimal_classes,
        unique_optimum,
        anomalies,
        s_min_curve: if config.per_p { Some(s_min) } else { None },
        count_curve,
        raw_count_curve,
        stats: SearchStats {
            nodes_visited: nodes,
            matrices_evaluated: evaluated,
            wall_time_ms: start.elapsed().as_millis(),
        },
    })
}
