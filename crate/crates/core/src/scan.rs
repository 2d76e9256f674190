//! Affine-pair monoid and prefix-scan evaluation of the gated recursion.
//!
//! A pair `(a, b)` stands for the map `W ↦ a·W + b` with a scalar `a` and a
//! flat offset `b`. Composition `(a₂, b₂) ∘ (a₁, b₁) = (a₂a₁, a₂b₁ + b₂)`
//! applies the right operand first. The gated update
//! `W_{t+1} = g_t W_t + (1 − g_t) Δ_t` is the pair `(g_t, (1 − g_t) Δ_t)`,
//! so the whole trajectory is the sequence of prefix products
//! `P_t = p_t ∘ … ∘ p_1 ∘ (1, W_1)`.
//!
//! [`parallel_scan`] uses the three-phase block scheme: sequential block
//! reductions, a Blelloch up-sweep/down-sweep over the block reductions,
//! then sequential propagation inside each block.

use crate::stats::loglog_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("offset dimension {got} does not match {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("worker count must be at least 1")]
    NoWorkers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub scale: f64,
    pub offset: Vec<f64>,
}

impl AffinePair {
    pub fn new(scale: f64, offset: Vec<f64>) -> Self {
        Self { scale, offset }
    }

    /// `(1, 0)`.
    pub fn identity(dim: usize) -> Self {
        Self::new(1.0, vec![0.0; dim])
    }

    /// `(g, (1 − g)·Δ)`.
    pub fn gated(gate: f64, delta: &[f64]) -> Self {
        Self::new(gate, delta.iter().map(|d| (1.0 - gate) * d).collect())
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>, ScanError> {
        check_dim(self.dim(), w.len())?;
        Ok(w.iter()
            .zip(&self.offset)
            .map(|(w, b)| self.scale * w + b)
            .collect())
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), ScanError> {
    if expected == got {
        Ok(())
    } else {
        Err(ScanError::DimMismatch { expected, got })
    }
}

/// `outer ∘ inner`: `inner` is applied first.
pub fn compose(outer: &AffinePair, inner: &AffinePair) -> Result<AffinePair, ScanError> {
    check_dim(outer.dim(), inner.dim())?;
    Ok(compose_unchecked(outer, inner))
}

fn compose_unchecked(outer: &AffinePair, inner: &AffinePair) -> AffinePair {
    AffinePair {
        scale: outer.scale * inner.scale,
        offset: inner
            .offset
            .iter()
            .zip(&outer.offset)
            .map(|(bi, bo)| outer.scale * bi + bo)
            .collect(),
    }
}

/// A sequence of pairs with all offsets stored in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSequence {
    dim: usize,
    scales: Vec<f64>,
    offsets: Vec<f64>,
}

impl PairSequence {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            scales: Vec::new(),
            offsets: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, len: usize) -> Self {
        Self {
            dim,
            scales: Vec::with_capacity(len),
            offsets: Vec::with_capacity(len * dim),
        }
    }

    pub fn from_pairs(dim: usize, pairs: &[AffinePair]) -> Result<Self, ScanError> {
        let mut seq = Self::with_capacity(dim, pairs.len());
        for p in pairs {
            seq.push(p.scale, &p.offset)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, scale: f64, offset: &[f64]) -> Result<(), ScanError> {
        check_dim(self.dim, offset.len())?;
        self.scales.push(scale);
        self.offsets.extend_from_slice(offset);
        Ok(())
    }

    /// Appends `(g, (1 − g)·Δ)`.
    pub fn push_gated(&mut self, gate: f64, delta: &[f64]) -> Result<(), ScanError> {
        check_dim(self.dim, delta.len())?;
        self.scales.push(gate);
        self.offsets.extend(delta.iter().map(|d| (1.0 - gate) * d));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scales[i]
    }

    pub fn offset(&self, i: usize) -> &[f64] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn pair(&self, i: usize) -> AffinePair {
        AffinePair::new(self.scales[i], self.offset(i).to_vec())
    }
}

/// States `W_2 … W_{T+1}` produced by a scan, plus bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
    /// `∏_{s ≤ t} a_s` for each `t` (first component of the prefix product).
    pub cumulative_scale: Vec<f64>,
    /// Number of `∘` applications performed (including pair-to-state applications).
    pub compositions: usize,
}

impl Trajectory {
    fn reset(&mut self, dim: usize, len: usize) {
        self.dim = dim;
        self.states.resize(len * dim, 0.0);
        self.cumulative_scale.resize(len, 0.0);
        self.compositions = 0;
    }

    pub fn len(&self) -> usize {
        self.cumulative_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative_scale.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `W_{t+1}`, the state after applying pair `t` (1-based).
    pub fn after(&self, t: usize) -> &[f64] {
        assert!(t >= 1 && t <= self.len(), "step {t} out of range");
        &self.states[(t - 1) * self.dim..t * self.dim]
    }

    pub fn last(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.after(self.len()))
    }

    pub fn states_flat(&self) -> &[f64] {
        &self.states
    }
}

/// Left-to-right evaluation of `P_t = p_t ∘ P_{t−1}`, `P_0 = (1, W_1)`.
pub fn sequential_scan(pairs: &PairSequence, w1: &[f64]) -> Result<Trajectory, ScanError> {
    let mut out = Trajectory::default();
    sequential_scan_into(pairs, w1, &mut out)?;
    Ok(out)
}

/// [`sequential_scan`] writing into `out`, reusing its storage.
pub fn sequential_scan_into(
    pairs: &PairSequence,
    w1: &[f64],
    out: &mut Trajectory,
) -> Result<(), ScanError> {
    check_dim(pairs.dim(), w1.len())?;
    out.reset(pairs.dim(), pairs.len());
    propagate(pairs, 0, w1, 1.0, &mut out.states, &mut out.cumulative_scale);
    out.compositions = pairs.len();
    Ok(())
}

/// Applies pairs `start..start+len` to `w`, writing every intermediate state.
fn propagate(
    pairs: &PairSequence,
    start: usize,
    w: &[f64],
    scale_in: f64,
    states: &mut [f64],
    cumulative: &mut [f64],
) {
    let dim = pairs.dim();
    let mut prev: &[f64] = w;
    let mut alpha = scale_in;
    for (k, (out, cum)) in states.chunks_exact_mut(dim).zip(cumulative).enumerate() {
        let a = pairs.scale(start + k);
        for ((o, p), b) in out.iter_mut().zip(prev).zip(pairs.offset(start + k)) {
            *o = a * p + b;
        }
        alpha *= a;
        *cum = alpha;
        prev = out;
    }
}

/// Sequential fold of pairs `start..end` (later pairs on the left), optionally
/// seeded with an innermost element.
fn reduce_block(
    pairs: &PairSequence,
    start: usize,
    end: usize,
    seed: Option<&AffinePair>,
) -> (AffinePair, usize) {
    let (mut acc, mut count, first) = match seed {
        Some(s) => (s.clone(), 0, start),
        None => (pairs.pair(start), 0, start + 1),
    };
    for i in first..end {
        let a = pairs.scale(i);
        for (x, b) in acc.offset.iter_mut().zip(pairs.offset(i)) {
            *x = a * *x + b;
        }
        acc.scale *= a;
        count += 1;
    }
    (acc, count)
}

/// Identity-aware composition used by the tree phase; `None` is `(1, 0)`.
fn compose_opt(
    outer: &Option<AffinePair>,
    inner: &Option<AffinePair>,
    count: &mut usize,
) -> Option<AffinePair> {
    match (outer, inner) {
        (None, x) | (x, None) => x.clone(),
        (Some(o), Some(i)) => {
            *count += 1;
            Some(compose_unchecked(o, i))
        }
    }
}

/// Blelloch exclusive scan: entry `j` becomes `x_{j−1} ∘ … ∘ x_0`.
fn blelloch_exclusive(items: &mut Vec<Option<AffinePair>>) -> usize {
    let n = items.len().next_power_of_two();
    items.resize(n, None);
    let mut count = 0;
    // up-sweep: parent = right ∘ left
    let mut stride = 1;
    while stride < n {
        for i in (0..n).step_by(2 * stride) {
            let (l, r) = (i + stride - 1, i + 2 * stride - 1);
            items[r] = compose_opt(&items[r], &items[l], &mut count);
        }
        stride *= 2;
    }
    // down-sweep
    items[n - 1] = None;
    stride = n / 2;
    while stride >= 1 {
        for i in (0..n).step_by(2 * stride) {
            let (l, r) = (i + stride - 1, i + 2 * stride - 1);
            let parent = items[r].take();
            let left_up = items[l].take();
            items[r] = compose_opt(&left_up, &parent, &mut count);
            items[l] = parent;
        }
        stride /= 2;
    }
    count
}

/// Largest block count `≤ workers` whose worst-case work stays within `2n`.
fn effective_blocks(n: usize, workers: usize) -> usize {
    let mut blocks = workers.min(n);
    while blocks > 1 {
        let size = n.div_ceil(blocks);
        let tree = 2 * blocks.next_power_of_two();
        if (blocks - 1) * size + tree + n <= 2 * n {
            break;
        }
        blocks -= 1;
    }
    blocks.max(1)
}

/// Three-phase parallel scan on `workers` threads.
///
/// With one worker (or one pair) this is exactly [`sequential_scan`].
pub fn parallel_scan(
    pairs: &PairSequence,
    w1: &[f64],
    workers: usize,
) -> Result<Trajectory, ScanError> {
    let mut out = Trajectory::default();
    parallel_scan_into(pairs, w1, workers, &mut out)?;
    Ok(out)
}

/// [`parallel_scan`] writing into `out`, reusing its storage.
pub fn parallel_scan_into(
    pairs: &PairSequence,
    w1: &[f64],
    workers: usize,
    out: &mut Trajectory,
) -> Result<(), ScanError> {
    if workers == 0 {
        return Err(ScanError::NoWorkers);
    }
    check_dim(pairs.dim(), w1.len())?;
    let n = pairs.len();
    let blocks = effective_blocks(n, workers);
    if blocks <= 1 {
        return sequential_scan_into(pairs, w1, out);
    }
    let dim = pairs.dim();
    let size = n.div_ceil(blocks);
    let bounds: Vec<(usize, usize)> = (0..blocks)
        .map(|j| (j * size, ((j + 1) * size).min(n)))
        .filter(|(s, e)| s < e)
        .collect();
    let blocks = bounds.len();
    let init = AffinePair::new(1.0, w1.to_vec());

    // Phase 1: block reductions. Block 0 folds in (1, W_1); the last block's
    // reduction is never consumed by the exclusive scan.
    let mut reductions: Vec<Option<AffinePair>> = vec![None; blocks];
    let mut phase1 = vec![0usize; blocks];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (j, (slot, cnt)) in reductions
            .iter_mut()
            .zip(phase1.iter_mut())
            .enumerate()
            .take(blocks - 1)
        {
            let (s, e) = bounds[j];
            let init = &init;
            handles.push(scope.spawn(move || {
                let seed = (j == 0).then_some(init);
                let (r, c) = reduce_block(pairs, s, e, seed);
                *slot = Some(r);
                *cnt = c;
            }));
        }
        for h in handles {
            h.join().expect("block reduction panicked");
        }
    });

    // Phase 2: exclusive tree scan over block reductions.
    let phase2 = blelloch_exclusive(&mut reductions);

    // Phase 3: per-block propagation from the received prefix.
    out.reset(dim, n);
    std::thread::scope(|scope| {
        let mut rest_s: &mut [f64] = &mut out.states;
        let mut rest_c: &mut [f64] = &mut out.cumulative_scale;
        for (j, &(s, e)) in bounds.iter().enumerate() {
            let (chunk_s, tail_s) = rest_s.split_at_mut((e - s) * dim);
            let (chunk_c, tail_c) = rest_c.split_at_mut(e - s);
            rest_s = tail_s;
            rest_c = tail_c;
            let (w_in, a_in) = match (j, &reductions[j]) {
                (0, _) | (_, None) => (w1.to_vec(), 1.0),
                (_, Some(p)) => (p.offset.clone(), p.scale),
            };
            scope.spawn(move || propagate(pairs, s, &w_in, a_in, chunk_s, chunk_c));
        }
    });

    out.compositions = phase1.iter().sum::<usize>() + phase2 + n;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Sequential,
    Parallel,
}

impl std::fmt::Display for ScanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScanMode::Sequential => "sequential",
            ScanMode::Parallel => "parallel",
        })
    }
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub p: usize,
    pub mode: ScanMode,
    pub wall_ns: u128,
    pub compose_count: usize,
}

/// Random gated pairs with gates in `(0, 1)` and offsets in `[−1, 1]`.
pub fn random_pairs(len: usize, dim: usize, seed: u64) -> PairSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = PairSequence::with_capacity(dim, len);
    let mut delta = vec![0.0; dim];
    for _ in 0..len {
        let g = rng.gen_range(0.01..0.99);
        delta.iter_mut().for_each(|d| *d = rng.gen_range(-1.0..1.0));
        seq.push_gated(g, &delta).expect("dims agree");
    }
    seq
}

/// Times sequential and parallel scans over a `T × p` grid; each entry is
/// the fastest of `reps` runs after one warm-up run. Output storage is
/// reused across runs, so allocation is not timed.
pub fn scan_bench(ts: &[usize], ps: &[usize], dim: usize, reps: usize) -> Vec<BenchRow> {
    let reps = reps.max(1);
    let mut rows = Vec::new();
    for &t in ts {
        let pairs = random_pairs(t, dim, t as u64);
        let w1 = vec![0.5; dim];
        let mut out = Trajectory::default();
        let mut time = |f: &dyn Fn(&mut Trajectory)| {
            f(&mut out);
            let mut best = u128::MAX;
            for _ in 0..reps {
                let start = Instant::now();
                f(&mut out);
                best = best.min(start.elapsed().as_nanos());
                std::hint::black_box(&out);
            }
            (best, out.compositions)
        };
        let (ns, c) = time(&|o| sequential_scan_into(&pairs, &w1, o).expect("valid"));
        rows.push(BenchRow {
            t,
            p: 1,
            mode: ScanMode::Sequential,
            wall_ns: ns,
            compose_count: c,
        });
        for &p in ps {
            let (ns, c) = time(&|o| parallel_scan_into(&pairs, &w1, p, o).expect("valid"));
            rows.push(BenchRow {
                t,
                p,
                mode: ScanMode::Parallel,
                wall_ns: ns,
                compose_count: c,
            });
        }
    }
    rows
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "T,p,mode,wall_ns,compose_count")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.t, r.p, r.mode, r.wall_ns, r.compose_count)?;
    }
    Ok(())
}

/// Log-log slope and r² of sequential wall time against `T`.
pub fn sequential_scaling(rows: &[BenchRow]) -> (f64, f64) {
    let seq: Vec<&BenchRow> = rows.iter().filter(|r| r.mode == ScanMode::Sequential).collect();
    let xs: Vec<f64> = seq.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = seq.iter().map(|r| r.wall_ns.max(1) as f64).collect();
    loglog_fit(&xs, &ys)
}
