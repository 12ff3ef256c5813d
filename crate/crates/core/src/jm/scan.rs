use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::{analytic_gk_norm, AtomTable, ClickPattern};
use crate::error::{Error, Result};
use crate::inequalities::Family;
use crate::linalg::symmetric_max_eigenvalue;
use crate::scalar::{alpha, Real};

/// Largest `N` for which the pattern space is enumerated.
pub const MAX_SCAN_COPIES: usize = 3;
/// Patterns per work unit. Fixed so results never depend on the worker
/// count.
pub const SCAN_CHUNK: u64 = 1 << 16;
/// Patterns between progress callbacks.
pub const PROGRESS_INTERVAL: u64 = 1 << 20;
/// `verified ⇔ max_lambda ≤ bound_rhs + VERIFY_TOLERANCE`.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// Two eigenvalues closer than this are ties; the smaller index wins.
const TIE_TOLERANCE: f64 = 1e-12;

/// Worker count from `ROUTED_BELL_THREADS`, else the available
/// parallelism.
pub fn default_workers() -> usize {
    std::env::var("ROUTED_BELL_THREADS")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanProgress {
    pub scanned: u64,
    pub total: u64,
}

#[derive(Clone, Copy)]
pub struct ScanOptions<'a> {
    pub workers: usize,
    /// Visit one pattern per orbit of the global outcome-XOR symmetry.
    pub prune: bool,
    pub progress: Option<&'a (dyn Fn(ScanProgress) + Sync)>,
}

impl Default for ScanOptions<'_> {
    fn default() -> Self {
        Self { workers: 1, prune: false, progress: None }
    }
}

impl std::fmt::Debug for ScanOptions<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScanOptions")
            .field("workers", &self.workers)
            .field("prune", &self.prune)
            .field("progress", &self.progress.is_some())
            .finish()
    }
}

/// Largest `‖Σ S‖` among patterns with `clicks` clicks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClickBest<T> {
    pub clicks: usize,
    pub max_norm: T,
    pub argmax: ClickPattern,
    pub patterns: u64,
}

/// Per-click-count maxima of `‖Σ_l S_l‖` over the whole pattern space.
/// Since `λmax(C_b⃗) = ‖Σ S‖ − kq`, one profile answers every `q`.
#[derive(Clone, Debug)]
pub struct ScanProfile<T> {
    pub family: Family,
    pub n_copies: usize,
    pub pruned: bool,
    pub patterns_scanned: u64,
    pub per_click: Vec<ClickBest<T>>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport<T> {
    pub family: Family,
    pub n_copies: usize,
    pub q: T,
    pub max_lambda: T,
    pub argmax_pattern: ClickPattern,
    pub patterns_scanned: u64,
    /// `1 − q` or `α^N − q`.
    pub bound_rhs: T,
    pub verified: bool,
    pub in_proven_window: bool,
    pub pruned: bool,
    /// Seconds.
    pub wall_time: f64,
    pub click_profile: Vec<ClickBest<T>>,
}

impl<T: Real> ScanProfile<T> {
    /// `max_k (max_norm_k − kq)` with the smallest-index argmax among ties.
    pub fn max_lambda(&self, q: T) -> (T, &ClickPattern) {
        let tol = T::of(TIE_TOLERANCE);
        let shifted = |b: &ClickBest<T>| b.max_norm - T::of_usize(b.clicks) * q;
        let top = self.per_click.iter().map(shifted).fold(T::neg_infinity(), T::max);
        let winner = self
            .per_click
            .iter()
            .filter(|b| shifted(b) >= top - tol)
            .min_by_key(|b| b.argmax.index())
            .expect("nonempty profile");
        (top, &winner.argmax)
    }

    pub fn report(&self, q: T) -> CertificationReport<T> {
        let (max_lambda, argmax) = self.max_lambda(q);
        let bound_rhs = self.family.click_coefficient::<T>(self.n_copies) - q;
        CertificationReport {
            family: self.family,
            n_copies: self.n_copies,
            q,
            max_lambda,
            argmax_pattern: argmax.clone(),
            patterns_scanned: self.patterns_scanned,
            bound_rhs,
            verified: max_lambda <= bound_rhs + T::of(VERIFY_TOLERANCE),
            in_proven_window: self.family.in_proven_window(self.n_copies, q),
            pruned: self.pruned,
            wall_time: self.wall_time.as_secs_f64(),
            click_profile: self.per_click.clone(),
        }
    }

    /// Smallest `q` with `max_norm_k − kq ≤ α^N − q` for every `k ≥ 2`:
    /// `max_{k≥2} (max_norm_k − α^N)/(k − 1)`. Meaningful for CHSH.
    pub fn beta_prime_threshold(&self) -> T {
        let top = alpha::<T>().powi(self.n_copies as i32);
        self.per_click
            .iter()
            .filter(|b| b.clicks >= 2)
            .map(|b| (b.max_norm - top) / T::of_usize(b.clicks - 1))
            .fold(T::neg_infinity(), T::max)
    }
}

fn check_copies(n_copies: usize) -> Result<()> {
    if n_copies == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if n_copies > MAX_SCAN_COPIES {
        return Err(Error::PatternSpaceTooLarge(n_copies));
    }
    Ok(())
}

/// Mixed-radix walk over a contiguous index range, maintaining the sum
/// of clicked atoms incrementally. Atom entries are dyadic rationals, so
/// the running sum is exact.
struct Walker<'t, T> {
    table: &'t AtomTable<T>,
    radix: usize,
    digits: Vec<usize>,
    sum: Vec<T>,
    clicks: usize,
}

impl<'t, T: Real> Walker<'t, T> {
    fn new(table: &'t AtomTable<T>, start: u64) -> Self {
        let radix = table.settings + 1;
        let mut rest = start;
        let digits: Vec<usize> = (0..table.settings)
            .map(|_| {
                let d = (rest % radix as u64) as usize;
                rest /= radix as u64;
                d
            })
            .collect();
        let mut sum = vec![T::zero(); table.dim * table.dim];
        let mut clicks = 0;
        for (y, &d) in digits.iter().enumerate() {
            if d > 0 {
                clicks += 1;
                for (s, a) in sum.iter_mut().zip(table.atom(y, d - 1)) {
                    *s = *s + *a;
                }
            }
        }
        Self { table, radix, digits, sum, clicks }
    }

    fn apply(&mut self, setting: usize, digit: usize, sign: bool) {
        let atom = self.table.atom(setting, digit - 1);
        if sign {
            self.sum.iter_mut().zip(atom).for_each(|(s, a)| *s = *s + *a);
        } else {
            self.sum.iter_mut().zip(atom).for_each(|(s, a)| *s = *s - *a);
        }
    }

    fn advance(&mut self) {
        for y in 0..self.digits.len() {
            let old = self.digits[y];
            if old + 1 < self.radix {
                self.digits[y] = old + 1;
                if old > 0 {
                    self.apply(y, old, false);
                } else {
                    self.clicks += 1;
                }
                self.apply(y, old + 1, true);
                return;
            }
            self.digits[y] = 0;
            self.apply(y, old, false);
            self.clicks -= 1;
        }
    }

    /// Canonical under the outcome-XOR symmetry: the last clicked setting
    /// reports outcome 0.
    fn canonical(&self) -> bool {
        self.digits.iter().rev().find(|&&d| d > 0).is_none_or(|&d| d == 1)
    }
}

fn row_sum_bound<T: Real>(dim: usize, m: &[T]) -> T {
    m.chunks(dim).map(|row| row.iter().map(|x| x.abs()).sum::<T>()).fold(T::zero(), T::max)
}

struct ChunkResult<T> {
    best: Vec<Option<(T, u64)>>,
    counts: Vec<u64>,
}

fn scan_chunk<T: Real>(table: &AtomTable<T>, start: u64, end: u64, prune: bool) -> ChunkResult<T> {
    let tol = T::of(TIE_TOLERANCE);
    let dim = table.dim;
    let mut best: Vec<Option<(T, u64)>> = vec![None; table.settings + 1];
    let mut counts = vec![0u64; table.settings + 1];
    let mut scratch = vec![T::zero(); dim * dim];
    let mut walker = Walker::new(table, start);
    for index in start..end {
        if !prune || walker.canonical() {
            let k = walker.clicks;
            counts[k] += 1;
            let skip = match best[k] {
                Some((b, _)) => k == 0 || row_sum_bound(dim, &walker.sum) <= b + tol,
                None => false,
            };
            if !skip {
                let lambda = if k == 0 {
                    T::zero()
                } else {
                    scratch.copy_from_slice(&walker.sum);
                    symmetric_max_eigenvalue(dim, &mut scratch)
                };
                if best[k].is_none_or(|(b, _)| lambda > b + tol) {
                    best[k] = Some((lambda, index));
                }
            }
        }
        if index + 1 < end {
            walker.advance();
        }
    }
    ChunkResult { best, counts }
}

fn run_chunks<R: Send>(
    total: u64,
    options: &ScanOptions<'_>,
    work: impl Fn(u64, u64) -> R + Sync,
) -> Result<Vec<R>> {
    if options.workers == 0 {
        return Err(Error::InvalidParameter("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let n_chunks = total.div_ceil(SCAN_CHUNK);
    let done = AtomicU64::new(0);
    let results = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * SCAN_CHUNK;
                let end = (start + SCAN_CHUNK).min(total);
                let r = work(start, end);
                let before = done.fetch_add(end - start, Ordering::Relaxed);
                let after = before + end - start;
                if let Some(progress) = options.progress {
                    if before / PROGRESS_INTERVAL != after / PROGRESS_INTERVAL || after == total {
                        progress(ScanProgress { scanned: after, total });
                    }
                }
                r
            })
            .collect()
    });
    Ok(results)
}

/// Scans every click pattern of the family and records, per click count,
/// the largest `‖Σ S‖` and its smallest-index argmax.
pub fn scan_profile<T: Real>(family: Family, n_copies: usize, options: ScanOptions<'_>) -> Result<ScanProfile<T>> {
    check_copies(n_copies)?;
    let started = Instant::now();
    let table = AtomTable::<T>::new(family, n_copies);
    let total = ClickPattern::count(n_copies);
    let chunks = run_chunks(total, &options, |s, e| scan_chunk(&table, s, e, options.prune))?;

    let tol = T::of(TIE_TOLERANCE);
    let mut best: Vec<Option<(T, u64)>> = vec![None; table.settings + 1];
    let mut counts = vec![0u64; table.settings + 1];
    for chunk in chunks {
        for k in 0..best.len() {
            counts[k] += chunk.counts[k];
            if let Some((v, i)) = chunk.best[k] {
                if best[k].is_none_or(|(b, _)| v > b + tol) {
                    best[k] = Some((v, i));
                }
            }
        }
    }
    let per_click = best
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            let (max_norm, index) = b.expect("every click count is populated");
            ClickBest { clicks: k, max_norm, argmax: ClickPattern::from_index(n_copies, index), patterns: counts[k] }
        })
        .collect();
    Ok(ScanProfile {
        family,
        n_copies,
        pruned: options.prune,
        patterns_scanned: counts.iter().sum(),
        per_click,
        wall_time: started.elapsed(),
    })
}

/// Exhaustive certification of the JM threshold at penalty `q`.
pub fn exhaustive_scan<T: Real>(
    family: Family,
    n_copies: usize,
    q: T,
    workers: usize,
    prune: bool,
) -> Result<CertificationReport<T>> {
    if !(q >= T::zero()) {
        return Err(Error::InvalidParameter(format!("penalty q = {q} must be nonnegative")));
    }
    let profile = scan_profile::<T>(family, n_copies, ScanOptions { workers, prune, progress: None })?;
    Ok(profile.report(q))
}

/// The tight CHSH penalty threshold found by exhaustive search.
pub fn beta_prime_threshold<T: Real>(n_copies: usize) -> Result<T> {
    let options = ScanOptions { workers: default_workers(), prune: true, progress: None };
    Ok(scan_profile::<T>(Family::Chsh, n_copies, options)?.beta_prime_threshold())
}

/// Gram-bound statistics for the patterns with a given click count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramEntry<T> {
    pub clicks: usize,
    /// Largest `‖Γ‖` over the patterns.
    pub gram_bound: T,
    /// `‖G_k‖`.
    pub analytic_gk_bound: T,
    /// Largest true `‖Σ S‖` over the patterns.
    pub max_norm: T,
    /// `gram_bound − kq` and `analytic_gk_bound − kq`.
    pub gram_bound_shifted: T,
    pub analytic_gk_shifted: T,
    pub patterns: u64,
    /// Patterns with `‖Σ S‖ > ‖Γ‖` beyond `1e-9`. Always zero.
    pub sum_exceeds_gram: u64,
    /// Patterns with `‖Γ‖ > ‖G_k‖` beyond `1e-9`. Nonzero for CHSH at `k = 2`,
    /// where differing single-copy atoms reach `(1 + √3)/4 > β`.
    pub gram_exceeds_gk: u64,
}

struct GramChunk<T> {
    gram: Vec<T>,
    norm: Vec<T>,
    counts: Vec<u64>,
    sum_exceeds_gram: Vec<u64>,
    gram_exceeds_gk: Vec<u64>,
}

/// For each click count `k ≥ 1`, the worst Popovici–Sebestyén bound
/// `‖Γ‖` over all patterns next to the analytic `‖G_k‖`, counting failures
/// of `‖Σ S‖ ≤ ‖Γ‖` and of `‖Γ‖ ≤ ‖G_k‖` pattern by pattern.
pub fn gram_bound_scan<T: Real>(
    family: Family,
    n_copies: usize,
    q: T,
    options: ScanOptions<'_>,
) -> Result<BTreeMap<usize, GramEntry<T>>> {
    check_copies(n_copies)?;
    let table = AtomTable::<T>::new(family, n_copies);
    let pair_norms = table.gram_table()?;
    let atoms = table.matrices.len();
    let settings = table.settings;
    let analytic: Vec<T> = (0..=settings).map(|k| analytic_gk_norm(family, n_copies, k)).collect();
    let slack = T::of(VERIFY_TOLERANCE);
    let total = ClickPattern::count(n_copies);

    let chunks = run_chunks(total, &options, |start, end| {
        let dim = table.dim;
        let mut out = GramChunk {
            gram: vec![T::zero(); settings + 1],
            norm: vec![T::zero(); settings + 1],
            counts: vec![0; settings + 1],
            sum_exceeds_gram: vec![0; settings + 1],
            gram_exceeds_gk: vec![0; settings + 1],
        };
        let mut scratch = vec![T::zero(); dim * dim];
        let mut gram = Vec::with_capacity(settings * settings);
        let mut ids = Vec::with_capacity(settings);
        let mut walker = Walker::new(&table, start);
        for index in start..end {
            let k = walker.clicks;
            if k > 0 && (!options.prune || walker.canonical()) {
                ids.clear();
                ids.extend(walker.digits.iter().enumerate().filter(|(_, &d)| d > 0).map(|(y, &d)| y * settings + d - 1));
                gram.clear();
                for &l in &ids {
                    for &m in &ids {
                        gram.push(pair_norms[l * atoms + m]);
                    }
                }
                let gamma = symmetric_max_eigenvalue(k, &mut gram);
                scratch.copy_from_slice(&walker.sum);
                let norm = symmetric_max_eigenvalue(dim, &mut scratch);
                out.counts[k] += 1;
                out.gram[k] = out.gram[k].max(gamma);
                out.norm[k] = out.norm[k].max(norm);
                if norm > gamma + slack {
                    out.sum_exceeds_gram[k] += 1;
                }
                if gamma > analytic[k] + slack {
                    out.gram_exceeds_gk[k] += 1;
                }
            }
            if index + 1 < end {
                walker.advance();
            }
        }
        out
    })?;

    let mut entries = BTreeMap::new();
    for k in 1..=settings {
        let shift = T::of_usize(k) * q;
        let gram_bound = chunks.iter().map(|c| c.gram[k]).fold(T::zero(), T::max);
        entries.insert(
            k,
            GramEntry {
                clicks: k,
                gram_bound,
                analytic_gk_bound: analytic[k],
                max_norm: chunks.iter().map(|c| c.norm[k]).fold(T::zero(), T::max),
                gram_bound_shifted: gram_bound - shift,
                analytic_gk_shifted: analytic[k] - shift,
                patterns: chunks.iter().map(|c| c.counts[k]).sum(),
                sum_exceeds_gram: chunks.iter().map(|c| c.sum_exceeds_gram[k]).sum(),
                gram_exceeds_gk: chunks.iter().map(|c| c.gram_exceeds_gk[k]).sum(),
            },
        );
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jm::c_operator;

    #[test]
    fn walker_sum_matches_direct_construction() {
        let table = AtomTable::<f64>::new(Family::Chsh, 1);
        let mut w = Walker::new(&table, 0);
        for index in 0..ClickPattern::count(1) {
            let p = ClickPattern::from_index(1, index);
            let direct = c_operator::<f64>(Family::Chsh, &p, 0.0).real_entries().unwrap();
            assert_eq!(w.sum, direct, "index {index}");
            assert_eq!(w.clicks, p.click_count());
            w.advance();
        }
    }

    #[test]
    fn walker_resumes_mid_range() {
        let table = AtomTable::<f64>::new(Family::Bb84, 2);
        let w = Walker::new(&table, 317);
        let p = ClickPattern::from_index(2, 317);
        assert_eq!(w.sum, c_operator::<f64>(Family::Bb84, &p, 0.0).real_entries().unwrap());
        assert_eq!(w.canonical(), p.canonical() == p);
    }

    #[test]
    fn rejects_large_n_and_zero_workers() {
        assert!(matches!(exhaustive_scan::<f64>(Family::Bb84, 4, 0.7, 1, false), Err(Error::PatternSpaceTooLarge(4))));
        assert!(exhaustive_scan::<f64>(Family::Bb84, 1, 0.7, 0, false).is_err());
        assert!(exhaustive_scan::<f64>(Family::Bb84, 1, -0.1, 1, false).is_err());
    }
}
