//! Minimal canonical intervals by exhaustive search.
//!
//! The pruned engine walks restricted-growth prefixes depth first. Extending
//! a witness-free prefix of length `t - 1` by position `t` only needs the
//! `(a, d)` patterns whose largest element is `t`; those are precomputed per
//! position. A prefix containing a witness is cut, since every extension
//! keeps it.
//!
//! With the `parallel` feature the tree is split at a fixed prefix depth and
//! the subtrees are explored on a rayon pool. Per-subtree tallies are summed
//! in frontier order, so results do not depend on the worker count.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{count_colourings, enumerate_colourings, Label, TypedColouring};
use crate::polynomial::{PolyError, PolynomialFamily};
use crate::witness::{
    find_witness, scan_order, scan_witness, verify_certificate, DPolicy, WitnessQuery,
};

/// Positions are stored as `u8` and colours fit a `u64` mask.
pub const MAX_INTERVAL: usize = 64;

pub const DEFAULT_SPLIT_DEPTH: usize = 4;

/// Largest number of colourings the naive engine will enumerate at one `N`.
pub const DEFAULT_NAIVE_CAP: u64 = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("naive enumeration of {count} colourings at N={len} exceeds the cap of {cap}")]
    CapExceeded {
        len: usize,
        count: BigUint,
        cap: u64,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mono: Option<PolynomialFamily>,
    pub rainbow: Option<PolynomialFamily>,
    pub h: i64,
    pub d_policy: DPolicy,
    /// Bounded-palette mode: colourings use at most this many classes.
    pub max_classes: Option<u32>,
    pub n_start: usize,
    pub n_limit: usize,
    pub node_budget: Option<u64>,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub split_depth: usize,
    /// Re-check every cut with the full witness scan and a certificate
    /// round trip, and every surviving extension with the full scan.
    #[serde(skip)]
    pub verify_prunes: bool,
}

impl SearchConfig {
    /// Same family in both roles, unbounded palette, `N` from 1 to `n_limit`.
    pub fn symmetric(family: PolynomialFamily, d_policy: DPolicy, n_limit: usize) -> Self {
        Self {
            mono: Some(family.clone()),
            rainbow: Some(family),
            h: 0,
            d_policy,
            max_classes: None,
            n_start: 1,
            n_limit,
            node_budget: None,
            workers: 1,
            split_depth: DEFAULT_SPLIT_DEPTH,
            verify_prunes: false,
        }
    }

    /// Monochromatic family only (classical polynomial Van der Waerden).
    pub fn mono_only(family: PolynomialFamily, max_classes: u32, n_limit: usize) -> Self {
        Self {
            rainbow: None,
            max_classes: Some(max_classes),
            ..Self::symmetric(family, DPolicy::Positive, n_limit)
        }
    }

    pub fn query(&self) -> Result<WitnessQuery, SearchError> {
        Ok(WitnessQuery::new(
            self.mono.clone(),
            self.rainbow.clone(),
            self.h,
            self.d_policy,
        )?)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidConfig(m));
        if self.n_start < 1 {
            return bad("n_start must be at least 1".into());
        }
        if self.n_start > self.n_limit {
            return bad(format!(
                "n_start ({}) exceeds n_limit ({})",
                self.n_start, self.n_limit
            ));
        }
        if self.n_limit > MAX_INTERVAL {
            return bad(format!("n_limit ({}) exceeds {MAX_INTERVAL}", self.n_limit));
        }
        if self.workers < 1 {
            return bad("worker count must be at least 1".into());
        }
        if self.max_classes == Some(0) {
            return bad("max_classes must be at least 1".into());
        }
        self.query()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub canonical_number: Option<usize>,
    /// Witness-free colourings of `[canonical_number - 1]`; the empty
    /// colouring counts once when the canonical number is 1.
    pub extremal_count_at_n_minus_1: Option<u64>,
    pub nodes_expanded: u64,
    /// The search stopped at `n_limit` or the node budget without an answer.
    pub exhausted: bool,
    pub budget_hit: bool,
    /// `level_counts[t]`: witness-free colourings of `[t]` (up to renaming).
    /// Levels past the search depth are absent.
    pub level_counts: Vec<u64>,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub checks: PruneChecks,
}

/// Outcome of the self-checks run with `verify_prunes`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneChecks {
    pub cuts_checked: u64,
    pub cut_failures: u64,
    pub certificate_failures: u64,
    pub survivors_checked: u64,
    pub survivor_failures: u64,
}

impl PruneChecks {
    fn merge(&mut self, other: &Self) {
        self.cuts_checked += other.cuts_checked;
        self.cut_failures += other.cut_failures;
        self.certificate_failures += other.certificate_failures;
        self.survivors_checked += other.survivors_checked;
        self.survivor_failures += other.survivor_failures;
    }

    pub fn all_passed(&self) -> bool {
        self.cut_failures == 0 && self.certificate_failures == 0 && self.survivor_failures == 0
    }
}

/// Witness patterns grouped by their largest element.
#[derive(Debug, Clone, Default)]
struct PatternTable {
    /// `mono[t]`: other positions (1-based) of monochromatic patterns ending at `t`.
    mono: Vec<Vec<Box<[u8]>>>,
    rainbow: Vec<Vec<Box<[u8]>>>,
}

impl PatternTable {
    fn build(query: &WitnessQuery, len: usize) -> Self {
        let mut mono = vec![BTreeSet::new(); len + 1];
        let mut rainbow = vec![BTreeSet::new(); len + 1];
        let window = len as i64;
        let policy = query.policy();
        for d in scan_order(query.scan_radius(len), policy == DPolicy::Any) {
            for (family, admitted, buckets, distinct) in [
                (query.mono(), policy.admits_mono(d), &mut mono, false),
                (
                    query.rainbow(),
                    policy.admits_rainbow(d, query.h()),
                    &mut rainbow,
                    true,
                ),
            ] {
                let Some(family) = family.filter(|_| admitted) else {
                    continue;
                };
                let Ok(offsets) = family.offsets(d) else {
                    continue;
                };
                let lo = offsets.iter().copied().min().unwrap_or(0).min(0);
                let hi = offsets.iter().copied().max().unwrap_or(0).max(0);
                for a in (1 - lo)..=(window - hi) {
                    let elems: Vec<i64> = std::iter::once(a)
                        .chain(offsets.iter().map(|o| a + o))
                        .collect();
                    let set: BTreeSet<i64> = elems.iter().copied().collect();
                    if distinct && set.len() != elems.len() {
                        continue;
                    }
                    let top = *set.last().expect("nonempty") as usize;
                    let others: Box<[u8]> = set
                        .iter()
                        .filter(|&&e| e as usize != top)
                        .map(|&e| e as u8)
                        .collect();
                    buckets[top].insert(others);
                }
            }
        }
        let flatten =
            |b: Vec<BTreeSet<Box<[u8]>>>| b.into_iter().map(|s| s.into_iter().collect()).collect();
        Self {
            mono: flatten(mono),
            rainbow: flatten(rainbow),
        }
    }

    /// Whether colouring `colours[..t]` (0-based storage of positions 1..=t)
    /// has a witness containing position `t`.
    #[inline]
    fn hit(&self, colours: &[u8], t: usize) -> bool {
        let ct = colours[t - 1];
        for others in &self.mono[t] {
            if others.iter().all(|&e| colours[e as usize - 1] == ct) {
                return true;
            }
        }
        'pattern: for others in &self.rainbow[t] {
            let mut mask = 1u64 << ct;
            for &e in others.iter() {
                let bit = 1u64 << colours[e as usize - 1];
                if mask & bit != 0 {
                    continue 'pattern;
                }
                mask |= bit;
            }
            return true;
        }
        false
    }
}

struct Budget {
    limit: Option<u64>,
    spent: AtomicU64,
    hit: AtomicBool,
}

impl Budget {
    const FLUSH: u64 = 256;

    fn new(limit: Option<u64>) -> Self {
        Self {
            limit,
            spent: AtomicU64::new(0),
            hit: AtomicBool::new(false),
        }
    }

    /// Records `n` nodes; false once the budget is gone.
    fn charge(&self, n: u64) -> bool {
        let Some(limit) = self.limit else { return true };
        let total = self.spent.fetch_add(n, Ordering::Relaxed) + n;
        if total > limit {
            self.hit.store(true, Ordering::Relaxed);
        }
        !self.hit.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    levels: Vec<u64>,
    nodes: u64,
    unflushed: u64,
    checks: PruneChecks,
    aborted: bool,
}

impl Tally {
    fn new(len: usize) -> Self {
        Self {
            levels: vec![0; len + 1],
            ..Self::default()
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            *a += b;
        }
        self.nodes += other.nodes;
        self.checks.merge(&other.checks);
        self.aborted |= other.aborted;
    }
}

/// What a DFS does at a witness-free node.
enum Visit<'a> {
    /// Count survivors per level down to the full depth.
    Count,
    /// Stop at `depth` and record the prefix.
    Frontier(usize, &'a mut Vec<Vec<u8>>),
    /// Collect up to `limit` survivors of length `depth`.
    Collect(usize, usize, &'a mut Vec<Vec<u8>>),
}

struct Engine<'a> {
    cfg: &'a SearchConfig,
    query: WitnessQuery,
    table: PatternTable,
    depth: usize,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SearchConfig, depth: usize) -> Result<Self, SearchError> {
        cfg.validate()?;
        let query = cfg.query()?;
        let table = PatternTable::build(&query, depth);
        Ok(Self {
            cfg,
            query,
            table,
            depth,
        })
    }

    fn choices(&self, used: u8) -> u8 {
        let fresh = used.saturating_add(1);
        match self.cfg.max_classes {
            Some(k) => fresh.min(k.min(u8::MAX as u32) as u8),
            None => fresh,
        }
    }

    fn prefix_colouring(colours: &[u8]) -> TypedColouring {
        TypedColouring::single(colours.iter().map(|&c| c as Label).collect())
            .expect("nonempty prefix")
    }

    fn check_cut(&self, colours: &[u8], tally: &mut Tally) {
        let c = Self::prefix_colouring(colours);
        tally.checks.cuts_checked += 1;
        match find_witness(&c, &self.query) {
            Some(cert) => {
                if verify_certificate(&c, &cert).is_err() {
                    tally.checks.certificate_failures += 1;
                }
            }
            None => tally.checks.cut_failures += 1,
        }
    }

    fn check_survivor(&self, colours: &[u8], tally: &mut Tally) {
        tally.checks.survivors_checked += 1;
        if scan_witness(&Self::prefix_colouring(colours), &self.query).is_some() {
            tally.checks.survivor_failures += 1;
        }
    }

    /// DFS below the witness-free prefix `colours[..t]`. The node itself is
    /// counted only when `count_root`.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        colours: &mut [u8; MAX_INTERVAL],
        t: usize,
        used: u8,
        count_root: bool,
        visit: &mut Visit<'_>,
        tally: &mut Tally,
        budget: &Budget,
    ) {
        if tally.aborted {
            return;
        }
        if count_root {
            tally.levels[t] += 1;
        }
        match visit {
            Visit::Frontier(depth, out) if t == *depth => {
                out.push(colours[..t].to_vec());
                return;
            }
            Visit::Collect(depth, limit, out) if t == *depth => {
                if out.len() < *limit {
                    out.push(colours[..t].to_vec());
                }
                return;
            }
            Visit::Collect(_, limit, out) if out.len() >= *limit => return,
            _ => {}
        }
        if t == self.depth {
            return;
        }
        for c in 0..self.choices(used) {
            tally.nodes += 1;
            tally.unflushed += 1;
            if tally.unflushed >= Budget::FLUSH {
                if !budget.charge(tally.unflushed) {
                    tally.aborted = true;
                }
                tally.unflushed = 0;
                if tally.aborted {
                    return;
                }
            }
            colours[t] = c;
            let next = t + 1;
            if self.table.hit(&colours[..next], next) {
                if self.cfg.verify_prunes {
                    self.check_cut(&colours[..next], tally);
                }
                continue;
            }
            if self.cfg.verify_prunes {
                self.check_survivor(&colours[..next], tally);
            }
            self.dfs(colours, next, used.max(c + 1), true, visit, tally, budget);
        }
    }

    fn finish(&self, tally: &mut Tally, budget: &Budget) {
        if tally.unflushed > 0 && !budget.charge(tally.unflushed) {
            tally.aborted = true;
        }
        tally.unflushed = 0;
    }

    /// Witness-free prefixes at `depth` (lexicographic), plus the tally of
    /// everything above them.
    fn frontier(&self, depth: usize, budget: &Budget) -> (Vec<Vec<u8>>, Tally) {
        let mut tally = Tally::new(self.depth);
        let mut out = Vec::new();
        let mut colours = [0u8; MAX_INTERVAL];
        self.dfs(
            &mut colours,
            0,
            0,
            true,
            &mut Visit::Frontier(depth, &mut out),
            &mut tally,
            budget,
        );
        self.finish(&mut tally, budget);
        (out, tally)
    }

    fn subtree(&self, prefix: &[u8], visit: &mut Visit<'_>, budget: &Budget) -> Tally {
        let mut tally = Tally::new(self.depth);
        let mut colours = [0u8; MAX_INTERVAL];
        colours[..prefix.len()].copy_from_slice(prefix);
        let used = prefix.iter().map(|&c| c + 1).max().unwrap_or(0);
        self.dfs(
            &mut colours,
            prefix.len(),
            used,
            false,
            visit,
            &mut tally,
            budget,
        );
        self.finish(&mut tally, budget);
        tally
    }

    fn split_depth(&self) -> usize {
        self.cfg.split_depth.min(self.depth)
    }

    fn count(&self, budget: &Budget) -> Tally {
        let (frontier, mut tally) = self.frontier(self.split_depth(), budget);
        let parts = self.map_frontier(&frontier, |prefix| {
            self.subtree(prefix, &mut Visit::Count, budget)
        });
        for part in &parts {
            tally.merge(part);
        }
        tally
    }

    fn collect(&self, limit: usize, budget: &Budget) -> (Vec<Vec<u8>>, Tally) {
        let depth = self.depth;
        let (frontier, mut tally) = self.frontier(self.split_depth(), budget);
        let parts = self.map_frontier(&frontier, |prefix| {
            let mut out = Vec::new();
            let t = self.subtree(prefix, &mut Visit::Collect(depth, limit, &mut out), budget);
            (out, t)
        });
        let mut found = Vec::new();
        for (out, part) in parts {
            tally.merge(&part);
            found.extend(out);
        }
        found.truncate(limit);
        (found, tally)
    }

    #[cfg(feature = "parallel")]
    fn map_frontier<T: Send>(
        &self,
        frontier: &[Vec<u8>],
        f: impl Fn(&[u8]) -> T + Sync + Send,
    ) -> Vec<T> {
        use rayon::prelude::*;
        if self.cfg.workers <= 1 || frontier.len() <= 1 {
            return frontier.iter().map(|p| f(p)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .expect("thread pool");
        pool.install(|| frontier.par_iter().map(|p| f(p)).collect())
    }

    #[cfg(not(feature = "parallel"))]
    fn map_frontier<T: Send>(
        &self,
        frontier: &[Vec<u8>],
        f: impl Fn(&[u8]) -> T + Sync + Send,
    ) -> Vec<T> {
        frontier.iter().map(|p| f(p)).collect()
    }
}

/// `levels` holds one count per length `0..=n_limit` unless the budget ran
/// out first.
fn summarize(
    cfg: &SearchConfig,
    mut levels: Vec<u64>,
    nodes: u64,
    budget_hit: bool,
    started: Instant,
    checks: PruneChecks,
) -> SearchResult {
    let canonical = if budget_hit {
        None
    } else {
        (cfg.n_start..=cfg.n_limit).find(|&n| levels.get(n) == Some(&0))
    };
    let extremal = canonical.map(|n| levels[n - 1]);
    if let Some(first_zero) = levels.iter().position(|&c| c == 0) {
        levels.truncate(first_zero + 1);
    }
    SearchResult {
        canonical_number: canonical,
        extremal_count_at_n_minus_1: extremal,
        nodes_expanded: nodes,
        exhausted: canonical.is_none(),
        budget_hit,
        level_counts: levels,
        wall_time: started.elapsed(),
        checks,
    }
}

/// Least `N` in `[n_start, n_limit]` with no witness-free colouring of `[N]`.
pub fn canonical_number(cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    let engine = Engine::new(cfg, cfg.n_limit)?;
    let budget = Budget::new(cfg.node_budget);
    let tally = engine.count(&budget);
    let hit = tally.aborted || budget.hit.load(Ordering::Relaxed);
    Ok(summarize(
        cfg,
        tally.levels,
        tally.nodes,
        hit,
        started,
        tally.checks,
    ))
}

/// The same contract as [`canonical_number`] by plain enumeration of every
/// colouring and a full witness scan of each. Refuses to enumerate more than
/// `cap` colourings at any single `N`.
pub fn naive_canonical_number(cfg: &SearchConfig, cap: u64) -> Result<SearchResult, SearchError> {
    let started = Instant::now();
    cfg.validate()?;
    let query = cfg.query()?;
    let count = count_colourings(cfg.n_limit, cfg.max_classes);
    if count > BigUint::from(cap) {
        return Err(SearchError::CapExceeded {
            len: cfg.n_limit,
            count,
            cap,
        });
    }
    let mut levels = vec![1u64];
    let mut nodes = 0;
    let mut budget_hit = false;
    'outer: for len in 1..=cfg.n_limit {
        let mut free = 0;
        for c in enumerate_colourings(len, cfg.max_classes) {
            nodes += 1;
            if cfg.node_budget.is_some_and(|b| nodes > b) {
                budget_hit = true;
                break 'outer;
            }
            if scan_witness(&c, &query).is_none() {
                free += 1;
            }
        }
        levels.push(free);
        if free == 0 {
            break;
        }
    }
    if !budget_hit {
        // every longer colouring restricts to a shorter one
        levels.resize(cfg.n_limit + 1, 0);
    }
    Ok(summarize(
        cfg,
        levels,
        nodes,
        budget_hit,
        started,
        PruneChecks::default(),
    ))
}

/// Up to `limit` witness-free colourings of `[len]` in lexicographic
/// restricted-growth order.
pub fn extremal_colourings(
    cfg: &SearchConfig,
    len: usize,
    limit: usize,
) -> Result<Vec<TypedColouring>, SearchError> {
    if len < 1 || len > cfg.n_limit {
        return Err(SearchError::InvalidConfig(format!(
            "N ({len}) must lie in [1, n_limit = {}]",
            cfg.n_limit
        )));
    }
    let engine = Engine::new(cfg, len)?;
    let budget = Budget::new(None);
    let (found, _) = engine.collect(limit, &budget);
    Ok(found.iter().map(|c| Engine::prefix_colouring(c)).collect())
}

/// Machine-readable record of one search run. Everything except the
/// optional wall time is a function of the config alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub engine: String,
    pub config: SearchConfig,
    pub canonical_number: Option<usize>,
    pub nodes_expanded: u64,
    pub exhausted: bool,
    pub budget_hit: bool,
    pub extremal_count: Option<u64>,
    pub level_counts: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<u128>,
}

impl RunReport {
    pub fn new(engine: &str, cfg: &SearchConfig, result: &SearchResult, with_timing: bool) -> Self {
        Self {
            engine: engine.to_string(),
            config: cfg.clone(),
            canonical_number: result.canonical_number,
            nodes_expanded: result.nodes_expanded,
            exhausted: result.exhausted,
            budget_hit: result.budget_hit,
            extremal_count: result.extremal_count_at_n_minus_1,
            level_counts: result.level_counts.clone(),
            wall_time_ms: with_timing.then_some(result.wall_time.as_millis()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
