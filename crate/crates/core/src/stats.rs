//! Streaming outcome counts, correlators and witnesses with shot-noise errors.
//!
//! Counts are gathered over consecutive windows of the measurement stream.
//! Correlators pool every measurement order of their arguments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::qutrit::Outcome;
use crate::rays::{
    reference_sets, RayId, WitnessSets, OPT3_CLASSICAL_BOUND, RAY_COUNT, YO_CLASSICAL_BOUND,
};
use crate::sim::{Campaign, MeasurementRecord};

const N: usize = RAY_COUNT;
const N2: usize = N * N * 4;
const N3: usize = N * N * N * 8;

#[inline]
fn idx2(u: usize, v: usize, a1: usize, a2: usize) -> usize {
    ((u * N + v) * 2 + a1) * 2 + a2
}

#[inline]
fn idx3(u: usize, v: usize, w: usize, a1: usize, a2: usize, a3: usize) -> usize {
    ((((u * N + v) * N + w) * 2 + a1) * 2 + a2) * 2 + a3
}

/// Occurrence counts of single records, consecutive pairs and consecutive triples.
///
/// Outcome slots are 0 for +1 (dark) and 1 for -1 (bright).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTables {
    n1: Vec<u64>,
    n2: Vec<u64>,
    n3: Vec<u64>,
    total: u64,
}

impl Default for CountTables {
    fn default() -> Self {
        Self::new()
    }
}

impl CountTables {
    pub fn new() -> Self {
        Self {
            n1: vec![0; N * 2],
            n2: vec![0; N2],
            n3: vec![0; N3],
            total: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n1(&self, v: RayId, a: Outcome) -> u64 {
        self.n1[v.index() * 2 + a.slot()]
    }

    pub fn n2(&self, u: RayId, v: RayId, a1: Outcome, a2: Outcome) -> u64 {
        self.n2[idx2(u.index(), v.index(), a1.slot(), a2.slot())]
    }

    #[allow(clippy::too_many_arguments)]
    pub fn n3(&self, u: RayId, v: RayId, w: RayId, a1: Outcome, a2: Outcome, a3: Outcome) -> u64 {
        self.n3[idx3(u.index(), v.index(), w.index(), a1.slot(), a2.slot(), a3.slot())]
    }

    /// `N(A_u, A_v)` summed over outcomes.
    pub fn n2_total(&self, u: RayId, v: RayId) -> u64 {
        let base = idx2(u.index(), v.index(), 0, 0);
        self.n2[base..base + 4].iter().sum()
    }

    /// `N(A_u = a1, A_v)` summed over the second outcome.
    pub fn n2_first(&self, u: RayId, a1: Outcome, v: RayId) -> u64 {
        self.n2(u, v, a1, Outcome::Dark) + self.n2(u, v, a1, Outcome::Bright)
    }

    /// `N(A_u, A_v = a2)` summed over the first outcome.
    pub fn n2_second(&self, u: RayId, v: RayId, a2: Outcome) -> u64 {
        self.n2(u, v, Outcome::Dark, a2) + self.n2(u, v, Outcome::Bright, a2)
    }

    pub fn sum_n1(&self) -> u64 {
        self.n1.iter().sum()
    }

    pub fn sum_n2(&self) -> u64 {
        self.n2.iter().sum()
    }

    pub fn sum_n3(&self) -> u64 {
        self.n3.iter().sum()
    }

    #[inline]
    fn add_single(&mut self, a: (usize, usize)) {
        self.n1[a.0 * 2 + a.1] += 1;
        self.total += 1;
    }

    #[inline]
    fn add_pair(&mut self, a: (usize, usize), b: (usize, usize)) {
        self.n2[idx2(a.0, b.0, a.1, b.1)] += 1;
    }

    #[inline]
    fn add_triple(&mut self, a: (usize, usize), b: (usize, usize), c: (usize, usize)) {
        self.n3[idx3(a.0, b.0, c.0, a.1, b.1, c.1)] += 1;
    }

    /// Adds `count` occurrences of a single record; also raises `total`.
    pub fn add_n1(&mut self, v: RayId, a: Outcome, count: u64) {
        self.n1[v.index() * 2 + a.slot()] += count;
        self.total += count;
    }

    pub fn add_n2(&mut self, u: RayId, v: RayId, a1: Outcome, a2: Outcome, count: u64) {
        self.n2[idx2(u.index(), v.index(), a1.slot(), a2.slot())] += count;
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_n3(&mut self, u: RayId, v: RayId, w: RayId, a1: Outcome, a2: Outcome, a3: Outcome, count: u64) {
        self.n3[idx3(u.index(), v.index(), w.index(), a1.slot(), a2.slot(), a3.slot())] += count;
    }

    /// Entrywise sum.
    pub fn merge(&mut self, other: &CountTables) {
        add_into(&mut self.n1, &other.n1);
        add_into(&mut self.n2, &other.n2);
        add_into(&mut self.n3, &other.n3);
        self.total += other.total;
    }

    fn subtract(&mut self, other: &CountTables) {
        sub_from(&mut self.n1, &other.n1);
        sub_from(&mut self.n2, &other.n2);
        sub_from(&mut self.n3, &other.n3);
        self.total -= other.total;
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0 && self.sum_n2() == 0 && self.sum_n3() == 0
    }
}

fn add_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += *y;
    }
}

fn sub_from(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x -= *y;
    }
}

#[inline]
fn key(r: &MeasurementRecord) -> (usize, usize) {
    (r.ray.index(), r.outcome.slot())
}

/// Tables conditioned on the record immediately preceding each window.
///
/// `bright(i)` holds windows preceded by `(i, -1)`; `dark(i)` those preceded by `(i, +1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionedTables {
    tables: Vec<CountTables>,
}

impl Default for ConditionedTables {
    fn default() -> Self {
        Self::new()
    }
}

impl ConditionedTables {
    pub fn new() -> Self {
        Self {
            tables: (0..N * 2).map(|_| CountTables::new()).collect(),
        }
    }

    pub fn get(&self, i: RayId, preceding: Outcome) -> &CountTables {
        &self.tables[i.index() * 2 + preceding.slot()]
    }

    /// Conditioned on a preceding projection onto `i`.
    pub fn bright(&self, i: RayId) -> &CountTables {
        self.get(i, Outcome::Bright)
    }

    /// Conditioned on a preceding projection into the plane normal to `i`.
    pub fn dark(&self, i: RayId) -> &CountTables {
        self.get(i, Outcome::Dark)
    }

    fn slot_mut(&mut self, c: (usize, usize)) -> &mut CountTables {
        &mut self.tables[c.0 * 2 + c.1]
    }

    pub fn merge(&mut self, other: &ConditionedTables) {
        for (a, b) in self.tables.iter_mut().zip(&other.tables) {
            a.merge(b);
        }
    }

    fn subtract(&mut self, other: &ConditionedTables) {
        for (a, b) in self.tables.iter_mut().zip(&other.tables) {
            a.subtract(b);
        }
    }
}

/// Plain and conditioned tables for one stretch of the stream.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub tables: CountTables,
    pub conditioned: ConditionedTables,
}

impl Tally {
    pub fn merge(&mut self, other: &Tally) {
        self.tables.merge(&other.tables);
        self.conditioned.merge(&other.conditioned);
    }

    fn subtract(&mut self, other: &Tally) {
        self.tables.subtract(&other.tables);
        self.conditioned.subtract(&other.conditioned);
    }
}

/// Incremental counter over an ordered record stream.
///
/// Windows span everything pushed since the last [`StreamCounter::break_stream`].
#[derive(Clone, Debug, Default)]
pub struct StreamCounter {
    tally: Tally,
    with_conditioned: bool,
    // most recent first
    history: [Option<(usize, usize)>; 3],
}

impl StreamCounter {
    pub fn new() -> Self {
        Self {
            with_conditioned: true,
            ..Default::default()
        }
    }

    /// Skips the conditioned tables.
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn push(&mut self, rec: &MeasurementRecord) {
        let cur = key(rec);
        let [h1, h2, h3] = self.history;
        let t = &mut self.tally.tables;
        t.add_single(cur);
        if let Some(p1) = h1 {
            t.add_pair(p1, cur);
            if let Some(p2) = h2 {
                t.add_triple(p2, p1, cur);
            }
        }
        if self.with_conditioned {
            let c = &mut self.tally.conditioned;
            if let Some(p1) = h1 {
                c.slot_mut(p1).add_single(cur);
                if let Some(p2) = h2 {
                    c.slot_mut(p2).add_pair(p1, cur);
                    if let Some(p3) = h3 {
                        c.slot_mut(p3).add_triple(p2, p1, cur);
                    }
                }
            }
        }
        self.history = [Some(cur), h1, h2];
    }

    pub fn break_stream(&mut self) {
        self.history = [None; 3];
    }

    pub fn finish(self) -> Tally {
        self.tally
    }
}

/// Counts one contiguous stretch of records.
pub fn accumulate<'a, I>(records: I) -> CountTables
where
    I: IntoIterator<Item = &'a MeasurementRecord>,
{
    let mut c = StreamCounter::plain();
    for r in records {
        c.push(r);
    }
    c.finish().tables
}

/// Tables of windows immediately preceded by a bright `i` record.
pub fn conditioned_tables<'a, I>(records: I, i: RayId) -> CountTables
where
    I: IntoIterator<Item = &'a MeasurementRecord>,
{
    conditioned_tables_on(records, i, Outcome::Bright)
}

/// As [`conditioned_tables`], with the preceding outcome chosen explicitly
/// (`Dark` gives the plane-normal variant).
pub fn conditioned_tables_on<'a, I>(records: I, i: RayId, preceding: Outcome) -> CountTables
where
    I: IntoIterator<Item = &'a MeasurementRecord>,
{
    let mut c = StreamCounter::new();
    for r in records {
        c.push(r);
    }
    c.finish().conditioned.get(i, preceding).clone()
}

/// Tally of every analyzed record in a campaign; omitted subsequences break the stream.
pub fn tally_campaign(campaign: &Campaign) -> Tally {
    let mut c = StreamCounter::new();
    for (starts_segment, r) in campaign.analyzed_records() {
        if starts_segment {
            c.break_stream();
        }
        c.push(r);
    }
    c.finish()
}

const EDGE: usize = 3;

/// Tally of one shard plus the records needed to stitch it to its neighbours.
#[derive(Clone, Debug)]
pub struct ShardTally {
    pub tally: Tally,
    head: Vec<MeasurementRecord>,
    tail: Vec<MeasurementRecord>,
}

impl ShardTally {
    pub fn from_records(records: &[MeasurementRecord]) -> Self {
        let mut c = StreamCounter::new();
        for r in records {
            c.push(r);
        }
        Self {
            tally: c.finish(),
            head: records.iter().take(EDGE).copied().collect(),
            tail: records[records.len().saturating_sub(EDGE)..].to_vec(),
        }
    }

    /// Merge with the shard that directly follows this one in the stream, adding the
    /// windows that straddle the cut.
    pub fn stitch(mut self, next: ShardTally) -> ShardTally {
        let mut joined = self.tail.clone();
        joined.extend_from_slice(&next.head);
        let mut boundary = ShardTally::from_records(&joined).tally;
        boundary.subtract(&ShardTally::from_records(&self.tail).tally);
        boundary.subtract(&ShardTally::from_records(&next.head).tally);

        self.tally.merge(&next.tally);
        self.tally.merge(&boundary);

        let mut head = self.head;
        head.extend(next.head.iter().copied());
        head.truncate(EDGE);
        let mut tail = self.tail;
        tail.extend(next.tail.iter().copied());
        let tail = tail[tail.len().saturating_sub(EDGE)..].to_vec();
        ShardTally {
            tally: self.tally,
            head,
            tail,
        }
    }
}

/// Tally of a contiguous record stream split into `shards` pieces counted in parallel.
///
/// With `stitch` the result equals the single-pass tally exactly; without it, each cut
/// loses one pair window and two triple windows (plus the conditioned windows that
/// straddle it).
pub fn tally_sharded(records: &[MeasurementRecord], shards: usize, stitch: bool) -> Tally {
    let shards = shards.max(1);
    if records.is_empty() {
        return Tally::default();
    }
    let chunk = records.len().div_ceil(shards);
    let parts: Vec<ShardTally> = records
        .par_chunks(chunk)
        .map(ShardTally::from_records)
        .collect();
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one shard");
    if stitch {
        it.fold(first, ShardTally::stitch).tally
    } else {
        it.fold(first.tally, |mut acc, s| {
            acc.merge(&s.tally);
            acc
        })
    }
}

/// Campaign tally with each segment counted in `shards` stitched pieces.
pub fn tally_campaign_sharded(campaign: &Campaign, shards: usize) -> Tally {
    let mut total = Tally::default();
    for seg in campaign.segments() {
        let flat: Vec<MeasurementRecord> = seg.into_iter().flatten().copied().collect();
        total.merge(&tally_sharded(&flat, shards, true));
    }
    total
}

/// Mean of a +-1 variable with its Bernoulli shot-noise error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// From the number of `-1` results among `n`.
    pub fn from_counts(minus: u64, n: u64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        let p = minus as f64 / nf;
        Some(Self {
            value: 1.0 - 2.0 * p,
            std_error: 2.0 * (p * (1.0 - p) / nf).sqrt(),
            samples: n,
        })
    }
}

fn outcome_pairs() -> impl Iterator<Item = (Outcome, Outcome)> {
    [Outcome::Dark, Outcome::Bright]
        .into_iter()
        .flat_map(|a| [Outcome::Dark, Outcome::Bright].map(move |b| (a, b)))
}

fn outcome_triples() -> impl Iterator<Item = (Outcome, Outcome, Outcome)> {
    outcome_pairs().flat_map(|(a, b)| [Outcome::Dark, Outcome::Bright].map(move |c| (a, b, c)))
}

fn is_minus(values: &[Outcome]) -> bool {
    values.iter().filter(|o| **o == Outcome::Bright).count() % 2 == 1
}

/// `<A_v>`
pub fn expval_single(t: &CountTables, v: RayId) -> Result<Estimate, StatsError> {
    let minus = t.n1(v, Outcome::Bright);
    let n = minus + t.n1(v, Outcome::Dark);
    Estimate::from_counts(minus, n).ok_or_else(|| StatsError::missing(format!("<{v}>")))
}

/// `<A_u A_v>` pooled over both measurement orders.
pub fn expval_pair(t: &CountTables, u: RayId, v: RayId) -> Result<Estimate, StatsError> {
    if u == v {
        return Err(StatsError::InvalidArguments(format!("pair ({u},{u}) repeats a ray")));
    }
    let (mut minus, mut n) = (0, 0);
    for (x, y) in [(u, v), (v, u)] {
        for (a, b) in outcome_pairs() {
            let c = t.n2(x, y, a, b);
            n += c;
            if is_minus(&[a, b]) {
                minus += c;
            }
        }
    }
    Estimate::from_counts(minus, n).ok_or_else(|| StatsError::missing(format!("<{u} {v}>")))
}

/// `<A_u A_v A_w>` pooled over all six measurement orders.
pub fn expval_triple(
    t: &CountTables,
    u: RayId,
    v: RayId,
    w: RayId,
) -> Result<Estimate, StatsError> {
    if u == v || v == w || u == w {
        return Err(StatsError::InvalidArguments(format!(
            "triple ({u},{v},{w}) repeats a ray"
        )));
    }
    let orders = [(u, v, w), (u, w, v), (v, u, w), (v, w, u), (w, u, v), (w, v, u)];
    let (mut minus, mut n) = (0, 0);
    for (x, y, z) in orders {
        for (a, b, c) in outcome_triples() {
            let k = t.n3(x, y, z, a, b, c);
            n += k;
            if is_minus(&[a, b, c]) {
                minus += k;
            }
        }
    }
    Estimate::from_counts(minus, n).ok_or_else(|| StatsError::missing(format!("<{u} {v} {w}>")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub value: f64,
    pub std_error: f64,
    /// `(value - bound) / std_error`
    pub sigma_violation: f64,
    pub bound: f64,
}

impl WitnessResult {
    fn new(value: f64, variance: f64, bound: f64) -> Self {
        let std_error = variance.sqrt();
        let excess = value - bound;
        Self {
            value,
            std_error,
            // exact inputs have no error; report the sign of the excess only
            sigma_violation: if std_error > 0.0 {
                excess / std_error
            } else if excess == 0.0 {
                0.0
            } else {
                excess.signum() * f64::INFINITY
            },
            bound,
        }
    }
}

/// Weighted sum of correlators with errors added in quadrature.
struct LinearCombination {
    value: f64,
    variance: f64,
    missing: Vec<String>,
}

impl LinearCombination {
    fn new() -> Self {
        Self {
            value: 0.0,
            variance: 0.0,
            missing: Vec::new(),
        }
    }

    fn add(&mut self, weight: f64, term: Result<Estimate, StatsError>) {
        match term {
            Ok(e) => {
                self.value += weight * e.value;
                self.variance += weight * weight * e.std_error * e.std_error;
            }
            Err(StatsError::InsufficientData { missing }) => self.missing.extend(missing),
            Err(other) => self.missing.push(other.to_string()),
        }
    }

    fn finish(self, bound: f64) -> Result<WitnessResult, StatsError> {
        if self.missing.is_empty() {
            Ok(WitnessResult::new(self.value, self.variance, bound))
        } else {
            Err(StatsError::InsufficientData {
                missing: self.missing,
            })
        }
    }
}

/// Source of single, pair and triple correlators.
pub trait Correlators {
    fn single(&self, v: RayId) -> Result<Estimate, StatsError>;
    fn pair(&self, u: RayId, v: RayId) -> Result<Estimate, StatsError>;
    fn triple(&self, u: RayId, v: RayId, w: RayId) -> Result<Estimate, StatsError>;
}

impl Correlators for CountTables {
    fn single(&self, v: RayId) -> Result<Estimate, StatsError> {
        expval_single(self, v)
    }

    fn pair(&self, u: RayId, v: RayId) -> Result<Estimate, StatsError> {
        expval_pair(self, u, v)
    }

    fn triple(&self, u: RayId, v: RayId, w: RayId) -> Result<Estimate, StatsError> {
        expval_triple(self, u, v, w)
    }
}

/// `sum_V <A_v> - 1/2 sum_E <A_u A_v>` against the classical bound 8.
pub fn witness_yo<C: Correlators + ?Sized>(t: &C) -> Result<WitnessResult, StatsError> {
    witness_yo_with(t, reference_sets())
}

pub fn witness_yo_with<C: Correlators + ?Sized>(t: &C, sets: &WitnessSets) -> Result<WitnessResult, StatsError> {
    let mut lc = LinearCombination::new();
    for &v in &sets.vertices {
        lc.add(1.0, t.single(v));
    }
    for &(u, v) in &sets.edges {
        lc.add(-0.5, t.pair(u, v));
    }
    lc.finish(YO_CLASSICAL_BOUND)
}

/// Optimal three-term witness against the classical bound 25.
pub fn witness_opt3<C: Correlators + ?Sized>(t: &C) -> Result<WitnessResult, StatsError> {
    witness_opt3_with(t, reference_sets())
}

pub fn witness_opt3_with<C: Correlators + ?Sized>(t: &C, sets: &WitnessSets) -> Result<WitnessResult, StatsError> {
    let mut lc = LinearCombination::new();
    for &v in &sets.vertices {
        let w = if sets.h_vertices.contains(&v) { 2.0 } else { 1.0 };
        lc.add(w, t.single(v));
    }
    for (u, v) in sets.edges_outside_c2() {
        lc.add(-2.0, t.pair(u, v));
    }
    for &(u, v) in &sets.c2 {
        lc.add(-1.0, t.pair(u, v));
    }
    for &(u, v, w) in &sets.c3 {
        lc.add(-3.0, t.triple(u, v, w));
    }
    lc.finish(OPT3_CLASSICAL_BOUND)
}

/// Both witnesses evaluated on the windows following a projection onto `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionedWitness {
    pub input: RayId,
    pub chi_yo: WitnessResult,
    pub chi_opt3: WitnessResult,
}

pub fn conditioned_witnesses(c: &ConditionedTables) -> Result<Vec<ConditionedWitness>, StatsError> {
    RayId::all()
        .map(|i| {
            let t = c.bright(i);
            Ok(ConditionedWitness {
                input: i,
                chi_yo: witness_yo(t)?,
                chi_opt3: witness_opt3(t)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ray: RayId, a: i8, index: u64) -> MeasurementRecord {
        MeasurementRecord {
            ray,
            outcome: Outcome::from_value(a).unwrap(),
            photon_count: if a < 0 { 18 } else { 0 },
            index,
        }
    }

    fn stream(items: &[(RayId, i8)]) -> Vec<MeasurementRecord> {
        items
            .iter()
            .enumerate()
            .map(|(k, &(r, a))| rec(r, a, k as u64))
            .collect()
    }

    #[test]
    fn single_record() {
        let t = accumulate(&stream(&[(RayId::Z1, -1)]));
        assert_eq!(t.n1(RayId::Z1, Outcome::Bright), 1);
        assert_eq!(t.sum_n2(), 0);
        assert_eq!(t.total(), 1);
    }

    #[test]
    fn pair_and_triple_windows() {
        let s = stream(&[(RayId::Z1, -1), (RayId::Z2, 1), (RayId::Z3, 1)]);
        let t = accumulate(&s);
        assert_eq!(t.n2(RayId::Z1, RayId::Z2, Outcome::Bright, Outcome::Dark), 1);
        assert_eq!(
            t.n3(RayId::Z1, RayId::Z2, RayId::Z3, Outcome::Bright, Outcome::Dark, Outcome::Dark),
            1
        );
        assert_eq!(t.sum_n2(), 2);
        assert_eq!(t.sum_n3(), 1);
    }

    #[test]
    fn expval_examples() {
        let s = stream(&[(RayId::Z1, 1), (RayId::H0, 1), (RayId::Z1, 1), (RayId::H0, 1), (RayId::Z1, -1)]);
        let t = accumulate(&s);
        let e = expval_single(&t, RayId::Z1).unwrap();
        assert!((e.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.samples, 3);

        let t = accumulate(&stream(&[(RayId::Z1, -1), (RayId::Z2, 1)]));
        let e = expval_pair(&t, RayId::Z1, RayId::Z2).unwrap();
        assert_eq!(e.value, -1.0);
        assert_eq!(e.samples, 1);
        assert_eq!(expval_pair(&t, RayId::Z2, RayId::Z1).unwrap(), e);

        let t = accumulate(&stream(&[(RayId::Y1M, -1), (RayId::Z1, 1), (RayId::Y1P, 1)]));
        let e = expval_triple(&t, RayId::Z1, RayId::Y1M, RayId::Y1P).unwrap();
        assert_eq!(e.value, -1.0);
    }

    #[test]
    fn missing_cells_are_reported() {
        let t = CountTables::new();
        assert!(matches!(expval_single(&t, RayId::H0), Err(StatsError::InsufficientData { .. })));
        match witness_yo(&t) {
            Err(StatsError::InsufficientData { missing }) => assert_eq!(missing.len(), 13 + 24),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            expval_pair(&t, RayId::H0, RayId::H0),
            Err(StatsError::InvalidArguments(_))
        ));
    }

    #[test]
    fn conditioned_on_preceding_bright() {
        let s = stream(&[(RayId::H0, -1), (RayId::Z1, 1)]);
        let t = conditioned_tables(&s, RayId::H0);
        assert_eq!(t.n1(RayId::Z1, Outcome::Dark), 1);
        assert_eq!(t.total(), 1);
        let perp = conditioned_tables_on(&s, RayId::H0, Outcome::Dark);
        assert_eq!(perp.total(), 0);
    }

    #[test]
    fn window_sums_per_segment() {
        let s = stream(&[
            (RayId::Z1, -1),
            (RayId::Z2, 1),
            (RayId::H1, 1),
            (RayId::H0, -1),
            (RayId::Y2M, 1),
        ]);
        let t = accumulate(&s);
        assert_eq!(t.sum_n1(), 5);
        assert_eq!(t.sum_n2(), 4);
        assert_eq!(t.sum_n3(), 3);
        // first-slot marginal of n2 equals n1 without the last record
        for v in RayId::all() {
            for a in [Outcome::Dark, Outcome::Bright] {
                let marg: u64 = RayId::all().map(|w| t.n2_first(v, a, w)).sum();
                let last = u64::from(s[4].ray == v && s[4].outcome == a);
                assert_eq!(marg, t.n1(v, a) - last);
            }
        }
    }

    #[test]
    fn break_stream_stops_windows() {
        let s = stream(&[(RayId::Z1, -1), (RayId::Z2, 1), (RayId::Z3, 1), (RayId::Z1, -1)]);
        let mut c = StreamCounter::new();
        c.push(&s[0]);
        c.push(&s[1]);
        c.break_stream();
        c.push(&s[2]);
        c.push(&s[3]);
        let t = c.finish().tables;
        assert_eq!(t.sum_n2(), 2);
        assert_eq!(t.sum_n3(), 0);
    }
}
