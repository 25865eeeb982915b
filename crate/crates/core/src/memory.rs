//! Reachable post-measurement states and the entropy bound on classical memory.
//!
//! Every reachable state is real and proportional to an integer vector, so the
//! enumeration runs on reduced integer directions and is exact. A floating-point
//! enumeration with tolerance-based deduplication is kept as a cross-check.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::rays::{rays, RAY_COUNT};

/// Integer direction reduced by its gcd with the first nonzero component positive.
pub type IntRay = [i64; 3];

/// Deepest level with published state counts.
pub const CHECKED_DEPTH: usize = 5;

pub const DEDUP_TOLERANCE: f64 = 1e-9;

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn canonical(v: [i128; 3]) -> IntRay {
    let g = gcd(gcd(v[0], v[1]), v[2]);
    assert!(g != 0, "zero direction");
    let sign = if v.iter().find(|&&x| x != 0).copied().unwrap_or(1) < 0 { -1 } else { 1 };
    v.map(|x| i64::try_from(sign * x / g).expect("direction component overflow"))
}

fn dot(a: &IntRay, b: &IntRay) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

pub fn unit_vector(v: &IntRay) -> [f64; 3] {
    let n = (dot(v, v) as f64).sqrt();
    v.map(|x| x as f64 / n)
}

fn ray_directions() -> Vec<IntRay> {
    rays().iter().map(|r| canonical(r.direction.map(i128::from))).collect()
}

/// `(child, probability)` for every branch of measuring each ray with probability `1/13`.
fn branches(s: &IntRay, directions: &[IntRay]) -> Vec<(IntRay, f64)> {
    let ss = dot(s, s);
    let mut out = Vec::with_capacity(2 * directions.len());
    let choice = 1.0 / directions.len() as f64;
    for r in directions {
        let d = dot(s, r);
        let rr = dot(r, r);
        let bright = (d * d) as f64 / (ss * rr) as f64;
        if d != 0 {
            out.push((*r, choice * bright));
        }
        if d * d != ss * rr {
            let child = [0, 1, 2].map(|k| s[k] as i128 * rr - d * r[k] as i128);
            out.push((canonical(child), choice * (1.0 - bright)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasLevel {
    pub depth: usize,
    /// Sorted.
    pub states: Vec<IntRay>,
    pub probabilities: Vec<f64>,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateAtlas {
    /// Levels `0..=depth`.
    pub levels: Vec<AtlasLevel>,
}

impl StateAtlas {
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.states.len()).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.entropy).collect()
    }
}

/// Propagates an initial distribution over the 13 rays through `depth` measurements
/// of uniformly chosen rays.
pub fn occupancy(depth: usize, initial: &[f64]) -> Result<StateAtlas, StatsError> {
    if initial.len() != RAY_COUNT {
        return Err(StatsError::InvalidArguments(format!(
            "initial distribution has {} entries, expected {RAY_COUNT}",
            initial.len()
        )));
    }
    let total: f64 = initial.iter().sum();
    if initial.iter().any(|&p| p.is_nan() || p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(StatsError::InvalidArguments(format!(
            "initial distribution must be nonnegative and sum to 1, sums to {total}"
        )));
    }
    if depth > CHECKED_DEPTH {
        log::warn!("depth {depth} is beyond the range with published state counts");
    }
    let directions = ray_directions();
    let mut current: BTreeMap<IntRay, f64> = BTreeMap::new();
    for (r, &p) in directions.iter().zip(initial) {
        *current.entry(*r).or_default() += p;
    }
    let mut levels = vec![level(0, &current)];
    for k in 1..=depth {
        let expanded: Vec<Vec<(IntRay, f64)>> = current
            .par_iter()
            .map(|(s, &p)| {
                branches(s, &directions)
                    .into_iter()
                    .map(|(c, q)| (c, p * q))
                    .collect()
            })
            .collect();
        let mut next = BTreeMap::new();
        for (c, q) in expanded.into_iter().flatten() {
            *next.entry(c).or_default() += q;
        }
        current = next;
        levels.push(level(k, &current));
    }
    Ok(StateAtlas { levels })
}

fn level(depth: usize, m: &BTreeMap<IntRay, f64>) -> AtlasLevel {
    let probabilities: Vec<f64> = m.values().copied().collect();
    AtlasLevel {
        depth,
        states: m.keys().copied().collect(),
        entropy: entropy_bound(&probabilities),
        probabilities,
    }
}

pub fn uniform_initial() -> Vec<f64> {
    vec![1.0 / RAY_COUNT as f64; RAY_COUNT]
}

/// Atlas from the uniform initial distribution.
pub fn enumerate_states(depth: usize) -> StateAtlas {
    occupancy(depth, &uniform_initial()).expect("uniform distribution is valid")
}

/// Shannon entropy in bits; zero-probability entries contribute nothing.
pub fn entropy_bound(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Entropy of the uniform distribution over the 13 rays.
pub fn uniform_13_bits() -> f64 {
    (RAY_COUNT as f64).log2()
}

/// Entropy bound of the 24-state Peres-Mermin comparison set.
pub fn peres_mermin_bits() -> f64 {
    24f64.log2()
}

/// True if `v` is one of the rays or orthogonal to one of them.
pub fn in_semicircle(v: &[f64; 3], tol: f64) -> bool {
    rays().iter().any(|r| {
        let d: [f64; 3] = r.direction.map(f64::from);
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let c = (v[0] * d[0] + v[1] * d[1] + v[2] * d[2]) / n;
        c.abs() < tol || (c.abs() - 1.0).abs() < tol
    })
}

fn canonical_float(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let u = v.map(|x| x / n);
    let first = u.iter().copied().find(|x| x.abs() > DEDUP_TOLERANCE).unwrap_or(1.0);
    if first < 0.0 {
        u.map(|x| -x)
    } else {
        u
    }
}

/// Set of unit vectors deduplicated within [`DEDUP_TOLERANCE`] per component.
struct FloatSet {
    cells: HashMap<[i64; 3], Vec<[f64; 3]>>,
    items: Vec<[f64; 3]>,
}

impl FloatSet {
    const CELL: f64 = 1e-7;

    fn new() -> Self {
        Self {
            cells: HashMap::new(),
            items: Vec::new(),
        }
    }

    fn insert(&mut self, v: [f64; 3]) {
        let key = v.map(|x| (x / Self::CELL).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let k = [key[0] + dx, key[1] + dy, key[2] + dz];
                    if let Some(bucket) = self.cells.get(&k) {
                        if bucket
                            .iter()
                            .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() < DEDUP_TOLERANCE))
                        {
                            return;
                        }
                    }
                }
            }
        }
        self.cells.entry(key).or_default().push(v);
        self.items.push(v);
    }
}

/// State counts per depth `0..=depth` from floating-point states.
pub fn float_state_counts(depth: usize) -> Vec<usize> {
    let dirs: Vec<[f64; 3]> = rays().iter().map(|r| canonical_float(r.direction.map(f64::from))).collect();
    let mut set = FloatSet::new();
    for d in &dirs {
        set.insert(*d);
    }
    let mut counts = vec![set.items.len()];
    for _ in 0..depth {
        let current = std::mem::take(&mut set.items);
        set = FloatSet::new();
        for s in &current {
            for r in &dirs {
                let d = s[0] * r[0] + s[1] * r[1] + s[2] * r[2];
                if d.abs() > DEDUP_TOLERANCE {
                    set.insert(*r);
                }
                if 1.0 - d * d > DEDUP_TOLERANCE {
                    set.insert(canonical_float([0, 1, 2].map(|k| s[k] - d * r[k])));
                }
            }
        }
        counts.push(set.items.len());
    }
    counts
}
