//! Sharpness and compatibility diagnostics: repeatability, pulse infidelity and signaling.

use serde::{Deserialize, Serialize};

use crate::error::{DiagnosticsError, StatsError};
use crate::fit::{fit_gaussian, GaussianFit};
use crate::qutrit::Outcome;
use crate::rays::{reference_graph, RayId};
use crate::stats::{ConditionedTables, CountTables};

/// A binomial proportion with its shot-noise error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Probability {
    pub fn from_counts(hits: u64, n: u64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let p = hits as f64 / n as f64;
        Some(Self {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
        })
    }
}

/// Fraction of consecutive `(u, u)` measurements that agree.
pub fn repeatability(t: &CountTables, u: RayId) -> Result<Probability, StatsError> {
    let same = t.n2(u, u, Outcome::Dark, Outcome::Dark) + t.n2(u, u, Outcome::Bright, Outcome::Bright);
    Probability::from_counts(same, t.n2_total(u, u)).ok_or_else(|| StatsError::missing(format!("N({u},{u})")))
}

/// Probability of a bright `v` right after a bright `i`, for orthogonal `v` and `i`.
pub fn pulse_infidelity(c: &ConditionedTables, v: RayId, i: RayId) -> Result<Probability, StatsError> {
    if !reference_graph().has_edge(v.index(), i.index()) {
        return Err(StatsError::InvalidArguments(format!("{v} is not orthogonal to {i}")));
    }
    let t = c.bright(i);
    let bright = t.n1(v, Outcome::Bright);
    Probability::from_counts(bright, bright + t.n1(v, Outcome::Dark))
        .ok_or_else(|| StatsError::missing(format!("N_{i}({v})")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseInfidelitySummary {
    /// `(v, i, P_{v;i})` for every ordered orthogonal pair.
    pub pairs: Vec<(RayId, RayId, Probability)>,
    pub mean: f64,
    /// Spread of the per-pair values.
    pub std_dev: f64,
    pub max: (RayId, RayId, f64),
}

/// Pulse infidelity over all ordered compatible pairs.
pub fn pulse_infidelity_summary(c: &ConditionedTables) -> Result<PulseInfidelitySummary, StatsError> {
    let g = reference_graph();
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for i in RayId::all() {
        for v in RayId::all().filter(|v| g.has_edge(v.index(), i.index())) {
            match pulse_infidelity(c, v, i) {
                Ok(p) => pairs.push((v, i, p)),
                Err(StatsError::InsufficientData { missing: m }) => missing.extend(m),
                Err(e) => return Err(e),
            }
        }
    }
    if !missing.is_empty() {
        return Err(StatsError::InsufficientData { missing });
    }
    let n = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.2.value).sum::<f64>() / n;
    let var = pairs.iter().map(|p| (p.2.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let max = pairs
        .iter()
        .map(|&(v, i, p)| (v, i, p.value))
        .fold((RayId::Z1, RayId::Z1, f64::NEG_INFINITY), |a, b| if b.2 > a.2 { b } else { a });
    Ok(PulseInfidelitySummary {
        pairs,
        mean,
        std_dev: var.sqrt(),
        max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `u` measured before the context ray.
    Backward,
    /// `u` measured after the context ray.
    Forward,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Backward => "backward",
            Direction::Forward => "forward",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalingEntry {
    pub u: RayId,
    pub v: RayId,
    pub w: RayId,
    pub i: RayId,
    pub direction: Direction,
    pub s: f64,
    pub ds: f64,
}

impl SignalingEntry {
    /// `S / dS`, or `None` when both terms are deterministic.
    pub fn normalized(&self) -> Option<f64> {
        (self.ds > 0.0).then(|| self.s / self.ds)
    }
}

fn bright_u_next_to(t: &CountTables, u: RayId, ctx: RayId, direction: Direction) -> Option<Probability> {
    let (hits, n) = match direction {
        Direction::Backward => (t.n2_first(u, Outcome::Bright, ctx), t.n2_total(u, ctx)),
        Direction::Forward => (t.n2_second(ctx, u, Outcome::Bright), t.n2_total(ctx, u)),
    };
    Probability::from_counts(hits, n)
}

/// Difference in the bright probability of `u` between contexts `v` and `w`, after a bright `i`.
pub fn signaling(
    c: &ConditionedTables,
    u: RayId,
    v: RayId,
    w: RayId,
    i: RayId,
    direction: Direction,
) -> Result<SignalingEntry, StatsError> {
    let g = reference_graph();
    if v == w || !g.has_edge(u.index(), v.index()) || !g.has_edge(u.index(), w.index()) {
        return Err(StatsError::InvalidArguments(format!(
            "({v},{w}) is not a pair of distinct neighbours of {u}"
        )));
    }
    let t = c.bright(i);
    let cell = |ctx: RayId| match direction {
        Direction::Backward => format!("N_{i}({u},{ctx})"),
        Direction::Forward => format!("N_{i}({ctx},{u})"),
    };
    let pv = bright_u_next_to(t, u, v, direction);
    let pw = bright_u_next_to(t, u, w, direction);
    let (pv, pw) = match (pv, pw) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let mut missing = Vec::new();
            if a.is_none() {
                missing.push(cell(v));
            }
            if b.is_none() {
                missing.push(cell(w));
            }
            return Err(StatsError::InsufficientData { missing });
        }
    };
    Ok(SignalingEntry {
        u,
        v,
        w,
        i,
        direction,
        s: pv.value - pw.value,
        ds: pv.std_error.hypot(pw.std_error),
    })
}

/// Every admissible `(u, v < w, i)` entry in one direction; cells without data are skipped.
pub fn signaling_ensemble(c: &ConditionedTables, direction: Direction) -> Vec<SignalingEntry> {
    RayId::all()
        .flat_map(|i| signaling_for_input(c, i, direction))
        .collect()
}

/// Entries for a single input ray `i`.
pub fn signaling_for_input(c: &ConditionedTables, i: RayId, direction: Direction) -> Vec<SignalingEntry> {
    let g = reference_graph();
    let mut out = Vec::new();
    for u in RayId::all() {
        let nb: Vec<RayId> = g.neighbors(u.index()).map(|k| RayId::new(k).expect("graph vertex")).collect();
        for (a, &v) in nb.iter().enumerate() {
            for &w in &nb[a + 1..] {
                if let Ok(e) = signaling(c, u, v, w, i, direction) {
                    out.push(e);
                }
            }
        }
    }
    out
}

pub const HISTOGRAM_BIN_WIDTH: f64 = 0.5;
pub const HISTOGRAM_LIMIT: f64 = 6.0;
pub const HISTOGRAM_BINS: usize = 24;
pub const MIN_HISTOGRAM_ENTRIES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalingHistogram {
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Entries with `dS = 0` carry no information and are left out.
    pub excluded: usize,
    pub fit: GaussianFit,
}

pub fn histogram_centers() -> Vec<f64> {
    (0..HISTOGRAM_BINS)
        .map(|k| -HISTOGRAM_LIMIT + (k as f64 + 0.5) * HISTOGRAM_BIN_WIDTH)
        .collect()
}

/// Bins `values` on the fixed grid and fits a Gaussian to the in-range counts.
pub fn histogram_of(values: &[f64], excluded: usize) -> Result<SignalingHistogram, DiagnosticsError> {
    if values.len() < MIN_HISTOGRAM_ENTRIES {
        return Err(StatsError::InvalidArguments(format!(
            "histogram needs at least {MIN_HISTOGRAM_ENTRIES} entries, got {}",
            values.len()
        ))
        .into());
    }
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let (mut underflow, mut overflow) = (0, 0);
    let mut inside = Vec::with_capacity(values.len());
    for &x in values {
        if x < -HISTOGRAM_LIMIT {
            underflow += 1;
        } else if x >= HISTOGRAM_LIMIT {
            overflow += 1;
        } else {
            let k = ((x + HISTOGRAM_LIMIT) / HISTOGRAM_BIN_WIDTH) as usize;
            counts[k.min(HISTOGRAM_BINS - 1)] += 1;
            inside.push(x);
        }
    }
    let centers = histogram_centers();
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n.max(1.0);
    let sd = (inside.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let amp = n * HISTOGRAM_BIN_WIDTH / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let ys: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let fit = fit_gaussian(&centers, &ys, (amp, mean, sd))?;
    Ok(SignalingHistogram {
        centers,
        counts,
        underflow,
        overflow,
        excluded,
        fit,
    })
}

/// Histogram of `S/dS` over an ensemble, with its Gaussian fit.
pub fn signaling_histogram(entries: &[SignalingEntry]) -> Result<SignalingHistogram, DiagnosticsError> {
    let values: Vec<f64> = entries.iter().filter_map(SignalingEntry::normalized).collect();
    histogram_of(&values, entries.len() - values.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::MeasurementRecord;
    use crate::stats::StreamCounter;

    fn tally(items: &[(RayId, i8)]) -> crate::stats::Tally {
        let mut c = StreamCounter::new();
        for (k, &(ray, a)) in items.iter().enumerate() {
            c.push(&MeasurementRecord {
                ray,
                outcome: Outcome::from_value(a).unwrap(),
                photon_count: 0,
                index: k as u64,
            });
        }
        c.finish()
    }

    #[test]
    fn repeatability_counts_agreeing_pairs() {
        let t = tally(&[(RayId::H1, -1), (RayId::H1, -1), (RayId::H1, 1)]).tables;
        let r = repeatability(&t, RayId::H1).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.samples, 2);
        assert!(repeatability(&t, RayId::H2).is_err());
    }

    #[test]
    fn pulse_infidelity_needs_orthogonal_pair() {
        let t = tally(&[(RayId::Z1, -1), (RayId::Z2, 1), (RayId::Z1, -1), (RayId::Z2, -1)]);
        let p = pulse_infidelity(&t.conditioned, RayId::Z2, RayId::Z1).unwrap();
        assert_eq!(p.value, 0.5);
        assert!(matches!(
            pulse_infidelity(&t.conditioned, RayId::H0, RayId::Z1),
            Err(StatsError::InvalidArguments(_))
        ));
    }

    #[test]
    fn signaling_is_antisymmetric() {
        // z1 neighbours: y1-, y1+, z2, z3
        let t = tally(&[
            (RayId::H0, -1),
            (RayId::Z1, -1),
            (RayId::Z2, 1),
            (RayId::H0, -1),
            (RayId::Z1, 1),
            (RayId::Z3, 1),
            (RayId::H0, -1),
            (RayId::Z1, -1),
            (RayId::Z3, 1),
        ]);
        let a = signaling(&t.conditioned, RayId::Z1, RayId::Z2, RayId::Z3, RayId::H0, Direction::Backward).unwrap();
        let b = signaling(&t.conditioned, RayId::Z1, RayId::Z3, RayId::Z2, RayId::H0, Direction::Backward).unwrap();
        assert_eq!(a.s, 1.0 - 0.5);
        assert_eq!(a.s, -b.s);
        assert_eq!(a.ds, b.ds);
        assert!(signaling(&t.conditioned, RayId::Z1, RayId::H0, RayId::Z3, RayId::H0, Direction::Backward).is_err());
    }

    #[test]
    fn histogram_bins() {
        let c = histogram_centers();
        assert_eq!(c.len(), 24);
        assert_eq!(c[0], -5.75);
        assert_eq!(c[23], 5.75);
        let mut values: Vec<f64> = (0..200).map(|k| ((k % 9) as f64 - 4.0) * 0.5).collect();
        values.push(7.0);
        values.push(-9.0);
        let h = histogram_of(&values, 0).unwrap();
        assert_eq!(h.overflow, 1);
        assert_eq!(h.underflow, 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 200);
        assert!(histogram_of(&values[..10], 0).is_err());
    }
}
