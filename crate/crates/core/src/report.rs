//! Analysis reports (JSON) and tabular exports (CSV).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    pulse_infidelity_summary, repeatability, signaling_ensemble, signaling_histogram, Direction, Probability,
    PulseInfidelitySummary, SignalingEntry, SignalingHistogram,
};
use crate::graph::{adjacency_from_data, canonicalize, estimate_compatibility, CompatibilityEstimate, DEFAULT_EPS_THRESHOLD};
use crate::memory::{enumerate_states, peres_mermin_bits, uniform_13_bits, StateAtlas};
use crate::qutrit::Outcome;
use crate::rays::{reference_sets, RayId};
use crate::sim::Campaign;
use crate::stats::{
    conditioned_witnesses, expval_pair, expval_single, expval_triple, tally_campaign, tally_campaign_sharded,
    ConditionedWitness, Estimate, Tally, WitnessResult,
};

pub const REPORT_SCHEMA: &str = "yuoh-report/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// SHA-256 of the noise configuration JSON and subsequence parameters.
    pub config_hash: String,
    pub record_count: usize,
    pub analyzed_record_count: usize,
    pub subsequences: usize,
    pub omitted_subsequences: usize,
    pub purged_subsequences: usize,
}

pub fn config_hash(c: &Campaign) -> String {
    let mut h = Sha256::new();
    h.update(c.noise.to_json().as_bytes());
    h.update(format!("|min_len={}|purge_run_length={}", c.min_len, c.purge_run_length).as_bytes());
    hex::encode(h.finalize())
}

impl Provenance {
    pub fn of(c: &Campaign) -> Self {
        Self {
            seed: c.seed,
            config_hash: config_hash(c),
            record_count: c.record_count(),
            analyzed_record_count: c.analyzed_record_count(),
            subsequences: c.subsequences.len(),
            omitted_subsequences: c.subsequences.iter().filter(|s| s.omitted).count(),
            purged_subsequences: c.purge_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRow {
    pub rays: Vec<RayId>,
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTables {
    pub singles: Vec<CorrelatorRow>,
    pub pairs: Vec<CorrelatorRow>,
    pub triples: Vec<CorrelatorRow>,
    /// Fraction of analyzed records with outcome -1.
    pub bright_fraction: Option<Probability>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    pub chi_yo: Option<WitnessResult>,
    pub chi_opt3: Option<WitnessResult>,
    pub conditioned: Vec<ConditionedWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityRow {
    pub ray: RayId,
    pub repeatability: Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub repeatability: Vec<RepeatabilityRow>,
    pub pulse_infidelity: Option<PulseInfidelitySummary>,
    pub backward: Option<SignalingHistogram>,
    pub forward: Option<SignalingHistogram>,
    #[serde(skip)]
    pub entries: Vec<SignalingEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub threshold: f64,
    pub edge_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub degrees: Vec<usize>,
    pub permutation: Option<Vec<usize>>,
    pub verified: bool,
    pub failure: Option<String>,
    #[serde(skip)]
    pub estimate: Option<CompatibilityEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub depth: usize,
    pub counts: Vec<usize>,
    pub entropies: Vec<f64>,
    pub uniform_13_bits: f64,
    pub peres_mermin_bits: f64,
    #[serde(skip)]
    pub atlas: Option<StateAtlas>,
}

impl MemoryReport {
    pub fn new(depth: usize) -> Self {
        let atlas = enumerate_states(depth);
        Self {
            depth,
            counts: atlas.counts(),
            entropies: atlas.entropies(),
            uniform_13_bits: uniform_13_bits(),
            peres_mermin_bits: peres_mermin_bits(),
            atlas: Some(atlas),
        }
    }

    /// Counts for depths `1..=depth` separated by spaces.
    pub fn counts_line(&self) -> String {
        self.counts[1..].iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub provenance: Provenance,
    pub witnesses: Witnesses,
    pub correlators: CorrelatorTables,
    pub diagnostics: DiagnosticsReport,
    pub reconstruction: ReconstructionReport,
    pub memory: MemoryReport,
    /// Parts of the analysis that lacked data.
    pub gaps: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Number of stitched shards per segment; 1 counts in a single pass.
    pub shards: usize,
    pub eps_threshold: f64,
    pub memory_depth: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            shards: 1,
            eps_threshold: DEFAULT_EPS_THRESHOLD,
            memory_depth: 5,
        }
    }
}

pub fn tally_for(c: &Campaign, shards: usize) -> Tally {
    if shards <= 1 {
        tally_campaign(c)
    } else {
        tally_campaign_sharded(c, shards)
    }
}

fn keep<T, E: std::fmt::Display>(r: Result<T, E>, what: &str, gaps: &mut Vec<String>) -> Option<T> {
    r.map_err(|e| gaps.push(format!("{what}: {e}"))).ok()
}

pub fn correlator_tables(t: &Tally, gaps: &mut Vec<String>) -> CorrelatorTables {
    let tables = &t.tables;
    let sets = reference_sets();
    let singles = RayId::all()
        .filter_map(|v| {
            keep(expval_single(tables, v), "single", gaps).map(|estimate| CorrelatorRow { rays: vec![v], estimate })
        })
        .collect();
    let pairs = sets
        .edges
        .iter()
        .filter_map(|&(u, v)| {
            keep(expval_pair(tables, u, v), "pair", gaps).map(|estimate| CorrelatorRow {
                rays: vec![u, v],
                estimate,
            })
        })
        .collect();
    let triples = sets
        .c3
        .iter()
        .filter_map(|&(u, v, w)| {
            keep(expval_triple(tables, u, v, w), "triple", gaps).map(|estimate| CorrelatorRow {
                rays: vec![u, v, w],
                estimate,
            })
        })
        .collect();
    let bright: u64 = RayId::all().map(|v| tables.n1(v, Outcome::Bright)).sum();
    CorrelatorTables {
        singles,
        pairs,
        triples,
        bright_fraction: Probability::from_counts(bright, tables.total()),
    }
}

pub fn witnesses(t: &Tally, gaps: &mut Vec<String>) -> Witnesses {
    Witnesses {
        chi_yo: keep(crate::stats::witness_yo(&t.tables), "chi_yo", gaps),
        chi_opt3: keep(crate::stats::witness_opt3(&t.tables), "chi_opt3", gaps),
        conditioned: keep(conditioned_witnesses(&t.conditioned), "conditioned witnesses", gaps).unwrap_or_default(),
    }
}

pub fn diagnostics(t: &Tally, gaps: &mut Vec<String>) -> DiagnosticsReport {
    let repeatability = RayId::all()
        .filter_map(|u| {
            keep(repeatability(&t.tables, u), "repeatability", gaps).map(|r| RepeatabilityRow {
                ray: u,
                repeatability: r,
            })
        })
        .collect();
    let backward = signaling_ensemble(&t.conditioned, Direction::Backward);
    let forward = signaling_ensemble(&t.conditioned, Direction::Forward);
    DiagnosticsReport {
        repeatability,
        pulse_infidelity: keep(pulse_infidelity_summary(&t.conditioned), "pulse infidelity", gaps),
        backward: keep(signaling_histogram(&backward), "backward signaling", gaps),
        forward: keep(signaling_histogram(&forward), "forward signaling", gaps),
        entries: backward.into_iter().chain(forward).collect(),
    }
}

pub fn reconstruction(t: &Tally, threshold: f64, gaps: &mut Vec<String>) -> ReconstructionReport {
    let mut r = ReconstructionReport {
        threshold,
        edge_count: 0,
        edges: Vec::new(),
        degrees: Vec::new(),
        permutation: None,
        verified: false,
        failure: None,
        estimate: None,
    };
    let Some(est) = keep(estimate_compatibility(&t.tables, threshold), "compatibility", gaps) else {
        r.failure = Some("insufficient data for eps".into());
        return r;
    };
    let g = adjacency_from_data(&est.eps, threshold);
    r.edge_count = g.edges.len();
    r.degrees = (0..g.vertex_count()).map(|v| g.degree(v)).collect();
    r.edges = g.edges.clone();
    match canonicalize(&g) {
        Ok(c) => {
            r.verified = c.verified;
            r.permutation = Some(c.permutation);
        }
        Err(e) => r.failure = Some(e.to_string()),
    }
    r.estimate = Some(est);
    r
}

/// Full analysis of the non-omitted part of a campaign.
pub fn analyze(c: &Campaign, opts: AnalysisOptions) -> AnalysisReport {
    let t = tally_for(c, opts.shards);
    let mut gaps = Vec::new();
    AnalysisReport {
        schema: REPORT_SCHEMA.into(),
        provenance: Provenance::of(c),
        witnesses: witnesses(&t, &mut gaps),
        correlators: correlator_tables(&t, &mut gaps),
        diagnostics: diagnostics(&t, &mut gaps),
        reconstruction: reconstruction(&t, opts.eps_threshold, &mut gaps),
        memory: MemoryReport::new(opts.memory_depth),
        gaps,
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const CSV_SCHEMA: &str = "# yuoh-csv/1";

/// Correlators in edge-list order: kind, rays, value, std_error, samples.
pub fn correlators_csv(t: &CorrelatorTables) -> String {
    let mut s = format!("{CSV_SCHEMA}\nkind,rays,value,std_error,samples\n");
    for (kind, rows) in [("single", &t.singles), ("pair", &t.pairs), ("triple", &t.triples)] {
        for r in rows {
            let rays: Vec<&str> = r.rays.iter().map(|v| v.label()).collect();
            let _ = writeln!(
                s,
                "{kind},{},{},{},{}",
                rays.join(" "),
                r.estimate.value,
                r.estimate.std_error,
                r.estimate.samples
            );
        }
    }
    s
}

pub fn signaling_csv(entries: &[SignalingEntry]) -> String {
    let mut s = format!("{CSV_SCHEMA}\ndirection,i,u,v,w,S,dS\n");
    for e in entries {
        let _ = writeln!(s, "{},{},{},{},{},{},{}", e.direction.label(), e.i, e.u, e.v, e.w, e.s, e.ds);
    }
    s
}

pub fn histograms_csv(backward: Option<&SignalingHistogram>, forward: Option<&SignalingHistogram>) -> String {
    let mut s = format!("{CSV_SCHEMA}\ndirection,center,count\n");
    for (label, h) in [("backward", backward), ("forward", forward)] {
        let Some(h) = h else { continue };
        let _ = writeln!(s, "{label},underflow,{}", h.underflow);
        for (c, n) in h.centers.iter().zip(&h.counts) {
            let _ = writeln!(s, "{label},{c},{n}");
        }
        let _ = writeln!(s, "{label},overflow,{}", h.overflow);
    }
    s
}

/// 13 x 13 matrix with ray labels as header row and column.
pub fn eps_csv(est: &CompatibilityEstimate) -> String {
    let labels: Vec<&str> = RayId::all().map(|v| v.label()).collect();
    let mut s = format!("{CSV_SCHEMA}\nray,{}\n", labels.join(","));
    for (u, row) in est.eps.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|x| if x.is_nan() { String::new() } else { x.to_string() }).collect();
        let _ = writeln!(s, "{},{}", labels[u], cells.join(","));
    }
    s
}

pub fn memory_states_csv(atlas: &StateAtlas) -> String {
    let mut s = format!("{CSV_SCHEMA}\ndepth,a,b,c,probability\n");
    for l in &atlas.levels {
        for (v, p) in l.states.iter().zip(&l.probabilities) {
            let _ = writeln!(s, "{},{},{},{},{}", l.depth, v[0], v[1], v[2], p);
        }
    }
    s
}
