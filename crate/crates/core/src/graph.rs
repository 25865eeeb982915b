//! Blind reconstruction of the compatibility graph and canonical relabeling.

use serde::{Deserialize, Serialize};

use crate::diagnostics::Probability;
use crate::error::{CanonicalizeError, StatsError};
use crate::qutrit::Outcome;
use crate::rays::{reference_graph, OrthGraph, RayId, RAY_COUNT};
use crate::stats::{ConditionedTables, CountTables};

pub const DEFAULT_EPS_THRESHOLD: f64 = 0.05;

fn both_bright_rate(t: &CountTables, u: RayId, w: RayId) -> Option<Probability> {
    let b = Outcome::Bright;
    let hits = t.n2(u, w, b, b) + t.n2(w, u, b, b);
    let n = t.n2_first(u, b, w) + t.n2_first(w, b, u);
    Probability::from_counts(hits, n)
}

/// Rate of a bright result on one ray right after a bright result on the other,
/// pooled over both orders.
pub fn epsilon(t: &CountTables, u: RayId, w: RayId) -> Result<Probability, StatsError> {
    both_bright_rate(t, u, w).ok_or_else(|| StatsError::missing(format!("N({u}=-1,{w}) + N({w}=-1,{u})")))
}

/// As [`epsilon`], restricted to windows preceded by a bright `i`.
pub fn epsilon_given(c: &ConditionedTables, u: RayId, w: RayId, i: RayId) -> Result<Probability, StatsError> {
    both_bright_rate(c.bright(i), u, w)
        .ok_or_else(|| StatsError::missing(format!("N_{i}({u}=-1,{w}) + N_{i}({w}=-1,{u})")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityEstimate {
    /// Symmetric; the diagonal is NaN.
    pub eps: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub threshold: f64,
}

pub fn estimate_compatibility(t: &CountTables, threshold: f64) -> Result<CompatibilityEstimate, StatsError> {
    let mut eps = vec![vec![f64::NAN; RAY_COUNT]; RAY_COUNT];
    let mut err = eps.clone();
    let mut missing = Vec::new();
    for u in RayId::all() {
        for w in RayId::all().filter(|w| w.index() > u.index()) {
            match epsilon(t, u, w) {
                Ok(p) => {
                    for (a, b) in [(u, w), (w, u)] {
                        eps[a.index()][b.index()] = p.value;
                        err[a.index()][b.index()] = p.std_error;
                    }
                }
                Err(StatsError::InsufficientData { missing: m }) => missing.extend(m),
                Err(e) => return Err(e),
            }
        }
    }
    if !missing.is_empty() {
        return Err(StatsError::InsufficientData { missing });
    }
    Ok(CompatibilityEstimate {
        eps,
        std_error: err,
        threshold,
    })
}

/// Edge wherever `eps < threshold`.
pub fn adjacency_from_data(eps: &[Vec<f64>], threshold: f64) -> OrthGraph {
    let n = eps.len();
    let mut edges = Vec::new();
    for (u, row) in eps.iter().enumerate() {
        edges.extend((u + 1..n).filter(|&w| row[w] < threshold).map(|w| (u, w)));
    }
    OrthGraph::from_edges(n, &edges)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canonicalization {
    /// `permutation[observed vertex]` is the reference ray id assigned to it.
    pub permutation: Vec<usize>,
    pub verified: bool,
}

impl Canonicalization {
    pub fn relabeled(&self, graph: &OrthGraph) -> OrthGraph {
        graph.relabeled(&self.permutation)
    }
}

/// Labels a 13-vertex graph with Yu-Oh ray ids using its degree and adjacency structure.
pub fn canonicalize(graph: &OrthGraph) -> Result<Canonicalization, CanonicalizeError> {
    let n = graph.vertex_count();
    if n != RAY_COUNT {
        return Err(CanonicalizeError::VertexCount(n));
    }

    // step 1
    let degrees: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let h: Vec<usize> = (0..n).filter(|&v| degrees[v] == 3).collect();
    if h.len() != 4 || degrees.iter().any(|&d| d != 3 && d != 4) {
        return Err(CanonicalizeError::DegreeSequence { degrees });
    }

    // step 2
    let mut in_y = [false; RAY_COUNT];
    for &v in &h {
        for u in graph.neighbors(v) {
            in_y[u] = true;
        }
    }
    let y: Vec<usize> = (0..n).filter(|&v| in_y[v]).collect();
    if y.len() != 6 || h.iter().any(|&v| in_y[v]) {
        return Err(CanonicalizeError::YBlock(y.len()));
    }

    // step 3
    let z: Vec<usize> = (0..n).filter(|&v| !in_y[v] && degrees[v] == 4).collect();
    if z.len() != 3 {
        return Err(CanonicalizeError::ZMatching(format!("{} candidate z vertices", z.len())));
    }
    let mut pairs = [[0usize; 2]; 3];
    let mut claimed = [false; RAY_COUNT];
    for (k, &zk) in z.iter().enumerate() {
        let ys: Vec<usize> = graph.neighbors(zk).filter(|&u| in_y[u]).collect();
        if ys.len() != 2 || ys.iter().any(|&u| claimed[u]) {
            return Err(CanonicalizeError::ZMatching(format!(
                "vertex {zk} has y-neighbours {ys:?}, expected two unclaimed"
            )));
        }
        for &u in &ys {
            claimed[u] = true;
        }
        pairs[k] = [ys[0], ys[1]];
    }

    // step 4
    let mut fallback = None;
    let mut reasons = Vec::new();
    for &h0 in &h {
        match label_from_h0(graph, h0, &h, &z, &pairs) {
            Ok(perm) => {
                let verified = graph.relabeled(&perm) == *reference_graph();
                if verified {
                    return Ok(Canonicalization {
                        permutation: perm,
                        verified,
                    });
                }
                fallback.get_or_insert(perm);
            }
            Err(msg) => reasons.push(format!("h0={h0}: {msg}")),
        }
    }
    match fallback {
        Some(permutation) => Ok(Canonicalization {
            permutation,
            verified: false,
        }),
        None => Err(CanonicalizeError::HMatching(reasons.join("; "))),
    }
}

fn label_from_h0(
    graph: &OrthGraph,
    h0: usize,
    h: &[usize],
    z: &[usize],
    pairs: &[[usize; 2]; 3],
) -> Result<Vec<usize>, String> {
    let mut perm = vec![usize::MAX; RAY_COUNT];
    perm[h0] = RayId::H0.index();
    for k in 0..3 {
        perm[z[k]] = RayId::z(k + 1).index();
        let [a, b] = pairs[k];
        let (minus, plus) = match (graph.has_edge(h0, a), graph.has_edge(h0, b)) {
            (true, false) => (a, b),
            (false, true) => (b, a),
            _ => return Err(format!("no unique neighbour in y-pair {}", k + 1)),
        };
        perm[minus] = RayId::y_minus(k + 1).index();
        perm[plus] = RayId::y_plus(k + 1).index();
        let hk: Vec<usize> = h
            .iter()
            .copied()
            .filter(|&v| v != h0 && graph.has_edge(v, minus))
            .collect();
        if hk.len() != 1 {
            return Err(format!("{} h-vertices besides h0 touch y{}-", hk.len(), k + 1));
        }
        if perm[hk[0]] != usize::MAX {
            return Err(format!("h-vertex {} matched twice", hk[0]));
        }
        perm[hk[0]] = [RayId::H1, RayId::H2, RayId::H3][k].index();
    }
    Ok(perm)
}
