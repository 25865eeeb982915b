//! The 13 Yu-Oh rays, their orthogonality graph and the index sets entering
//! both witnesses.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::RayError;
use crate::qutrit::{rotation_r1, rotation_r2, QutritState, Unitary3};

pub const RAY_COUNT: usize = 13;

/// Classical (non-contextual) upper bound of the Yu-Oh witness.
pub const YO_CLASSICAL_BOUND: f64 = 8.0;
/// Classical upper bound of the optimal three-term witness.
pub const OPT3_CLASSICAL_BOUND: f64 = 25.0;

/// Index of one of the 13 rays, in table order
/// `y1-, y2-, y3-, y1+, y2+, y3+, h1, h2, h3, h0, z1, z2, z3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct RayId(u8);

impl RayId {
    pub const Y1M: RayId = RayId(0);
    pub const Y2M: RayId = RayId(1);
    pub const Y3M: RayId = RayId(2);
    pub const Y1P: RayId = RayId(3);
    pub const Y2P: RayId = RayId(4);
    pub const Y3P: RayId = RayId(5);
    pub const H1: RayId = RayId(6);
    pub const H2: RayId = RayId(7);
    pub const H3: RayId = RayId(8);
    pub const H0: RayId = RayId(9);
    pub const Z1: RayId = RayId(10);
    pub const Z2: RayId = RayId(11);
    pub const Z3: RayId = RayId(12);

    pub fn new(id: usize) -> Result<Self, RayError> {
        if id < RAY_COUNT {
            Ok(RayId(id as u8))
        } else {
            Err(RayError::UnknownId(id))
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = RayId> + Clone {
        (0..RAY_COUNT as u8).map(RayId)
    }

    pub fn ray(self) -> &'static Ray {
        &rays()[self.index()]
    }

    pub fn label(self) -> &'static str {
        RAY_ROWS[self.index()].0
    }

    /// `y_k^-` for `k` in 1..=3.
    pub fn y_minus(k: usize) -> RayId {
        RayId((k - 1) as u8)
    }

    pub fn y_plus(k: usize) -> RayId {
        RayId((k + 2) as u8)
    }

    pub fn z(k: usize) -> RayId {
        RayId((k + 9) as u8)
    }

    pub fn is_h(self) -> bool {
        (6..=9).contains(&self.0)
    }
}

impl TryFrom<usize> for RayId {
    type Error = RayError;

    fn try_from(value: usize) -> Result<Self, Self::Error> {
        RayId::new(value)
    }
}

impl From<RayId> for usize {
    fn from(value: RayId) -> Self {
        value.index()
    }
}

impl fmt::Display for RayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RayId {
    type Err = RayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RAY_ROWS
            .iter()
            .position(|row| row.0 == s)
            .map(|i| RayId(i as u8))
            .ok_or_else(|| RayError::UnknownLabel(s.to_string()))
    }
}

/// Pulse parameters `(theta1, phi1, theta2, phi2)` of `U_v = R2(theta2, phi2) R1(theta1, phi1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationAngles {
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
}

impl RotationAngles {
    pub fn unitary(&self) -> Unitary3 {
        rotation_r2(self.theta2, self.phi2) * rotation_r1(self.theta1, self.phi1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ray {
    pub id: RayId,
    pub label: &'static str,
    /// Unnormalized integer direction `(a, b, c)`.
    pub direction: [i32; 3],
    pub angles: RotationAngles,
    pub qrng_code: u8,
    #[serde(skip)]
    pub state: QutritState,
    #[serde(skip)]
    pub unitary: Unitary3,
}

impl Ray {
    pub fn dot(&self, other: &Ray) -> i32 {
        self.direction
            .iter()
            .zip(other.direction.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn is_orthogonal(&self, other: &Ray) -> bool {
        self.dot(other) == 0
    }
}

/// `2 arctan(1/sqrt 2)`, the second pulse area for all h-rays.
pub fn theta_h() -> f64 {
    2.0 * (1.0 / 2f64.sqrt()).atan()
}

const P3_2: f64 = 3.0 * FRAC_PI_2;

/// `(label, direction, theta1, phi1, theta2 (NaN = theta_h), phi2, qrng code)`
type Row = (&'static str, [i32; 3], f64, f64, f64, f64, u8);

const RAY_ROWS: [Row; RAY_COUNT] = [
    ("y1-", [0, 1, -1], PI, P3_2, FRAC_PI_2, FRAC_PI_2, 0b0001),
    ("y2-", [-1, 0, 1], 0.0, 0.0, P3_2, P3_2, 0b0010),
    ("y3-", [1, -1, 0], FRAC_PI_2, FRAC_PI_2, 0.0, 0.0, 0b0011),
    ("y1+", [0, 1, 1], PI, P3_2, FRAC_PI_2, P3_2, 0b0100),
    ("y2+", [1, 0, 1], 0.0, 0.0, FRAC_PI_2, P3_2, 0b0101),
    ("y3+", [1, 1, 0], FRAC_PI_2, P3_2, 0.0, 0.0, 0b0110),
    ("h1", [-1, 1, 1], P3_2, P3_2, f64::NAN, P3_2, 0b0111),
    ("h2", [1, -1, 1], FRAC_PI_2, FRAC_PI_2, f64::NAN, P3_2, 0b1000),
    ("h3", [1, 1, -1], FRAC_PI_2, P3_2, f64::NAN, FRAC_PI_2, 0b1001),
    ("h0", [1, 1, 1], FRAC_PI_2, P3_2, f64::NAN, P3_2, 0b1010),
    ("z1", [1, 0, 0], 0.0, 0.0, 0.0, 0.0, 0b1011),
    ("z2", [0, 1, 0], PI, P3_2, 0.0, 0.0, 0b1100),
    ("z3", [0, 0, 1], 0.0, 0.0, PI, P3_2, 0b1101),
];

/// QRNG nibbles with no ray assigned; they are discarded.
pub const INVALID_QRNG_CODES: [u8; 3] = [0b0000, 0b1110, 0b1111];

/// All 13 rays in table order.
pub fn rays() -> &'static [Ray; RAY_COUNT] {
    static RAYS: OnceLock<[Ray; RAY_COUNT]> = OnceLock::new();
    RAYS.get_or_init(build_rays)
}

pub fn build_rays() -> [Ray; RAY_COUNT] {
    std::array::from_fn(|i| {
        let (label, direction, theta1, phi1, theta2, phi2, qrng_code) = RAY_ROWS[i];
        let theta2 = if theta2.is_nan() { theta_h() } else { theta2 };
        let angles = RotationAngles {
            theta1,
            phi1,
            theta2,
            phi2,
        };
        Ray {
            id: RayId(i as u8),
            label,
            direction,
            angles,
            qrng_code,
            state: QutritState::from_real(direction.map(f64::from))
                .expect("table directions are nonzero"),
            unitary: angles.unitary(),
        }
    })
}

/// Ray assigned to a 4-bit QRNG code, if any.
pub fn ray_for_code(code: u8) -> Option<RayId> {
    RAY_ROWS
        .iter()
        .position(|row| row.6 == code)
        .map(|i| RayId(i as u8))
}

/// `U_v`, which rotates the ray onto `|0>`.
pub fn compose_uv(id: usize) -> Result<Unitary3, RayError> {
    Ok(RayId::new(id)?.ray().unitary)
}

/// Compatibility graph of the ray set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthGraph {
    pub adjacency: Vec<Vec<bool>>,
    pub edges: Vec<(usize, usize)>,
}

impl OrthGraph {
    pub fn from_adjacency(adjacency: Vec<Vec<bool>>) -> Self {
        let n = adjacency.len();
        let mut edges = Vec::new();
        for (u, row) in adjacency.iter().enumerate() {
            edges.extend(((u + 1)..n).filter(|&v| row[v]).map(|v| (u, v)));
        }
        Self { adjacency, edges }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![vec![false; n]; n];
        for &(u, v) in edges {
            if u != v {
                adjacency[u][v] = true;
                adjacency[v][u] = true;
            }
        }
        Self::from_adjacency(adjacency)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v]
            .iter()
            .enumerate()
            .filter_map(|(u, &e)| e.then_some(u))
    }

    /// Graph with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.vertex_count();
        let mut adjacency = vec![vec![false; n]; n];
        for u in 0..n {
            for v in 0..n {
                adjacency[perm[u]][perm[v]] = self.adjacency[u][v];
            }
        }
        Self::from_adjacency(adjacency)
    }
}

/// Edge iff the integer directions are orthogonal.
pub fn build_graph(rays: &[Ray]) -> OrthGraph {
    let n = rays.len();
    let mut adjacency = vec![vec![false; n]; n];
    for u in 0..n {
        for v in 0..n {
            adjacency[u][v] = u != v && rays[u].is_orthogonal(&rays[v]);
        }
    }
    OrthGraph::from_adjacency(adjacency)
}

pub fn reference_graph() -> &'static OrthGraph {
    static GRAPH: OnceLock<OrthGraph> = OnceLock::new();
    GRAPH.get_or_init(|| build_graph(rays()))
}

/// Index sets of both witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessSets {
    pub vertices: Vec<RayId>,
    pub h_vertices: Vec<RayId>,
    pub edges: Vec<(RayId, RayId)>,
    pub c2: Vec<(RayId, RayId)>,
    pub c3: Vec<(RayId, RayId, RayId)>,
}

impl WitnessSets {
    pub fn is_c2(&self, u: RayId, v: RayId) -> bool {
        self.c2
            .iter()
            .any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
    }

    /// `E \ C2`
    pub fn edges_outside_c2(&self) -> impl Iterator<Item = (RayId, RayId)> + '_ {
        self.edges.iter().copied().filter(|&(u, v)| !self.is_c2(u, v))
    }
}

pub fn witness_sets(graph: &OrthGraph) -> WitnessSets {
    let vertices: Vec<RayId> = RayId::all().collect();
    let h_vertices = vec![RayId::H1, RayId::H2, RayId::H3, RayId::H0];
    let edges = graph
        .edges
        .iter()
        .map(|&(u, v)| (RayId(u as u8), RayId(v as u8)))
        .collect();
    let mut c2 = Vec::with_capacity(9);
    let mut c3 = Vec::with_capacity(3);
    for k in 1..=3 {
        let (z, yp, ym) = (RayId::z(k), RayId::y_plus(k), RayId::y_minus(k));
        c2.extend([(z, yp), (z, ym), (yp, ym)]);
        c3.push((z, yp, ym));
    }
    WitnessSets {
        vertices,
        h_vertices,
        edges,
        c2,
        c3,
    }
}

pub fn reference_sets() -> &'static WitnessSets {
    static SETS: OnceLock<WitnessSets> = OnceLock::new();
    SETS.get_or_init(|| witness_sets(reference_graph()))
}

/// Ideal quantum values for every qutrit state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdealPredictions {
    pub chi_yo: f64,
    pub chi_opt3: f64,
    pub single: f64,
    pub pair: f64,
    pub triple: f64,
}

pub fn ideal_predictions() -> IdealPredictions {
    IdealPredictions {
        chi_yo: 25.0 / 3.0,
        chi_opt3: 83.0 / 3.0,
        single: 1.0 / 3.0,
        pair: -1.0 / 3.0,
        triple: -1.0,
    }
}

#[derive(Serialize)]
struct RayTableDocument<'a> {
    schema: &'static str,
    rays: &'a [Ray],
    edges: Vec<(&'static str, &'static str)>,
    invalid_qrng_codes: [u8; 3],
}

/// Ray table and edge list as a JSON document.
pub fn ray_table_json() -> String {
    let doc = RayTableDocument {
        schema: "yuoh-rays/1",
        rays: rays(),
        edges: reference_graph()
            .edges
            .iter()
            .map(|&(u, v)| (RAY_ROWS[u].0, RAY_ROWS[v].0))
            .collect(),
        invalid_qrng_codes: INVALID_QRNG_CODES,
    };
    serde_json::to_string_pretty(&doc).expect("ray table serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::born_probability;

    #[test]
    fn table_rows() {
        let h3 = RayId::H3.ray();
        assert_eq!(h3.direction, [1, 1, -1]);
        assert!((h3.angles.theta2 - theta_h()).abs() < 1e-15);
        assert!((h3.angles.phi2 - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(h3.qrng_code, 0b1001);
        let y1m = RayId::Y1M.ray();
        assert_eq!(y1m.direction, [0, 1, -1]);
        assert_eq!(y1m.qrng_code, 0b0001);
    }

    #[test]
    fn directions_distinct_up_to_sign_and_codes_unique() {
        let rs = rays();
        for a in rs.iter() {
            for b in rs.iter().filter(|b| b.id != a.id) {
                let neg = b.direction.map(|x| -x);
                assert!(a.direction != b.direction && a.direction != neg);
                assert_ne!(a.qrng_code, b.qrng_code);
            }
            assert!(a.direction.iter().all(|x| (-1..=1).contains(x)));
            assert!((1..=13).contains(&a.qrng_code));
            assert!(!INVALID_QRNG_CODES.contains(&a.qrng_code));
        }
    }

    #[test]
    fn unitaries_rotate_each_ray_onto_zero() {
        for r in rays() {
            let image = r.unitary.apply(&r.state);
            assert!(
                (image.amplitudes()[0].norm() - 1.0).abs() < 1e-10,
                "{} -> {:?}",
                r.label,
                image
            );
            assert!(r.unitary.unitarity_defect() < 1e-12);
        }
        assert!(compose_uv(10).unwrap().unitarity_defect() < 1e-15);
        let z1 = compose_uv(RayId::Z1.index()).unwrap();
        assert!((z1.entry(0, 0).re - 1.0).abs() < 1e-15);
        assert_eq!(compose_uv(13), Err(RayError::UnknownId(13)));
    }

    #[test]
    fn graph_edges() {
        let g = reference_graph();
        assert_eq!(g.edges.len(), 24);
        assert!(g.has_edge(RayId::Z1.index(), RayId::Z2.index()));
        assert!(g.has_edge(RayId::H0.index(), RayId::Y1M.index()));
        assert!(!g.has_edge(RayId::H0.index(), RayId::Y1P.index()));
        for v in RayId::all() {
            let expected = if v.is_h() { 3 } else { 4 };
            assert_eq!(g.degree(v.index()), expected, "{v}");
            assert!(!g.has_edge(v.index(), v.index()));
        }
    }

    #[test]
    fn edges_match_float_orthogonality() {
        let rs = rays();
        let g = reference_graph();
        for a in rs.iter() {
            for b in rs.iter().filter(|b| b.id != a.id) {
                let p = born_probability(&a.state, &b.state);
                assert_eq!(p < 1e-12, g.has_edge(a.id.index(), b.id.index()));
            }
        }
    }

    #[test]
    fn sets() {
        let s = reference_sets();
        assert_eq!(s.vertices.len(), 13);
        assert_eq!(s.h_vertices.len(), 4);
        assert_eq!(s.c2.len(), 9);
        assert_eq!(s.c3.len(), 3);
        assert_eq!(s.edges_outside_c2().count(), 15);
        assert!(s.c3.contains(&(RayId::Z2, RayId::Y2P, RayId::Y2M)));
        let g = reference_graph();
        for &(u, v) in &s.c2 {
            assert!(g.has_edge(u.index(), v.index()));
        }
        for &(u, v, w) in &s.c3 {
            assert!(g.has_edge(u.index(), v.index()));
            assert!(g.has_edge(u.index(), w.index()));
            assert!(g.has_edge(v.index(), w.index()));
        }
    }

    #[test]
    fn label_round_trip() {
        for id in RayId::all() {
            assert_eq!(id.label().parse::<RayId>().unwrap(), id);
        }
        assert!("x9".parse::<RayId>().is_err());
    }

    #[test]
    fn ideal_witness_identity() {
        let p = ideal_predictions();
        let yo = 13.0 * p.single - 0.5 * 24.0 * p.pair;
        assert!((yo - p.chi_yo).abs() < 1e-12);
        let opt3 = 2.0 * 4.0 * p.single + 9.0 * p.single - 2.0 * 15.0 * p.pair - 9.0 * p.pair
            - 3.0 * 3.0 * p.triple;
        assert!((opt3 - p.chi_opt3).abs() < 1e-12);
        assert!(p.chi_yo > YO_CLASSICAL_BOUND && p.chi_opt3 > OPT3_CLASSICAL_BOUND);
    }

    #[test]
    fn json_document_lists_rays_and_edges() {
        let v: serde_json::Value = serde_json::from_str(&ray_table_json()).unwrap();
        assert_eq!(v["rays"].as_array().unwrap().len(), 13);
        assert_eq!(v["edges"].as_array().unwrap().len(), 24);
        assert_eq!(v["rays"][9]["label"], "h0");
    }
}
