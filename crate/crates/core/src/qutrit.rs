//! Pure-state linear algebra on a single qutrit.
//!
//! Everything here is dimension 3 and value-typed. States are kept normalized by
//! every public constructor and operation.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QutritError;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Branch probabilities below this are treated as exactly zero.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Result of a dichotomic ray measurement `A_v = I - 2 P_v`.
///
/// `Bright` is the eigenvalue -1 (state projected onto the ray), `Dark` is +1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Bright,
    Dark,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Bright => -1,
            Outcome::Dark => 1,
        }
    }

    pub fn from_value(a: i8) -> Option<Self> {
        match a {
            -1 => Some(Outcome::Bright),
            1 => Some(Outcome::Dark),
            _ => None,
        }
    }

    /// Slot used by the count tables: 0 for +1, 1 for -1.
    #[inline]
    pub fn slot(self) -> usize {
        match self {
            Outcome::Dark => 0,
            Outcome::Bright => 1,
        }
    }

    #[inline]
    pub fn from_slot(slot: usize) -> Self {
        if slot == 0 {
            Outcome::Dark
        } else {
            Outcome::Bright
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Bright => Outcome::Dark,
            Outcome::Dark => Outcome::Bright,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

/// Normalized complex amplitudes over `|0>, |1>, |2>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QutritState([C64; 3]);

impl QutritState {
    /// Normalizes `amps`; fails on the zero vector.
    pub fn new(amps: [C64; 3]) -> Result<Self, QutritError> {
        let n = norm_sqr(&amps).sqrt();
        if !n.is_finite() || n <= ZERO_PROBABILITY.sqrt() {
            return Err(QutritError::ZeroVector);
        }
        Ok(Self(amps.map(|a| a / n)))
    }

    pub fn from_real(v: [f64; 3]) -> Result<Self, QutritError> {
        Self::new(v.map(|x| C64::new(x, 0.0)))
    }

    pub fn basis(k: usize) -> Self {
        let mut a = [ZERO; 3];
        a[k] = ONE;
        Self(a)
    }

    pub fn amplitudes(&self) -> &[C64; 3] {
        &self.0
    }

    /// `<self|other>`
    pub fn inner(&self, other: &QutritState) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.0).sqrt()
    }

    /// Amplitudes rotated by a global phase so the largest-magnitude component
    /// is real and positive.
    pub fn phase_aligned(&self) -> [C64; 3] {
        let pivot = self
            .0
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(ONE);
        let phase = pivot.conj() / pivot.norm();
        self.0.map(|a| a * phase)
    }

    /// Largest imaginary part left after phase alignment.
    pub fn max_imag_after_alignment(&self) -> f64 {
        self.phase_aligned()
            .iter()
            .map(|a| a.im.abs())
            .fold(0.0, f64::max)
    }

    /// Equality as physical rays: `|<a|b>| = 1` within `tol`.
    pub fn same_ray(&self, other: &QutritState, tol: f64) -> bool {
        (1.0 - self.inner(other).norm()).abs() < tol
    }
}

fn norm_sqr(a: &[C64; 3]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

type Mat3 = [[C64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, v: &[C64; 3]) -> [C64; 3] {
    let mut out = [ZERO; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|k| a[i][k] * v[k]).sum();
    }
    out
}

fn dagger(a: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[j][i].conj();
        }
    }
    out
}

fn identity() -> Mat3 {
    let mut m = [[ZERO; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

fn max_entry_distance(a: &Mat3, b: &Mat3) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary3(Mat3);

impl Unitary3 {
    pub fn identity() -> Self {
        Self(identity())
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[row][col]
    }

    pub fn entries(&self) -> &Mat3 {
        &self.0
    }

    pub fn dagger(&self) -> Self {
        Self(dagger(&self.0))
    }

    pub fn apply(&self, state: &QutritState) -> QutritState {
        // Unitaries preserve the norm; renormalize only to stop drift over long chains.
        let v = mat_vec(&self.0, &state.0);
        QutritState::new(v).unwrap_or(*state)
    }

    /// Maximum entrywise deviation of `U^dagger U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        max_entry_distance(&mat_mul(&dagger(&self.0), &self.0), &identity())
    }
}

impl Mul for Unitary3 {
    type Output = Unitary3;

    fn mul(self, rhs: Unitary3) -> Unitary3 {
        Unitary3(mat_mul(&self.0, &rhs.0))
    }
}

/// Two-level rotation acting on the `|0>,|k>` block and as identity on the third level.
fn block_rotation(k: usize, theta: f64, phi: f64) -> Unitary3 {
    let (s, c) = (theta / 2.0).sin_cos();
    let mi = C64::new(0.0, -1.0);
    let mut m = identity();
    m[0][0] = C64::new(c, 0.0);
    m[k][k] = C64::new(c, 0.0);
    m[0][k] = mi * C64::from_polar(1.0, -phi) * s;
    m[k][0] = mi * C64::from_polar(1.0, phi) * s;
    Unitary3(m)
}

/// Rotation on the `|0> <-> |1>` transition.
pub fn rotation_r1(theta: f64, phi: f64) -> Unitary3 {
    block_rotation(1, theta, phi)
}

/// Rotation on the `|0> <-> |2>` transition.
pub fn rotation_r2(theta: f64, phi: f64) -> Unitary3 {
    block_rotation(2, theta, phi)
}

/// Orthogonal projector of rank 1 (onto a ray) or rank 2 (onto its complement).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projector3 {
    m: Mat3,
    rank: usize,
}

impl Projector3 {
    pub fn onto(direction: &QutritState) -> Self {
        let a = direction.amplitudes();
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i] * a[j].conj();
            }
        }
        Self { m, rank: 1 }
    }

    pub fn complement_of(direction: &QutritState) -> Self {
        let p = Self::onto(direction);
        let mut m = identity();
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell -= p.m[i][j];
            }
        }
        Self { m, rank: 2 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn trace(&self) -> C64 {
        (0..3).map(|i| self.m[i][i]).sum()
    }

    pub fn entries(&self) -> &Mat3 {
        &self.m
    }

    /// Unnormalized image `P|psi>`.
    pub fn apply_raw(&self, state: &QutritState) -> [C64; 3] {
        mat_vec(&self.m, &state.0)
    }

    pub fn idempotency_defect(&self) -> f64 {
        max_entry_distance(&mat_mul(&self.m, &self.m), &self.m)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_entry_distance(&dagger(&self.m), &self.m)
    }
}

/// `|<v|psi>|^2`
pub fn born_probability(state: &QutritState, direction: &QutritState) -> f64 {
    direction.inner(state).norm_sqr().clamp(0.0, 1.0)
}

/// Lüders update for the dichotomic measurement along `direction`.
pub fn collapse(
    state: &QutritState,
    direction: &QutritState,
    outcome: Outcome,
) -> Result<QutritState, QutritError> {
    let p = born_probability(state, direction);
    match outcome {
        Outcome::Bright => {
            if p < ZERO_PROBABILITY {
                return Err(QutritError::ImpossibleOutcome { outcome, probability: p });
            }
            Ok(*direction)
        }
        Outcome::Dark => {
            if 1.0 - p < ZERO_PROBABILITY {
                return Err(QutritError::ImpossibleOutcome {
                    outcome,
                    probability: 1.0 - p,
                });
            }
            let overlap = direction.inner(state);
            let a = state.amplitudes();
            let d = direction.amplitudes();
            QutritState::new([a[0] - overlap * d[0], a[1] - overlap * d[1], a[2] - overlap * d[2]])
        }
    }
}
