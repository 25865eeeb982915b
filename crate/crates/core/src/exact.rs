//! Correlators computed from Born probabilities instead of sampled counts.

use crate::error::StatsError;
use crate::qutrit::{born_probability, collapse, Outcome, QutritState};
use crate::rays::RayId;
use crate::stats::{Correlators, Estimate};

/// A mixture of pure states measured by ideal sequential projective measurements.
#[derive(Clone, Debug)]
pub struct ExactCorrelators {
    components: Vec<(f64, QutritState)>,
}

impl ExactCorrelators {
    pub fn pure(state: QutritState) -> Self {
        Self {
            components: vec![(1.0, state)],
        }
    }

    pub fn mixture(components: Vec<(f64, QutritState)>) -> Self {
        Self { components }
    }

    /// Equal mixture of the 13 ray states.
    pub fn uniform_over_rays() -> Self {
        let w = 1.0 / 13.0;
        Self::mixture(RayId::all().map(|r| (w, r.ray().state)).collect())
    }

    /// `<A_{s[0]} ... A_{s[n-1]}>` with the rays measured in the given order.
    pub fn ordered(&self, sequence: &[RayId]) -> f64 {
        self.components
            .iter()
            .map(|(w, psi)| w * product_expectation(psi, sequence))
            .sum()
    }

    fn pooled(&self, orders: &[&[RayId]]) -> Estimate {
        let value = orders.iter().map(|o| self.ordered(o)).sum::<f64>() / orders.len() as f64;
        Estimate {
            value,
            std_error: 0.0,
            samples: 0,
        }
    }
}

fn product_expectation(psi: &QutritState, sequence: &[RayId]) -> f64 {
    let Some((&first, rest)) = sequence.split_first() else {
        return 1.0;
    };
    let dir = first.ray().state;
    let p = born_probability(psi, &dir);
    [(Outcome::Bright, p), (Outcome::Dark, 1.0 - p)]
        .into_iter()
        .filter_map(|(o, q)| {
            let next = collapse(psi, &dir, o).ok()?;
            Some(q * f64::from(o.value()) * product_expectation(&next, rest))
        })
        .sum()
}

impl Correlators for ExactCorrelators {
    fn single(&self, v: RayId) -> Result<Estimate, StatsError> {
        Ok(self.pooled(&[&[v]]))
    }

    fn pair(&self, u: RayId, v: RayId) -> Result<Estimate, StatsError> {
        Ok(self.pooled(&[&[u, v], &[v, u]]))
    }

    fn triple(&self, u: RayId, v: RayId, w: RayId) -> Result<Estimate, StatsError> {
        Ok(self.pooled(&[&[u, v, w], &[u, w, v], &[v, u, w], &[v, w, u], &[w, u, v], &[w, v, u]]))
    }
}
