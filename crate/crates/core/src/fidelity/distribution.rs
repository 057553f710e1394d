use crate::error::{Error, Result};

/// Probabilities summing to 1 within `1e-12`, all nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

pub const NORM_TOL: f64 = 1e-12;

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0)) {
            return Err(Error::Numeric(format!("probability {i} is {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL * (probs.len() as f64).max(1.0) {
            return Err(Error::Numeric(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(mut w: Vec<f64>) -> Result<Self> {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numeric(format!("weights sum to {total}")));
        }
        w.iter_mut().for_each(|x| *x /= total);
        Self::new(w)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Outcomes with positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i)
    }

    pub fn zero_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.iter().enumerate().filter(|(_, p)| **p == 0.0).map(|(i, _)| i)
    }
}

/// `Σ_x √(p_x q_x)`.
pub fn classical_fidelity(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let f: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(f.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(classical_fidelity(&p, &p).unwrap(), 1.0);
        assert_eq!(classical_fidelity(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 0.0);
        let f = classical_fidelity(&p, &d(&[0.9, 0.1])).unwrap();
        let oracle = 0.45f64.sqrt() + 0.05f64.sqrt();
        assert!((f - oracle).abs() < 1e-15);
        assert!((f - 0.8944272).abs() < 1e-7);
    }

    #[test]
    fn rejects_invalid() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(classical_fidelity(&d(&[1.0]), &d(&[0.5, 0.5])).is_err());
    }

    proptest! {
        #[test]
        fn fidelity_in_unit_interval(w1 in prop::collection::vec(0.0f64..1.0, 5), w2 in prop::collection::vec(0.0f64..1.0, 5)) {
            prop_assume!(w1.iter().sum::<f64>() > 1e-3 && w2.iter().sum::<f64>() > 1e-3);
            let p = DiscreteDistribution::from_weights(w1).unwrap();
            let q = DiscreteDistribution::from_weights(w2).unwrap();
            let f = classical_fidelity(&p, &q).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((f - classical_fidelity(&q, &p).unwrap()).abs() < 1e-15);
        }
    }
}
