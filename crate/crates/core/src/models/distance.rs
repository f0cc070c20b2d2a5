use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum Distance {
    Manhattan,
    Euclidean,
    /// Fraction of coordinates that differ.
    Hamming,
    Minkowski { p: f64 },
}

impl Distance {
    pub fn validate(&self) -> Result<()> {
        if let Distance::Minkowski { p } = self {
            // p < 1 breaks the triangle inequality the neighbour index relies on.
            if !(*p >= 1.0 && p.is_finite()) {
                return Err(Error::Config(format!("minkowski p must be >= 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Schema(format!(
                "distance between vectors of length {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let pairs = x.iter().zip(y);
        match *self {
            Distance::Manhattan => pairs.map(|(a, b)| (a - b).abs()).sum(),
            Distance::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Distance::Hamming => {
                if x.is_empty() {
                    0.0
                } else {
                    pairs.filter(|(a, b)| a != b).count() as f64 / x.len() as f64
                }
            }
            Distance::Minkowski { p } => pairs
                .map(|(a, b)| (a - b).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitions() {
        let o = [0.0, 0.0];
        let p = [1.0, 2.0];
        assert_eq!(Distance::Manhattan.eval(&o, &p).unwrap(), 3.0);
        assert!((Distance::Euclidean.eval(&o, &p).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(Distance::Hamming.eval(&[1.0, 2.0, 3.0], &[1.0, 0.0, 3.0]).unwrap(), 1.0 / 3.0);
        let m1 = Distance::Minkowski { p: 1.0 }.eval(&o, &p).unwrap();
        let m2 = Distance::Minkowski { p: 2.0 }.eval(&o, &p).unwrap();
        assert!((m1 - 3.0).abs() < 1e-12);
        assert!((m2 - 5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(Distance::Manhattan.eval(&o, &[1.0]), Err(Error::Schema(_))));
        assert!(Distance::Minkowski { p: 0.5 }.validate().is_err());
    }
}
