use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    /// `(γ·⟨x,y⟩ + c₀)^d`
    Polynomial { degree: u32, coef0: f64, gamma: f64 },
    /// `exp(−γ‖x−y‖²)`
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        let gamma = match *self {
            Kernel::Polynomial { degree, gamma, .. } => {
                if degree == 0 {
                    return Err(Error::Config("polynomial degree must be >= 1".into()));
                }
                gamma
            }
            Kernel::Rbf { gamma } => gamma,
        };
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("kernel gamma must be > 0, got {gamma}")));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Schema(format!(
                "kernel between vectors of length {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Polynomial {
                degree,
                coef0,
                gamma,
            } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (gamma * dot + coef0).powi(degree as i32)
            }
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_of_identical_points_is_one() {
        for gamma in [0.01, 1.0, 40.0] {
            let x = [0.3, -1.2, 5.0];
            assert_eq!(Kernel::Rbf { gamma }.eval(&x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn polynomial_orthogonal_is_coef_power() {
        let k = Kernel::Polynomial {
            degree: 7,
            coef0: 1.0,
            gamma: 1.0,
        };
        assert_eq!(k.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        // (0.5·3 + 1)^2
        let k2 = Kernel::Polynomial {
            degree: 2,
            coef0: 1.0,
            gamma: 0.5,
        };
        assert!((k2.eval(&[1.0, 1.0], &[1.0, 2.0]).unwrap() - 6.25).abs() < 1e-15);
        assert!(k2.eval(&[1.0], &[1.0, 2.0]).is_err());
    }
}
