use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnbParams {
    /// Fraction of the largest feature variance added to every class variance.
    pub variance_smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

fn column_moments<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, d: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let mut n = 0usize;
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for r in rows {
        n += 1;
        for j in 0..d {
            let delta = r[j] - mean[j];
            mean[j] += delta / n as f64;
            m2[j] += delta * (r[j] - mean[j]);
        }
    }
    let var = m2.into_iter().map(|v| v / n.max(1) as f64).collect();
    (mean, var, n)
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[Label], params: &GnbParams) -> Result<Self> {
        if !(params.variance_smoothing >= 0.0) {
            return Err(Error::Config("variance_smoothing must be >= 0".into()));
        }
        let d = x.first().map_or(0, Vec::len);
        let (_, all_var, _) = column_moments(x.iter(), d);
        let max_var = all_var.iter().cloned().fold(0.0, f64::max);
        let eps = (params.variance_smoothing * max_var).max(1e-12);

        let mut out = GaussianNb {
            log_priors: [0.0; 2],
            means: [Vec::new(), Vec::new()],
            variances: [Vec::new(), Vec::new()],
        };
        for class in [Label::NonAnomalous, Label::Anomalous] {
            let c = class.as_index();
            let rows = x.iter().zip(y).filter(|(_, l)| **l == class).map(|(r, _)| r);
            let (mean, var, n) = column_moments(rows, d);
            if n == 0 {
                return Err(Error::Domain(format!("no {class} rows to fit naive Bayes")));
            }
            out.log_priors[c] = (n as f64 / x.len() as f64).ln();
            out.means[c] = mean;
            out.variances[c] = var.into_iter().map(|v| v + eps).collect();
        }
        Ok(out)
    }

    pub fn log_joint(&self, x: &[f64]) -> [f64; 2] {
        let mut out = self.log_priors;
        for (c, o) in out.iter_mut().enumerate() {
            for ((xi, m), v) in x.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                *o -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v);
            }
        }
        out
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        let lj = self.log_joint(x);
        if lj[1] >= lj[0] {
            Label::Anomalous
        } else {
            Label::NonAnomalous
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_means_unequal_variances() {
        // Class 0 ~ N(0, 1), class 1 ~ N(0, 9), equal priors. Hand oracle for
        // the boundary: N(x;0,1) = N(x;0,9) ⇔ x² = 2·ln 3 · 9 / 8.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for v in [-1.0, 1.0] {
            x.push(vec![v]);
            y.push(Label::NonAnomalous);
            x.push(vec![3.0 * v]);
            y.push(Label::Anomalous);
        }
        let m = GaussianNb::fit(&x, &y, &GnbParams { variance_smoothing: 0.0 }).unwrap();
        assert!((m.variances[0][0] - 1.0).abs() < 1e-9);
        assert!((m.variances[1][0] - 9.0).abs() < 1e-9);
        let boundary = (2.0 * 3f64.ln() * 9.0 / 8.0).sqrt();
        assert_eq!(m.predict(&[0.0]), Label::NonAnomalous);
        assert_eq!(m.predict(&[boundary - 1e-6]), Label::NonAnomalous);
        assert_eq!(m.predict(&[boundary + 1e-6]), Label::Anomalous);
        assert_eq!(m.predict(&[-(boundary + 1e-6)]), Label::Anomalous);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![Label::Anomalous; 2];
        assert!(GaussianNb::fit(&x, &y, &GnbParams { variance_smoothing: 1e-9 }).is_err());
    }
}
