//! Summary statistics over episode returns.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean; `None` below two samples.
pub fn std_error(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((var / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub std_error: f64,
    pub t: f64,
    /// One-sided p-value for `mean(a) > mean(b)`.
    pub p_value: f64,
}

/// Paired one-sided t-test of `mean(a) > mean(b)` over matched samples.
pub fn paired_greater(a: &[f64], b: &[f64]) -> Option<PairedTest> {
    assert_eq!(a.len(), b.len(), "paired samples");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let se = std_error(&d)?;
    let m = mean(&d);
    let n = d.len();
    let (t, p) = if se == 0.0 {
        let t = if m > 0.0 { f64::INFINITY } else if m < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        (t, if m > 0.0 { 0.0 } else { 1.0 })
    } else {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
        (t, 1.0 - dist.cdf(t))
    };
    Some(PairedTest { n, mean_diff: m, std_error: se, t, p_value: p })
}
