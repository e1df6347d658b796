//! Pool-adjacent-violators for a non-increasing fit.

use crate::retention::RetentionCurve;
use crate::{Error, Result};

/// Least-squares non-increasing fit of `values` with unit weights.
pub fn pav_non_increasing(values: &[f64]) -> Vec<f64> {
    // Each block holds (sum, count); merge while a later block's mean exceeds
    // the one before it.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s1 / n1 as f64 > s0 / n0 as f64 {
                blocks.pop();
                *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, n)| std::iter::repeat_n(s / n as f64, n))
        .collect()
}

/// Monotone retention curve through `(0, 1)` and the PAV fit of the samples.
pub fn monotone_fit(x: &[f64], p_hat: &[f64]) -> Result<RetentionCurve> {
    if x.is_empty() || x.len() != p_hat.len() {
        return Err(Error::param("monotone fit needs matching, non-empty samples"));
    }
    if !(x[0] > 0.0) || x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("sample points must be positive and strictly ascending"));
    }
    let fitted = pav_non_increasing(p_hat);
    let mut xs = Vec::with_capacity(x.len() + 1);
    let mut ps = Vec::with_capacity(x.len() + 1);
    xs.push(0.0);
    ps.push(1.0);
    xs.extend_from_slice(x);
    ps.extend(fitted.into_iter().map(|v| v.clamp(0.0, 1.0)));
    RetentionCurve::tabulated(xs, ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn monotone_input_is_unchanged() {
        let v = [0.9, 0.8, 0.8, 0.3];
        assert_eq!(pav_non_increasing(&v), v.to_vec());
    }

    #[test]
    fn pools_single_violation() {
        let c = monotone_fit(&[1.0, 2.0], &[0.6, 0.7]).unwrap();
        assert!((c.eval(1.0).unwrap() - 0.65).abs() < 1e-15);
        assert!((c.eval(2.0).unwrap() - 0.65).abs() < 1e-15);
        assert_eq!(c.eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn single_sample_gives_two_point_curve() {
        let c = monotone_fit(&[0.5], &[0.8]).unwrap();
        assert_eq!(c.domain_max(), 0.5);
        assert!((c.eval(0.25).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(monotone_fit(&[1.0, 0.5], &[0.5, 0.4]).is_err());
        assert!(monotone_fit(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_non_increasing_and_preserves_mass(v in prop::collection::vec(0.0f64..1.0, 1..40)) {
            let f = pav_non_increasing(&v);
            prop_assert_eq!(f.len(), v.len());
            prop_assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let (a, b): (f64, f64) = (v.iter().sum(), f.iter().sum());
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
