use crate::error::{Error, Result};

/// Correlation between a regressor and a 0/1 response in the two-class form
/// used for binary screening:
///
/// ```text
///   ((n-n1)/n) Σ_{y=1} (z - z̄)  -  (n1/n) Σ_{y=0} (z - z̄)
///   ----------------------------------------------------------
///        [ Σ (z - z̄)² · (n1 - 2 n1/n + n1²/n) ]^{1/2}
/// ```
///
/// The denominator constant differs from the Pearson one (`n1 - n1²/n`), so
/// the value equals `binary_cor_scale(n, n1) * pearson(z, y)`: same sign and
/// ranking, smaller magnitude.
pub fn binary_cor(z: &[f64], y: &[f64], n1: usize) -> Result<f64> {
    let n = z.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "binary_cor on lengths {} and {}",
            n,
            y.len()
        )));
    }
    if n1 == 0 || n1 >= n {
        return Err(Error::DegenerateBinaryResponse);
    }
    let nf = n as f64;
    let n1f = n1 as f64;
    let mean = z.iter().sum::<f64>() / nf;
    let (mut s1, mut s0, mut ss, mut raw) = (0.0, 0.0, 0.0, 0.0);
    for (&zi, &yi) in z.iter().zip(y) {
        let d = zi - mean;
        if yi == 1.0 {
            s1 += d;
        } else if yi == 0.0 {
            s0 += d;
        } else {
            return Err(Error::DegenerateBinaryResponse);
        }
        ss += d * d;
        raw += zi * zi;
    }
    if ss <= 1e-24 * raw.max(f64::MIN_POSITIVE) {
        return Err(Error::ZeroVariance);
    }
    let num = (nf - n1f) / nf * s1 - n1f / nf * s0;
    let factor = n1f - 2.0 * n1f / nf + n1f * n1f / nf;
    Ok(num / (ss * factor).sqrt())
}

/// Ratio `binary_cor / pearson` for a response with `n1` ones out of `n`.
pub fn binary_cor_scale(n: usize, n1: usize) -> f64 {
    let (nf, n1f) = (n as f64, n1 as f64);
    ((n1f - n1f * n1f / nf) / (n1f - 2.0 * n1f / nf + n1f * n1f / nf)).sqrt()
}

pub(crate) fn binary_spread(n: usize, n1: usize) -> f64 {
    let (nf, n1f) = (n as f64, n1 as f64);
    n1f - 2.0 * n1f / nf + n1f * n1f / nf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pearson;

    #[test]
    fn hand_evaluated_example() {
        // z̄ = 2.5; class-1 deviations sum to -2, class-0 to 2;
        // numerator = 0.5·(-2) - 0.5·2 = -2; Σ(z-z̄)² = 5; factor = 2 - 1 + 1 = 2.
        let v = binary_cor(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 0.0, 0.0], 2).unwrap();
        assert!((v + 2.0 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let y = [1.0, 1.0, 0.0, 0.0];
        assert_eq!(
            binary_cor(&[1.0, 2.0, 3.0, 4.0], &y, 0).unwrap_err(),
            Error::DegenerateBinaryResponse
        );
        assert_eq!(
            binary_cor(&[1.0, 2.0, 3.0, 4.0], &y, 4).unwrap_err(),
            Error::DegenerateBinaryResponse
        );
        assert_eq!(binary_cor(&[3.0; 4], &y, 2).unwrap_err(), Error::ZeroVariance);
    }

    #[test]
    fn scale_relates_to_pearson() {
        let z = [0.3, -1.2, 2.2, 0.7, -0.4, 1.9, -2.5];
        let y = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let b = binary_cor(&z, &y, 4).unwrap();
        let r = pearson(&z, &y).unwrap();
        assert!((b - binary_cor_scale(7, 4) * r).abs() < 1e-14);
        assert!(binary_cor_scale(7, 4) < 1.0);
    }
}
