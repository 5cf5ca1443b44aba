//! Least squares and batch-means helpers.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Standard error of the mean of batch estimates.
pub fn batch_standard_error(batch_estimates: &[f64]) -> f64 {
    let k = batch_estimates.len() as f64;
    if k < 2.0 {
        return 0.0;
    }
    let mean = batch_estimates.iter().sum::<f64>() / k;
    let var = batch_estimates.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope + 0.25).abs() < 1e-15 && (f.intercept - 1.5).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batch_error_of_constant_is_zero() {
        assert_eq!(batch_standard_error(&[2.0; 8]), 0.0);
        let se = batch_standard_error(&[1.0, -1.0, 1.0, -1.0]);
        assert!((se - (4.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
