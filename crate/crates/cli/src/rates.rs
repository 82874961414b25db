//! Convergence-rate fitting on (N, distance) tables: a pure power law
//! d ~ N^{-β} and the predicted d ~ c·ln N/√N, both reported.

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateModel {
    PurePower,
    LogOverSqrt,
}

#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub model: RateModel,
    /// Exponent β for the power law; constant c for the logarithmic model.
    pub value: f64,
    /// Root-mean-square residual in the fitted space.
    pub residual: f64,
    pub r2: f64,
}

/// Fits both models to the positive-distance points. Non-positive distances
/// are dropped (reported in the warning list); fewer than four surviving
/// points is a fit error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<(RateFit, RateFit, Vec<String>), CliError> {
    let mut warnings = Vec::new();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(n, d)| {
            if d > 0.0 && n > 1.0 {
                true
            } else {
                warnings.push(format!("dropped non-positive point (N={n}, d={d})"));
                false
            }
        })
        .copied()
        .collect();
    if usable.len() < 4 {
        return Err(CliError::Numerical(format!(
            "rate fit needs at least 4 positive points, got {}",
            usable.len()
        )));
    }

    // pure power: ln d = a − β ln N
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = intercept + slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let power = RateFit {
        model: RateModel::PurePower,
        value: -slope,
        residual: (ss_res / n).sqrt(),
        r2: if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 },
    };

    // logarithmic model: d = c · ln N / √N, least squares in c
    let basis: Vec<f64> = usable.iter().map(|p| p.0.ln() / p.0.sqrt()).collect();
    let num: f64 = basis.iter().zip(&usable).map(|(b, p)| b * p.1).sum();
    let den: f64 = basis.iter().map(|b| b * b).sum();
    let c = num / den;
    let mean_d: f64 = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (b, p) in basis.iter().zip(&usable) {
        ss_res += (p.1 - c * b) * (p.1 - c * b);
        ss_tot += (p.1 - mean_d) * (p.1 - mean_d);
    }
    let log_fit = RateFit {
        model: RateModel::LogOverSqrt,
        value: c,
        residual: (ss_res / n).sqrt(),
        r2: if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 },
    };
    Ok((power, log_fit, warnings))
}
