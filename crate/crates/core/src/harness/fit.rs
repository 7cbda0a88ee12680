use crate::error::{Error, Result};

/// Least-squares slope of `ln(value)` against `ln(k)` over the points with
/// `k` inside the closed `window`.
pub fn fit_loglog_slope(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(k, _)| k >= lo && k <= hi)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points in window [{lo}, {hi}], found {}",
            pts.len()
        )));
    }
    if let Some(&(k, v)) = pts.iter().find(|&&(k, v)| !(v > 0.0) || !(k > 0.0)) {
        return Err(Error::Fit(format!(
            "log-log fit needs positive k and values, got ({k}, {v})"
        )));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all points share one k".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
