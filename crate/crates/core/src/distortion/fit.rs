//! Power-law fits on log-log axes.

use crate::error::{Error, Result};

/// `D = c (d/l)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub coefficient: f64,
    pub exponent: f64,
    /// Root-mean-square of the residuals of `ln D`.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficient * x.powf(self.exponent)
    }
}

fn check(points: &[(f64, f64)], min: usize) -> Result<()> {
    if points.len() < min {
        return Err(Error::invalid(
            "points",
            format!("need at least {min} points, got {}", points.len()),
        ));
    }
    if let Some((x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::invalid(
            "points",
            format!("({x}, {y}) is not strictly positive"),
        ));
    }
    Ok(())
}

/// Ordinary least squares on `(ln x, ln D)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    check(points, 4)?;
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("points", "all abscissae are equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let lc = my - p * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - lc - p * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        coefficient: lc.exp(),
        exponent: p,
        residual: (rss / n).sqrt(),
    })
}

/// Least-squares coefficient on log axes with the exponent held at `p`.
pub fn fit_fixed_exponent(points: &[(f64, f64)], p: f64) -> Result<PowerLawFit> {
    check(points, 1)?;
    let n = points.len() as f64;
    let lc = points
        .iter()
        .map(|&(x, y)| y.ln() - p * x.ln())
        .sum::<f64>()
        / n;
    let rss: f64 = points
        .iter()
        .map(|&(x, y)| (y.ln() - lc - p * x.ln()).powi(2))
        .sum();
    Ok(PowerLawFit {
        coefficient: lc.exp(),
        exponent: p,
        residual: (rss / n).sqrt(),
    })
}
