//! Trend checks used to certify boundedness over finite sweeps.

use serde::{Deserialize, Serialize};

/// Outcome of the factor-2 no-growth test: the largest value over the upper
/// half of the swept range may exceed the largest value over the lower half
/// by at most `factor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub split: f64,
    pub lower_max: f64,
    pub upper_max: f64,
    pub factor: f64,
    pub passes: bool,
}

/// Splits `(x, y)` samples at the midpoint of the x-range. Samples with
/// `x <= mid` form the lower half.
pub fn no_growth(samples: &[(f64, f64)], factor: f64) -> GrowthCheck {
    let (xmin, xmax) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    let split = 0.5 * (xmin + xmax);
    no_growth_split(samples, split, factor)
}

/// Same as [`no_growth`] with an explicit split point.
pub fn no_growth_split(samples: &[(f64, f64)], split: f64, factor: f64) -> GrowthCheck {
    let mut lower_max = f64::NEG_INFINITY;
    let mut upper_max = f64::NEG_INFINITY;
    for &(x, y) in samples {
        if x <= split {
            lower_max = lower_max.max(y);
        } else {
            upper_max = upper_max.max(y);
        }
    }
    let passes = upper_max <= factor * lower_max || upper_max == f64::NEG_INFINITY;
    GrowthCheck { split, lower_max, upper_max, factor, passes }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).0
}
