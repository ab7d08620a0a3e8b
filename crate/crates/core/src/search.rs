//! Bounded one-dimensional optimization and sampling grids.
//!
//! Displacement searches use a coarse uniform scan to bracket the best
//! point followed by golden-section refinement inside the neighbouring grid
//! cells. The scan makes the search robust to the mild multimodality of the
//! receiver objectives; the refinement pins the optimum to a fixed width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Search over displacements `beta` in `[0, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSearchConfig {
    /// Upper end is `alpha + upper_margin` unless `upper` is set.
    pub upper_margin: f64,
    /// Explicit upper end of the interval.
    pub upper: Option<f64>,
    /// Number of uniformly spaced points of the bracketing scan.
    pub grid_points: usize,
    /// Final bracket width of the golden-section refinement.
    pub tolerance: f64,
    /// Extra scan points on `[0, 2 alpha]` for weak pulses, whose
    /// objectives have structure on the scale of `alpha`.
    pub fine_points: usize,
}

impl Default for ScalarSearchConfig {
    fn default() -> Self {
        Self {
            upper_margin: 5.0,
            upper: None,
            grid_points: 256,
            tolerance: 1e-6,
            fine_points: 64,
        }
    }
}

impl ScalarSearchConfig {
    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    /// Displacement interval for a pulse of amplitude `alpha`.
    pub fn interval(&self, alpha: f64) -> (f64, f64) {
        let upper = self.upper.unwrap_or(alpha + self.upper_margin);
        (0.0, upper.max(0.0))
    }

    /// Scan points of the bracketing grid on `[lo, hi]`.
    pub fn scan_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        linspace(lo, hi, self.grid_points.max(2))
    }

    /// Scan of the displacement interval for amplitude `alpha`: the uniform
    /// grid merged with `fine_points` uniform points on `[0, 2 alpha]` and
    /// with `alpha` itself. Exact nulling can be a spike narrower than any
    /// affordable grid spacing.
    pub fn displacement_scan(&self, alpha: f64) -> Vec<f64> {
        let (lo, hi) = self.interval(alpha);
        let mut points = self.scan_points(lo, hi);
        let fine_hi = (2.0 * alpha).min(hi);
        if self.fine_points >= 2 && fine_hi > lo {
            points.extend(linspace(lo, fine_hi, self.fine_points));
        }
        if alpha > lo && alpha < hi {
            points.push(alpha);
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// Maximizes `f` over the displacement interval of `alpha`.
    pub fn maximize_displacement(&self, alpha: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let points = self.displacement_scan(alpha);
        let values: Vec<f64> = points.iter().map(|&x| f(x)).collect();
        refine_peaks(&points, &values, self.tolerance, f)
    }

    pub fn minimize_displacement(&self, alpha: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let (x, neg) = self.maximize_displacement(alpha, |x| -f(x));
        (x, -neg)
    }

    /// Maximizes `f` on `[lo, hi]`; returns `(argmax, max)`.
    ///
    /// Ties on the scan resolve to the smaller argument.
    pub fn maximize(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let points = self.scan_points(lo, hi);
        let values: Vec<f64> = points.iter().map(|&x| f(x)).collect();
        refine_peaks(&points, &values, self.tolerance, f)
    }

    /// Minimizes `f` on `[lo, hi]`; returns `(argmin, min)`.
    pub fn minimize(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
        let (x, neg) = self.maximize(lo, hi, |x| -f(x));
        (x, -neg)
    }
}

/// Index of the first maximal entry. NaN entries never win.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Scan peaks refined by [`refine_peaks`].
const MAX_PEAKS: usize = 4;

/// Refines the highest few local maxima of a scan and keeps the best.
///
/// Refining only the best scan point can settle on the wrong peak when two
/// peaks are close in height. Ties keep the earlier scan point.
pub(crate) fn refine_peaks(
    points: &[f64],
    values: &[f64],
    tolerance: f64,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let best = argmax(values);
    let last = values.len() - 1;
    let mut peaks: Vec<usize> = (0..values.len())
        .filter(|&i| {
            (i == 0 || values[i] > values[i - 1]) && (i == last || values[i] >= values[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(MAX_PEAKS);
    if !peaks.contains(&best) {
        peaks.insert(0, best);
    }
    let mut result = (points[best], values[best]);
    for i in peaks {
        let candidate = refine_max(points, values, i, tolerance, &mut f);
        if candidate.1 > result.1 {
            result = candidate;
        }
    }
    result
}

/// Golden-section refinement inside the two grid cells around `best`.
///
/// Falls back to the grid point when refinement does not improve on it.
pub(crate) fn refine_max(
    points: &[f64],
    values: &[f64],
    best: usize,
    tolerance: f64,
    f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let a = points[best.saturating_sub(1)];
    let b = points[(best + 1).min(points.len() - 1)];
    let (x, fx) = golden_section_max(a, b, tolerance, f);
    if fx > values[best] {
        (x, fx)
    } else {
        (points[best], values[best])
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(
    mut a: f64,
    mut b: f64,
    tolerance: f64,
    mut f: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    if b - a <= tolerance {
        let x = 0.5 * (a + b);
        return (x, f(x));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `count` uniformly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::domain(format!(
            "log grid needs 0 < min <= max, got [{lo}, {hi}]"
        )));
    }
    let mut points: Vec<f64> = linspace(lo.ln(), hi.ln(), count)
        .into_iter()
        .map(f64::exp)
        .collect();
    if let Some(first) = points.first_mut() {
        *first = lo;
    }
    if count > 1 {
        points[count - 1] = hi;
    }
    Ok(points)
}

/// Log-spaced sampling of a positive ratio-like quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min: 1e-16,
            max: 1e16,
            points: 1000,
        }
    }
}

impl GridConfig {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::domain(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !(self.min > 0.0 && self.max > self.min && self.max.is_finite()) {
            return Err(Error::domain(format!(
                "grid bounds must satisfy 0 < min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        logspace(self.min, self.max, self.points)
    }

    /// Clamps `x` into `[min, max]`; NaN maps to `max`.
    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            self.max
        } else {
            x.clamp(self.min, self.max)
        }
    }
}
