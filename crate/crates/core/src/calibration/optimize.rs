//! Bounded scalar minimization: coarse grid scan, then golden-section
//! refinement inside the bracket around the best grid point.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Relative spread below which an objective counts as flat.
const FLAT_TOL: f64 = 1e-12;

pub(crate) fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| match k {
            0 => lo,
            k if k == points - 1 => hi,
            k => (a + (b - a) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

/// Golden-section search for a minimum of `f` on `[a, b]`. Returns the
/// midpoint of the final bracket once it is narrower than `tol`.
pub(crate) fn golden_section(mut a: f64, mut b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        // ties keep the lower half
        if fc <= fd {
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
    0.5 * (a + b)
}

/// Minimizes `f` over the span of `grid` (ascending). A flat objective and
/// exact ties resolve to the smaller argument.
pub(crate) fn minimize(grid: &[f64], tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let lo = values[best];
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= FLAT_TOL * (1.0 + lo.abs()) {
        return grid[0];
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let x = golden_section(a, b, tol, &f);
    let fx = f(x);
    if fx < lo || (fx == lo && x < grid[best]) {
        x
    } else {
        grid[best]
    }
}
