use crate::{Error, Result};

const TOL: f64 = 1e-9;

/// `x ≻ y`: every descending partial sum of `x` dominates the matching sum of `y`.
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::dims(format!(
            "majorization of length {} against length {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite() || *v < -TOL) {
        return Err(Error::arg("majorization needs finite nonnegative entries"));
    }
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    if (sx - sy).abs() > TOL {
        return Err(Error::arg(format!("sums differ: {sx} vs {sy}")));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (xs, ys) = (sorted(x), sorted(y));
    let mut px = 0.0;
    let mut py = 0.0;
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px < py - TOL {
            return Ok(false);
        }
    }
    Ok(true)
}
