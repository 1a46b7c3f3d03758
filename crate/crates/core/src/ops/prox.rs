use crate::error::{Error, Result};
use crate::grid::Grid;

/// Proximal map of `gamma * |.|`: `sgn(x) * max(|x| - gamma, 0)`.
pub fn soft_threshold(x: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::arg(format!(
            "threshold must be nonnegative, got {gamma}"
        )));
    }
    Ok(shrink(x, gamma))
}

pub fn soft_threshold_grid(g: &Grid, gamma: f64) -> Result<Grid> {
    if !(gamma >= 0.0) {
        return Err(Error::arg(format!(
            "threshold must be nonnegative, got {gamma}"
        )));
    }
    Ok(g.map(|x| shrink(x, gamma)))
}

#[inline]
pub(crate) fn shrink(x: f64, gamma: f64) -> f64 {
    if x > gamma {
        x - gamma
    } else if x < -gamma {
        x + gamma
    } else {
        0.0
    }
}
