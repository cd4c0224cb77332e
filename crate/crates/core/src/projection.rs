//! Projection onto simple bounds and mixed grid/box domains.

use crate::error::{Error, Result};
use crate::problem::VariableDomain;

/// Coordinate-wise clamp onto `[lower, upper]`, the Euclidean-nearest point of the box.
pub fn project_box(lower: &[f64], upper: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if lower.len() != x.len() || upper.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: lower.len().min(upper.len()),
        });
    }
    Ok(x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| clamp(v, l, u))
        .collect())
}

fn clamp(v: f64, lower: f64, upper: f64) -> f64 {
    if v < lower {
        lower
    } else if v > upper {
        upper
    } else {
        v
    }
}

/// Rounds `x` to the nearest multiple of `step` (ties away from zero) and
/// clamps the multiple into `[min_multiple, max_multiple]`.
pub fn project_grid(step: f64, min_multiple: i64, max_multiple: i64, x: f64) -> f64 {
    let m = (x / step).round();
    let m = clamp(m, min_multiple as f64, max_multiple as f64);
    m * step
}

pub fn project_domain(domains: &[VariableDomain], x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    project_domain_in_place(domains, &mut out)?;
    Ok(out)
}

pub fn project_domain_in_place(domains: &[VariableDomain], x: &mut [f64]) -> Result<()> {
    if domains.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: domains.len(),
            got: x.len(),
        });
    }
    for (v, d) in x.iter_mut().zip(domains) {
        *v = project_scalar(d, *v);
    }
    Ok(())
}

pub(crate) fn project_scalar(domain: &VariableDomain, v: f64) -> f64 {
    match *domain {
        VariableDomain::Continuous { lower, upper } => clamp(v, lower, upper),
        VariableDomain::Grid {
            step,
            min_multiple,
            max_multiple,
        } => project_grid(step, min_multiple, max_multiple, v),
    }
}
