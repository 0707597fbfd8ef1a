//! Central finite differences, used as the independent oracle for the tape.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Estimates `∂f/∂θ` for every entry of every matrix in `params` with
/// `(f(θ + h·e) - f(θ - h·e)) / 2h`.
///
/// `f` must be deterministic: freeze any noise it consumes before calling.
pub fn finite_difference_grad<F>(mut f: F, params: &[Matrix], h: f64) -> Result<Vec<Matrix>>
where
    F: FnMut(&[Matrix]) -> Result<f64>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::contract(format!("step size must be positive, got {h}")));
    }
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for p in 0..params.len() {
        let mut grad = Matrix::zeros(params[p].rows(), params[p].cols());
        for k in 0..params[p].len() {
            let orig = params[p].as_slice()[k];
            work[p].as_mut_slice()[k] = orig + h;
            let plus = f(&work)?;
            work[p].as_mut_slice()[k] = orig - h;
            let minus = f(&work)?;
            work[p].as_mut_slice()[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective evaluated to {plus}/{minus} while perturbing tensor {p} entry {k}"
                )));
            }
            grad.as_mut_slice()[k] = (plus - minus) / (2.0 * h);
        }
        out.push(grad);
    }
    Ok(out)
}

/// Largest entrywise `|a - n| / max(|a|, |n|, floor)` over all tensors.
///
/// The floor keeps entries whose true gradient is essentially zero from
/// dominating through finite-difference round-off.
pub fn max_relative_error(analytic: &[Matrix], numeric: &[Matrix], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| {
            assert_eq!(a.shape(), n.shape());
            a.as_slice()
                .iter()
                .zip(n.as_slice())
                .map(move |(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        })
        .fold(0.0, f64::max)
}
