//! Central-difference gradient checking against the tape's analytic gradients.

use super::params::{BoundParams, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Smallest and largest accepted finite-difference step.
pub const EPS_RANGE: (f64, f64) = (1e-6, 1e-3);

/// Denominator floor for the relative error.
pub const REL_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Location of the worst entry: parameter path and flat index.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

/// `|a - n| / max(|a|, |n|, REL_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares the gradient of `loss` with respect to every entry of `params`
/// against the central difference `(f(p+eps) - f(p-eps)) / (2 eps)`.
///
/// `loss` must be deterministic and return a 1x1 value. It receives a fresh
/// tape each call.
pub fn finite_difference_check<F>(params: &ParamStore, eps: f64, loss: F) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &BoundParams<'t>) -> Result<Var<'t>>,
{
    finite_difference_check_with(params, eps, |_| {}, loss)
}

/// Same as [`finite_difference_check`], with a hook to configure the tape
/// used for the analytic pass.
pub fn finite_difference_check_with<F, S>(
    params: &ParamStore,
    eps: f64,
    setup: S,
    loss: F,
) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &BoundParams<'t>) -> Result<Var<'t>>,
    S: Fn(&Tape),
{
    if !(EPS_RANGE.0..=EPS_RANGE.1).contains(&eps) {
        return Err(Error::Argument(format!(
            "finite-difference step {eps} outside [{}, {}]",
            EPS_RANGE.0, EPS_RANGE.1
        )));
    }

    let analytic = {
        let tape = Tape::new();
        setup(&tape);
        let bound = params.bind(&tape);
        let root = loss(&tape, &bound)?;
        let value = root.item();
        if !value.is_finite() {
            return Err(Error::Numeric {
                path: "<unperturbed>".into(),
                message: format!("loss is {value}"),
            });
        }
        tape.backward(root)?;
        bound.grads()
    };

    let eval = |store: &ParamStore| -> Result<f64> {
        let tape = Tape::new();
        let bound = store.bind(&tape);
        Ok(loss(&tape, &bound)?.item())
    };

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    let paths: Vec<String> = params.paths().map(str::to_owned).collect();
    for path in paths {
        let n = params.get(&path).map_or(0, |t| t.len());
        for i in 0..n {
            let original = params.get(&path).expect("path exists").data()[i];
            probe.get_mut(&path).expect("path exists").data_mut()[i] = original + eps;
            let plus = eval(&probe)?;
            probe.get_mut(&path).expect("path exists").data_mut()[i] = original - eps;
            let minus = eval(&probe)?;
            probe.get_mut(&path).expect("path exists").data_mut()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric {
                    path: format!("{path}[{i}]"),
                    message: format!("perturbed loss is {plus} / {minus}"),
                });
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[&path].data()[i];
            let err = relative_error(a, numeric);
            report.entries_checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((path.clone(), i));
            }
        }
    }
    Ok(report)
}
