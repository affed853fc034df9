use super::GNetOutput;
use crate::autodiff::Var;
use crate::error::{Error, Result};

/// The joint loss and its parts, as plain numbers for reporting.
#[derive(Debug)]
pub struct LossBreakdown<'t> {
    pub total: Var<'t>,
    pub nll_r: Option<f64>,
    pub nll_p: Option<f64>,
    /// Unweighted KL term; `None` when the weight is 0.
    pub kl: Option<f64>,
}

/// Negative log-likelihood `-logp[label]` of a `1 x C` log-distribution.
pub fn nll<'t>(logp: Var<'t>, label: usize) -> Result<Var<'t>> {
    let (_, classes) = logp.shape();
    if label >= classes {
        return Err(Error::Argument(format!(
            "label {label} outside [0, {classes})"
        )));
    }
    logp.t()?.row(label)?.scale(-1.0)
}

/// `½ Σ (exp(logvar) + mu² − 1 − logvar)`, the divergence from N(0, I).
pub fn kl_divergence<'t>(mu: Var<'t>, logvar: Var<'t>) -> Result<Var<'t>> {
    logvar
        .exp()?
        .add(mu.mul(mu)?)?
        .sub(logvar)?
        .add_scalar(-1.0)?
        .sum()?
        .scale(0.5)
}

/// `L = NLL_R + NLL_P + β·KL`. Absent branches and a zero `β` contribute no
/// term at all, so with one branch and `β = 0` the loss is that branch's NLL.
pub fn gnet_loss<'t>(
    out: &GNetOutput<'t>,
    recognition_label: usize,
    prediction_label: usize,
    kl_weight: f64,
) -> Result<LossBreakdown<'t>> {
    let mut terms = Vec::with_capacity(3);
    let mut nll_r = None;
    let mut nll_p = None;
    let mut kl = None;
    if let Some(lp) = out.logp_r {
        let t = nll(lp, recognition_label)?;
        nll_r = Some(t.item());
        terms.push(t);
    }
    if let Some(lp) = out.logp_p {
        let t = nll(lp, prediction_label)?;
        nll_p = Some(t.item());
        terms.push(t);
    }
    if kl_weight != 0.0 {
        let t = kl_divergence(out.latent.mu, out.latent.logvar)?;
        kl = Some(t.item());
        terms.push(t.scale(kl_weight)?);
    }
    let mut iter = terms.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Config("loss has no enabled terms".into()))?;
    let total = iter.try_fold(first, |acc, t| acc.add(t))?;
    Ok(LossBreakdown {
        total,
        nll_r,
        nll_p,
        kl,
    })
}
