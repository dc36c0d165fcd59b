//! Central-difference verification of tape gradients.

use super::error::{NumError, Result};
use super::tape::{ParamId, Tape, Var};
use super::tensor::Tensor;

/// Guard added to the finite-difference norm in the relative error.
const DENOM_GUARD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ParamError {
    pub name: String,
    /// `||analytic - numeric|| / (||numeric|| + 1e-12)`
    pub rel_err: f64,
    pub max_abs_err: f64,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub params: Vec<ParamError>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.params.iter().map(|p| p.rel_err).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&ParamError> {
        self.params
            .iter()
            .max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }
}

/// Compares tape gradients of the scalar `f` against central differences.
///
/// `f` receives a fresh tape and one `Var` per entry of `params`, in order,
/// and must return a single-element output.
pub fn grad_check<F>(params: &[(String, Tensor)], eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(NumError::Invalid(format!("eps must be positive, got {eps}")));
    }
    let analytic = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params
            .iter()
            .map(|(n, t)| tape.param(n.clone(), t.clone()).1)
            .collect();
        let out = f(&mut tape, &vars)?;
        let value = tape.value(out).data()[0];
        if !value.is_finite() {
            return Err(NumError::NonFinite {
                param: params.first().map(|p| p.0.clone()).unwrap_or_default(),
                index: 0,
            });
        }
        tape.backward(out)?
    };

    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };

    let mut current: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    let mut report = Vec::with_capacity(params.len());
    for (p, (name, base)) in params.iter().enumerate() {
        let mut numeric = vec![0.0; base.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = base.data()[i];
            current[p].data_mut()[i] = orig + eps;
            let plus = eval(&current)?;
            current[p].data_mut()[i] = orig - eps;
            let minus = eval(&current)?;
            current[p].data_mut()[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(NumError::NonFinite {
                    param: name.clone(),
                    index: i,
                });
            }
            *slot = (plus - minus) / (2.0 * eps);
        }
        let numeric = Tensor::new(base.shape().to_vec(), numeric)?;
        let a = analytic.get(ParamId(p));
        let diff = a.sub(&numeric)?;
        report.push(ParamError {
            name: name.clone(),
            rel_err: diff.norm() / (numeric.norm() + DENOM_GUARD),
            max_abs_err: diff.data().iter().fold(0.0f64, |m, v| m.max(v.abs())),
            analytic_norm: a.norm(),
            numeric_norm: numeric.norm(),
        });
    }
    Ok(GradCheckReport { params: report })
}
