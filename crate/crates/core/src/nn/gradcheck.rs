use super::tensor::Parameters;

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst element.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Denominator floor so that gradients that are both essentially zero do not
/// report large relative errors from rounding noise.
const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares `analytic` gradients against central differences of `loss` with
/// step `h = 1e-5 * max(1, |θ|)` for every parameter of `model`.
///
/// `stride` > 1 checks every `stride`-th element of each tensor.
pub fn grad_check<M: Parameters>(model: &mut M, analytic: &M, stride: usize, mut loss: impl FnMut(&M) -> f64) -> GradCheckReport {
    let grads: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.data.clone()))
        .collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (ti, (name, grad)) in grads.iter().enumerate() {
        for j in (0..grad.len()).step_by(stride.max(1)) {
            let theta = model.tensors_mut()[ti].data[j];
            let h = 1e-5 * theta.abs().max(1.0);
            model.tensors_mut()[ti].data[j] = theta + h;
            let plus = loss(model);
            model.tensors_mut()[ti].data[j] = theta - h;
            let minus = loss(model);
            model.tensors_mut()[ti].data[j] = theta;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(grad[j], numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), j));
            }
        }
    }
    report
}
