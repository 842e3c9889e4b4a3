use super::{Matrix, Tape, TensorError, Var};

/// Denominator floor for the relative error, so components whose true
/// gradient is ~0 are compared on an absolute scale instead of blowing up.
pub const RELATIVE_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// (input, flat element index, analytic, numeric) at the worst component.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub components: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares backward-pass gradients of a scalar function of one matrix
/// against central finite differences.
pub fn grad_check<F>(f: F, x: &Matrix, step: f64, tolerance: f64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, TensorError>,
{
    grad_check_many(|tape, xs| f(tape, xs[0]), std::slice::from_ref(x), step, tolerance)
}

/// Multi-input variant of [`grad_check`]: every entry of every input is
/// perturbed by `±step`.
pub fn grad_check_many<F>(
    f: F,
    inputs: &[Matrix],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|m| tape.leaf(m.clone())).collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;
    let analytic: Vec<Matrix> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, m)| {
            tape.grad(v)
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols()))
        })
        .collect();

    let eval = |perturbed: &[Matrix]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = perturbed.iter().map(|m| tape.constant(m.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let (rows, cols) = tape.shape(out);
        if (rows, cols) != (1, 1) {
            return Err(TensorError::NotScalar { rows, cols });
        }
        Ok(tape.value(out).item())
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        components: 0,
        tolerance,
        passed: true,
    };
    let mut work: Vec<Matrix> = inputs.to_vec();
    for (which, input) in inputs.iter().enumerate() {
        for k in 0..input.len() {
            let original = input.as_slice()[k];
            work[which].as_mut_slice()[k] = original + step;
            let plus = eval(&work)?;
            work[which].as_mut_slice()[k] = original - step;
            let minus = eval(&work)?;
            work[which].as_mut_slice()[k] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[which].as_slice()[k];
            let err = relative_error(a, numeric);
            report.components += 1;
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = err;
                report.worst = Some((which, k, a, numeric));
            }
        }
    }
    report.passed = report.max_relative_error < tolerance;
    Ok(report)
}
