//! Central finite-difference verification of analytic gradients.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

use super::tape::{Tape, Var};
use super::tensor::Tensor4;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub tolerance: f64,
    pub step: f64,
    /// Tensors with more entries than this are checked on a random subset of this size.
    pub coords_per_tensor: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { tolerance: 1e-4, step: 1e-3, coords_per_tensor: 64, floor: 1e-8, seed: 0 }
    }
}

/// One evaluation of the function under test.
pub struct Evaluation {
    pub loss: f64,
    /// Analytic gradient per parameter tensor; only required when requested.
    pub grads: Option<Vec<Tensor4<f64>>>,
    /// Identifier of the piecewise-linear region (see [`Tape::relu_signature`]).
    pub signature: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    /// Coordinates checked with a reduced step because the nominal one crossed a ReLU kink.
    pub reduced_step: usize,
    /// Coordinates skipped because even the smallest step crossed a kink.
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub tensors: Vec<TensorCheck>,
    pub error: Option<String>,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.error {
            writeln!(f, "gradcheck error: {e}")?;
        }
        for t in &self.tensors {
            writeln!(
                f,
                "{:<24} checked {:>4}  reduced {:>3}  skipped {:>3}  max rel err {:.3e}  {}",
                t.name,
                t.checked,
                t.reduced_step,
                t.skipped_kinks,
                t.max_rel_error,
                if t.passed { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {} (tolerance {:.1e})", if self.passed { "PASS" } else { "FAIL" }, self.tolerance)
    }
}

fn sample_coords(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Compares the analytic gradients returned by `eval` with central differences.
///
/// `eval(params, want_grads)` must be deterministic. Failures, including
/// errors raised by `eval`, are reported rather than propagated.
pub fn grad_check<F>(names: &[&str], params: &[Tensor4<f64>], mut eval: F, opts: &GradCheckOptions) -> GradCheckReport
where
    F: FnMut(&[Tensor4<f64>], bool) -> Result<Evaluation>,
{
    let failed = |msg: String| GradCheckReport {
        tolerance: opts.tolerance,
        tensors: Vec::new(),
        error: Some(msg),
        passed: false,
    };

    let base = match eval(params, true) {
        Ok(e) => e,
        Err(e) => return failed(e.to_string()),
    };
    let analytic = match base.grads {
        Some(g) if g.len() == params.len() => g,
        _ => return failed("evaluation returned no gradients for the parameters".into()),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Tensor4<f64>> = params.to_vec();
    let mut tensors = Vec::with_capacity(params.len());
    for (ti, param) in params.iter().enumerate() {
        let name = names.get(ti).map(|s| s.to_string()).unwrap_or_else(|| format!("param{ti}"));
        let mut check = TensorCheck {
            name,
            checked: 0,
            reduced_step: 0,
            skipped_kinks: 0,
            max_rel_error: 0.0,
            worst_index: None,
            passed: true,
        };
        for idx in sample_coords(param.len(), opts.coords_per_tensor, &mut rng) {
            let orig = param.data()[idx];
            let mut numeric = None;
            // a step that crosses a ReLU kink is retried with a smaller one
            for (attempt, h) in [opts.step, opts.step * 1e-1, opts.step * 1e-2].into_iter().enumerate() {
                work[ti].data_mut()[idx] = orig + h;
                let plus = eval(&work, false);
                work[ti].data_mut()[idx] = orig - h;
                let minus = eval(&work, false);
                work[ti].data_mut()[idx] = orig;
                let (plus, minus) = match (plus, minus) {
                    (Ok(p), Ok(m)) => (p, m),
                    (Err(e), _) | (_, Err(e)) => return failed(e.to_string()),
                };
                if plus.signature == base.signature && minus.signature == base.signature {
                    if attempt > 0 {
                        check.reduced_step += 1;
                    }
                    numeric = Some((plus.loss - minus.loss) / (2.0 * h));
                    break;
                }
            }
            let Some(numeric) = numeric else {
                check.skipped_kinks += 1;
                continue;
            };
            let a = analytic[ti].data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            check.checked += 1;
            if !(rel <= check.max_rel_error) {
                check.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                check.worst_index = Some(idx);
            }
        }
        check.passed = check.max_rel_error < opts.tolerance && (check.checked > 0 || param.is_empty());
        tensors.push(check);
    }
    let passed = tensors.iter().all(|t| t.passed);
    GradCheckReport { tolerance: opts.tolerance, tensors, error: None, passed }
}

/// Tape-backed evaluation: `build` records a graph over the parameter leaves
/// and returns the scalar loss.
pub fn tape_evaluation<B>(params: &[Tensor4<f64>], want_grads: bool, build: &B) -> Result<Evaluation>
where
    B: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = build(&mut tape, &vars)?;
    let value = tape.value(loss).item();
    let signature = tape.relu_signature();
    let grads = if want_grads {
        let mut g = tape.backward(loss)?;
        Some(
            vars.iter()
                .zip(params)
                .map(|(&v, p)| g.take(v).unwrap_or_else(|| Tensor4::zeros(p.dims())))
                .collect(),
        )
    } else {
        None
    };
    Ok(Evaluation { loss: value, grads, signature })
}

/// [`grad_check`] over a graph recorded on a [`Tape`].
pub fn grad_check_graph<B>(names: &[&str], params: &[Tensor4<f64>], build: B, opts: &GradCheckOptions) -> GradCheckReport
where
    B: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    grad_check(names, params, |p, want| tape_evaluation(p, want, &build), opts)
}
