//! Mutual information and capacity per unit cost of discrete memoryless
//! channels, plus the arithmetic-coding transformer that shapes uniform bits
//! into a target symbol distribution.

mod transform;

pub use transform::{distribution_transform, inverse_transform, quantize_frequencies, Transformed};

use crate::error::{Error, Result};

/// Output of [`unit_cost_capacity`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Bits per unit cost (per channel bit for runlength costs).
    pub c_unit: f64,
    pub p_star: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Capacity estimate after each iteration, starting from the uniform
    /// input distribution.
    pub history: Vec<f64>,
}

fn check_channel(transition: &[Vec<f64>]) -> Result<usize> {
    let outputs = transition.first().map_or(0, Vec::len);
    if transition.is_empty() || outputs == 0 {
        return Err(Error::arg("transition matrix must be non-empty"));
    }
    for (x, row) in transition.iter().enumerate() {
        if row.len() != outputs {
            return Err(Error::arg(format!("row {x} has {} entries, expected {outputs}", row.len())));
        }
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("row {x} is not a probability distribution")));
        }
    }
    Ok(outputs)
}

fn check_distribution(p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::arg(format!("distribution has {} entries, expected {len}", p.len())));
    }
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::arg("input is not a probability distribution"));
    }
    Ok(())
}

/// Output distribution `q = pP`.
fn output_distribution(p: &[f64], transition: &[Vec<f64>]) -> Vec<f64> {
    let mut q = vec![0.0; transition[0].len()];
    for (px, row) in p.iter().zip(transition) {
        for (qy, pyx) in q.iter_mut().zip(row) {
            *qy += px * pyx;
        }
    }
    q
}

/// `D(P(·|x) ‖ q)` in bits for every input `x`.
fn divergences(transition: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    transition
        .iter()
        .map(|row| {
            row.iter()
                .zip(q)
                .filter(|(&pyx, _)| pyx > 0.0)
                .map(|(&pyx, &qy)| pyx * (pyx / qy).log2())
                .sum()
        })
        .collect()
}

/// `I(p) = Σ_x Σ_y p(x) P(y|x) log₂(P(y|x) / q(y))` with `0·log 0 = 0`.
pub fn mutual_information(p: &[f64], transition: &[Vec<f64>]) -> Result<f64> {
    check_channel(transition)?;
    check_distribution(p, transition.len())?;
    let q = output_distribution(p, transition);
    let d = divergences(transition, &q);
    Ok(p.iter().zip(&d).filter(|(&px, _)| px > 0.0).map(|(px, dx)| px * dx).sum::<f64>().max(0.0))
}

/// Maximizes `I(p) / (c·p)` by the Jimbo–Kunisawa multiplicative update
///
/// `p'(x) ∝ p(x)·2^{D(P(·|x)‖q) − s·c(x)}`, with `s` the current ratio.
///
/// The ratio is non-decreasing across iterations. Iteration stops when the
/// upper bound `max_x D(P(·|x)‖q)/c(x)` is within `tol` of the ratio, which
/// brackets the true capacity.
pub fn unit_cost_capacity(transition: &[Vec<f64>], costs: &[f64], tol: f64, max_iter: usize) -> Result<CapacityResult> {
    check_channel(transition)?;
    if costs.len() != transition.len() {
        return Err(Error::arg(format!(
            "{} costs for {} inputs",
            costs.len(),
            transition.len()
        )));
    }
    if costs.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::arg("costs must be positive"));
    }
    let n = transition.len();
    let mut p = vec![1.0 / n as f64; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let q = output_distribution(&p, transition);
        let d = divergences(transition, &q);
        let info: f64 = p.iter().zip(&d).map(|(px, dx)| px * dx).sum();
        let cost: f64 = p.iter().zip(costs).map(|(px, c)| px * c).sum();
        let ratio = info / cost;
        history.push(ratio);
        let upper = d
            .iter()
            .zip(costs)
            .map(|(dx, c)| dx / c)
            .fold(f64::NEG_INFINITY, f64::max);
        if upper - ratio < tol || iterations >= max_iter {
            return Ok(CapacityResult {
                c_unit: ratio.max(0.0),
                p_star: p,
                iterations,
                converged: upper - ratio < tol,
                history,
            });
        }
        iterations += 1;
        // Shift exponents by their maximum so the largest weight is 1.
        let exps: Vec<f64> = d.iter().zip(costs).map(|(dx, c)| dx - ratio * c).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut next: Vec<f64> = p.iter().zip(&exps).map(|(px, e)| px * (e - top).exp2()).collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= z);
        p = next;
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(p) + h(1.0 - p)
}
