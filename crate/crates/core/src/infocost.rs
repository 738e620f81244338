//! Entropy, KL divergence and cost functionals on signals.
//!
//! Natural logarithms throughout; `0 ln 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::signals::{induced_posteriors, BeliefDistribution, SignalStructure};
use crate::{Error, Result};

const FD_STEP: f64 = 1e-6;

fn check_probability(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Dimension(format!("{what} is empty")));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Invalid(format!("{what} has negative or non-finite entries")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub fn entropy(p: &[f64]) -> Result<f64> {
    check_probability(p, "distribution")?;
    Ok(-p.iter().map(|&v| xlnx(v)).sum::<f64>())
}

/// Differential entropy of `N(·, var)`.
pub fn entropy_gaussian(var: f64) -> Result<f64> {
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Invalid("variance must be positive".into()));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI * var).ln() + 0.5)
}

/// `D(p‖q)`; `+∞` when `p` puts mass where `q` has none.
pub fn kl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension("distributions differ in length".into()));
    }
    check_probability(p, "first distribution")?;
    check_probability(q, "second distribution")?;
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).ln();
        }
    }
    Ok(d.max(0.0))
}

/// `D(p‖q)` with logarithms in `base`.
pub fn kl_base(p: &[f64], q: &[f64], base: f64) -> Result<f64> {
    if !(base.is_finite() && base > 1.0) {
        return Err(Error::Invalid("log base must exceed 1".into()));
    }
    Ok(kl(p, q)? / base.ln())
}

/// KL divergence between two normals with a shared variance.
pub fn kl_gaussian_means(mu_p: f64, mu_q: f64, var: f64) -> Result<f64> {
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::Invalid("variance must be positive".into()));
    }
    Ok((mu_q - mu_p).powi(2) / (2.0 * var))
}

/// `H(Y | X)` for a joint table with rows indexed by `X`.
pub fn conditional_entropy(joint: &[Vec<f64>]) -> Result<f64> {
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    let h_xy = entropy(&flat)?;
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    Ok(h_xy - entropy(&px)?)
}

/// Concave potential on beliefs.
pub enum Potential {
    Entropy,
    /// Variance of the state, with `values[i]` the value of state `i`.
    Variance { values: Vec<f64> },
    /// Binary beliefs only: piecewise-linear interpolation of `(grid, values)` in the
    /// probability of the second state.
    Table { grid: Vec<f64>, values: Vec<f64> },
    Custom(Box<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Potential::Entropy => write!(f, "Entropy"),
            Potential::Variance { values } => write!(f, "Variance({values:?})"),
            Potential::Table { grid, .. } => write!(f, "Table({} points)", grid.len()),
            Potential::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Potential {
    /// Variance with states valued `0, 1, ..., n-1`.
    pub fn variance(n: usize) -> Self {
        Potential::Variance {
            values: (0..n).map(|i| i as f64).collect(),
        }
    }

    /// Table potential; rejects unsorted grids and tables that are not concave.
    pub fn table(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Dimension("table needs matching grid and values, at least two points".into()));
        }
        if grid[0] != 0.0 || grid[grid.len() - 1] != 1.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("table grid must increase from 0 to 1".into()));
        }
        let slopes: Vec<f64> = (1..grid.len())
            .map(|i| (values[i] - values[i - 1]) / (grid[i] - grid[i - 1]))
            .collect();
        if slopes.windows(2).any(|w| w[1] > w[0] + 1e-9) {
            return Err(Error::Precondition("potential is not concave on its grid".into()));
        }
        Ok(Potential::Table { grid, values })
    }

    pub fn eval(&self, q: &[f64]) -> Result<f64> {
        match self {
            Potential::Entropy => entropy(q),
            Potential::Variance { values } => {
                if values.len() != q.len() {
                    return Err(Error::Dimension("state values differ in length from the belief".into()));
                }
                let m: f64 = q.iter().zip(values).map(|(a, v)| a * v).sum();
                Ok(q.iter().zip(values).map(|(a, v)| a * (v - m).powi(2)).sum())
            }
            Potential::Table { grid, values } => {
                if q.len() != 2 {
                    return Err(Error::Dimension("table potentials take binary beliefs".into()));
                }
                let x = q[1].clamp(0.0, 1.0);
                let k = grid.partition_point(|g| *g < x).clamp(1, grid.len() - 1);
                let t = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
                Ok(values[k - 1] + t * (values[k] - values[k - 1]))
            }
            Potential::Custom(f) => Ok(f(q)),
        }
    }

    /// Directional derivative at `p` toward `q`.
    fn slope(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let dir: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
        match self {
            Potential::Entropy => {
                let mut s = 0.0;
                for (pi, di) in p.iter().zip(&dir) {
                    if *pi > 0.0 {
                        s -= di * (pi.ln() + 1.0);
                    } else if *di > 0.0 {
                        return Ok(f64::INFINITY);
                    }
                }
                Ok(s)
            }
            Potential::Variance { values } => {
                let m: f64 = p.iter().zip(values).map(|(a, v)| a * v).sum();
                // gradient of Σ p v² − (Σ p v)²
                Ok(dir.iter().zip(values).map(|(d, v)| d * (v * v - 2.0 * m * v)).sum())
            }
            _ => {
                let at = |t: f64| -> Vec<f64> { p.iter().zip(&dir).map(|(a, d)| a + t * d).collect() };
                let inside = |v: &[f64]| v.iter().all(|x| *x >= 0.0);
                let (fwd, back) = (at(FD_STEP), at(-FD_STEP));
                if inside(&back) {
                    Ok((self.eval(&fwd)? - self.eval(&back)?) / (2.0 * FD_STEP))
                } else {
                    Ok((self.eval(&fwd)? - self.eval(p)?) / FD_STEP)
                }
            }
        }
    }
}

/// `Φ(p) − Φ(q) + ∇Φ(p)·(q − p)`, with `p` the reference (prior) belief.
pub fn bregman(phi: &Potential, p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension("beliefs differ in length".into()));
    }
    check_probability(p, "reference belief")?;
    check_probability(q, "belief")?;
    let slope = phi.slope(p, q)?;
    if slope.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let d = phi.eval(p)? - phi.eval(q)? + slope;
    let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let chord = 0.5 * (phi.eval(p)? + phi.eval(q)?);
    if d < -1e-9 || phi.eval(&mid)? < chord - 1e-9 {
        return Err(Error::Precondition("potential is not concave at the evaluation points".into()));
    }
    Ok(d.max(0.0))
}

fn check_plausible(prior: &[f64], dist: &BeliefDistribution<f64>) -> Result<()> {
    check_probability(prior, "prior")?;
    if dist.dim() != prior.len() {
        return Err(Error::Dimension("beliefs and prior differ in length".into()));
    }
    let mean = dist.mean();
    if mean.iter().zip(prior).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Precondition("belief distribution does not average to the prior".into()));
    }
    Ok(())
}

/// `Φ(prior) − E_τ Φ(q)`.
pub fn ups_cost(phi: &Potential, prior: &[f64], dist: &BeliefDistribution<f64>) -> Result<f64> {
    check_plausible(prior, dist)?;
    let mut e = 0.0;
    for (q, w) in dist.support.iter().zip(&dist.weights) {
        e += w * phi.eval(q)?;
    }
    Ok((phi.eval(prior)? - e).max(0.0))
}

/// Expected entropy reduction.
pub fn cost_entropy_reduction(prior: &[f64], dist: &BeliefDistribution<f64>) -> Result<f64> {
    ups_cost(&Potential::Entropy, prior, dist)
}

/// Expected variance reduction, states valued `0..n`.
pub fn cost_variance_reduction(prior: &[f64], dist: &BeliefDistribution<f64>) -> Result<f64> {
    ups_cost(&Potential::variance(prior.len()), prior, dist)
}

/// Entropy reduction from observing `θ + ε` once.
pub fn cost_entropy_gaussian(var_theta: f64, var_eps: f64) -> Result<f64> {
    let post = var_theta * var_eps / (var_theta + var_eps);
    Ok(entropy_gaussian(var_theta)? - entropy_gaussian(post)?)
}

/// Variance reduction from observing `θ + ε` once.
pub fn cost_variance_gaussian(var_theta: f64, var_eps: f64) -> Result<f64> {
    if !(var_theta > 0.0 && var_eps > 0.0) {
        return Err(Error::Invalid("variances must be positive".into()));
    }
    Ok(var_theta * var_theta / (var_theta + var_eps))
}

/// `Σ β[θ][θ'] D(σ_θ ‖ σ_θ')` over ordered pairs of states.
pub fn pst_cost(signal: &SignalStructure<f64>, beta: &[Vec<f64>]) -> Result<f64> {
    let n = signal.num_states();
    if beta.len() != n || beta.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("beta must be {n}x{n}")));
    }
    if beta.iter().flatten().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::Invalid("beta entries must be nonnegative".into()));
    }
    let mut c = 0.0;
    for t in 0..n {
        for u in 0..n {
            if t == u || beta[t][u] == 0.0 {
                continue;
            }
            let d = kl(&signal.matrix[t], &signal.matrix[u])?;
            if d.is_infinite() {
                return Err(Error::Undefined(format!(
                    "row {t} is not absolutely continuous with respect to row {u}"
                )));
            }
            c += beta[t][u] * d;
        }
    }
    Ok(c)
}

/// Coefficients `1/(θ − θ')²` over distinct pairs of state values.
pub fn inverse_square_beta(values: &[f64]) -> Vec<Vec<f64>> {
    values
        .iter()
        .map(|a| values.iter().map(|b| if a == b { 0.0 } else { 1.0 / (a - b).powi(2) }).collect())
        .collect()
}

/// Two independent draws, realization `(x, y)` at index `x * |Y| + y`.
pub fn product_signal<T: Scalar>(a: &SignalStructure<T>, b: &SignalStructure<T>) -> Result<SignalStructure<T>> {
    if a.num_states() != b.num_states() {
        return Err(Error::Dimension("signals have different state sets".into()));
    }
    let labels = a
        .realizations
        .iter()
        .flat_map(|x| b.realizations.iter().map(move |y| format!("{x}{y}")))
        .collect();
    let matrix = a
        .matrix
        .iter()
        .zip(&b.matrix)
        .map(|(ra, rb)| ra.iter().flat_map(|x| rb.iter().map(move |y| x.clone() * y.clone())).collect())
        .collect();
    SignalStructure::new(a.states.clone(), labels, matrix)
}

/// Runs `σ` with probability `α`, otherwise emits a null realization (last column).
pub fn dilute<T: Scalar>(signal: &SignalStructure<T>, alpha: T) -> Result<SignalStructure<T>> {
    if alpha < T::zero() || alpha > T::one() {
        return Err(Error::Invalid("dilution weight must lie in [0,1]".into()));
    }
    let mut labels = signal.realizations.clone();
    labels.push("null".into());
    let matrix = signal
        .matrix
        .iter()
        .map(|r| {
            let mut row: Vec<T> = r.iter().map(|v| alpha.clone() * v.clone()).collect();
            row.push(T::one() - alpha.clone());
            row
        })
        .collect();
    SignalStructure::new(signal.states.clone(), labels, matrix)
}

/// Serializable choice of cost functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostSpec {
    EntropyReduction,
    VarianceReduction {
        #[serde(default)]
        values: Option<Vec<f64>>,
    },
    BregmanTable {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
    Pst {
        beta: Vec<Vec<f64>>,
    },
}

impl CostSpec {
    /// Cost of `signal` under `prior` (ignored by the prior-free PST cost).
    pub fn cost(&self, prior: &[f64], signal: &SignalStructure<f64>) -> Result<f64> {
        let dist = || induced_posteriors(prior, signal);
        match self {
            CostSpec::EntropyReduction => cost_entropy_reduction(prior, &dist()?),
            CostSpec::VarianceReduction { values } => {
                let phi = Potential::Variance {
                    values: values.clone().unwrap_or_else(|| (0..prior.len()).map(|i| i as f64).collect()),
                };
                ups_cost(&phi, prior, &dist()?)
            }
            CostSpec::BregmanTable { grid, values } => {
                ups_cost(&Potential::table(grid.clone(), values.clone())?, prior, &dist()?)
            }
            CostSpec::Pst { beta } => pst_cost(signal, beta),
        }
    }
}
