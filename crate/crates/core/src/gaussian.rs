//! Normal-normal updating and three linear-Gaussian applications.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Invalid(format!("{name} must be a positive finite number, got {v}")));
    }
    Ok(())
}

/// `θ ~ N(mu, var_theta)` observed through `X = θ + ε`, `ε ~ N(0, var_eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarGaussianModel {
    pub mu: f64,
    pub var_theta: f64,
    pub var_eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl ScalarGaussianModel {
    pub fn new(mu: f64, var_theta: f64, var_eps: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Invalid("prior mean must be finite".into()));
        }
        positive("prior variance", var_theta)?;
        positive("noise variance", var_eps)?;
        Ok(Self { mu, var_theta, var_eps })
    }

    /// Weight on the observation in the posterior mean.
    pub fn gain(&self) -> f64 {
        self.var_theta / (self.var_theta + self.var_eps)
    }

    pub fn posterior(&self, x: f64) -> ScalarPosterior {
        let s = self.var_theta + self.var_eps;
        ScalarPosterior {
            mean: (self.var_eps * self.mu + self.var_theta * x) / s,
            variance: self.var_theta * self.var_eps / s,
        }
    }

    /// Joint law of `(θ, X)`.
    pub fn joint(&self) -> JointGaussian {
        JointGaussian::new(
            vec![self.mu, self.mu],
            vec![
                vec![self.var_theta, self.var_theta],
                vec![self.var_theta, self.var_theta + self.var_eps],
            ],
            1,
        )
        .expect("positive variances give a full-rank joint")
    }
}

pub fn scalar_posterior(model: &ScalarGaussianModel, x: f64) -> ScalarPosterior {
    model.posterior(x)
}

/// Multivariate normal whose first `split` coordinates are the unobserved block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointGaussian {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub split: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Checks symmetry and positive definiteness with a condition-number guard.
fn check_spd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{what} has non-finite entries")));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Invariant(format!("{what} is not symmetric")));
            }
        }
    }
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    if lo <= 0.0 || hi / lo > MAX_CONDITION {
        return Err(Error::Numerical(format!(
            "{what} is singular or too ill-conditioned to invert (eigenvalues in [{lo:.3e}, {hi:.3e}])"
        )));
    }
    Ok(())
}

impl JointGaussian {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>, split: usize) -> Result<Self> {
        let n = mean.len();
        if n == 0 || cov.len() != n || cov.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("mean of length {n} needs an {n}x{n} covariance")));
        }
        if split == 0 || split >= n {
            return Err(Error::Invalid(format!("split must lie in 1..{n}")));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("mean has non-finite entries".into()));
        }
        check_spd(&to_matrix(&cov), "covariance")?;
        Ok(Self { mean, cov, split })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Law of the coordinates not in `observed`, given values `z` for `observed`.
pub fn condition_on(mean: &[f64], cov: &[Vec<f64>], observed: &[usize], z: &[f64]) -> Result<GaussianPosterior> {
    let n = mean.len();
    if observed.len() != z.len() {
        return Err(Error::Dimension("one value per observed coordinate".into()));
    }
    if observed.iter().any(|&i| i >= n) {
        return Err(Error::Invalid("observed coordinate out of range".into()));
    }
    let hidden: Vec<usize> = (0..n).filter(|i| !observed.contains(i)).collect();
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| cov[r[i]][c[j]]);
    let s11 = sub(&hidden, &hidden);
    if observed.is_empty() {
        return Ok(GaussianPosterior {
            mean: hidden.iter().map(|&i| mean[i]).collect(),
            cov: from_matrix(&s11),
        });
    }
    let s12 = sub(&hidden, observed);
    let s22 = sub(observed, observed);
    check_spd(&s22, "observed-block covariance")?;
    let chol = s22
        .cholesky()
        .ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))?;
    let resid = DVector::from_iterator(z.len(), observed.iter().zip(z).map(|(&i, v)| v - mean[i]));
    let w = chol.solve(&resid);
    let shift = &s12 * w;
    let gain = chol.solve(&s12.transpose());
    let post_cov = &s11 - &s12 * gain;
    let post_cov = (&post_cov + post_cov.transpose()) * 0.5;
    Ok(GaussianPosterior {
        mean: hidden.iter().enumerate().map(|(k, &i)| mean[i] + shift[k]).collect(),
        cov: from_matrix(&post_cov),
    })
}

/// Law of the first block given the rest equals `z2`.
pub fn multivariate_posterior(j: &JointGaussian, z2: &[f64]) -> Result<GaussianPosterior> {
    let observed: Vec<usize> = (j.split..j.dim()).collect();
    condition_on(&j.mean, &j.cov, &observed, z2)
}

/// Equilibrium effort when the market rewards the posterior mean of talent.
pub fn career_concerns_effort(var_theta: f64, var_eps: f64) -> Result<f64> {
    positive("talent variance", var_theta)?;
    positive("noise variance", var_eps)?;
    Ok(var_theta / (var_theta + var_eps))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoordinationEquilibrium {
    /// Weight on the private signal.
    pub c: f64,
    /// Intercept.
    pub kappa: f64,
    /// Max-abs gap between the coefficients and their best reply.
    pub fixed_point_residual: f64,
}

/// Best reply `(c', κ')` to an opponent playing `c x + κ`.
pub fn coordination_best_reply(mu: f64, var_theta: f64, var_eps: f64, beta: f64, c: f64, kappa: f64) -> (f64, f64) {
    let lambda = var_theta / (var_theta + var_eps);
    let w = (1.0 - beta) + beta * c;
    (w * lambda, w * (1.0 - lambda) * mu + beta * kappa)
}

/// Symmetric linear equilibrium `a(x) = c x + κ` of the two-player beauty contest.
pub fn coordination_equilibrium(mu: f64, var_theta: f64, var_eps: f64, beta: f64) -> Result<CoordinationEquilibrium> {
    positive("prior variance", var_theta)?;
    positive("noise variance", var_eps)?;
    if !(beta > 0.0 && beta < 1.0) || !mu.is_finite() {
        return Err(Error::Invalid("beta must lie in (0,1) and mu must be finite".into()));
    }
    let d = var_eps + var_theta * (1.0 - beta);
    let c = var_theta * (1.0 - beta) / d;
    let kappa = var_eps / d * mu;
    let (c2, k2) = coordination_best_reply(mu, var_theta, var_eps, beta, c, kappa);
    Ok(CoordinationEquilibrium {
        c,
        kappa,
        fixed_point_residual: (c2 - c).abs().max((k2 - kappa).abs()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharingProfile {
    pub shares: [bool; 2],
    /// Platform's posterior variance of each agent's type.
    pub variance: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataSharingReport {
    pub rho: f64,
    pub v: f64,
    pub profiles: Vec<SharingProfile>,
    /// Per-agent payment making sharing a best reply when the other shares.
    pub both_share_payment_each: f64,
    pub both_share_total: f64,
    pub one_share_total: f64,
    /// Both sharing costs the platform strictly less than one sharing.
    pub cheaper_to_buy_both: bool,
}

/// `ρ²` at which buying both data sets costs the same as buying one.
pub fn data_sharing_boundary() -> f64 {
    (7.0 - 17f64.sqrt()) / 4.0
}

/// Posterior variances for every sharing profile and the minimum payments sustaining
/// both-share and one-share equilibria. Types have unit variance and correlation `rho`;
/// noises are unit and independent.
pub fn data_sharing_analysis(rho: f64, v: f64) -> Result<DataSharingReport> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Invalid("rho must lie in (-1,1)".into()));
    }
    positive("privacy weight", v)?;
    // (θ1, θ2, X1, X2)
    let cov = vec![
        vec![1.0, rho, 1.0, rho],
        vec![rho, 1.0, rho, 1.0],
        vec![1.0, rho, 2.0, rho],
        vec![rho, 1.0, rho, 2.0],
    ];
    let mean = vec![0.0; 4];
    let mut profiles = Vec::with_capacity(4);
    for shares in [[false, false], [true, false], [false, true], [true, true]] {
        let observed: Vec<usize> = (0..2).filter(|&i| shares[i]).map(|i| i + 2).collect();
        let z = vec![0.0; observed.len()];
        let post = condition_on(&mean, &cov, &observed, &z)?;
        // hidden coordinates come out in index order, so θ1 and θ2 lead
        profiles.push(SharingProfile {
            shares,
            variance: [post.cov[0][0], post.cov[1][1]],
        });
    }
    let var = |s: [bool; 2], i: usize| profiles.iter().find(|p| p.shares == s).expect("profile").variance[i];
    let each = v * (var([false, true], 0) - var([true, true], 0));
    let one = v * (var([false, false], 0) - var([true, false], 0));
    let both_total = 2.0 * each;
    Ok(DataSharingReport {
        rho,
        v,
        both_share_payment_each: each,
        both_share_total: both_total,
        one_share_total: one,
        cheaper_to_buy_both: both_total < one,
        profiles,
    })
}
