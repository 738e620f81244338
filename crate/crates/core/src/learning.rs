//! Learning from iid signals: sequential updating, consistency and merging
//! simulations, expected disagreement, and common learning with two agents.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::orders::{lr_dominates, mlrp_check, ConditionalFamily, FiniteDensity};
use crate::scalar::{dot, sum, Scalar};
use crate::signals::{check_prior, SignalStructure};
use crate::{blackwell, Error, Result};

/// Parameter grid, prior, and one signal density per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningEnvironment {
    pub params: Vec<f64>,
    pub prior: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    /// Index of the data-generating parameter.
    #[serde(default)]
    pub truth: usize,
    #[serde(default)]
    pub horizon: usize,
}

impl LearningEnvironment {
    pub fn new(params: Vec<f64>, prior: Vec<f64>, densities: Vec<Vec<f64>>, truth: usize, horizon: usize) -> Result<Self> {
        let env = Self { params, prior, densities, truth, horizon };
        env.validate()?;
        Ok(env)
    }

    /// Two parameters and realizations `a`, `b`; `A` emits `a` with probability `q`.
    pub fn binary(q: f64, prior_a: f64) -> Result<Self> {
        Self::new(
            vec![1.0, 0.0],
            vec![prior_a, 1.0 - prior_a],
            vec![vec![q, 1.0 - q], vec![1.0 - q, q]],
            0,
            0,
        )
    }

    /// Coin biases `grid`, realization 0 = heads.
    pub fn coin(grid: Vec<f64>, prior: Vec<f64>, truth: usize) -> Result<Self> {
        let densities = grid.iter().map(|p| vec![*p, 1.0 - p]).collect();
        Self::new(grid, prior, densities, truth, 0)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.params.len();
        if m == 0 || self.prior.len() != m || self.densities.len() != m {
            return Err(Error::Dimension("params, prior and densities must have the same length".into()));
        }
        check_prior(&self.prior, m).map_err(|e| Error::Invariant(format!("prior: {e}")))?;
        let k = self.densities[0].len();
        for (i, row) in self.densities.iter().enumerate() {
            if row.len() != k || k == 0 {
                return Err(Error::Dimension(format!("density {i} has the wrong length")));
            }
            check_prior(row, k).map_err(|e| Error::Invariant(format!("density {i}: {e}")))?;
        }
        if self.truth >= m {
            return Err(Error::Invalid(format!("true parameter index {} out of range", self.truth)));
        }
        Ok(())
    }

    pub fn num_realizations(&self) -> usize {
        self.densities[0].len()
    }

    /// Distinct densities for every pair of parameters.
    pub fn check_identified(&self) -> Result<()> {
        for i in 0..self.params.len() {
            for j in 0..i {
                let same = self.densities[i]
                    .iter()
                    .zip(&self.densities[j])
                    .all(|(a, b)| (a - b).abs() <= 1e-12);
                if same {
                    return Err(Error::Precondition(format!(
                        "parameters {j} and {i} have identical signal densities and cannot be told apart"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn normalize_log(logw: &[f64]) -> Vec<f64> {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return vec![0.0; logw.len()];
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Posterior after each prefix of `obs`, starting with the prior.
pub fn sequential_posterior(env: &LearningEnvironment, obs: &[usize]) -> Result<Vec<Vec<f64>>> {
    env.validate()?;
    let k = env.num_realizations();
    let mut logw: Vec<f64> = env.prior.iter().map(|p| ln_or_neg_inf(*p)).collect();
    let mut out = Vec::with_capacity(obs.len() + 1);
    out.push(env.prior.clone());
    for &x in obs {
        if x >= k {
            return Err(Error::Invalid(format!("observation {x} outside {k} realizations")));
        }
        for (l, row) in logw.iter_mut().zip(&env.densities) {
            *l += ln_or_neg_inf(row[x]);
        }
        if logw.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::ZeroProbability(x));
        }
        out.push(normalize_log(&logw));
    }
    Ok(out)
}

/// Posterior from the realization counts alone.
pub fn batch_posterior(env: &LearningEnvironment, counts: &[usize]) -> Result<Vec<f64>> {
    if counts.len() != env.num_realizations() {
        return Err(Error::Dimension("one count per realization".into()));
    }
    let logw: Vec<f64> = env
        .prior
        .iter()
        .zip(&env.densities)
        .map(|(p, row)| {
            counts
                .iter()
                .zip(row)
                .fold(ln_or_neg_inf(*p), |acc, (&c, &f)| if c == 0 { acc } else { acc + c as f64 * ln_or_neg_inf(f) })
        })
        .collect();
    if logw.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::Precondition("counts have zero probability under every parameter".into()));
    }
    Ok(normalize_log(&logw))
}

/// Generator for path `path` under master seed `seed`.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn sample_path<R: Rng + ?Sized>(rng: &mut R, density: &[f64], t: usize) -> Vec<usize> {
    let d = WeightedIndex::new(density).expect("normalized density");
    (0..t).map(|_| d.sample(rng)).collect()
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRow {
    pub t: usize,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
}

fn quantile_rows(checkpoints: &[usize], per_path: &[Vec<f64>]) -> Vec<QuantileRow> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let mut v: Vec<f64> = per_path.iter().map(|p| p[c]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            QuantileRow {
                t,
                q10: quantile(&v, 0.1),
                median: quantile(&v, 0.5),
                q90: quantile(&v, 0.9),
            }
        })
        .collect()
}

fn checkpoints(t: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (0..=10).map(|i| i * t / 10).collect();
    c.dedup();
    c
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub paths: usize,
    pub horizon: usize,
    pub delta: f64,
    /// Share of paths whose posterior on the truth is at least `1 - delta` at the horizon.
    pub fraction: f64,
    /// Quantiles of the posterior on the truth across paths.
    pub trajectory: Vec<QuantileRow>,
}

pub fn consistency_sim(env: &LearningEnvironment, n_paths: usize, t: usize, delta: f64, seed: u64) -> Result<ConsistencyReport> {
    env.validate()?;
    env.check_identified()?;
    if n_paths == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid("need at least one path and delta in (0,1)".into()));
    }
    let cps = checkpoints(t);
    let ln_f: Vec<Vec<f64>> = env.densities.iter().map(|r| r.iter().map(|v| ln_or_neg_inf(*v)).collect()).collect();
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let xs = sample_path(&mut rng, &env.densities[env.truth], t);
            let mut logw: Vec<f64> = env.prior.iter().map(|v| ln_or_neg_inf(*v)).collect();
            let mut out = Vec::with_capacity(cps.len());
            let mut next = 0;
            for step in 0..=t {
                if step > 0 {
                    let x = xs[step - 1];
                    for (l, row) in logw.iter_mut().zip(&ln_f) {
                        *l += row[x];
                    }
                }
                while next < cps.len() && cps[next] == step {
                    out.push(normalize_log(&logw)[env.truth]);
                    next += 1;
                }
            }
            out
        })
        .collect();
    let hits = per_path.iter().filter(|p| *p.last().expect("checkpoint") >= 1.0 - delta).count();
    Ok(ConsistencyReport {
        paths: n_paths,
        horizon: t,
        delta,
        fraction: hits as f64 / n_paths as f64,
        trajectory: quantile_rows(&cps, &per_path),
    })
}

/// Total variation between the `depth`-step predictive laws of two posteriors,
/// i.e. the largest gap over events measurable in the next `depth` signals.
pub fn predictive_discrepancy(env: &LearningEnvironment, post1: &[f64], post2: &[f64], depth: usize) -> f64 {
    let k = env.num_realizations();
    // per parameter, probability of each length-d sequence, built level by level
    let mut seq: Vec<Vec<f64>> = vec![vec![1.0]; env.params.len()];
    for _ in 0..depth {
        seq = seq
            .iter()
            .zip(&env.densities)
            .map(|(s, f)| s.iter().flat_map(|p| f.iter().map(move |q| p * q)).collect())
            .collect();
    }
    let n = seq[0].len();
    let _ = k;
    let mut tv = 0.0;
    for i in 0..n {
        let a: f64 = post1.iter().zip(&seq).map(|(w, s)| w * s[i]).sum();
        let b: f64 = post2.iter().zip(&seq).map(|(w, s)| w * s[i]).sum();
        tv += (a - b).abs();
    }
    0.5 * tv
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergingReport {
    pub paths: usize,
    pub horizon: usize,
    pub depth: usize,
    pub trajectory: Vec<QuantileRow>,
}

/// Gap between the predictive laws of agents holding `env.prior` and `prior2`,
/// along paths drawn from the true parameter.
pub fn merging_sim(
    env: &LearningEnvironment,
    prior2: &[f64],
    n_paths: usize,
    t: usize,
    depth: usize,
    seed: u64,
) -> Result<MergingReport> {
    env.validate()?;
    check_prior(prior2, env.params.len())?;
    if env.prior.iter().zip(prior2).any(|(a, b)| (*a > 0.0) != (*b > 0.0)) {
        return Err(Error::Precondition("priors must charge the same parameters (mutual absolute continuity)".into()));
    }
    if n_paths == 0 || depth == 0 || depth > 12 {
        return Err(Error::Invalid("need at least one path and a depth in 1..=12".into()));
    }
    let cps = checkpoints(t);
    let ln_f: Vec<Vec<f64>> = env.densities.iter().map(|r| r.iter().map(|v| ln_or_neg_inf(*v)).collect()).collect();
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let xs = sample_path(&mut rng, &env.densities[env.truth], t);
            let mut l1: Vec<f64> = env.prior.iter().map(|v| ln_or_neg_inf(*v)).collect();
            let mut l2: Vec<f64> = prior2.iter().map(|v| ln_or_neg_inf(*v)).collect();
            let mut out = Vec::with_capacity(cps.len());
            let mut next = 0;
            for step in 0..=t {
                if step > 0 {
                    let x = xs[step - 1];
                    for ((a, b), row) in l1.iter_mut().zip(l2.iter_mut()).zip(&ln_f) {
                        *a += row[x];
                        *b += row[x];
                    }
                }
                while next < cps.len() && cps[next] == step {
                    out.push(predictive_discrepancy(env, &normalize_log(&l1), &normalize_log(&l2), depth));
                    next += 1;
                }
            }
            out
        })
        .collect();
    Ok(MergingReport {
        paths: n_paths,
        horizon: t,
        depth,
        trajectory: quantile_rows(&cps, &per_path),
    })
}

/// Prior means and cross-expected posterior means for two agents and two signals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlsReport<T> {
    pub mu_a: T,
    pub mu_b: T,
    /// `E_A[E_B(θ | X)]` for the finer signal.
    pub mu_ab_fine: T,
    pub mu_ab_coarse: T,
    /// `E_B[E_A(θ | X)]`.
    pub mu_ba_fine: T,
    pub mu_ba_coarse: T,
    pub ab_chain_holds: bool,
    pub ba_chain_holds: bool,
}

/// Some ordering of realizations under which the family has monotone likelihood ratios.
pub fn mlrp_order<T: Scalar>(rows: &[Vec<T>]) -> Option<Vec<usize>> {
    let k = rows.first()?.len();
    let (lo, hi) = (&rows[0], &rows[rows.len() - 1]);
    let mut order: Vec<usize> = (0..k).collect();
    // compare hi[x]/lo[x] by cross multiplication
    order.sort_by(|&x, &y| {
        let l = hi[x].clone() * lo[y].clone();
        let r = hi[y].clone() * lo[x].clone();
        l.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Equal)
    });
    let permuted: Vec<Vec<T>> = rows.iter().map(|r| order.iter().map(|&x| r[x].clone()).collect()).collect();
    let fam = ConditionalFamily::on_indices(permuted).ok()?;
    mlrp_check(&fam, false).then_some(order)
}

fn cross_mean<T: Scalar>(thetas: &[T], outer: &[T], inner: &[T], sig: &SignalStructure<T>) -> T {
    let mut acc = T::zero();
    for x in 0..sig.num_realizations() {
        let po: Vec<T> = outer.iter().enumerate().map(|(t, p)| p.clone() * sig.entry(t, x).clone()).collect();
        let pi: Vec<T> = inner.iter().enumerate().map(|(t, p)| p.clone() * sig.entry(t, x).clone()).collect();
        let (mo, mi) = (sum(&po), sum(&pi));
        if mo <= T::zero() {
            continue;
        }
        if mi <= T::zero() {
            // the inner agent never expects x; its posterior mean there is irrelevant only if mo = 0
            continue;
        }
        acc = acc + mo * (dot(&pi, thetas) / mi);
    }
    acc
}

/// Exact check of `μ_A ≤ μ_AB(X) ≤ μ_AB(X̃) ≤ μ_B` and the mirrored chain,
/// where `fine` is `X`, `coarse` is a garbling `X̃`, and `prior_b` LR-dominates `prior_a`.
pub fn kls_disagreement_check<T: Scalar>(
    thetas: &[T],
    prior_a: &[T],
    prior_b: &[T],
    fine: &SignalStructure<T>,
    coarse: &SignalStructure<T>,
) -> Result<KlsReport<T>> {
    let m = thetas.len();
    check_prior(prior_a, m)?;
    check_prior(prior_b, m)?;
    if fine.num_states() != m || coarse.num_states() != m {
        return Err(Error::Dimension("signals need one row per parameter value".into()));
    }
    if thetas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("parameter values must be strictly increasing".into()));
    }
    if mlrp_order(&fine.matrix).is_none() || mlrp_order(&coarse.matrix).is_none() {
        return Err(Error::Precondition("signals need monotone likelihood ratios under some ordering".into()));
    }
    let fa = FiniteDensity::on_indices(prior_a.to_vec())?;
    let fb = FiniteDensity::on_indices(prior_b.to_vec())?;
    if !lr_dominates(&fb, &fa)? {
        return Err(Error::Precondition("the second prior must likelihood-ratio dominate the first".into()));
    }
    if blackwell::garbling_test(fine, coarse)?.is_none() {
        return Err(Error::Precondition("the coarse signal is not a garbling of the fine one".into()));
    }
    let mu_a = dot(prior_a, thetas);
    let mu_b = dot(prior_b, thetas);
    let mu_ab_fine = cross_mean(thetas, prior_a, prior_b, fine);
    let mu_ab_coarse = cross_mean(thetas, prior_a, prior_b, coarse);
    let mu_ba_fine = cross_mean(thetas, prior_b, prior_a, fine);
    let mu_ba_coarse = cross_mean(thetas, prior_b, prior_a, coarse);
    let le = |a: &T, b: &T| b.ge_tol(a);
    let ab = le(&mu_a, &mu_ab_fine) && le(&mu_ab_fine, &mu_ab_coarse) && le(&mu_ab_coarse, &mu_b);
    let ba = le(&mu_a, &mu_ba_coarse) && le(&mu_ba_coarse, &mu_ba_fine) && le(&mu_ba_fine, &mu_b);
    Ok(KlsReport {
        mu_a,
        mu_b,
        mu_ab_fine,
        mu_ab_coarse,
        mu_ba_fine,
        mu_ba_coarse,
        ab_chain_holds: ab,
        ba_chain_holds: ba,
    })
}

/// Sample estimate of `E_A[E_B(θ | X)]` from `n` draws of `(θ, X)` under prior A.
pub fn kls_monte_carlo<R: Rng + ?Sized>(
    rng: &mut R,
    thetas: &[f64],
    prior_a: &[f64],
    prior_b: &[f64],
    sig: &SignalStructure<f64>,
    n: usize,
) -> Result<f64> {
    check_prior(prior_a, thetas.len())?;
    let pa = WeightedIndex::new(prior_a).map_err(|e| Error::Invalid(e.to_string()))?;
    let rows: Vec<WeightedIndex<f64>> = sig
        .matrix
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| Error::Invalid(e.to_string())))
        .collect::<Result<_>>()?;
    let post_mean: Vec<Option<f64>> = (0..sig.num_realizations())
        .map(|x| {
            let w: Vec<f64> = prior_b.iter().enumerate().map(|(t, p)| p * sig.entry(t, x)).collect();
            let s: f64 = w.iter().sum();
            (s > 0.0).then(|| w.iter().zip(thetas).map(|(a, b)| a * b).sum::<f64>() / s)
        })
        .collect();
    let mut acc = 0.0;
    for _ in 0..n {
        let t = pa.sample(rng);
        let x = rows[t].sample(rng);
        acc += post_mean[x].ok_or_else(|| Error::Precondition("realization impossible under the second prior".into()))?;
    }
    Ok(acc / n as f64)
}

/// Per-parameter law over joint signal profiles `(x1, x2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoAgentSignalModel {
    pub profiles: Vec<(usize, usize)>,
    /// `probs[θ][k]` is the probability of profile `k` under parameter `θ`.
    pub probs: Vec<Vec<f64>>,
}

impl TwoAgentSignalModel {
    pub fn new(profiles: Vec<(usize, usize)>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self { profiles, probs };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.profiles.len();
        if k == 0 || self.probs.is_empty() {
            return Err(Error::Dimension("need at least one profile and one parameter".into()));
        }
        for (t, row) in self.probs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!("parameter {t} lists {} probabilities for {k} profiles", row.len())));
            }
            check_prior(row, k).map_err(|e| Error::Invariant(format!("parameter {t}: {e}")))?;
        }
        let mut seen = HashSet::new();
        if !self.profiles.iter().all(|p| seen.insert(*p)) {
            return Err(Error::Invalid("profiles must be distinct".into()));
        }
        Ok(())
    }

    /// From tables `pi[θ][i][j]`.
    pub fn from_tables(pi: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n1 = pi.first().map_or(0, Vec::len);
        let n2 = pi.first().and_then(|t| t.first()).map_or(0, Vec::len);
        let profiles: Vec<(usize, usize)> = (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect();
        let probs = pi
            .iter()
            .map(|t| {
                if t.len() != n1 || t.iter().any(|r| r.len() != n2) {
                    return Err(Error::Dimension("joint tables must share a shape".into()));
                }
                Ok(t.iter().flatten().copied().collect())
            })
            .collect::<Result<_>>()?;
        Self::new(profiles, probs)
    }

    /// Signals independent across agents given the parameter.
    pub fn conditionally_independent(phi: &[Vec<f64>], psi: &[Vec<f64>]) -> Result<Self> {
        if phi.len() != psi.len() {
            return Err(Error::Dimension("one marginal pair per parameter".into()));
        }
        let tables: Vec<Vec<Vec<f64>>> = phi
            .iter()
            .zip(psi)
            .map(|(a, b)| a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect())
            .collect();
        Self::from_tables(&tables)
    }

    /// Both agents see the same draw.
    pub fn public(marginals: &[Vec<f64>]) -> Result<Self> {
        let n = marginals.first().map_or(0, Vec::len);
        Self::new((0..n).map(|i| (i, i)).collect(), marginals.to_vec())
    }

    /// Staggered-counter structure: profile 0 is `(0,0)` with probability `θ`, profile
    /// `k ≥ 1` is `(⌈k/2⌉, ⌊k/2⌋)` with probability `ε(1−θ)(1−ε)^{k−1}`. Signals stop at
    /// `levels`; the remaining tail mass goes to the last profile.
    pub fn staggered(thetas: &[f64], eps: f64, levels: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || levels == 0 {
            return Err(Error::Invalid("eps must lie in (0,1) and levels must be positive".into()));
        }
        if thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Invalid("parameters must lie in [0,1]".into()));
        }
        let last = 2 * levels;
        let profiles = (0..=last).map(|k| (k.div_ceil(2), k / 2)).collect();
        let probs = thetas
            .iter()
            .map(|&t| {
                let mut row: Vec<f64> = (0..=last)
                    .map(|k| if k == 0 { t } else { eps * (1.0 - t) * (1.0 - eps).powi(k as i32 - 1) })
                    .collect();
                let head: f64 = row[..last].iter().sum();
                row[last] = (1.0 - head).max(0.0);
                row
            })
            .collect();
        Self::new(profiles, probs)
    }

    pub fn num_params(&self) -> usize {
        self.probs.len()
    }

    pub fn sizes(&self) -> (usize, usize) {
        let n1 = self.profiles.iter().map(|p| p.0).max().unwrap_or(0) + 1;
        let n2 = self.profiles.iter().map(|p| p.1).max().unwrap_or(0) + 1;
        (n1, n2)
    }

    pub fn marginals(&self, theta: usize) -> (Vec<f64>, Vec<f64>) {
        let (n1, n2) = self.sizes();
        let (mut phi, mut psi) = (vec![0.0; n1], vec![0.0; n2]);
        for (p, w) in self.profiles.iter().zip(&self.probs[theta]) {
            phi[p.0] += w;
            psi[p.1] += w;
        }
        (phi, psi)
    }

    /// `M_1` (agent 1's signal to agent 2's) and `M_2` (agent 2's to agent 1's) under `theta`.
    /// Rows of zero-probability signals are left at zero.
    pub fn transition_matrices(&self, theta: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (n1, n2) = self.sizes();
        let (phi, psi) = self.marginals(theta);
        let mut m1 = vec![vec![0.0; n2]; n1];
        let mut m2 = vec![vec![0.0; n1]; n2];
        for (p, w) in self.profiles.iter().zip(&self.probs[theta]) {
            if phi[p.0] > 0.0 {
                m1[p.0][p.1] += w / phi[p.0];
            }
            if psi[p.1] > 0.0 {
                m2[p.1][p.0] += w / psi[p.1];
            }
        }
        (m1, m2)
    }
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|r| {
            (0..n)
                .map(|j| r.iter().zip(b).map(|(x, row)| x * row[j]).sum())
                .collect()
        })
        .collect()
}

/// Dobrushin coefficient: largest total-variation distance between rows.
pub fn dobrushin(m: &[Vec<f64>]) -> f64 {
    let mut best = 0.0_f64;
    for a in m {
        for b in m {
            let tv: f64 = 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
            best = best.max(tv);
        }
    }
    best
}

/// Higher-order expectation diagnostics for one parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContagionDiagnostics {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Max row-sum error over `M_1`, `M_2`, `M_12` (rows of charged signals).
    pub row_sum_error: f64,
    /// `|φ M_1 − ψ|_∞`.
    pub phi_m1_residual: f64,
    /// `|ψ M_2 − φ|_∞`.
    pub psi_m2_residual: f64,
    /// `|φ M_12 − φ|_∞`.
    pub stationarity_residual: f64,
    /// Dobrushin coefficient of `M_12^k` for `k = 1..=k_max`, restricted to charged signals.
    pub contraction: Vec<f64>,
}

pub fn contagion_diagnostics(model: &TwoAgentSignalModel, theta: usize, k_max: usize) -> Result<ContagionDiagnostics> {
    model.validate()?;
    if theta >= model.num_params() {
        return Err(Error::Invalid(format!("parameter index {theta} out of range")));
    }
    let (phi, psi) = model.marginals(theta);
    let (m1, m2) = model.transition_matrices(theta);
    let m12 = matmul(&m1, &m2);
    let charged1: Vec<usize> = (0..phi.len()).filter(|&i| phi[i] > 0.0).collect();
    let charged2: Vec<usize> = (0..psi.len()).filter(|&j| psi[j] > 0.0).collect();
    let mut row_err = 0.0_f64;
    for &i in &charged1 {
        row_err = row_err.max((m1[i].iter().sum::<f64>() - 1.0).abs());
        row_err = row_err.max((m12[i].iter().sum::<f64>() - 1.0).abs());
    }
    for &j in &charged2 {
        row_err = row_err.max((m2[j].iter().sum::<f64>() - 1.0).abs());
    }
    let vec_mat = |v: &[f64], m: &[Vec<f64>]| -> Vec<f64> {
        let n = m.first().map_or(0, Vec::len);
        (0..n).map(|j| v.iter().zip(m).map(|(a, r)| a * r[j]).sum()).collect()
    };
    let inf = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let phi_m1 = vec_mat(&phi, &m1);
    let psi_m2 = vec_mat(&psi, &m2);
    let phi_m12 = vec_mat(&phi, &m12);
    let restrict = |m: &[Vec<f64>]| -> Vec<Vec<f64>> { charged1.iter().map(|&i| m[i].clone()).collect() };
    let mut power = m12.clone();
    let mut contraction = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        contraction.push(dobrushin(&restrict(&power)));
        power = matmul(&power, &m12);
    }
    Ok(ContagionDiagnostics {
        phi_m1_residual: inf(&phi_m1, &psi),
        psi_m2_residual: inf(&psi_m2, &phi),
        stationarity_residual: inf(&phi_m12, &phi),
        phi,
        psi,
        row_sum_error: row_err,
        contraction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonLearningOptions {
    /// Cap on iterations of the everyone-q-believes operator.
    pub k_max: usize,
    /// Cap on enumerated joint histories.
    pub max_states: usize,
    /// Subtrees of the history enumeration with less prior-weighted mass are dropped.
    pub prune: f64,
}

impl Default for CommonLearningOptions {
    fn default() -> Self {
        Self {
            k_max: 50,
            max_states: 4_000_000,
            prune: 0.0,
        }
    }
}

/// Joint histories summarized by profile counts, with each agent's own counts.
struct HistorySpace {
    type1: Vec<u32>,
    type2: Vec<u32>,
    /// `weight[s * m + θ]`: prior times probability of the count vector under `θ`.
    weight: Vec<f64>,
    types1: HashMap<Vec<u16>, u32>,
    types2: HashMap<Vec<u16>, u32>,
    dropped: f64,
}

struct Enumerator<'a> {
    model: &'a TwoAgentSignalModel,
    ln_prior: Vec<f64>,
    ln_p: Vec<Vec<f64>>,
    /// `tail[θ][k] = Σ_{k' ≥ k} p_θ(k')`
    tail: Vec<Vec<f64>>,
    ln_fact: Vec<f64>,
    t: usize,
    opts: CommonLearningOptions,
    n1: usize,
    n2: usize,
    c1: Vec<u16>,
    c2: Vec<u16>,
    out: HistorySpace,
}

impl Enumerator<'_> {
    // `acc[θ]` = ln prior + ln T! − Σ ln n_k! + Σ n_k ln p_k over profiles fixed so far
    fn walk(&mut self, k: usize, remaining: usize, acc: &[f64]) -> Result<()> {
        let m = self.model.num_params();
        let kk = self.model.profiles.len();
        // mass of every completion, per θ
        let subtree: Vec<f64> = (0..m)
            .map(|th| {
                if remaining == 0 {
                    acc[th].exp()
                } else if self.tail[th][k] <= 0.0 {
                    0.0
                } else {
                    (acc[th] - self.ln_fact[remaining] + remaining as f64 * self.tail[th][k].ln()).exp()
                }
            })
            .collect();
        let mass: f64 = subtree.iter().sum();
        if mass <= 0.0 {
            return Ok(());
        }
        if mass < self.opts.prune {
            self.out.dropped += mass;
            return Ok(());
        }
        if remaining == 0 || k + 1 == kk {
            let (a, b) = self.model.profiles[k];
            let r = remaining as u16;
            self.c1[a] += r;
            self.c2[b] += r;
            let w: Vec<f64> = (0..m)
                .map(|th| {
                    if remaining == 0 {
                        acc[th].exp()
                    } else if self.ln_p[th][k] == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (acc[th] - self.ln_fact[remaining] + remaining as f64 * self.ln_p[th][k]).exp()
                    }
                })
                .collect();
            if w.iter().any(|v| *v > 0.0) {
                if self.out.type1.len() >= self.opts.max_states {
                    return Err(Error::Precondition(format!(
                        "history space exceeds {} joint histories; lower the horizon or raise the budget",
                        self.opts.max_states
                    )));
                }
                let next1 = self.out.types1.len() as u32;
                let i1 = *self.out.types1.entry(self.c1.clone()).or_insert(next1);
                let next2 = self.out.types2.len() as u32;
                let i2 = *self.out.types2.entry(self.c2.clone()).or_insert(next2);
                self.out.type1.push(i1);
                self.out.type2.push(i2);
                self.out.weight.extend(w);
            }
            self.c1[a] -= r;
            self.c2[b] -= r;
            return Ok(());
        }
        let (a, b) = self.model.profiles[k];
        for n in 0..=remaining {
            let mut next = acc.to_vec();
            let mut dead = true;
            for th in 0..m {
                if n > 0 {
                    next[th] += n as f64 * self.ln_p[th][k];
                }
                next[th] -= self.ln_fact[n];
                if next[th] > f64::NEG_INFINITY {
                    dead = false;
                }
            }
            if dead {
                break;
            }
            self.c1[a] += n as u16;
            self.c2[b] += n as u16;
            let r = self.walk(k + 1, remaining - n, &next);
            self.c1[a] -= n as u16;
            self.c2[b] -= n as u16;
            r?;
        }
        let _ = (self.n1, self.n2);
        Ok(())
    }
}

fn enumerate_histories(model: &TwoAgentSignalModel, prior: &[f64], t: usize, opts: CommonLearningOptions) -> Result<HistorySpace> {
    if t > u16::MAX as usize {
        return Err(Error::Invalid("horizon too long".into()));
    }
    let m = model.num_params();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=t).scan(0.0, |s, i| {
            *s += (i as f64).ln();
            Some(*s)
        }))
        .collect();
    let tail = model
        .probs
        .iter()
        .map(|row| {
            let mut v = vec![0.0; row.len() + 1];
            for k in (0..row.len()).rev() {
                v[k] = v[k + 1] + row[k];
            }
            v
        })
        .collect();
    let (n1, n2) = model.sizes();
    let mut e = Enumerator {
        model,
        ln_prior: prior.iter().map(|p| ln_or_neg_inf(*p)).collect(),
        ln_p: model.probs.iter().map(|r| r.iter().map(|v| ln_or_neg_inf(*v)).collect()).collect(),
        tail,
        ln_fact,
        t,
        opts,
        n1,
        n2,
        c1: vec![0; n1],
        c2: vec![0; n2],
        out: HistorySpace {
            type1: Vec::new(),
            type2: Vec::new(),
            weight: Vec::new(),
            types1: HashMap::new(),
            types2: HashMap::new(),
            dropped: 0.0,
        },
    };
    let start: Vec<f64> = (0..m).map(|th| e.ln_prior[th] + e.ln_fact[e.t]).collect();
    e.walk(0, t, &start)?;
    Ok(e.out)
}

impl HistorySpace {
    fn num_params(&self) -> usize {
        if self.type1.is_empty() {
            0
        } else {
            self.weight.len() / self.type1.len()
        }
    }

    /// Types of each agent whose conditional probability of the event is at least `q`.
    fn believers(&self, event: &dyn Fn(usize) -> f64, q: f64) -> (FixedBitSet, FixedBitSet) {
        let m = self.num_params();
        let (t1, t2) = (self.types1.len(), self.types2.len());
        let (mut e1, mut e2) = (vec![0.0; t1], vec![0.0; t2]);
        let (mut z1, mut z2) = (vec![0.0; t1], vec![0.0; t2]);
        for s in 0..self.type1.len() {
            let tot: f64 = self.weight[s * m..(s + 1) * m].iter().sum();
            let ev = event(s);
            let (a, b) = (self.type1[s] as usize, self.type2[s] as usize);
            e1[a] += ev;
            e2[b] += ev;
            z1[a] += tot;
            z2[b] += tot;
        }
        let pick = |e: &[f64], z: &[f64]| {
            let mut bits = FixedBitSet::with_capacity(e.len());
            for i in 0..e.len() {
                if z[i] > 0.0 && e[i] >= q * z[i] - 1e-12 * z[i] {
                    bits.insert(i);
                }
            }
            bits
        };
        (pick(&e1, &z1), pick(&e2, &z2))
    }

    fn mass(&self, theta: usize, s1: &FixedBitSet, s2: &FixedBitSet) -> f64 {
        let m = self.num_params();
        (0..self.type1.len())
            .filter(|&s| s1.contains(self.type1[s] as usize) && s2.contains(self.type2[s] as usize))
            .map(|s| self.weight[s * m + theta])
            .sum()
    }

    fn theta_mass(&self, theta: usize) -> f64 {
        let m = self.num_params();
        (0..self.type1.len()).map(|s| self.weight[s * m + theta]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommonLearningReport {
    pub horizon: usize,
    pub q: f64,
    pub theta: usize,
    /// `P_θ` that each agent q-believes `θ`.
    pub individual: [f64; 2],
    /// `P_θ` that both q-believe `θ`.
    pub both: f64,
    /// `P_θ` of common q-belief in `θ`.
    pub common: f64,
    pub iterations: usize,
    /// The iteration reached a fixed point or cycle within `k_max`.
    pub stabilized: bool,
    pub histories: usize,
    /// Prior-weighted mass of pruned histories.
    pub dropped_mass: f64,
    /// Sampled path: (agent 1 q-believes, agent 2 q-believes, common q-belief).
    pub sampled: Option<[bool; 3]>,
}

/// Exact probabilities of individual and common q-belief in `theta` after `t` periods,
/// computed on the space of profile-count histories.
pub fn common_learning(
    model: &TwoAgentSignalModel,
    prior: &[f64],
    theta: usize,
    t: usize,
    q: f64,
    opts: CommonLearningOptions,
) -> Result<CommonLearningReport> {
    common_learning_sim(model, prior, theta, t, q, opts, None)
}

/// As [`common_learning`], additionally drawing one path under `theta` with `seed`
/// and reporting whether each belief holds on it.
pub fn common_learning_sim(
    model: &TwoAgentSignalModel,
    prior: &[f64],
    theta: usize,
    t: usize,
    q: f64,
    opts: CommonLearningOptions,
    seed: Option<u64>,
) -> Result<CommonLearningReport> {
    model.validate()?;
    check_prior(prior, model.num_params())?;
    if theta >= model.num_params() || prior[theta] <= 0.0 {
        return Err(Error::Invalid("target parameter must exist and carry prior mass".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Invalid("q must lie in (0,1)".into()));
    }
    let space = enumerate_histories(model, prior, t, opts)?;
    let m = model.num_params();
    let (b1, b2) = space.believers(&|s| space.weight[s * m + theta], q);
    let p_theta = space.theta_mass(theta);
    let all1 = {
        let mut b = FixedBitSet::with_capacity(space.types1.len());
        b.insert_range(..);
        b
    };
    let all2 = {
        let mut b = FixedBitSet::with_capacity(space.types2.len());
        b.insert_range(..);
        b
    };
    let individual = [space.mass(theta, &b1, &all2) / p_theta, space.mass(theta, &all1, &b2) / p_theta];
    let both = space.mass(theta, &b1, &b2) / p_theta;
    let (mut s1, mut s2) = (b1.clone(), b2.clone());
    let (mut run1, mut run2) = (b1.clone(), b2.clone());
    let mut seen: HashSet<(FixedBitSet, FixedBitSet)> = HashSet::new();
    seen.insert((s1.clone(), s2.clone()));
    let mut stabilized = false;
    let mut iterations = 1;
    while iterations < opts.k_max {
        let (c1, c2) = (s1.clone(), s2.clone());
        let (n1, n2) = space.believers(
            &|s| {
                if c1.contains(space.type1[s] as usize) && c2.contains(space.type2[s] as usize) {
                    space.weight[s * m..(s + 1) * m].iter().sum()
                } else {
                    0.0
                }
            },
            q,
        );
        iterations += 1;
        run1.intersect_with(&n1);
        run2.intersect_with(&n2);
        if !seen.insert((n1.clone(), n2.clone())) {
            stabilized = true;
            break;
        }
        s1 = n1;
        s2 = n2;
        if run1.is_clear() || run2.is_clear() {
            stabilized = true;
            break;
        }
    }
    let common = space.mass(theta, &run1, &run2) / p_theta;
    let sampled = match seed {
        None => None,
        Some(seed) => {
            let mut rng = path_rng(seed, 0);
            let draws = sample_path(&mut rng, &model.probs[theta], t);
            let (n1, n2) = model.sizes();
            let (mut c1, mut c2) = (vec![0u16; n1], vec![0u16; n2]);
            for k in draws {
                let (a, b) = model.profiles[k];
                c1[a] += 1;
                c2[b] += 1;
            }
            match (space.types1.get(&c1), space.types2.get(&c2)) {
                (Some(&i), Some(&j)) => {
                    let (i, j) = (i as usize, j as usize);
                    Some([b1.contains(i), b2.contains(j), run1.contains(i) && run2.contains(j)])
                }
                _ => None,
            }
        }
    };
    Ok(CommonLearningReport {
        horizon: t,
        q,
        theta,
        individual,
        both,
        common,
        iterations,
        stabilized,
        histories: space.type1.len(),
        dropped_mass: space.dropped,
        sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use approx::assert_abs_diff_eq;

    #[test]
    fn binary_closed_form() {
        let env = LearningEnvironment::binary(0.75, 0.5).unwrap();
        let traj = sequential_posterior(&env, &[0, 0, 1]).unwrap();
        assert_abs_diff_eq!(traj[3][0], 0.75, epsilon = 1e-15);
        assert_eq!(sequential_posterior(&env, &[]).unwrap(), vec![vec![0.5, 0.5]]);
        let long = sequential_posterior(&env, &[0; 20]).unwrap();
        assert!((1.0 - long[20][0]).abs() < 1e-8);
        let closed = 1.0 / (1.0 + (1.0f64 / 3.0).powi(20));
        assert_abs_diff_eq!(long[20][0], closed, epsilon = 1e-15);
    }

    #[test]
    fn impossible_observation() {
        let env = LearningEnvironment::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![1.0, 0.0]], 0, 0).unwrap();
        assert!(matches!(sequential_posterior(&env, &[1]), Err(Error::ZeroProbability(1))));
        assert!(sequential_posterior(&env, &[2]).is_err());
    }

    #[test]
    fn order_invariance_and_counts() {
        let env = LearningEnvironment::new(
            vec![0.0, 1.0, 2.0],
            vec![0.2, 0.5, 0.3],
            vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.1, 0.2, 0.7]],
            0,
            0,
        )
        .unwrap();
        let a = sequential_posterior(&env, &[0, 2, 1, 2, 2]).unwrap();
        let b = sequential_posterior(&env, &[2, 2, 1, 0, 2]).unwrap();
        let c = batch_posterior(&env, &[1, 1, 3]).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a[5][i], b[5][i], epsilon = 1e-12);
            assert_abs_diff_eq!(a[5][i], c[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn consistency_binary() {
        let env = LearningEnvironment::binary(0.75, 0.5).unwrap();
        let r = consistency_sim(&env, 1000, 200, 0.01, 11).unwrap();
        assert!(r.fraction >= 0.99, "{}", r.fraction);
        let r0 = consistency_sim(&env, 10, 0, 0.01, 11).unwrap();
        assert_eq!(r0.fraction, 0.0);
        let again = consistency_sim(&env, 1000, 200, 0.01, 11).unwrap();
        assert_eq!(r, again);
        let dup = LearningEnvironment::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![vec![0.5, 0.5]; 2], 0, 0).unwrap();
        assert!(matches!(consistency_sim(&dup, 10, 10, 0.01, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn merging_cases() {
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let uniform = vec![1.0 / 9.0; 9];
        let lin: Vec<f64> = (1..10).map(|i| i as f64 / 45.0).collect();
        let env = LearningEnvironment::coin(grid.clone(), uniform.clone(), 6).unwrap();
        let same = merging_sim(&env, &uniform, 20, 100, 3, 5).unwrap();
        assert!(same.trajectory.iter().all(|r| r.q90 < 1e-12));
        let r = merging_sim(&env, &lin, 200, 500, 5, 5).unwrap();
        assert!(r.trajectory.last().unwrap().median < 0.01);
        assert!(r.trajectory[0].median > r.trajectory.last().unwrap().median);
        let mut disjoint = vec![0.0; 9];
        disjoint[0] = 1.0;
        assert!(matches!(merging_sim(&env, &disjoint, 5, 5, 2, 1), Err(Error::Precondition(_))));
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn kls_binary_exact() {
        let thetas = [r(0, 1), r(1, 1)];
        let fine = SignalStructure::binary_symmetric(r(4, 5));
        let coarse = crate::infocost::dilute(&fine, r(1, 2)).unwrap();
        let rep = kls_disagreement_check(&thetas, &[r(7, 10), r(3, 10)], &[r(3, 10), r(7, 10)], &fine, &coarse).unwrap();
        assert!(rep.ab_chain_holds && rep.ba_chain_holds);
        assert!(rep.mu_a < rep.mu_ab_fine && rep.mu_ab_fine < rep.mu_ab_coarse);
        let same = kls_disagreement_check(&thetas, &[r(1, 2), r(1, 2)], &[r(1, 2), r(1, 2)], &fine, &coarse).unwrap();
        assert!(same.mu_ab_fine == same.mu_a && same.mu_ab_coarse == same.mu_b);
        let none = SignalStructure::uninformative(2);
        let u = kls_disagreement_check(&thetas, &[r(7, 10), r(3, 10)], &[r(3, 10), r(7, 10)], &fine, &none).unwrap();
        assert_eq!(u.mu_ab_coarse, u.mu_b);
        assert!(kls_disagreement_check(&thetas, &[r(3, 10), r(7, 10)], &[r(7, 10), r(3, 10)], &fine, &coarse).is_err());
    }

    #[test]
    fn kls_sampling_agrees() {
        let thetas = [0.0, 1.0];
        let fine = SignalStructure::binary_symmetric(0.8);
        let exact = kls_disagreement_check(&thetas, &[0.7, 0.3], &[0.3, 0.7], &fine, &SignalStructure::uninformative(2)).unwrap();
        let mut rng = path_rng(9, 0);
        let est = kls_monte_carlo(&mut rng, &thetas, &[0.7, 0.3], &[0.3, 0.7], &fine, 200_000).unwrap();
        assert_abs_diff_eq!(est, exact.mu_ab_fine, epsilon = 5e-3);
    }

    #[test]
    fn public_signals_common_equals_individual() {
        let m = TwoAgentSignalModel::public(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let rep = common_learning(&m, &[0.5, 0.5], 0, 12, 0.9, CommonLearningOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.common, rep.individual[0], epsilon = 1e-12);
        assert_abs_diff_eq!(rep.both, rep.individual[1], epsilon = 1e-12);
    }

    #[test]
    fn independent_signals_learn_commonly() {
        let m = TwoAgentSignalModel::conditionally_independent(
            &[vec![0.75, 0.25], vec![0.25, 0.75]],
            &[vec![0.75, 0.25], vec![0.25, 0.75]],
        )
        .unwrap();
        let rep = common_learning_sim(&m, &[0.5, 0.5], 0, 30, 0.9, CommonLearningOptions::default(), Some(4)).unwrap();
        assert!(rep.common > 0.9, "{rep:?}");
        assert!(rep.stabilized);
        let d = contagion_diagnostics(&m, 0, 3).unwrap();
        assert!(d.contraction[0] < 1e-12);
        assert!(d.stationarity_residual < 1e-12 && d.row_sum_error < 1e-12);
    }

    #[test]
    fn staggered_structure() {
        let m = TwoAgentSignalModel::staggered(&[0.2, 0.8], 0.1, 40).unwrap();
        assert_eq!(m.profiles.len(), 81);
        assert_eq!(m.profiles[3], (2, 1));
        let d = contagion_diagnostics(&m, 1, 5).unwrap();
        assert!(d.phi_m1_residual < 1e-12 && d.psi_m2_residual < 1e-12 && d.stationarity_residual < 1e-12);
        assert!(d.contraction[4] > 0.5);
    }

    #[test]
    fn staggered_contagion_small() {
        let m = TwoAgentSignalModel::staggered(&[0.2, 0.8], 0.1, 3).unwrap();
        let rep = common_learning(&m, &[0.5, 0.5], 1, 6, 0.9, CommonLearningOptions::default()).unwrap();
        assert!(rep.both > 0.5);
        assert_eq!(rep.common, 0.0);
    }
}
