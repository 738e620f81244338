//! Stochastic-order tests on finite grids.

use serde::Serialize;

use crate::scalar::{sum, Scalar};
use crate::{Error, Result};

/// Weights on a strictly increasing 1-D grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDensity<T> {
    pub grid: Vec<f64>,
    pub mass: Vec<T>,
}

impl<T: Scalar> FiniteDensity<T> {
    pub fn new(grid: Vec<f64>, mass: Vec<T>) -> Result<Self> {
        if grid.len() != mass.len() || grid.is_empty() {
            return Err(Error::Dimension(format!(
                "{} grid points and {} masses",
                grid.len(),
                mass.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invariant("grid must be strictly increasing".into()));
        }
        if mass.iter().any(|m| *m < T::zero()) {
            return Err(Error::Invariant("masses must be nonnegative".into()));
        }
        if !sum(&mass).approx_eq(&T::one()) {
            return Err(Error::Invariant("masses must sum to 1".into()));
        }
        Ok(Self { grid, mass })
    }

    /// Grid `0, 1, ..., n-1`.
    pub fn on_indices(mass: Vec<T>) -> Result<Self> {
        let grid = (0..mass.len()).map(|i| i as f64).collect();
        Self::new(grid, mass)
    }

    pub fn everywhere_positive(&self) -> bool {
        self.mass.iter().all(|m| *m > T::zero())
    }

    pub fn cdf(&self) -> Vec<T> {
        let mut acc = T::zero();
        self.mass
            .iter()
            .map(|m| {
                acc = acc.clone() + m.clone();
                acc.clone()
            })
            .collect()
    }
}

/// One density over a shared realization grid per parameter value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalFamily<T> {
    pub thetas: Vec<f64>,
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> ConditionalFamily<T> {
    pub fn new(thetas: Vec<f64>, grid: Vec<f64>, rows: Vec<Vec<T>>) -> Result<Self> {
        if thetas.len() != rows.len() || thetas.is_empty() {
            return Err(Error::Dimension("one row per parameter value".into()));
        }
        if thetas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invariant("parameter grid must be strictly increasing".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            FiniteDensity::new(grid.clone(), row.clone())
                .map_err(|e| Error::Invariant(format!("row {i}: {e}")))?;
        }
        Ok(Self { thetas, grid, rows })
    }

    /// Parameters and realizations on index grids.
    pub fn on_indices(rows: Vec<Vec<T>>) -> Result<Self> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        Self::new(
            (0..m).map(|i| i as f64).collect(),
            (0..k).map(|i| i as f64).collect(),
            rows,
        )
    }

    pub fn num_params(&self) -> usize {
        self.rows.len()
    }

    pub fn num_realizations(&self) -> usize {
        self.grid.len()
    }

    /// Posterior over parameters after realization `x`; `None` if `x` has zero probability.
    pub fn posterior(&self, prior: &[T], x: usize) -> Option<Vec<T>> {
        let joint: Vec<T> = prior
            .iter()
            .zip(&self.rows)
            .map(|(p, r)| p.clone() * r[x].clone())
            .collect();
        let px = sum(&joint);
        if px <= T::zero() {
            return None;
        }
        Some(joint.into_iter().map(|j| j / px.clone()).collect())
    }

    /// Joint density over (θ, x) built from a prior, flattened row-major.
    pub fn joint(&self, prior: &[T]) -> JointDensity<T> {
        let mass = prior
            .iter()
            .zip(&self.rows)
            .flat_map(|(p, r)| r.iter().map(move |v| p.clone() * v.clone()))
            .collect();
        JointDensity {
            dims: vec![self.num_params(), self.num_realizations()],
            mass,
        }
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x != y) {
        return Err(Error::Dimension("densities are on different grids".into()));
    }
    Ok(())
}

// a*b >= c*d with the weak-inequality slack.
fn cross_ge<T: Scalar>(a: &T, b: &T, c: &T, d: &T) -> bool {
    (a.clone() * b.clone()).ge_tol(&(c.clone() * d.clone()))
}

/// `f(z)g(z') >= f(z')g(z)` for all `z > z'`.
pub fn lr_dominates<T: Scalar>(f: &FiniteDensity<T>, g: &FiniteDensity<T>) -> Result<bool> {
    same_grid(&f.grid, &g.grid)?;
    let n = f.mass.len();
    for z in 0..n {
        for zp in 0..z {
            if !cross_ge(&f.mass[z], &g.mass[zp], &f.mass[zp], &g.mass[z]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Monotone likelihood ratio in cross-product form over all `x > x'`, `θ > θ'`.
pub fn mlrp_check<T: Scalar>(fam: &ConditionalFamily<T>, strict: bool) -> bool {
    mlrp_violation(fam, strict).is_none()
}

/// First `(θ, θ', x, x')` breaking the property, as indices.
pub fn mlrp_violation<T: Scalar>(fam: &ConditionalFamily<T>, strict: bool) -> Option<[usize; 4]> {
    let (m, k) = (fam.num_params(), fam.num_realizations());
    for t in 0..m {
        for tp in 0..t {
            for x in 0..k {
                for xp in 0..x {
                    let lhs = fam.rows[t][x].clone() * fam.rows[tp][xp].clone();
                    let rhs = fam.rows[t][xp].clone() * fam.rows[tp][x].clone();
                    let ok = if strict { lhs > rhs } else { lhs.ge_tol(&rhs) };
                    if !ok {
                        return Some([t, tp, x, xp]);
                    }
                }
            }
        }
    }
    None
}

/// Joint density on a product of index grids, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDensity<T> {
    pub dims: Vec<usize>,
    pub mass: Vec<T>,
}

impl<T: Scalar> JointDensity<T> {
    pub fn new(dims: Vec<usize>, mass: Vec<T>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != mass.len() || dims.is_empty() {
            return Err(Error::Dimension(format!("{} masses for a {:?} grid", mass.len(), dims)));
        }
        if mass.iter().any(|m| *m < T::zero()) || !sum(&mass).approx_eq(&T::one()) {
            return Err(Error::Invariant("joint masses must be nonnegative and sum to 1".into()));
        }
        Ok(Self { dims, mass })
    }

    fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (c, d)| acc * d + c)
    }

    fn at(&self, coords: &[usize]) -> &T {
        &self.mass[self.index(coords)]
    }

    fn all_coords(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &d in &self.dims {
            out = out
                .into_iter()
                .flat_map(|c| {
                    (0..d).map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        out
    }
}

/// Affiliation via the pairwise condition: for every pair of coordinates and
/// every fixing of the rest, the 2-D slice is totally positive of order 2.
pub fn affiliation_check<T: Scalar>(joint: &JointDensity<T>) -> Result<bool> {
    if joint.dims.len() < 2 {
        return Err(Error::Precondition("affiliation needs at least two coordinates".into()));
    }
    let d = joint.dims.len();
    for base in joint.all_coords() {
        for i in 0..d {
            for j in (i + 1)..d {
                // Only visit each slice once: the base has zeros in coordinates i and j.
                if base[i] != 0 || base[j] != 0 {
                    continue;
                }
                for a in 0..joint.dims[i] {
                    for ap in 0..a {
                        for b in 0..joint.dims[j] {
                            for bp in 0..b {
                                let mut c = base.clone();
                                let mut get = |x: usize, y: usize| {
                                    c[i] = x;
                                    c[j] = y;
                                    joint.at(&c).clone()
                                };
                                let (hh, ll, hl, lh) = (get(a, b), get(ap, bp), get(a, bp), get(ap, b));
                                if !cross_ge(&hh, &ll, &hl, &lh) {
                                    return Ok(false);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Full lattice condition `f(z ∨ z') f(z ∧ z') >= f(z) f(z')` over all pairs of points.
pub fn affiliation_check_lattice<T: Scalar>(joint: &JointDensity<T>) -> bool {
    let pts = joint.all_coords();
    for z in &pts {
        for zp in &pts {
            let join: Vec<usize> = z.iter().zip(zp).map(|(a, b)| *a.max(b)).collect();
            let meet: Vec<usize> = z.iter().zip(zp).map(|(a, b)| *a.min(b)).collect();
            if !cross_ge(joint.at(&join), joint.at(&meet), joint.at(z), joint.at(zp)) {
                return false;
            }
        }
    }
    true
}

/// `F` first-order dominates `G`: `F`'s CDF lies weakly below `G`'s.
pub fn fosd_check<T: Scalar>(f: &FiniteDensity<T>, g: &FiniteDensity<T>) -> Result<bool> {
    same_grid(&f.grid, &g.grid)?;
    Ok(fosd_masses(&f.mass, &g.mass))
}

pub(crate) fn fosd_masses<T: Scalar>(f: &[T], g: &[T]) -> bool {
    let (mut cf, mut cg) = (T::zero(), T::zero());
    for (a, b) in f.iter().zip(g) {
        cf = cf + a.clone();
        cg = cg + b.clone();
        if !cg.ge_tol(&cf) {
            return false;
        }
    }
    true
}

/// Posteriors over parameters are FOSD-increasing in the realization.
pub fn posterior_fosd_property<T: Scalar>(prior: &[T], fam: &ConditionalFamily<T>) -> Result<bool> {
    if prior.len() != fam.num_params() {
        return Err(Error::Dimension("prior length differs from parameter count".into()));
    }
    let mut posts = Vec::with_capacity(fam.num_realizations());
    for x in 0..fam.num_realizations() {
        posts.push(fam.posterior(prior, x).ok_or_else(|| {
            Error::Precondition(format!("realization {x} has zero marginal probability"))
        })?);
    }
    Ok(posts.windows(2).all(|w| fosd_masses(&w[1], &w[0])))
}

/// Whether `x` is more favorable than `xp`, by the prior-free ratio criterion.
pub fn more_favorable_check<T: Scalar>(fam: &ConditionalFamily<T>, x: usize, xp: usize) -> Result<bool> {
    let k = fam.num_realizations();
    if x >= k || xp >= k {
        return Err(Error::Invalid("realization index out of range".into()));
    }
    let m = fam.num_params();
    for t in 0..m {
        for tp in 0..t {
            if !cross_ge(&fam.rows[t][x], &fam.rows[tp][xp], &fam.rows[t][xp], &fam.rows[tp][x]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether the posterior at `x` dominates the posterior at `xp` for each listed prior.
pub fn more_favorable_by_priors<T: Scalar>(fam: &ConditionalFamily<T>, x: usize, xp: usize, priors: &[Vec<T>]) -> bool {
    priors.iter().all(|p| match (fam.posterior(p, x), fam.posterior(p, xp)) {
        (Some(a), Some(b)) => fosd_masses(&a, &b),
        _ => true,
    })
}

/// Concavity of `ln f` on an equally spaced grid.
pub fn log_concavity_check(d: &FiniteDensity<f64>) -> Result<bool> {
    let g = &d.grid;
    if g.len() >= 3 {
        let h = g[1] - g[0];
        if g.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
            return Err(Error::Invalid("grid is not equally spaced".into()));
        }
    }
    if d.mass.iter().any(|&m| m < 1e-15) {
        return Err(Error::Precondition("log-concavity needs positive mass everywhere".into()));
    }
    let l: Vec<f64> = d.mass.iter().map(|m| m.ln()).collect();
    Ok(l.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 1e-12))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThresholdRule {
    /// Accept when the realization value is at least the threshold.
    Realization,
    /// Accept when the posterior mean of the parameter is at least the threshold.
    PosteriorMean,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub accepted_mass: f64,
    /// `None` when nothing is accepted.
    pub conditional_mean: Option<f64>,
}

/// Acceptance mass and mean parameter among accepted draws, per threshold.
pub fn threshold_report(
    prior: &[f64],
    fam: &ConditionalFamily<f64>,
    thresholds: &[f64],
    rule: ThresholdRule,
) -> Result<Vec<ThresholdRow>> {
    if prior.len() != fam.num_params() {
        return Err(Error::Dimension("prior length differs from parameter count".into()));
    }
    let k = fam.num_realizations();
    let px: Vec<f64> = (0..k)
        .map(|x| prior.iter().zip(&fam.rows).map(|(p, r)| p * r[x]).sum())
        .collect();
    // Σ_θ p(θ) f(x|θ) θ
    let num: Vec<f64> = (0..k)
        .map(|x| {
            prior
                .iter()
                .zip(&fam.rows)
                .zip(&fam.thetas)
                .map(|((p, r), t)| p * r[x] * t)
                .sum()
        })
        .collect();
    let score: Vec<f64> = (0..k)
        .map(|x| match rule {
            ThresholdRule::Realization => fam.grid[x],
            ThresholdRule::PosteriorMean => {
                if px[x] > 0.0 {
                    num[x] / px[x]
                } else {
                    f64::NEG_INFINITY
                }
            }
        })
        .collect();
    let rows: Vec<ThresholdRow> = thresholds
        .iter()
        .map(|&t| {
            let (mut mass, mut acc) = (0.0, 0.0);
            for x in 0..k {
                if score[x] >= t - 1e-12 && px[x] > 0.0 {
                    mass += px[x];
                    acc += num[x];
                }
            }
            ThresholdRow {
                threshold: t,
                accepted_mass: mass,
                conditional_mean: (mass > 0.0).then(|| acc / mass),
            }
        })
        .collect();
    if rows.iter().all(|r| r.conditional_mean.is_none()) {
        return Err(Error::Precondition("every threshold accepts nothing".into()));
    }
    Ok(rows)
}

/// First pair `(lower, higher)` of thresholds where the lower one has the
/// strictly larger conditional mean.
pub fn find_reversal(rows: &[ThresholdRow]) -> Option<(f64, f64)> {
    for (i, lo) in rows.iter().enumerate() {
        for hi in &rows[i + 1..] {
            if let (Some(a), Some(b)) = (lo.conditional_mean, hi.conditional_mean) {
                if lo.threshold < hi.threshold && a > b + 1e-12 {
                    return Some((lo.threshold, hi.threshold));
                }
            }
        }
    }
    None
}

/// Additive noise family: parameter levels `0..levels`, realization grid
/// widened by the noise support, `noise[j]` the mass of offset `j - half`.
pub fn additive_family(levels: usize, noise: &[f64]) -> Result<ConditionalFamily<f64>> {
    if noise.len() % 2 == 0 {
        return Err(Error::Invalid("noise support must be symmetric with odd length".into()));
    }
    let half = noise.len() / 2;
    let k = levels + 2 * half;
    let rows = (0..levels)
        .map(|t| {
            let mut r = vec![0.0; k];
            for (j, w) in noise.iter().enumerate() {
                r[t + j] += w;
            }
            r
        })
        .collect();
    let thetas = (0..levels).map(|t| t as f64).collect();
    let grid = (0..k).map(|x| x as f64 - half as f64).collect();
    ConditionalFamily::new(thetas, grid, rows)
}

/// Referee signal: the true level with probability 0.8, two levels off either way with 0.1 each.
pub fn editor_family(levels: usize) -> ConditionalFamily<f64> {
    additive_family(levels, &[0.1, 0.0, 0.8, 0.0, 0.1]).expect("odd symmetric noise")
}

/// Grid search over two-bump priors for a realization-threshold reversal.
pub fn search_editor_reversal(levels: usize) -> Option<(Vec<f64>, f64, f64)> {
    let fam = editor_family(levels);
    let thresholds: Vec<f64> = fam.grid.clone();
    let weights = [0.02, 0.05, 0.1, 0.2, 0.4, 0.6];
    for a in 0..levels {
        for b in (a + 1)..levels {
            for &wa in &weights {
                for &wb in &weights {
                    let floor = 0.01;
                    let mut prior = vec![floor; levels];
                    prior[a] += wa;
                    prior[b] += wb;
                    let total: f64 = prior.iter().sum();
                    prior.iter_mut().for_each(|p| *p /= total);
                    let rows = threshold_report(&prior, &fam, &thresholds, ThresholdRule::Realization).ok()?;
                    if let Some((lo, hi)) = find_reversal(&rows) {
                        return Some((prior, lo, hi));
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn lr_examples() {
        let f = FiniteDensity::on_indices(vec![0.25, 0.75]).unwrap();
        let g = FiniteDensity::on_indices(vec![0.75, 0.25]).unwrap();
        assert!(lr_dominates(&f, &g).unwrap());
        assert!(!lr_dominates(&g, &f).unwrap());
        assert!(lr_dominates(&f, &f).unwrap());
        let b7 = FiniteDensity::on_indices(vec![r(9, 100), r(42, 100), r(49, 100)]).unwrap();
        let b3 = FiniteDensity::on_indices(vec![r(49, 100), r(42, 100), r(9, 100)]).unwrap();
        assert!(lr_dominates(&b7, &b3).unwrap());
        let other = FiniteDensity::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(lr_dominates(&f, &other).is_err());
    }

    #[test]
    fn mlrp_examples() {
        // rows ordered low parameter (B) to high (A)
        let fam = ConditionalFamily::on_indices(vec![vec![r(3, 4), r(1, 4)], vec![r(1, 4), r(3, 4)]]).unwrap();
        assert!(mlrp_check(&fam, false));
        assert!(mlrp_check(&fam, true));
        let single = ConditionalFamily::on_indices(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        assert!(mlrp_check(&single, true));
        let editor = editor_family(9);
        assert!(!mlrp_check(&editor, false));
        assert!(mlrp_violation(&editor, false).is_some());
    }

    #[test]
    fn affiliation_two_by_two() {
        let pos = JointDensity::new(vec![2, 2], vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        assert!(affiliation_check(&pos).unwrap());
        let neg = JointDensity::new(vec![2, 2], vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        assert!(!affiliation_check(&neg).unwrap());
        let indep = JointDensity::new(vec![2, 3], vec![0.06, 0.12, 0.12, 0.14, 0.28, 0.28]).unwrap();
        assert!(affiliation_check(&indep).unwrap());
        assert!(affiliation_check_lattice(&indep));
    }

    #[test]
    fn fosd_examples() {
        let hi = FiniteDensity::on_indices(vec![0.0, 1.0]).unwrap();
        let lo = FiniteDensity::on_indices(vec![1.0, 0.0]).unwrap();
        assert!(fosd_check(&hi, &lo).unwrap());
        assert!(!fosd_check(&lo, &hi).unwrap());
        assert!(fosd_check(&lo, &lo).unwrap());
    }

    #[test]
    fn favorable_binary() {
        let fam = ConditionalFamily::on_indices(vec![vec![r(3, 4), r(1, 4)], vec![r(1, 4), r(3, 4)]]).unwrap();
        assert!(more_favorable_check(&fam, 1, 0).unwrap());
        assert!(!more_favorable_check(&fam, 0, 1).unwrap());
        assert!(more_favorable_check(&fam, 0, 0).unwrap());
    }

    #[test]
    fn editor_has_unfavorable_higher_grade() {
        let fam = editor_family(9);
        let k = fam.num_realizations();
        let found = (0..k).any(|x| (0..x).any(|xp| !more_favorable_check(&fam, x, xp).unwrap()));
        assert!(found);
    }

    #[test]
    fn log_concavity_examples() {
        let d = |m: Vec<f64>| FiniteDensity::on_indices(m).unwrap();
        assert!(log_concavity_check(&d(vec![0.1, 0.8, 0.1])).unwrap());
        assert!(!log_concavity_check(&d(vec![0.4, 0.1, 0.5])).unwrap());
        assert!(log_concavity_check(&d(vec![0.25; 4])).unwrap());
        let grid: Vec<f64> = (0..61).map(|i| -3.0 + 0.1 * i as f64).collect();
        let w: Vec<f64> = grid.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let s: f64 = w.iter().sum();
        let normal = FiniteDensity::new(grid, w.iter().map(|v| v / s).collect()).unwrap();
        assert!(log_concavity_check(&normal).unwrap());
        let uneven = FiniteDensity::new(vec![0.0, 1.0, 3.0], vec![0.3, 0.4, 0.3]).unwrap();
        assert!(log_concavity_check(&uneven).is_err());
    }

    #[test]
    fn revealing_thresholds_are_monotone() {
        let fam = ConditionalFamily::on_indices(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let rows = threshold_report(&[0.2, 0.5, 0.3], &fam, &[0.0, 1.0, 2.0], ThresholdRule::Realization).unwrap();
        assert!(find_reversal(&rows).is_none());
        let means: Vec<f64> = rows.iter().map(|r| r.conditional_mean.unwrap()).collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn editor_reversal_exists() {
        let (prior, lo, hi) = search_editor_reversal(9).expect("reversal");
        assert!(lo < hi);
        let rows = threshold_report(&prior, &editor_family(9), &[lo, hi], ThresholdRule::Realization).unwrap();
        assert!(rows[0].conditional_mean.unwrap() > rows[1].conditional_mean.unwrap());
        assert!(rows[0].accepted_mass > rows[1].accepted_mass);
    }

    #[test]
    fn uninformative_threshold_degenerate() {
        let fam = ConditionalFamily::on_indices(vec![vec![1.0], vec![1.0]]).unwrap();
        let rows = threshold_report(&[0.5, 0.5], &fam, &[0.0, 1.0], ThresholdRule::PosteriorMean).unwrap();
        assert_eq!(rows[0].conditional_mean, Some(0.5));
        assert_eq!(rows[1].conditional_mean, None);
    }
}
