use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::family::{condition, LocalDistributionFamily};
use super::local::{canonical, LocalDist, PROB_TOL};
use crate::csp::ConstraintHypergraph;
use crate::error::{Error, Result};

/// Minimum eigenvalue accepted as PSD.
pub const PSD_TOL: f64 = -1e-8;
/// Correlations of vertices with variance below this are reported as 0.
pub const DEGENERATE_VAR: f64 = 1e-14;
/// Rounding slack when comparing an average correlation with its target.
const CORR_SLACK: f64 = 1e-12;

fn check_host(theta: &LocalDistributionFamily, g: &ConstraintHypergraph) -> Result<()> {
    if theta.vertex_count() != g.vertex_count() {
        return Err(Error::Shape(format!(
            "family covers {} vertices, instance has {}",
            theta.vertex_count(),
            g.vertex_count()
        )));
    }
    Ok(())
}

/// Pairwise second-order statistics of a family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Statistics {
    pub means: Vec<f64>,
    pub stdev: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub corr: Vec<Vec<f64>>,
    /// Vertices with zero variance (their correlations are reported as 0).
    pub degenerate: Vec<bool>,
    /// `E_{i,j∼w̃ iid}|Corr|`, diagonal included.
    pub avg_abs_corr: f64,
    /// Average of `|Corr(X_i,X_j)|` over `i ≠ j` drawn from `w̃ ⊗ w̃` conditioned on `i ≠ j`.
    pub avg_abs_corr_offdiag: f64,
    /// `E_{i,j∼w̃ iid}|Cov|`.
    pub avg_abs_cov: f64,
    pub bias: f64,
}

pub fn statistics(theta: &LocalDistributionFamily, weights: &[f64]) -> Result<Statistics> {
    let n = theta.vertex_count();
    if weights.len() != n {
        return Err(Error::Shape("one weight per vertex required".into()));
    }
    let means: Vec<f64> = (0..n).map(|i| theta.marginal_one(i)).collect::<Result<_>>()?;
    let var: Vec<f64> = means.iter().map(|m| (m * (1.0 - m)).max(0.0)).collect();
    let degenerate: Vec<bool> = var.iter().map(|v| *v < DEGENERATE_VAR).collect();
    let stdev: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let mut cov = vec![vec![0.0; n]; n];
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        cov[i][i] = var[i];
        corr[i][i] = if degenerate[i] { 0.0 } else { 1.0 };
        for j in i + 1..n {
            let c = theta.pair_one(i, j)? - means[i] * means[j];
            cov[i][j] = c;
            cov[j][i] = c;
            let r = if degenerate[i] || degenerate[j] { 0.0 } else { (c / (stdev[i] * stdev[j])).clamp(-1.0, 1.0) };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    let mut avg_corr = 0.0;
    let mut avg_cov = 0.0;
    let mut off = 0.0;
    let mut off_mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = weights[i] * weights[j];
            avg_corr += w * corr[i][j].abs();
            avg_cov += w * cov[i][j].abs();
            if i != j {
                off += w * corr[i][j].abs();
                off_mass += w;
            }
        }
    }
    let bias = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
    Ok(Statistics {
        means,
        stdev,
        cov,
        corr,
        degenerate,
        avg_abs_corr: avg_corr,
        avg_abs_corr_offdiag: if off_mass > 0.0 { off / off_mass } else { 0.0 },
        avg_abs_cov: avg_cov,
        bias,
    })
}

/// `M_ℓ(θ)`: rows/columns are subsets of size `≤ ℓ/2` (by size, then lexicographic).
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub order: usize,
    pub index: Vec<Vec<usize>>,
    pub entries: DMatrix<f64>,
}

fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &layer {
            let start = s.last().map_or(0, |l| l + 1);
            for v in start..n {
                let mut t = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

impl MomentMatrix {
    pub fn build(theta: &LocalDistributionFamily, order: usize) -> Result<Self> {
        if order < 2 || order % 2 == 1 {
            return Err(Error::invalid(format!("moment order {order} must be even and at least 2")));
        }
        if order > theta.level() {
            return Err(Error::invalid(format!("moment order {order} exceeds level {}", theta.level())));
        }
        let index = subsets_up_to(theta.vertex_count(), order / 2);
        let m = index.len();
        let mut entries = DMatrix::zeros(m, m);
        let mut cache = std::collections::HashMap::new();
        for a in 0..m {
            for b in a..m {
                let mut u = index[a].clone();
                u.extend(&index[b]);
                let u = canonical(&u);
                let v = match cache.get(&u) {
                    Some(v) => *v,
                    None => {
                        let v = if u.is_empty() { 1.0 } else { theta.local(&u)?.prob_all_ones() };
                        cache.insert(u, v);
                        v
                    }
                };
                entries[(a, b)] = v;
                entries[(b, a)] = v;
            }
        }
        Ok(Self { order, index, entries })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= PSD_TOL
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyViolation {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<ConsistencyViolation>,
    pub invalid_locals: Vec<Vec<usize>>,
    pub moment_order: usize,
    pub min_eigenvalue: f64,
    pub bias: f64,
    pub target_bias: f64,
    pub objective: f64,
    pub feasible: bool,
}

/// `E_{e∼w} Pr_θ[ψ(X_e) = 1]`.
pub fn objective(theta: &LocalDistributionFamily, g: &ConstraintHypergraph) -> Result<f64> {
    check_host(theta, g)?;
    let mut total = 0.0;
    for e in g.edges() {
        let l = theta.local(&e.vs)?;
        let mut acc = 0.0;
        for (m, p) in l.probs.iter().enumerate() {
            let args = e
                .vs
                .iter()
                .enumerate()
                .fold(0u32, |a, (j, v)| a | u32::from(l.value_of(m, *v).expect("in local")) << j);
            if g.predicate().accepts_mask(args) {
                acc += p;
            }
        }
        total += e.weight * acc;
    }
    Ok(total)
}

/// Consistency, PSD-ness of the moment matrix, global bias and objective.
///
/// Consistency is checked across all stored locals for stored families, and across
/// the singletons, pairs and edge locals of the host for derived families.
pub fn verify_feasible(theta: &LocalDistributionFamily, g: &ConstraintHypergraph, mu: f64) -> Result<FeasibilityReport> {
    check_host(theta, g)?;
    let n = theta.vertex_count();
    let mut sets: Vec<Vec<usize>> = if theta.is_stored() {
        theta.stored_subsets()
    } else {
        let mut s: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for i in 0..n {
            for j in i + 1..n {
                s.push(vec![i, j]);
            }
        }
        s
    };
    for e in g.edges() {
        let c = canonical(&e.vs);
        if !sets.contains(&c) {
            sets.push(c);
        }
    }
    let locals: Vec<LocalDist> = sets.iter().map(|s| theta.local(s)).collect::<Result<_>>()?;
    let invalid_locals = locals.iter().filter(|l| !l.is_valid()).map(|l| l.subset.clone()).collect();
    let mut violations = Vec::new();
    for a in 0..locals.len() {
        for b in a + 1..locals.len() {
            let inter: Vec<usize> =
                locals[a].subset.iter().copied().filter(|v| locals[b].position(*v).is_some()).collect();
            if inter.is_empty() {
                continue;
            }
            let ma = locals[a].marginal(&inter)?;
            let mb = locals[b].marginal(&inter)?;
            let gap = ma.probs.iter().zip(&mb.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if gap > PROB_TOL {
                violations.push(ConsistencyViolation { a: locals[a].subset.clone(), b: locals[b].subset.clone(), gap });
            }
        }
    }
    let order = moment_order(theta);
    let min_eigenvalue = match MomentMatrix::build(theta, order) {
        Ok(m) => m.min_eigenvalue(),
        Err(Error::MissingLocal(_)) if order > 2 => MomentMatrix::build(theta, 2)?.min_eigenvalue(),
        Err(e) => return Err(e),
    };
    let bias = (0..n).map(|i| Ok(g.vertex_weights()[i] * theta.marginal_one(i)?)).sum::<Result<f64>>()?;
    let objective = objective(theta, g)?;
    let feasible = violations.is_empty()
        && locals.iter().all(LocalDist::is_valid)
        && min_eigenvalue >= PSD_TOL
        && (bias - mu).abs() <= 1e-6;
    Ok(FeasibilityReport {
        violations,
        invalid_locals,
        moment_order: order,
        min_eigenvalue,
        bias,
        target_bias: mu,
        objective,
        feasible,
    })
}

/// Order 4 when the level allows it and the vertex set is small, else 2.
fn moment_order(theta: &LocalDistributionFamily) -> usize {
    if theta.level() >= 4 && theta.vertex_count() <= 16 {
        4
    } else {
        2
    }
}

/// Gram vectors `u_∅, u_i = μ_i u_∅ + w_i` realizing `M_2(θ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorSolution {
    pub dim: usize,
    pub u_empty: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl VectorSolution {
    pub fn vertex_count(&self) -> usize {
        self.u.len()
    }

    pub fn inner_u(&self, i: usize, j: usize) -> f64 {
        dot(&self.u[i], &self.u[j])
    }

    pub fn inner_w(&self, i: usize, j: usize) -> f64 {
        dot(&self.w[i], &self.w[j])
    }

    pub fn w_norm(&self, i: usize) -> f64 {
        self.inner_w(i, i).sqrt()
    }

    /// `ρ_ij = ⟨w̄_i, w̄_j⟩`, 0 when either vector vanishes.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.w_norm(i), self.w_norm(j));
        if a * a < DEGENERATE_VAR || b * b < DEGENERATE_VAR {
            0.0
        } else {
            (self.inner_w(i, j) / (a * b)).clamp(-1.0, 1.0)
        }
    }

    /// `E_{i,j∼w̃ iid}|ρ_ij|`.
    pub fn avg_abs_rho(&self, weights: &[f64]) -> f64 {
        let n = self.vertex_count();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += weights[i] * weights[j] * self.rho(i, j).abs();
            }
        }
        s
    }

    /// Same vectors with every `w_i` scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut v = self.clone();
        for (i, w) in v.w.iter_mut().enumerate() {
            w.iter_mut().for_each(|x| *x *= c);
            v.u[i] = self.u_empty.iter().zip(w.iter()).map(|(e, x)| self.mu[i] * e + x).collect();
        }
        v
    }
}

pub fn vector_solution(theta: &LocalDistributionFamily) -> Result<VectorSolution> {
    let n = theta.vertex_count();
    let mu: Vec<f64> = (0..n).map(|i| theta.marginal_one(i)).collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = 1.0;
    for i in 0..n {
        m[(0, i + 1)] = mu[i];
        m[(i + 1, 0)] = mu[i];
        m[(i + 1, i + 1)] = mu[i];
        for j in i + 1..n {
            let p = theta.pair_one(i, j)?;
            m[(i + 1, j + 1)] = p;
            m[(j + 1, i + 1)] = p;
        }
    }
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let d = n + 1;
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|r| (0..d).map(|k| eig.eigenvectors[(r, k)] * eig.eigenvalues[k].max(0.0).sqrt()).collect())
        .collect();
    let u_empty = rows[0].clone();
    let u: Vec<Vec<f64>> = rows[1..].to_vec();
    let w = u
        .iter()
        .zip(&mu)
        .map(|(ui, m)| ui.iter().zip(&u_empty).map(|(a, e)| a - m * e).collect())
        .collect();
    Ok(VectorSolution { dim: d, u_empty, u, w, mu })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditioningStep {
    pub vertex: usize,
    pub value: u8,
    pub avg_abs_corr: f64,
}

#[derive(Clone, Debug)]
pub struct ConditioningOutcome {
    pub success: bool,
    pub subset: Vec<usize>,
    pub values: Vec<u8>,
    pub trace: Vec<ConditioningStep>,
    pub initial_avg_abs_corr: f64,
    pub final_avg_abs_corr: f64,
    pub family: LocalDistributionFamily,
}

/// Greedy search for a partial assignment bringing the off-diagonal average absolute
/// correlation to `target` within `budget` conditionings.
///
/// Each step scans every unconditioned vertex and both values; the candidate with
/// the smallest resulting average wins, ties going to the lower vertex and then to
/// value 0. Zero-probability events are skipped.
pub fn find_conditioning(theta: &LocalDistributionFamily, weights: &[f64], target: f64, budget: usize) -> Result<ConditioningOutcome> {
    let n = theta.vertex_count();
    let initial = statistics(theta, weights)?.avg_abs_corr_offdiag;
    let mut current = theta.clone();
    let mut avg = initial;
    let mut subset = Vec::new();
    let mut values = Vec::new();
    let mut trace = Vec::new();
    while avg > target + CORR_SLACK && subset.len() < budget && current.level() >= 3 {
        let mut best: Option<(f64, usize, u8, LocalDistributionFamily)> = None;
        for v in 0..n {
            if subset.contains(&v) {
                continue;
            }
            for b in 0..2u8 {
                let next = match condition(&current, &[v], &[b]) {
                    Ok(t) => t,
                    Err(Error::ZeroProbabilityEvent) => continue,
                    Err(e) => return Err(e),
                };
                let a = statistics(&next, weights)?.avg_abs_corr_offdiag;
                if best.as_ref().is_none_or(|(ba, ..)| a < *ba) {
                    best = Some((a, v, b, next));
                }
            }
        }
        let Some((a, v, b, next)) = best else { break };
        subset.push(v);
        values.push(b);
        trace.push(ConditioningStep { vertex: v, value: b, avg_abs_corr: a });
        current = next;
        avg = a;
    }
    Ok(ConditioningOutcome {
        success: avg <= target + CORR_SLACK,
        subset,
        values,
        trace,
        initial_avg_abs_corr: initial,
        final_avg_abs_corr: avg,
        family: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Assignment, Predicate};
    use crate::pseudodist::{from_distribution, smooth};

    fn mix(points: &[(&[u8], f64)], level: usize) -> LocalDistributionFamily {
        from_distribution(points.iter().map(|(a, p)| (Assignment::new(a.to_vec()), *p)).collect(), level).unwrap()
    }

    fn product(n: usize, mu: f64) -> LocalDistributionFamily {
        let pts: Vec<(Assignment, f64)> = (0..1u64 << n)
            .map(|m| {
                let a = Assignment::from_mask(m, n);
                let k = m.count_ones() as i32;
                (a, mu.powi(k) * (1.0 - mu).powi(n as i32 - k))
            })
            .collect();
        from_distribution(pts, n).unwrap()
    }

    #[test]
    fn correlation_signs() {
        let w = [0.5, 0.5];
        let pos = statistics(&mix(&[(&[0, 0], 0.5), (&[1, 1], 0.5)], 2), &w).unwrap();
        assert!((pos.corr[0][1] - 1.0).abs() < 1e-12);
        assert!((pos.cov[0][1] - 0.25).abs() < 1e-12);
        let neg = statistics(&mix(&[(&[0, 1], 0.5), (&[1, 0], 0.5)], 2), &w).unwrap();
        assert!((neg.corr[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_family_is_feasible_and_uncorrelated() {
        let t = product(4, 0.3);
        let g = ConstraintHypergraph::uniform(4, vec![vec![0, 1], vec![2, 3]], Predicate::and(2)).unwrap();
        let rep = verify_feasible(&t, &g, 0.3).unwrap();
        assert!(rep.feasible, "{rep:?}");
        assert_eq!(rep.moment_order, 4);
        let st = statistics(&t, g.vertex_weights()).unwrap();
        assert!(st.cov.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, c)| i == j || c.abs() < 1e-12)));
        let out = find_conditioning(&t, g.vertex_weights(), 0.0, 3).unwrap();
        assert!(out.success && out.subset.is_empty());
        let vs = vector_solution(&t).unwrap();
        assert!(vs.inner_w(0, 1).abs() < 1e-9);
        assert!((vs.inner_w(2, 2) - 0.21).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_import_is_reported() {
        let locals = vec![
            LocalDist::new(vec![0], vec![0.7, 0.3]).unwrap(),
            LocalDist::new(vec![0, 1], vec![0.3, 0.4, 0.2, 0.1]).unwrap(),
            LocalDist::new(vec![1], vec![0.5, 0.5]).unwrap(),
        ];
        let t = LocalDistributionFamily::from_locals(2, 2, locals).unwrap();
        let g = ConstraintHypergraph::uniform(2, vec![vec![0, 1]], Predicate::and(2)).unwrap();
        let rep = verify_feasible(&t, &g, 0.5).unwrap();
        assert!(!rep.feasible);
        assert!(!rep.violations.is_empty());
    }

    #[test]
    fn conditioning_all_equal_family() {
        let t = mix(&[(&[0, 0, 0, 0], 0.5), (&[1, 1, 1, 1], 0.5)], 4);
        let out = find_conditioning(&t, &[0.25; 4], 0.0, 1).unwrap();
        assert!(out.success);
        assert_eq!((out.subset.clone(), out.values.clone()), (vec![0], vec![0]));
        let fail = find_conditioning(&t, &[0.25; 4], -1.0, 1).unwrap();
        assert!(!fail.success);
        assert_eq!(fail.trace.len(), 1);
    }

    #[test]
    fn vector_solution_pair() {
        let t = mix(&[(&[0, 0], 0.5), (&[1, 1], 0.5)], 2);
        let vs = vector_solution(&t).unwrap();
        assert!((vs.inner_w(0, 1) - 0.25).abs() < 1e-9);
        assert!((vs.inner_u(0, 1) - 0.5).abs() < 1e-9);
        assert!((dot(&vs.u_empty, &vs.u_empty) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smoothing_keeps_bias_and_objective_bound() {
        let t = mix(&[(&[1, 1], 0.3), (&[0, 0], 0.7)], 2);
        let g = ConstraintHypergraph::uniform(2, vec![vec![0, 1]], Predicate::and(2)).unwrap();
        let c = objective(&t, &g).unwrap();
        let s = smooth(&t, 0.1, 0.3).unwrap();
        let rep = verify_feasible(&s, &g, 0.3).unwrap();
        assert!(rep.feasible);
        assert!((rep.bias - 0.3).abs() < 1e-15);
        assert!(rep.objective >= 0.81 * c - 1e-12);
    }
}
