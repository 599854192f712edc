#![allow(dead_code)]

use mucsp_core::csp::{Assignment, Predicate};
use mucsp_core::harness::FiniteDist;
use mucsp_core::pseudodist::{from_distribution, LocalDistributionFamily};
use mucsp_core::reduction::{LongCodeAssignment, SseGraph};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random true distribution on `{0,1}^n` with `k` support points plus a uniform floor.
pub fn random_mixture(n: usize, k: usize, floor: f64, level: usize, rng: &mut ChaCha8Rng) -> LocalDistributionFamily {
    let mut pts: Vec<(Assignment, f64)> = Vec::new();
    let uni = floor / (1u64 << n) as f64;
    for m in 0..1u64 << n {
        pts.push((Assignment::from_mask(m, n), uni));
    }
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = raw.iter().sum();
    for w in raw {
        let m = rng.random_range(0..1u64 << n);
        pts[m as usize].1 += (1.0 - floor) * w / s;
    }
    from_distribution(pts, level).unwrap()
}

fn walk_prob(g: &SseGraph, eta: f64, a: usize, b: usize) -> f64 {
    let c = g.adj[a].iter().filter(|&&u| u == b).count() as f64;
    (1.0 - eta) * c / g.adj[a].len() as f64 + eta / g.adj.len() as f64
}

fn bit_law(p: f64) -> Vec<(u8, f64)> {
    vec![(0, 1.0 - p), (1, p)]
}

fn resample(b: u8, p: f64, eta: f64) -> Vec<(u8, f64)> {
    vec![(b, 1.0 - eta), (0, eta * (1.0 - p)), (1, eta * p)]
}

type Coord = Vec<(usize, u8, u8)>;

/// Per-coordinate law of `(B'_i(k), x'_i(k), z'_i(k))_{i∈e}` pushed through every step of the test.
pub fn coordinate_pushforward(
    g: &SseGraph,
    theta_e: &[f64],
    mus: &[f64],
    beta: f64,
    rho_sq: f64,
    eta: f64,
) -> FiniteDist<Coord> {
    let r = mus.len();
    let n = g.adj.len();
    // (A, z, ξ, tuple)
    let start = FiniteDist::from_weighted((0..n).flat_map(|a| {
        let t = theta_e.to_vec();
        [(0u8, 1.0 - beta), (1u8, beta)].into_iter().flat_map(move |(z, pz)| {
            let t = t.clone();
            [(0u8, 1.0 - rho_sq), (1u8, rho_sq)].into_iter().flat_map(move |(xi, px)| {
                t.clone()
                    .into_iter()
                    .enumerate()
                    .map(move |(tu, pt)| ((a, z, xi, tu), pt * pz * px / n as f64))
            })
        })
    }));
    // z_i per vertex of the edge
    let zs = start.bind(|&(a, z, xi, tu)| {
        if xi == 1 {
            return vec![((a, tu, vec![z; r]), 1.0)];
        }
        let mut out = vec![(Vec::new(), 1.0)];
        for _ in 0..r {
            out = out
                .into_iter()
                .flat_map(|(v, p): (Vec<u8>, f64)| {
                    bit_law(beta).into_iter().map(move |(b, q)| {
                        let mut v = v.clone();
                        v.push(b);
                        (v, p * q)
                    })
                })
                .collect();
        }
        out.into_iter().map(|(v, p)| ((a, tu, v), p)).collect()
    });
    // per vertex: walk, re-randomize, fold
    zs.bind(|(a, tu, zv)| {
        let mut out: Vec<(Coord, f64)> = vec![(Vec::new(), 1.0)];
        for i in 0..r {
            let x = (tu >> i & 1) as u8;
            let mut local: Vec<((usize, u8, u8), f64)> = Vec::new();
            for b in 0..n {
                let pb = walk_prob(g, eta, *a, b);
                if pb == 0.0 {
                    continue;
                }
                for (xt, p1) in resample(x, mus[i], eta) {
                    for (zt, p2) in resample(zv[i], beta, eta) {
                        if zt == 1 {
                            local.push(((b, xt, 1), pb * p1 * p2));
                        } else {
                            for b2 in 0..n {
                                for (x2, p3) in bit_law(mus[i]) {
                                    local.push(((b2, x2, 0), pb * p1 * p2 * p3 / n as f64));
                                }
                            }
                        }
                    }
                }
            }
            out = out
                .into_iter()
                .flat_map(|(v, p)| {
                    local.iter().map(move |(s, q)| {
                        let mut v = v.clone();
                        v.push(*s);
                        (v, p * q)
                    })
                })
                .collect();
        }
        out
    })
}

fn all_perms(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(r - 1) {
        for k in 0..r {
            let mut q = p.clone();
            q.insert(k, r - 1);
            out.push(q);
        }
    }
    out
}

/// Exact acceptance probability of `f` for one fixed edge.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_exact(
    g: &SseGraph,
    theta_e: &[f64],
    mus: &[f64],
    beta: f64,
    rho_sq: f64,
    eta: f64,
    big_r: usize,
    f: &LongCodeAssignment,
    psi: &Predicate,
) -> f64 {
    let coord: Vec<(Coord, f64)> = coordinate_pushforward(g, theta_e, mus, beta, rho_sq, eta)
        .atoms()
        .map(|(c, p)| (c.clone(), p))
        .collect();
    let r = mus.len();
    let perms = all_perms(big_r);
    let mut idx = vec![0usize; big_r];
    let mut total = 0.0;
    'outer: loop {
        let w: f64 = idx.iter().map(|&i| coord[i].1).product();
        // average over independent permutations per vertex = product of per-vertex averages
        // inside the multilinear form of ψ
        let mut vals = vec![0.0; r];
        for (i, v) in vals.iter_mut().enumerate() {
            let a: Vec<usize> = idx.iter().map(|&c| coord[c].0[i].0).collect();
            let x: u64 = idx.iter().enumerate().fold(0, |m, (k, &c)| m | (coord[c].0[i].1 as u64) << k);
            let z: u64 = idx.iter().enumerate().fold(0, |m, (k, &c)| m | (coord[c].0[i].2 as u64) << k);
            let mut s = 0.0;
            for p in &perms {
                let pa: Vec<usize> = p.iter().map(|&q| a[q]).collect();
                let px = p.iter().enumerate().fold(0u64, |m, (k, &q)| m | (x >> q & 1) << k);
                let pz = p.iter().enumerate().fold(0u64, |m, (k, &q)| m | (z >> q & 1) << k);
                s += f.eval(&pa, px, pz) as f64;
            }
            *v = s / perms.len() as f64;
        }
        let acc: f64 = psi
            .accepting()
            .iter()
            .map(|&a| (0..r).map(|j| if a >> j & 1 == 1 { vals[j] } else { 1.0 - vals[j] }).product::<f64>())
            .sum();
        total += w * acc;
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < coord.len() {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    total
}

/// Probability of a flat point under independent bits with the given biases.
pub fn flat_prob(biases: &[f64], point: usize) -> f64 {
    biases.iter().enumerate().map(|(k, &p)| if point >> k & 1 == 1 { p } else { 1.0 - p }).product()
}

/// `E[f · ∏_{k∈S} (x_k − p_k)/√(p_k(1−p_k))]` by enumeration.
pub fn coefficient_oracle(values: &[f64], biases: &[f64], mask: usize) -> f64 {
    (0..values.len())
        .map(|x| {
            let chi: f64 = (0..biases.len())
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| {
                    let p = biases[k];
                    ((x >> k & 1) as f64 - p) / (p * (1.0 - p)).sqrt()
                })
                .product();
            flat_prob(biases, x) * values[x] * chi
        })
        .sum()
}

/// `E_{rest} Var_{bits in block}[f]`, where `block` is a set of flat bit positions.
pub fn variance_influence(values: &[f64], biases: &[f64], block: usize) -> f64 {
    let sub_p = |x: usize| -> f64 {
        (0..biases.len())
            .filter(|k| block >> k & 1 == 1)
            .map(|k| if x >> k & 1 == 1 { biases[k] } else { 1.0 - biases[k] })
            .product()
    };
    let rest_p = |x: usize| -> f64 {
        (0..biases.len())
            .filter(|k| block >> k & 1 == 0)
            .map(|k| if x >> k & 1 == 1 { biases[k] } else { 1.0 - biases[k] })
            .product()
    };
    let mut total = 0.0;
    for base in (0..values.len()).filter(|x| x & block == 0) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for x in (0..values.len()).filter(|x| x & !block == base) {
            let p = sub_p(x);
            m1 += p * values[x];
            m2 += p * values[x] * values[x];
        }
        total += rest_p(base) * (m2 - m1 * m1);
    }
    total
}

pub type Support = Vec<(Vec<u8>, f64)>;

/// Mixture of `k` random product distributions on `{0,1}^n`.
pub fn product_mixture(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Support {
    let comps: Vec<(f64, Vec<f64>)> =
        (0..k).map(|_| (rng.random::<f64>() + 0.1, (0..n).map(|_| rng.random_range(0.05..0.95)).collect())).collect();
    let total: f64 = comps.iter().map(|c| c.0).sum();
    (0..1usize << n)
        .map(|m| {
            let a: Vec<u8> = (0..n).map(|i| (m >> i & 1) as u8).collect();
            let p = comps.iter().map(|(w, b)| w / total * flat_prob(b, m)).sum();
            (a, p)
        })
        .collect()
}

pub fn family_of(support: &Support, level: usize) -> LocalDistributionFamily {
    from_distribution(support.iter().map(|(a, p)| (Assignment::new(a.clone()), *p)).collect(), level).unwrap()
}

pub fn condition_support(support: &Support, fixed: &[(usize, u8)]) -> Option<Support> {
    let kept: Support = support.iter().filter(|(a, _)| fixed.iter().all(|&(v, b)| a[v] == b)).cloned().collect();
    let mass: f64 = kept.iter().map(|x| x.1).sum();
    if mass <= 0.0 {
        return None;
    }
    Some(kept.into_iter().map(|(a, p)| (a, p / mass)).collect())
}

/// Means and `Pr[X_i = 1, X_j = 1]`.
pub fn support_moments(support: &Support) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = support[0].0.len();
    let mut mean = vec![0.0; n];
    let mut pair = vec![vec![0.0; n]; n];
    for (a, p) in support {
        for i in 0..n {
            if a[i] == 1 {
                mean[i] += p;
                for j in 0..n {
                    if a[j] == 1 {
                        pair[i][j] += p;
                    }
                }
            }
        }
    }
    (mean, pair)
}

/// Off-diagonal weighted average of `|Corr|`; zero-variance vertices count as uncorrelated.
pub fn offdiag_avg_abs_corr(support: &Support, weights: &[f64]) -> f64 {
    let (m, pair) = support_moments(support);
    let n = m.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = weights[i] * weights[j];
            den += w;
            let (vi, vj) = (m[i] * (1.0 - m[i]), m[j] * (1.0 - m[j]));
            if vi > 1e-14 && vj > 1e-14 {
                num += w * ((pair[i][j] - m[i] * m[j]) / (vi * vj).sqrt()).abs();
            }
        }
    }
    num / den
}
