use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::{walk_step, SseGraph};
use super::longcode::Dictator;
use super::sampler::{permute_bits, permute_slice, random_perm};
use crate::error::{Error, Result};
use crate::harness::rng::{stream, Rng};
use crate::probspace::{fourier_expand, noise_apply, FunctionTable, NoiseMode, TableSpace};

/// Largest `n^R` for the exact `g_A = E_{B∼G_η(A)} f_B`.
pub const DECODE_CAP: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub samples: u64,
    pub matching: f64,
    pub stderr: f64,
    /// `1/R`, the rate for independent uniform picks.
    pub baseline: f64,
    pub max_list: usize,
    /// `2/(ητ)`.
    pub list_bound: f64,
    pub lists_within_bound: bool,
    /// Fraction of decoded points whose chosen list was empty.
    pub empty_list_rate: f64,
    pub respect_trials: usize,
    pub respect_violations: usize,
}

/// `f_A(x) = x(i*(A, ⊤^R))`: a permutation-respecting family of cube tables on `{0,1}^R_μ`.
pub fn dictator_table(d: &Dictator, a: &[usize], mu: f64) -> Result<FunctionTable> {
    let r = a.len();
    let (i, _) = d.i_star(a, if r == 64 { u64::MAX } else { (1u64 << r) - 1 });
    FunctionTable::from_fn(TableSpace::cube_uniform(r, mu)?, |x| (x >> i & 1) as f64)
}

fn point_hash(a: &[usize]) -> u64 {
    a.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &v| (h ^ v as u64).wrapping_mul(0x0100_0000_01b3))
}

/// `y ↦ t(π⁻¹ y)`.
fn permute_table(t: &FunctionTable, perm: &[usize]) -> FunctionTable {
    let r = t.space().coordinate_count();
    let mut inv = vec![0; r];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    let perm = &inv[..];
    let omega = t.space().is_omega();
    let full = (1usize << r) - 1;
    let mut v = vec![0.0; t.values().len()];
    for (p, slot) in v.iter_mut().enumerate() {
        let x = permute_bits((p & full) as u64, perm) as usize;
        let z = if omega { permute_bits((p >> r) as u64, perm) as usize } else { 0 };
        *slot = t.value(x | z << r);
    }
    FunctionTable::new(t.space().clone(), v).expect("same shape")
}

struct Decoder<'a, F> {
    tables: F,
    graph: &'a SseGraph,
    eta: f64,
    tau: f64,
    seed: u64,
    cache: HashMap<Vec<usize>, FunctionTable>,
    lists: HashMap<Vec<usize>, (Vec<usize>, Vec<usize>)>,
    max_list: usize,
}

impl<F: Fn(&[usize]) -> Result<FunctionTable>> Decoder<'_, F> {
    fn table(&mut self, a: &[usize]) -> Result<FunctionTable> {
        if let Some(t) = self.cache.get(a) {
            return Ok(t.clone());
        }
        let t = (self.tables)(a)?;
        self.cache.insert(a.to_vec(), t.clone());
        Ok(t)
    }

    fn heavy(&self, t: &FunctionTable, threshold: f64) -> Result<Vec<usize>> {
        let noisy = noise_apply(&fourier_expand(t)?, 1.0 - self.eta, NoiseMode::Composite)?;
        Ok(noisy.influences().into_iter().enumerate().filter(|(_, v)| *v >= threshold).map(|(j, _)| j).collect())
    }

    fn lists(&mut self, a: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        if let Some(l) = self.lists.get(a) {
            return Ok(l.clone());
        }
        let r = a.len();
        let n = self.graph.n;
        let fa = self.table(a)?;
        let mut g = vec![0.0; fa.values().len()];
        for bi in 0..n.pow(r as u32) {
            let b: Vec<usize> = (0..r).map(|k| bi / n.pow(k as u32) % n).collect();
            let w: f64 = (0..r).map(|k| self.graph.walk_probability(self.eta, a[k], b[k])).product();
            if w == 0.0 {
                continue;
            }
            let fb = self.table(&b)?;
            for (s, v) in g.iter_mut().zip(fb.values()) {
                *s += w * v;
            }
        }
        let ga = FunctionTable::new(fa.space().clone(), g)?;
        let l1 = self.heavy(&fa, self.tau / 2.0)?;
        let l2 = self.heavy(&ga, self.tau)?;
        self.max_list = self.max_list.max(l1.len()).max(l2.len());
        self.lists.insert(a.to_vec(), (l1.clone(), l2.clone()));
        Ok((l1, l2))
    }

    /// The randomized labeling `F`, fixed once per point.
    fn pick(&mut self, a: &[usize]) -> Result<(usize, bool)> {
        let (l1, l2) = self.lists(a)?;
        let mut rng = stream(self.seed, "decode-F", point_hash(a));
        let list = if rng.random::<bool>() { l1 } else { l2 };
        if list.is_empty() {
            Ok((rng.random_range(0..a.len()), true))
        } else {
            Ok((list[rng.random_range(0..list.len())], false))
        }
    }
}

/// Matching probability `Pr[π_A⁻¹(F(π_A A)) = π_B⁻¹(F(π_B B))]` for `A ∼ V^R`, `B ∼ G_η(A)`.
#[allow(clippy::too_many_arguments)]
pub fn influence_decode_stat<F>(
    tables: F,
    graph: &SseGraph,
    r: usize,
    eta: f64,
    tau: f64,
    samples: u64,
    respect_trials: usize,
    seed: u64,
) -> Result<DecodeReport>
where
    F: Fn(&[usize]) -> Result<FunctionTable>,
{
    if !(eta > 0.0 && eta <= 1.0) || !(tau > 0.0) {
        return Err(Error::invalid("decoding needs η ∈ (0,1] and τ > 0"));
    }
    if samples == 0 || r == 0 {
        return Err(Error::invalid("decoding needs samples and R ≥ 1"));
    }
    if graph.n.checked_pow(r as u32).is_none_or(|c| c > DECODE_CAP) {
        return Err(Error::TooLarge(format!("n^R exceeds {DECODE_CAP}")));
    }
    let mut dec = Decoder {
        tables,
        graph,
        eta,
        tau,
        seed,
        cache: HashMap::new(),
        lists: HashMap::new(),
        max_list: 0,
    };
    let mut rng: Rng = stream(seed, "decode-sample", 0);
    let n = graph.n;

    let mut respect_violations = 0;
    for _ in 0..respect_trials {
        let a: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
        let perm = random_perm(r, &mut rng);
        let lhs = dec.table(&permute_slice(&a, &perm))?;
        let rhs = permute_table(&dec.table(&a)?, &perm);
        if lhs.values().iter().zip(rhs.values()).any(|(x, y)| (x - y).abs() > 1e-12) {
            respect_violations += 1;
        }
    }

    let mut hits = 0u64;
    let mut empty = 0u64;
    for _ in 0..samples {
        let a: Vec<usize> = (0..r).map(|_| rng.random_range(0..n)).collect();
        let b: Vec<usize> = a.iter().map(|&v| walk_step(graph, eta, v, &mut rng)).collect();
        let pa = random_perm(r, &mut rng);
        let pb = random_perm(r, &mut rng);
        let (ka, ea) = dec.pick(&permute_slice(&a, &pa))?;
        let (kb, eb) = dec.pick(&permute_slice(&b, &pb))?;
        hits += (pa[ka] == pb[kb]) as u64;
        empty += ea as u64 + eb as u64;
    }
    let m = hits as f64 / samples as f64;
    let list_bound = 2.0 / (eta * tau);
    Ok(DecodeReport {
        samples,
        matching: m,
        stderr: (m * (1.0 - m) / samples as f64).sqrt(),
        baseline: 1.0 / r as f64,
        max_list: dec.max_list,
        list_bound,
        lists_within_bound: dec.max_list as f64 <= list_bound,
        empty_list_rate: empty as f64 / (2 * samples) as f64,
        respect_trials,
        respect_violations,
    })
}
