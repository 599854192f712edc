use super::multilinear::MultilinearPoly;
use super::space::{check_bias, Alphabet, FunctionTable, TableSpace};
use crate::error::{Error, Result};

/// How a noise rate acts on a table over `Ω^R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Noise on the bit part only; leak coordinates untouched. On a plain cube this is
    /// the usual `T_ρ`.
    #[default]
    PerSpace,
    /// `T^(μ)_ρ ∘ T^(β)_ρ`: bits and leaks each resampled independently.
    Composite,
}

/// Fourier coefficients indexed by flat subset mask (see the module docs).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    space: TableSpace,
    coefficients: Vec<f64>,
}

impl FourierTable {
    pub fn new(space: TableSpace, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.domain_size() {
            return Err(Error::Shape(format!(
                "{} coefficients for a space with {} subsets",
                coefficients.len(),
                space.domain_size()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn space(&self) -> &TableSpace {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, mask: usize) -> f64 {
        self.coefficients[mask]
    }

    /// `ĥ'(S,T)` for an Ω table.
    pub fn pair_coefficient(&self, s: usize, t: usize) -> f64 {
        let r = self.space.coordinate_count();
        self.coefficients[s | t << r]
    }

    pub fn mean(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn squared_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.squared_norm() - self.coefficients[0].powi(2)
    }

    /// Degree of a mask: `|S|` on a cube, `|S| + |T|` on `Ω^R`.
    pub fn degree(mask: usize) -> usize {
        mask.count_ones() as usize
    }

    /// Evaluates back to a table (inverse transform).
    pub fn evaluate(&self) -> FunctionTable {
        let mut v = self.coefficients.clone();
        for (k, p) in self.space.flat_biases().into_iter().enumerate() {
            let s = (p * (1.0 - p)).sqrt();
            let bit = 1 << k;
            for i in 0..v.len() {
                if i & bit == 0 {
                    let (c0, c1) = (v[i], v[i | bit]);
                    v[i] = c0 - c1 * p / s;
                    v[i | bit] = c0 + c1 * (1.0 - p) / s;
                }
            }
        }
        FunctionTable::new(self.space.clone(), v).expect("inverse transform keeps shape")
    }

    /// Split influence of the single flat variable `k` (`x(j)` is `k = j`, `z(j)` is `k = R + j`).
    pub fn variable_influence(&self, k: usize) -> f64 {
        let bit = 1 << k;
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(m, _)| m & bit != 0)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// `Inf_{x(j)}`: influence of the bit half of coordinate `j`.
    pub fn influence_x(&self, j: usize) -> Result<f64> {
        self.space.check_coordinate(j)?;
        Ok(self.variable_influence(j))
    }

    /// `Inf_{z(j)}`: influence of the leak half of coordinate `j` (Ω tables only).
    pub fn influence_z(&self, j: usize) -> Result<f64> {
        self.space.check_coordinate(j)?;
        if !self.space.is_omega() {
            return Err(Error::Shape("z-influence needs an Ω table".into()));
        }
        Ok(self.variable_influence(j + self.space.coordinate_count()))
    }

    pub fn influences(&self) -> Vec<f64> {
        (0..self.space.coordinate_count())
            .map(|j| influence(self, j).expect("in range"))
            .collect()
    }

    pub fn max_influence(&self) -> f64 {
        self.influences().into_iter().fold(0.0, f64::max)
    }
}

/// Fourier transform of a table in the product biased basis.
pub fn fourier_expand(f: &FunctionTable) -> Result<FourierTable> {
    let space = f.space().clone();
    let mut v = f.values().to_vec();
    for (k, p) in space.flat_biases().into_iter().enumerate() {
        check_bias(p)?;
        let s = (p * (1.0 - p)).sqrt();
        let bit = 1 << k;
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a, b) = (v[i], v[i | bit]);
                v[i] = (1.0 - p) * a + p * b;
                v[i | bit] = s * (b - a);
            }
        }
    }
    FourierTable::new(space, v)
}

/// `Inf_j`: squared weight on masks touching coordinate `j`. On `Ω^R` this is the
/// four-point-space influence, covering both `x(j)` and `z(j)`.
pub fn influence(f: &FourierTable, j: usize) -> Result<f64> {
    f.space.check_coordinate(j)?;
    let m = f.space.coordinate_mask(j);
    Ok(f.coefficients
        .iter()
        .enumerate()
        .filter(|(s, _)| s & m != 0)
        .map(|(_, c)| c * c)
        .sum())
}

pub fn noise_apply(f: &FourierTable, rho: f64, mode: NoiseMode) -> Result<FourierTable> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("noise correlation {rho} outside [0,1]")));
    }
    let r = f.space.coordinate_count();
    let counted = match (mode, f.space.is_omega()) {
        (NoiseMode::PerSpace, true) => (1usize << r) - 1,
        _ => usize::MAX,
    };
    let coefficients = f
        .coefficients
        .iter()
        .enumerate()
        .map(|(m, c)| c * rho.powi((m & counted).count_ones() as i32))
        .collect();
    FourierTable::new(f.space.clone(), coefficients)
}

/// `Σ_{|α|>d} f̂(α)²`.
pub fn high_degree_variance(f: &FourierTable, d: usize) -> f64 {
    f.coefficients
        .iter()
        .enumerate()
        .filter(|(m, _)| FourierTable::degree(*m) > d)
        .map(|(_, c)| c * c)
        .sum()
}

/// Raw-variable multilinear polynomial agreeing with `f` on the cube.
pub fn multilinear_extend(f: &FourierTable) -> Result<MultilinearPoly> {
    let TableSpace::Cube(space) = &f.space else {
        return Err(Error::Shape("multilinear extension needs a bit-alphabet cube".into()));
    };
    if space.alphabet() != Alphabet::Bit {
        return Err(Error::Shape("multilinear extension needs a bit-alphabet cube".into()));
    }
    let mut v = f.coefficients.clone();
    for (k, &p) in space.biases().iter().enumerate() {
        check_bias(p)?;
        let s = (p * (1.0 - p)).sqrt();
        let bit = 1 << k;
        for i in 0..v.len() {
            if i & bit == 0 {
                let (a, b) = (v[i], v[i | bit]);
                v[i] = a - b * p / s;
                v[i | bit] = b / s;
            }
        }
    }
    MultilinearPoly::new(space.coordinate_count(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probspace::{character, BiasedSpace, FOURIER_TOL};

    fn cube(r: usize, p: f64) -> TableSpace {
        TableSpace::cube_uniform(r, p).unwrap()
    }

    #[test]
    fn character_values() {
        assert_eq!(character(0.5, 1).unwrap(), 1.0);
        assert_eq!(character(0.5, 0).unwrap(), -1.0);
        assert!((character(0.2, 1).unwrap() - 2.0).abs() < 1e-12);
        assert!(character(0.0, 1).is_err());
        assert!(character(1.0, 0).is_err());
    }

    #[test]
    fn dictator_expansion() {
        let f = FunctionTable::from_fn(cube(2, 0.5), |x| (x & 1) as f64).unwrap();
        let c = fourier_expand(&f).unwrap();
        assert!((c.coefficient(0) - 0.5).abs() < FOURIER_TOL);
        assert!((c.coefficient(1) - 0.5).abs() < FOURIER_TOL);
        assert!(c.coefficient(2).abs() < FOURIER_TOL);
        assert!(c.coefficient(3).abs() < FOURIER_TOL);
    }

    #[test]
    fn constant_expansion_and_influences() {
        let f = FunctionTable::constant(cube(3, 0.3), 0.7).unwrap();
        let c = fourier_expand(&f).unwrap();
        assert!((c.mean() - 0.7).abs() < FOURIER_TOL);
        assert!(c.coefficients()[1..].iter().all(|v| v.abs() < FOURIER_TOL));
        assert!(c.influences().iter().all(|v| *v < FOURIER_TOL));
        assert!(high_degree_variance(&c, 0) < FOURIER_TOL);
    }

    #[test]
    fn dictator_influence_is_bias_variance() {
        let mu = 0.3;
        let f = FunctionTable::from_fn(cube(3, mu), |x| (x & 1) as f64).unwrap();
        let c = fourier_expand(&f).unwrap();
        assert!((influence(&c, 0).unwrap() - mu * (1.0 - mu)).abs() < FOURIER_TOL);
        assert!(influence(&c, 1).unwrap() < FOURIER_TOL);
        assert!(matches!(influence(&c, 3), Err(Error::CoordinateOutOfRange { .. })));
        assert!(high_degree_variance(&c, 1) < FOURIER_TOL);
    }

    #[test]
    fn character_product_influence() {
        let space = cube(3, 0.2);
        let s = 0b101;
        let f = FunctionTable::from_fn(space, |x| {
            (0..3)
                .filter(|j| s >> j & 1 == 1)
                .map(|j| character(0.2, (x >> j & 1) as u8).unwrap())
                .product()
        })
        .unwrap();
        let c = fourier_expand(&f).unwrap();
        let infl = c.influences();
        assert!((infl[0] - 1.0).abs() < FOURIER_TOL);
        assert!(infl[1].abs() < FOURIER_TOL);
        assert!((infl[2] - 1.0).abs() < FOURIER_TOL);
    }

    #[test]
    fn noise_extremes() {
        let f = FunctionTable::from_fn(cube(3, 0.4), |x| (x * 7 % 5) as f64 / 5.0).unwrap();
        let c = fourier_expand(&f).unwrap();
        assert_eq!(noise_apply(&c, 1.0, NoiseMode::PerSpace).unwrap(), c);
        let zero = noise_apply(&c, 0.0, NoiseMode::PerSpace).unwrap().evaluate();
        assert!(zero.values().iter().all(|v| (v - f.expectation()).abs() < FOURIER_TOL));
        assert!(noise_apply(&c, 1.5, NoiseMode::PerSpace).is_err());
    }

    #[test]
    fn per_space_noise_leaves_leaks_alone() {
        let space = TableSpace::omega_uniform(2, 0.3, 0.6).unwrap();
        let f = FunctionTable::from_fn(space, |w| ((w >> 2) & 1) as f64).unwrap();
        let c = fourier_expand(&f).unwrap();
        let g = noise_apply(&c, 0.5, NoiseMode::PerSpace).unwrap();
        assert_eq!(g, c);
        let h = noise_apply(&c, 0.5, NoiseMode::Composite).unwrap();
        assert!((h.coefficient(0b0100) - 0.5 * c.coefficient(0b0100)).abs() < FOURIER_TOL);
    }

    #[test]
    fn multilinear_and_gate() {
        let space = TableSpace::cube(BiasedSpace::new(vec![0.3, 0.6], Alphabet::Bit).unwrap()).unwrap();
        let f = FunctionTable::from_fn(space, |x| if x == 3 { 1.0 } else { 0.0 }).unwrap();
        let poly = multilinear_extend(&fourier_expand(&f).unwrap()).unwrap();
        let m = poly.monomials();
        assert!(m[..3].iter().all(|c| c.abs() < FOURIER_TOL));
        assert!((m[3] - 1.0).abs() < FOURIER_TOL);
        assert!((poly.evaluate(&[0.3, 0.6]).unwrap() - 0.18).abs() < FOURIER_TOL);
    }

    #[test]
    fn multilinear_rejects_omega() {
        let space = TableSpace::omega_uniform(1, 0.3, 0.5).unwrap();
        let f = FunctionTable::constant(space, 1.0).unwrap();
        assert!(multilinear_extend(&fourier_expand(&f).unwrap()).is_err());
    }
}
