use serde::{Deserialize, Serialize};

use super::{MAX_CUBE_COORDS, MAX_OMEGA_COORDS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    /// `{0,1}`, bias = probability of 1.
    Bit,
    /// `{⊥,⊤}`, bias = probability of `⊤`.
    Leak,
}

/// The non-trivial orthonormal character of the `p`-biased bit.
pub fn character(p: f64, b: u8) -> Result<f64> {
    check_bias(p)?;
    Ok((f64::from(b) - p) / (p * (1.0 - p)).sqrt())
}

pub(crate) fn check_bias(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::DegenerateBias(p))
    }
}

/// Product of `R` independent biased bits.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasedSpace {
    biases: Vec<f64>,
    alphabet: Alphabet,
}

impl BiasedSpace {
    pub fn new(biases: Vec<f64>, alphabet: Alphabet) -> Result<Self> {
        if biases.is_empty() {
            return Err(Error::invalid("a biased space needs at least one coordinate"));
        }
        for &p in &biases {
            check_bias(p)?;
        }
        Ok(Self { biases, alphabet })
    }

    pub fn uniform(coordinates: usize, bias: f64, alphabet: Alphabet) -> Result<Self> {
        Self::new(vec![bias; coordinates], alphabet)
    }

    pub fn coordinate_count(&self) -> usize {
        self.biases.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn bias(&self, j: usize) -> f64 {
        self.biases[j]
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }
}

/// Domain of an explicit table: a single biased cube, or the product `Ω^R` of a
/// bit space and a leak space with equal `R`.
#[derive(Clone, Debug, PartialEq)]
pub enum TableSpace {
    Cube(BiasedSpace),
    Omega { bits: BiasedSpace, leaks: BiasedSpace },
}

impl TableSpace {
    pub fn cube(space: BiasedSpace) -> Result<Self> {
        if space.coordinate_count() > MAX_CUBE_COORDS {
            return Err(Error::TooLarge(format!(
                "{} coordinates exceeds the explicit-table cap of {MAX_CUBE_COORDS}",
                space.coordinate_count()
            )));
        }
        Ok(TableSpace::Cube(space))
    }

    pub fn omega(bits: BiasedSpace, leaks: BiasedSpace) -> Result<Self> {
        let r = bits.coordinate_count();
        if leaks.coordinate_count() != r {
            return Err(Error::Shape(format!(
                "bit space has {r} coordinates but leak space has {}",
                leaks.coordinate_count()
            )));
        }
        if r > MAX_OMEGA_COORDS {
            return Err(Error::TooLarge(format!(
                "{r} coordinates exceeds the four-point table cap of {MAX_OMEGA_COORDS}"
            )));
        }
        Ok(TableSpace::Omega { bits, leaks })
    }

    /// Convenience: `{0,1}^R_μ ⊗ {⊥,⊤}^R_β` with uniform biases.
    pub fn omega_uniform(r: usize, mu: f64, beta: f64) -> Result<Self> {
        Self::omega(
            BiasedSpace::uniform(r, mu, Alphabet::Bit)?,
            BiasedSpace::uniform(r, beta, Alphabet::Leak)?,
        )
    }

    pub fn cube_uniform(r: usize, bias: f64) -> Result<Self> {
        Self::cube(BiasedSpace::uniform(r, bias, Alphabet::Bit)?)
    }

    /// Number of coordinates `R` (each Ω coordinate counts once).
    pub fn coordinate_count(&self) -> usize {
        match self {
            TableSpace::Cube(s) => s.coordinate_count(),
            TableSpace::Omega { bits, .. } => bits.coordinate_count(),
        }
    }

    /// Number of underlying binary variables (`R` or `2R`).
    pub fn bit_count(&self) -> usize {
        match self {
            TableSpace::Cube(s) => s.coordinate_count(),
            TableSpace::Omega { bits, .. } => 2 * bits.coordinate_count(),
        }
    }

    pub fn domain_size(&self) -> usize {
        1usize << self.bit_count()
    }

    pub fn is_omega(&self) -> bool {
        matches!(self, TableSpace::Omega { .. })
    }

    /// Bias of flattened binary variable `k`.
    pub fn flat_bias(&self, k: usize) -> f64 {
        match self {
            TableSpace::Cube(s) => s.bias(k),
            TableSpace::Omega { bits, leaks } => {
                let r = bits.coordinate_count();
                if k < r {
                    bits.bias(k)
                } else {
                    leaks.bias(k - r)
                }
            }
        }
    }

    pub fn flat_biases(&self) -> Vec<f64> {
        (0..self.bit_count()).map(|k| self.flat_bias(k)).collect()
    }

    /// Probability of a domain point under the product measure.
    pub fn point_probability(&self, point: usize) -> f64 {
        (0..self.bit_count())
            .map(|k| {
                let p = self.flat_bias(k);
                if point >> k & 1 == 1 {
                    p
                } else {
                    1.0 - p
                }
            })
            .product()
    }

    /// Mask of the flattened variables that belong to coordinate `j`.
    pub fn coordinate_mask(&self, j: usize) -> usize {
        match self {
            TableSpace::Cube(_) => 1 << j,
            TableSpace::Omega { bits, .. } => (1 << j) | (1 << (j + bits.coordinate_count())),
        }
    }

    pub(crate) fn check_coordinate(&self, j: usize) -> Result<()> {
        if j < self.coordinate_count() {
            Ok(())
        } else {
            Err(Error::CoordinateOutOfRange { index: j, dimension: self.coordinate_count() })
        }
    }
}

/// A fully populated real-valued table on a [`TableSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable {
    space: TableSpace,
    values: Vec<f64>,
    bounded: bool,
}

impl FunctionTable {
    pub fn new(space: TableSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.domain_size() {
            return Err(Error::Shape(format!(
                "table has {} values, domain has {} points",
                values.len(),
                space.domain_size()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("table values must be finite"));
        }
        Ok(Self { space, values, bounded: false })
    }

    /// Like [`FunctionTable::new`] but requires every value in `[0,1]`.
    pub fn new_bounded(space: TableSpace, values: Vec<f64>) -> Result<Self> {
        let mut t = Self::new(space, values)?;
        if let Some(v) = t.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("bounded table has value {v} outside [0,1]")));
        }
        t.bounded = true;
        Ok(t)
    }

    pub fn from_fn(space: TableSpace, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..space.domain_size()).map(f).collect();
        Self::new(space, values)
    }

    pub fn constant(space: TableSpace, c: f64) -> Result<Self> {
        let n = space.domain_size();
        Self::new(space, vec![c; n])
    }

    pub fn space(&self) -> &TableSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, point: usize) -> f64 {
        self.values[point]
    }

    /// Value at `(x, z)` of an Ω table, both given as `R`-bit masks.
    pub fn omega_value(&self, x: usize, z: usize) -> f64 {
        let r = self.space.coordinate_count();
        self.values[x | z << r]
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    /// Every value in `[−tol, 1+tol]`.
    pub fn values_in_unit(&self, tol: f64) -> bool {
        self.values.iter().all(|v| *v >= -tol && *v <= 1.0 + tol)
    }

    pub fn expectation(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(x, v)| self.space.point_probability(x) * v)
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(x, v)| self.space.point_probability(x) * v * v)
            .sum()
    }

    /// Pointwise `1 - f`.
    pub fn complement(&self) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|v| 1.0 - v).collect(),
            bounded: self.bounded,
        }
    }

    /// Same values reinterpreted on another space of identical shape.
    pub fn with_space(&self, space: TableSpace) -> Result<Self> {
        if space.bit_count() != self.space.bit_count() || space.is_omega() != self.space.is_omega() {
            return Err(Error::Shape("rebasing requires an identically shaped space".into()));
        }
        Ok(Self { space, values: self.values.clone(), bounded: self.bounded })
    }

    /// `h̄(x) = E_{z}[h(x,z)]` for an Ω table, as a table on the bit space.
    pub fn average_out_leaks(&self) -> Result<Self> {
        let TableSpace::Omega { bits, leaks } = &self.space else {
            return Err(Error::Shape("averaging out z needs an Ω table".into()));
        };
        let r = bits.coordinate_count();
        let leak_space = TableSpace::Cube(leaks.clone());
        let mut out = vec![0.0; 1 << r];
        for (x, o) in out.iter_mut().enumerate() {
            *o = (0..1usize << r)
                .map(|z| leak_space.point_probability(z) * self.values[x | z << r])
                .sum();
        }
        let mut t = Self::new(TableSpace::Cube(bits.clone()), out)?;
        t.bounded = self.bounded;
        Ok(t)
    }
}
