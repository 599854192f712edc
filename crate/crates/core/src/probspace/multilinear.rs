use crate::error::{Error, Result};

/// `H(x) = Σ_S c_S ∏_{j∈S} x_j` over raw real variables; `c_S` indexed by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearPoly {
    variables: usize,
    monomials: Vec<f64>,
}

impl MultilinearPoly {
    pub fn new(variables: usize, monomials: Vec<f64>) -> Result<Self> {
        if monomials.len() != 1 << variables {
            return Err(Error::Shape(format!(
                "{} monomials for {variables} variables",
                monomials.len()
            )));
        }
        Ok(Self { variables, monomials })
    }

    pub fn constant(variables: usize, c: f64) -> Self {
        let mut monomials = vec![0.0; 1 << variables];
        monomials[0] = c;
        Self { variables, monomials }
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn monomials(&self) -> &[f64] {
        &self.monomials
    }

    pub fn is_constant(&self) -> bool {
        self.monomials[1..].iter().all(|c| *c == 0.0)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.variables {
            return Err(Error::Shape(format!(
                "point has {} entries, polynomial has {} variables",
                point.len(),
                self.variables
            )));
        }
        Ok(self.evaluate_unchecked(point))
    }

    /// Folds one variable at a time: `c_S + x_j c_{S∪j}`.
    pub(crate) fn evaluate_unchecked(&self, point: &[f64]) -> f64 {
        let mut buf = self.monomials.clone();
        let mut len = buf.len();
        for &x in point.iter().rev() {
            len /= 2;
            for i in 0..len {
                buf[i] += x * buf[i + len];
            }
        }
        buf[0]
    }

    /// Value at a cube corner given as a bitmask.
    pub fn evaluate_corner(&self, corner: usize) -> f64 {
        let point: Vec<f64> = (0..self.variables).map(|j| (corner >> j & 1) as f64).collect();
        self.evaluate_unchecked(&point)
    }
}
