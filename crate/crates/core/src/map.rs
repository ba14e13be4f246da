//! Linear maps between normed spaces.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rational::Rat;
use crate::spaces::NormedSpace;

/// A matrix of shape `codomain.dim × domain.dim` together with its spaces.
#[derive(Debug, Clone)]
pub struct LinearMap {
    domain: NormedSpace,
    codomain: NormedSpace,
    matrix: Matrix,
}

impl LinearMap {
    pub fn new(domain: &NormedSpace, codomain: &NormedSpace, matrix: Matrix) -> Result<Self> {
        if matrix.rows() != codomain.dim() || matrix.cols() != domain.dim() {
            return Err(Error::param(format!(
                "matrix is {}x{}, spaces need {}x{}",
                matrix.rows(),
                matrix.cols(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(LinearMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix,
        })
    }

    pub fn identity(space: &NormedSpace) -> Self {
        LinearMap {
            domain: space.clone(),
            codomain: space.clone(),
            matrix: Matrix::identity(space.dim()),
        }
    }

    pub fn zero(domain: &NormedSpace, codomain: &NormedSpace) -> Self {
        LinearMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            matrix: Matrix::zeros(codomain.dim(), domain.dim()),
        }
    }

    pub fn domain(&self) -> &NormedSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &NormedSpace {
        &self.codomain
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    pub fn apply_exact(&self, x: &[Rat]) -> Vec<Rat> {
        self.matrix.apply_exact(x)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.codomain.dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: inner.codomain.dim(),
            });
        }
        Ok(LinearMap {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: self.matrix.mul(&inner.matrix)?,
        })
    }

    pub fn scaled(&self, s: &Rat) -> LinearMap {
        LinearMap {
            matrix: self.matrix.scale_rat(s),
            ..self.clone()
        }
    }

    /// Same matrix, different spaces of the same dimensions.
    pub fn with_spaces(&self, domain: &NormedSpace, codomain: &NormedSpace) -> Result<LinearMap> {
        LinearMap::new(domain, codomain, self.matrix.clone())
    }

    /// `self − other` between the same spaces.
    pub fn difference(&self, other: &LinearMap) -> Result<LinearMap> {
        Ok(LinearMap {
            matrix: self.matrix.sub(&other.matrix)?,
            ..self.clone()
        })
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }
}
