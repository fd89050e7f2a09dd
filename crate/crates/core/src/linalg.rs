//! Dense complex linear algebra shared by the model, propagators and metrics.
//!
//! Dimensions never exceed 9 for operators (81 for superoperators), so every
//! value is a heap `DMatrix`/`DVector` over `Complex64`.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Operator = DMatrix<C64>;
pub type StateVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn zeros(n: usize) -> Operator {
    Operator::zeros(n, n)
}

pub fn identity(n: usize) -> Operator {
    Operator::identity(n, n)
}

pub fn basis_vector(n: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(n);
    v[index] = C64::new(1.0, 0.0);
    v
}

pub fn dagger(m: &Operator) -> Operator {
    m.adjoint()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &Operator) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// ‖U†U − I‖_max
pub fn unitarity_defect(u: &Operator) -> f64 {
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}

/// exp(−i·M) for a Hermitian generator `M`.
pub fn expm_neg_i(m: &Operator) -> Operator {
    (m * C64::new(0.0, -1.0)).exp()
}

pub fn outer(a: &StateVector, b: &StateVector) -> Operator {
    a * b.adjoint()
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Operator) -> Vec<f64> {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn trace(m: &Operator) -> C64 {
    m.diagonal().iter().sum()
}

/// Column-stacking vectorisation, `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
pub fn vectorize(m: &Operator) -> StateVector {
    StateVector::from_iterator(m.len(), m.iter().copied())
}

pub fn unvectorize(v: &StateVector, n: usize) -> Operator {
    Operator::from_iterator(n, n, v.iter().copied())
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

const VALIDATION_TOL: f64 = 1e-9;

impl DensityMatrix {
    pub fn new(m: Operator) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("rho", "density matrix must be square"));
        }
        let defect = hermiticity_defect(&m);
        if defect > VALIDATION_TOL {
            return Err(Error::invalid("rho", format!("not Hermitian (defect {defect:e})")));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > VALIDATION_TOL || tr.im.abs() > VALIDATION_TOL {
            return Err(Error::invalid("rho", format!("trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -VALIDATION_TOL {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::invalid("psi", format!("state norm is {norm}, expected 1")));
        }
        Ok(Self(outer(psi, psi)))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(identity(n) * C64::new(1.0 / n as f64, 0.0))
    }

    pub(crate) fn from_unchecked(m: Operator) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.0)[0]
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0[(index, index)].re
    }
}
