//! Control Hamiltonians: sums of constant Hermitian operators with scalar
//! coefficient schedules, H(x) = Σᵢ cᵢ(x)·Hᵢ.
//!
//! The coefficient axis is whatever the caller makes it — protocol time for
//! propagation, a sweep parameter λ for spectral analysis. The derivative
//! ∂ₓH = Σᵢ cᵢ'(x)·Hᵢ is always assembled analytically from the schedules'
//! derivatives, never via matrix finite differences.

use crate::error::{Error, Result};
use crate::operator::{CMat, Operator, OperatorKind};
use crate::schedule::Schedule;

#[derive(Clone, Debug)]
pub struct ControlHamiltonian {
    terms: Vec<(Schedule, Operator)>,
    dim: usize,
}

impl ControlHamiltonian {
    pub fn new(terms: Vec<(Schedule, Operator)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("control Hamiltonian needs at least one term".into()));
        }
        let dim = terms[0].1.dim();
        for (_, op) in &terms {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch(dim, op.dim()));
            }
            if op.kind() != OperatorKind::Hermitian {
                return Err(Error::InvalidParameter(
                    "control Hamiltonian terms must be Hermitian operators".into(),
                ));
            }
        }
        Ok(Self { terms, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Schedule, Operator)] {
        &self.terms
    }

    /// H(x) = Σ cᵢ(x) Hᵢ
    pub fn at(&self, x: f64) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (c, op) in &self.terms {
            let v = c.value(x);
            if v != 0.0 {
                m += op.matrix() * num_complex::Complex64::new(v, 0.0);
            }
        }
        m
    }

    /// ∂ₓH(x) = Σ cᵢ'(x) Hᵢ
    pub fn derivative_at(&self, x: f64) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (c, op) in &self.terms {
            let v = c.derivative(x);
            if v != 0.0 {
                m += op.matrix() * num_complex::Complex64::new(v, 0.0);
            }
        }
        m
    }

    /// Restrict every term to the subspace spanned by the given basis indices.
    /// Only valid when the listed indices span an invariant subspace of every
    /// term (e.g. an excitation-number sector); the caller asserts that.
    pub fn restrict(&self, indices: &[usize]) -> Result<ControlHamiltonian> {
        let k = indices.len();
        if k == 0 {
            return Err(Error::InvalidParameter("empty restriction".into()));
        }
        for &i in indices {
            if i >= self.dim {
                return Err(Error::InvalidParameter(format!(
                    "restriction index {i} out of range for dim {}",
                    self.dim
                )));
            }
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (c, op) in &self.terms {
            let mut sub = CMat::zeros(k, k);
            for (a, &i) in indices.iter().enumerate() {
                for (b, &j) in indices.iter().enumerate() {
                    sub[(a, b)] = op.matrix()[(i, j)];
                }
            }
            terms.push((c.clone(), Operator::hermitian(sub)?));
        }
        ControlHamiltonian::new(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{sigma_x, sigma_z};

    #[test]
    fn assembles_value_and_derivative() {
        // H(λ) = λ σz + Ω σx
        let h = ControlHamiltonian::new(vec![
            (Schedule::linear(0.0, 1.0, (-10.0, 10.0)), sigma_z()),
            (Schedule::constant(0.7, (-10.0, 10.0)), sigma_x()),
        ])
        .unwrap();
        let m = h.at(2.0);
        assert!((m[(0, 0)].re - 2.0).abs() < 1e-15);
        assert!((m[(0, 1)].re - 0.7).abs() < 1e-15);
        let d = h.derivative_at(2.0);
        assert!((d[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(d[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn rejects_mixed_dims_and_non_hermitian() {
        let bad = ControlHamiltonian::new(vec![
            (Schedule::constant(1.0, (0.0, 1.0)), sigma_z()),
            (Schedule::constant(1.0, (0.0, 1.0)), Operator::identity(3)),
        ]);
        assert!(bad.is_err());
        let plus = crate::operator::sigma_plus();
        let bad2 = ControlHamiltonian::new(vec![(Schedule::constant(1.0, (0.0, 1.0)), plus)]);
        assert!(bad2.is_err());
    }

    #[test]
    fn restriction_picks_submatrix() {
        use crate::operator::tensor;
        let zz = tensor(&sigma_z(), &sigma_z());
        let h = ControlHamiltonian::new(vec![(Schedule::constant(1.0, (0.0, 1.0)), zz)]).unwrap();
        let r = h.restrict(&[1, 2]).unwrap();
        let m = r.at(0.0);
        assert_eq!(r.dim(), 2);
        assert!((m[(0, 0)].re + 1.0).abs() < 1e-15);
        assert!((m[(1, 1)].re + 1.0).abs() < 1e-15);
    }
}
