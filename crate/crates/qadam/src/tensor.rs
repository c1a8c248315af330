//! Flat dense vectors of f64 and the elementwise/norm operations the rest of
//! the crate composes. All reductions run left-to-right so results are
//! bit-reproducible across runs and thread schedules.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense real vector. Every element is finite after any public operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    data: Vec<f64>,
}

/// Vector norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Tensor {
    pub fn zeros(len: usize) -> Self {
        Tensor {
            data: vec![0.0; len],
        }
    }

    /// Builds a tensor, rejecting NaN/Inf entries.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Tensor { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.data.clone()
    }

    fn check_len(&self, other: &Tensor) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_len(other)?;
        Ok(Tensor {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_len(other)?;
        Ok(Tensor {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.check_len(other)?;
        Ok(Tensor {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Coordinatewise division. Denominators must be strictly positive.
    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.check_len(other)?;
        if let Some(i) = other.data.iter().position(|v| *v <= 0.0) {
            return Err(Error::Domain(format!(
                "nonpositive denominator {} at index {i}",
                other.data[i]
            )));
        }
        Ok(Tensor {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a / b)
                .collect(),
        })
    }

    pub fn square(&self) -> Tensor {
        Tensor {
            data: self.data.iter().map(|a| a * a).collect(),
        }
    }

    /// Coordinatewise square root. Arguments must be strictly positive.
    pub fn sqrt(&self) -> Result<Tensor> {
        if let Some(i) = self.data.iter().position(|v| *v <= 0.0) {
            return Err(Error::Domain(format!(
                "nonpositive sqrt argument {} at index {i}",
                self.data[i]
            )));
        }
        Ok(Tensor {
            data: self.data.iter().map(|a| a.sqrt()).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor {
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        Tensor {
            data: self.data.iter().map(|a| a + c).collect(),
        }
    }

    pub fn neg(&self) -> Tensor {
        Tensor {
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// Left-to-right reduction, fixed order.
    pub fn norm(&self, kind: Norm) -> f64 {
        match kind {
            Norm::L1 => self.data.iter().fold(0.0, |acc, v| acc + v.abs()),
            Norm::L2 => self.data.iter().fold(0.0, |acc, v| acc + v * v).sqrt(),
            Norm::LInf => self.data.iter().fold(0.0, |acc, v| acc.max(v.abs())),
        }
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.check_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc + a * b))
    }
}

impl std::ops::Index<usize> for Tensor {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn square_examples() {
        assert_eq!(t(&[2.0, 0.0, -1.0]).square(), t(&[4.0, 0.0, 1.0]));
    }

    #[test]
    fn add_examples() {
        assert_eq!(t(&[1.0, 2.0]).add(&t(&[3.0, 4.0])).unwrap(), t(&[4.0, 6.0]));
    }

    #[test]
    fn div_by_zero_is_domain_error() {
        let err = t(&[1.0, 1.0]).div(&t(&[4.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let err = t(&[1.0]).add(&t(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn norm_examples() {
        let x = t(&[3.0, -4.0]);
        assert_eq!(x.norm(Norm::L2), 5.0);
        assert_eq!(x.norm(Norm::LInf), 4.0);
        assert_eq!(x.norm(Norm::L1), 7.0);
        assert_eq!(Tensor::zeros(4).norm(Norm::L2), 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Tensor::from_vec(vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::from_vec(vec![f64::INFINITY]).is_err());
    }

    proptest! {
        #[test]
        fn triangle_inequality_and_homogeneity(
            a in proptest::collection::vec(-1e6f64..1e6, 1..32),
            c in -100.0f64..100.0,
        ) {
            let b: Vec<f64> = a.iter().rev().cloned().collect();
            let x = t(&a);
            let y = t(&b);
            let sum = x.add(&y).unwrap();
            for kind in [Norm::L1, Norm::L2, Norm::LInf] {
                let rhs = x.norm(kind) + y.norm(kind);
                prop_assert!(sum.norm(kind) <= rhs + 1e-12 * (1.0 + rhs));
                let scaled = x.scale(c).norm(kind);
                prop_assert!((scaled - c.abs() * x.norm(kind)).abs() <= 1e-9 * (1.0 + scaled));
            }
        }
    }
}
