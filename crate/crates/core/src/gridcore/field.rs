use num_complex::Complex64;

use super::Grid1D;
use crate::error::{Error, Result};

/// Complex samples of a function on a [`Grid1D`]. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(i) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n()).map(|k| f(grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D, value: Complex64) -> Result<Self> {
        Self::new(grid, vec![value; grid.n()])
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map with access to the coordinate.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.grid.point(k), v))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn scale(&self, c: Complex64) -> Result<Self> {
        self.map(|_, v| v * c)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn ensure_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `sqrt(∫|f|² dx)` using the grid's quadrature rule.
    pub fn norm_l2(&self) -> f64 {
        let modulus: Vec<Complex64> = self
            .values
            .iter()
            .map(|v| Complex64::new(v.norm_sqr(), 0.0))
            .collect();
        super::integrate::integrate_samples(&self.grid, &modulus)
            .re
            .sqrt()
    }
}

/// `(L∞, L2)` of a residual sampled with spacing `h`; L2 is `sqrt(h Σ|r|²)`.
pub fn residual_norms(residual: &[Complex64], h: f64) -> (f64, f64) {
    let linf = residual.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let l2 = (h * residual.iter().map(|r| r.norm_sqr()).sum::<f64>()).sqrt();
    (linf, l2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(0.0, 1.0, 8, true).unwrap()
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(matches!(
            ComplexField::new(grid(), vec![Complex64::new(1.0, 0.0); 3]),
            Err(Error::LengthMismatch {
                expected: 8,
                got: 3
            })
        ));
        let mut v = vec![Complex64::new(1.0, 0.0); 8];
        v[5] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ComplexField::new(grid(), v),
            Err(Error::NonFinite(5))
        ));
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = ComplexField::constant(grid(), Complex64::new(1.0, 0.0)).unwrap();
        let other = Grid1D::new(0.0, 2.0, 8, true).unwrap();
        let b = ComplexField::constant(other, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(a.sub(&b), Err(Error::GridMismatch));
    }

    #[test]
    fn l2_norm_of_constant() {
        let a = ComplexField::constant(grid(), Complex64::new(0.0, 2.0)).unwrap();
        assert!((a.norm_l2() - 2.0).abs() < 1e-15);
        assert_eq!(a.norm_linf(), 2.0);
    }
}
