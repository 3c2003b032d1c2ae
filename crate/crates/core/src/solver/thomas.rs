use crate::error::{Error, Result};

/// Solves a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas_solve(diag: &[f64], lower: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let f = TridiagFactor::new(diag, lower, upper)?;
    let mut x = rhs.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}

/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagFactor {
    lower: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
    /// Eliminated super-diagonal `c'_i = upper_i / pivot_i`.
    upper_mod: Vec<f64>,
}

impl TridiagFactor {
    pub fn new(diag: &[f64], lower: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::Numerical(format!(
                "tridiagonal bands of unequal length: {} / {} / {}",
                lower.len(),
                n,
                upper.len()
            )));
        }
        let mut inv_pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * prev
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numerical(format!("zero pivot in row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
            prev = if i + 1 < n { upper[i] * inv_pivot[i] } else { 0.0 };
            upper_mod[i] = prev;
        }
        Ok(Self {
            lower: lower.to_vec(),
            inv_pivot,
            upper_mod,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper_mod[i] * x[i + 1];
        }
    }
}
