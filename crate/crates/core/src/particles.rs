//! Dense particle storage.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SvgdError};

/// `m` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particles {
    dim: usize,
    data: Vec<f64>,
}

impl Particles {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self { dim, data: vec![0.0; count * dim] }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("particle dimension must be positive"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(invalid(format!("flat buffer of length {} is not a multiple of dimension {dim}", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(SvgdError::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Copies the listed rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Particles {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Particles { dim: self.dim, data }
    }

    /// Rows `start..end` as a new set.
    pub fn slice(&self, start: usize, end: usize) -> Particles {
        Particles { dim: self.dim, data: self.data[start * self.dim..end * self.dim].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the first row containing a non-finite coordinate.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.rows().position(|r| r.iter().any(|v| !v.is_finite()))
    }

    pub fn max_norm(&self) -> f64 {
        self.rows().map(norm).fold(0.0, f64::max)
    }

    pub fn translate(&mut self, shift: &[f64]) {
        for row in self.data.chunks_exact_mut(self.dim) {
            for (x, s) in row.iter_mut().zip(shift) {
                *x += s;
            }
        }
    }
}

/// Role of a tracked particle in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Virtual,
    Real,
}

/// Particles together with their roles and the current step index.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Particles,
    roles: Vec<Role>,
    pub step_index: usize,
}

impl ParticleEnsemble {
    pub fn new(positions: Particles, roles: Vec<Role>) -> Result<Self> {
        if roles.len() != positions.len() {
            return Err(SvgdError::DimensionMismatch { expected: positions.len(), got: roles.len() });
        }
        Ok(Self { positions, roles, step_index: 0 })
    }

    pub fn all_real(positions: Particles) -> Self {
        let roles = vec![Role::Real; positions.len()];
        Self { positions, roles, step_index: 0 }
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions.dim()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_select() {
        let p = Particles::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.row(1), &[3.0, 4.0]);
        let s = p.select(&[2, 0]);
        assert_eq!(s.as_flat(), &[5.0, 6.0, 1.0, 2.0]);
        assert_eq!(p.slice(1, 3).len(), 2);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Particles::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Particles::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn roles_must_match_count() {
        let p = Particles::zeros(3, 2);
        assert!(ParticleEnsemble::new(p.clone(), vec![Role::Real; 2]).is_err());
        let e = ParticleEnsemble::new(p, vec![Role::Virtual, Role::Real, Role::Real]).unwrap();
        assert_eq!(e.roles()[0], Role::Virtual);
    }

    #[test]
    fn non_finite_detection() {
        let mut p = Particles::zeros(3, 2);
        assert!(p.first_non_finite().is_none());
        p.row_mut(2)[1] = f64::NAN;
        assert_eq!(p.first_non_finite(), Some(2));
    }
}
