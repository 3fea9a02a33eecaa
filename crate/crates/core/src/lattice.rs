//! Axis-aligned boxes of the integer lattice with row-major indexing.

use crate::error::{Error, Result};

/// Box `lo + [0, extent)` in Z^d. The last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    lo: Vec<i64>,
    extent: Vec<usize>,
}

impl Region {
    pub fn new(lo: Vec<i64>, extent: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != extent.len() {
            return Err(Error::InvalidArgument(format!(
                "region corner has {} axes but extent has {}",
                lo.len(),
                extent.len()
            )));
        }
        Ok(Self { lo, extent })
    }

    /// The cube `B(corner, side)`: sites `corner_i <= n_i <= corner_i + side - 1`.
    pub fn cube(corner: i64, side: usize, dim: usize) -> Self {
        Self {
            lo: vec![corner; dim],
            extent: vec![side; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    /// Inclusive upper corner along `axis`.
    pub fn hi(&self, axis: usize) -> i64 {
        self.lo[axis] + self.extent[axis] as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .zip(&self.lo)
                .zip(&self.extent)
                .all(|((&x, &lo), &ext)| x >= lo && x < lo + ext as i64)
    }

    /// First site of `other` (in row-major order) that lies outside `self`.
    pub fn first_uncovered(&self, other: &Region) -> Option<Vec<i64>> {
        if other.is_empty() {
            return None;
        }
        if self.dim() != other.dim() {
            return Some(other.lo.clone());
        }
        if (0..self.dim()).all(|a| other.lo[a] >= self.lo[a] && other.hi(a) <= self.hi(a)) {
            return None;
        }
        other.sites().find(|s| !self.contains(s))
    }

    pub fn covers(&self, other: &Region) -> bool {
        self.first_uncovered(other).is_none()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.extent[a + 1];
        }
        strides
    }

    /// Row-major offset of `site`, or `None` if it lies outside.
    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx = idx * self.extent[a] + (site[a] - self.lo[a]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut index: usize) -> Vec<i64> {
        let mut site = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            site[a] = self.lo[a] + (index % self.extent[a]) as i64;
            index /= self.extent[a];
        }
        site
    }

    /// Iterates all sites in row-major order.
    pub fn sites(&self) -> Sites<'_> {
        Sites {
            region: self,
            next: if self.is_empty() { None } else { Some(self.lo.clone()) },
        }
    }
}

pub struct Sites<'a> {
    region: &'a Region,
    next: Option<Vec<i64>>,
}

impl Iterator for Sites<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for a in (0..succ.len()).rev() {
            if succ[a] < self.region.hi(a) {
                succ[a] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ[a] = self.region.lo[a];
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_roundtrip() {
        let r = Region::new(vec![-1, 2, 0], vec![2, 3, 4]).unwrap();
        assert_eq!(r.len(), 24);
        for (i, s) in r.sites().enumerate() {
            assert_eq!(r.index_of(&s), Some(i));
            assert_eq!(r.site_at(i), s);
        }
        assert_eq!(r.strides(), vec![12, 4, 1]);
        assert_eq!(r.index_of(&[1, 2, 0]), None);
    }

    #[test]
    fn coverage() {
        let big = Region::cube(1, 10, 2);
        let small = Region::new(vec![3, 3], vec![2, 2]).unwrap();
        assert!(big.covers(&small));
        let off = Region::new(vec![9, 0], vec![3, 3]).unwrap();
        assert_eq!(big.first_uncovered(&off), Some(vec![9, 0]));
        assert!(Region::cube(1, 0, 1).sites().next().is_none());
    }
}
