//! Dense vector storage and the distance kernel.
//!
//! Vectors are stored as f32 rows in one flat buffer. Distance accumulation
//! is f64 end to end: widen each component, subtract, square, sum, take the
//! square root, and round back to f32 exactly once. Every distance the crate
//! reports comes from this one policy, so equal inputs produce bit-equal
//! outputs no matter which module computed them.

use crate::error::{Error, Result};

/// Row index into a [`VectorStore`]. Node ids in proximity graphs share this
/// type; in a merged graph ids past the query count refer to data rows.
pub type VectorId = u32;

/// Immutable-width collection of equal-dimension vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    data: Vec<f32>,
}

impl VectorStore {
    /// Wraps a flat row-major buffer. `data.len()` must be a multiple of `dim`.
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("vector dimension must be positive"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::config(format!(
                "buffer of {} floats is not a whole number of {}-dim rows",
                data.len(),
                dim
            )));
        }
        Ok(VectorStore { dim, data })
    }

    /// Empty store of a fixed dimension; fill with [`VectorStore::push`].
    pub fn with_dim(dim: usize) -> Result<Self> {
        VectorStore::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row accessor. Panics if `id` is out of range; ids are validated at
    /// module boundaries, not per access.
    pub fn get(&self, id: VectorId) -> &[f32] {
        let start = id as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn push(&mut self, row: &[f32]) {
        assert_eq!(row.len(), self.dim, "row dimension mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    /// `a` rows followed by `b` rows. Dimensions must match.
    pub fn concat(a: &VectorStore, b: &VectorStore) -> Result<VectorStore> {
        if a.dim != b.dim {
            return Err(Error::config(format!(
                "cannot concatenate stores of dimension {} and {}",
                a.dim, b.dim
            )));
        }
        let mut data = Vec::with_capacity(a.data.len() + b.data.len());
        data.extend_from_slice(&a.data);
        data.extend_from_slice(&b.data);
        VectorStore::new(a.dim, data)
    }
}

/// Euclidean distance under the crate-wide accumulation policy.
pub fn l2_distance(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = *x as f64 - *y as f64;
        acc += d * d;
    }
    acc.sqrt() as f32
}

/// Checked cross-store distance for callers outside the join hot path.
pub fn distance(a: &VectorStore, ai: VectorId, b: &VectorStore, bi: VectorId) -> Result<f32> {
    if a.dim != b.dim {
        return Err(Error::config(format!(
            "distance between dimension {} and dimension {} vectors",
            a.dim, b.dim
        )));
    }
    if (ai as usize) >= a.count() || (bi as usize) >= b.count() {
        return Err(Error::config(format!(
            "vector id out of range: {} of {}, {} of {}",
            ai,
            a.count(),
            bi,
            b.count()
        )));
    }
    Ok(l2_distance(a.get(ai), b.get(bi)))
}

/// The join predicate: strictly inside the threshold. Pairs at exactly
/// `theta` are excluded everywhere.
pub fn in_range(d: f32, theta: f32) -> bool {
    d < theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_shape_checks() {
        assert!(VectorStore::new(0, vec![]).is_err());
        assert!(VectorStore::new(3, vec![0.0; 7]).is_err());
        let s = VectorStore::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.count(), 2);
        assert_eq!(s.get(1), &[3.0, 4.0]);
    }

    #[test]
    fn distance_identical_vectors_is_zero() {
        let a = [0.25f32, -3.5, 7.125, 0.0];
        assert_eq!(l2_distance(&a, &a), 0.0);
    }

    #[test]
    fn distance_unit_axis() {
        // d((0,0), (3,4)) = 5 exactly; the 3-4-5 triangle is exact in f32.
        assert_eq!(l2_distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = [0.1f32, 0.7, -2.3];
        let b = [1.9f32, -0.4, 0.05];
        assert_eq!(l2_distance(&a, &b), l2_distance(&b, &a));
    }

    #[test]
    fn checked_distance_rejects_mismatched_dims() {
        let a = VectorStore::new(2, vec![0.0; 4]).unwrap();
        let b = VectorStore::new(3, vec![0.0; 3]).unwrap();
        assert!(matches!(distance(&a, 0, &b, 0), Err(Error::Config(_))));
        assert!(matches!(distance(&a, 5, &a, 0), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_is_strict() {
        assert!(in_range(0.999_999, 1.0));
        assert!(!in_range(1.0, 1.0));
        assert!(!in_range(1.000_001, 1.0));
        // theta = 0 admits nothing, not even distance 0.
        assert!(!in_range(0.0, 0.0));
    }

    #[test]
    fn concat_appends_rows_in_order() {
        let a = VectorStore::new(2, vec![1.0, 2.0]).unwrap();
        let b = VectorStore::new(2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = VectorStore::concat(&a, &b).unwrap();
        assert_eq!(c.count(), 3);
        assert_eq!(c.get(0), &[1.0, 2.0]);
        assert_eq!(c.get(2), &[5.0, 6.0]);
        let d = VectorStore::new(3, vec![0.0; 3]).unwrap();
        assert!(VectorStore::concat(&a, &d).is_err());
    }
}
