use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::kdtree::KdTree;
use super::EntropyError;

/// Point counts at or above this use the k-d tree.
pub const KD_TREE_THRESHOLD: usize = 512;

/// Distances from every point to its `k` nearest neighbours, self excluded.
///
/// `rho[(i, j)]` is the distance from point `i` to its `(j+1)`-th nearest
/// neighbour; rows are nondecreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable<T> {
    pub rho: Matrix<T>,
    pub k: usize,
    /// Set when some point has a neighbour at distance zero.
    pub has_zero_distance: bool,
}

impl<T: Scalar> NeighborTable<T> {
    pub fn m(&self) -> usize {
        self.rho.rows()
    }
}

#[inline]
pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Keeps the `k` smallest `(d², index)` pairs in ascending order.
#[derive(Debug)]
pub(crate) struct Nearest<T> {
    k: usize,
    pub(crate) items: Vec<(T, usize)>,
}

impl<T: Scalar> Nearest<T> {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn before(a: (T, usize), b: (T, usize)) -> bool {
        a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
    }

    pub(crate) fn is_full(&self) -> bool {
        self.items.len() == self.k
    }

    pub(crate) fn worst(&self) -> T {
        self.items.last().map_or(T::infinity(), |p| p.0)
    }

    #[inline]
    pub(crate) fn offer(&mut self, d2: T, idx: usize) {
        let cand = (d2, idx);
        if self.is_full() && !Self::before(cand, *self.items.last().unwrap()) {
            return;
        }
        let pos = self
            .items
            .iter()
            .position(|&p| Self::before(cand, p))
            .unwrap_or(self.items.len());
        self.items.insert(pos, cand);
        self.items.truncate(self.k);
    }
}

fn validate<T: Scalar>(points: &[Vec<T>], k: usize) -> Result<usize, EntropyError> {
    let m = points.len();
    if k == 0 {
        return Err(EntropyError::InvalidOrder { k, r: 0 });
    }
    if m < k + 1 {
        return Err(EntropyError::TooFewPoints { m, k });
    }
    let r = points[0].len();
    if r == 0 {
        return Err(EntropyError::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for p in points {
        if p.len() != r {
            return Err(EntropyError::DimensionMismatch {
                expected: r,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(EntropyError::NonFinite);
        }
    }
    Ok(r)
}

fn table_from<T: Scalar>(m: usize, k: usize, neighbours: Vec<Nearest<T>>) -> NeighborTable<T> {
    let mut rho = Matrix::zeros(m, k);
    let mut has_zero_distance = false;
    for (i, nn) in neighbours.into_iter().enumerate() {
        for (j, (d2, _)) in nn.items.into_iter().enumerate() {
            if d2 == T::zero() {
                has_zero_distance = true;
            }
            rho[(i, j)] = d2.sqrt();
        }
    }
    NeighborTable {
        rho,
        k,
        has_zero_distance,
    }
}

/// Exhaustive O(m²) neighbour search.
pub fn knn_table_brute<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
) -> Result<NeighborTable<T>, EntropyError> {
    validate(points, k)?;
    let m = points.len();
    let neighbours = (0..m)
        .map(|i| {
            let mut nn = Nearest::new(k);
            for (j, q) in points.iter().enumerate() {
                if j != i {
                    nn.offer(squared_distance(&points[i], q), j);
                }
            }
            nn
        })
        .collect();
    Ok(table_from(m, k, neighbours))
}

/// Neighbour search through a k-d tree; same output as [`knn_table_brute`].
pub fn knn_table_kdtree<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
) -> Result<NeighborTable<T>, EntropyError> {
    validate(points, k)?;
    let tree = KdTree::build(points);
    let neighbours = (0..points.len())
        .map(|i| tree.nearest_excluding(i, k))
        .collect();
    Ok(table_from(points.len(), k, neighbours))
}

/// Exact k-nearest-neighbour distances; ties are broken by point index.
pub fn knn_table<T: Scalar>(points: &[Vec<T>], k: usize) -> Result<NeighborTable<T>, EntropyError> {
    if points.len() >= KD_TREE_THRESHOLD {
        knn_table_kdtree(points, k)
    } else {
        knn_table_brute(points, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn line_points() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let t = knn_table(&pts, 2).unwrap();
        assert_eq!(t.rho.as_slice(), &[1.0, 3.0, 1.0, 2.0, 2.0, 3.0]);
        assert!(!t.has_zero_distance);
    }

    #[test]
    fn unit_grid() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let t = knn_table(&pts, 1).unwrap();
        assert_eq!(t.rho.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn duplicates_are_flagged() {
        let pts = vec![vec![0.0], vec![0.0], vec![2.0]];
        assert!(knn_table(&pts, 1).unwrap().has_zero_distance);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            knn_table(&pts, 2),
            Err(EntropyError::TooFewPoints { m: 2, k: 2 })
        );
    }

    #[test]
    fn tree_matches_brute_force_exactly() {
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(3);
        for &(m, r, k) in &[(100, 1, 5), (700, 2, 4), (600, 3, 7), (300, 5, 2)] {
            let mut pts: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..r).map(|_| rng.random::<f64>()).collect())
                .collect();
            // A few exact ties.
            pts[10] = pts[3].clone();
            pts[11] = pts[3].iter().map(|x| x + 0.25).collect();
            pts[12] = pts[3].iter().map(|x| x - 0.25).collect();
            let a = knn_table_brute(&pts, k).unwrap();
            let b = knn_table_kdtree(&pts, k).unwrap();
            assert_eq!(a, b);
        }
    }
}
