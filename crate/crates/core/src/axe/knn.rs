use std::cmp::Ordering;

use crate::domain::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact k-NN classifier over a subset of columns, voting on binary
/// targets.
#[derive(Debug, Clone)]
pub struct NeighborModel<'a, T = f64> {
    x: &'a FeatureMatrix<T>,
    feature_subset: Vec<usize>,
    targets: &'a [u8],
}

impl<'a, T: Scalar> NeighborModel<'a, T> {
    pub fn new(x: &'a FeatureMatrix<T>, feature_subset: Vec<usize>, targets: &'a [u8]) -> Result<Self> {
        if targets.len() != x.nrows() {
            return Err(Error::LengthMismatch {
                what: "neighbor targets",
                expected: x.nrows(),
                found: targets.len(),
            });
        }
        for (i, &f) in feature_subset.iter().enumerate() {
            if f >= x.ncols() {
                return Err(Error::IndexOutOfRange {
                    what: "feature subset",
                    index: f,
                    size: x.ncols(),
                });
            }
            if feature_subset[..i].contains(&f) {
                return Err(Error::InvalidConfig(format!("feature {f} repeated in subset")));
            }
        }
        Ok(Self {
            x,
            feature_subset,
            targets,
        })
    }

    pub fn feature_subset(&self) -> &[usize] {
        &self.feature_subset
    }

    fn distance(&self, row: usize, query: &[T]) -> T {
        let r = self.x.row(row);
        self.feature_subset
            .iter()
            .map(|&f| {
                let d = r[f] - query[f];
                d * d
            })
            .sum()
    }

    /// Indices of the `k` nearest candidate rows, nearest first; equal
    /// distances are ordered by row index. `exclude` removes one row from
    /// the candidates.
    pub fn neighbors(&self, query: &[T], k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
        if query.len() != self.x.ncols() {
            return Err(Error::LengthMismatch {
                what: "query point",
                expected: self.x.ncols(),
                found: query.len(),
            });
        }
        let candidates = self.x.nrows() - usize::from(exclude.is_some_and(|i| i < self.x.nrows()));
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if k > candidates {
            return Err(Error::KExceedsCandidates { k, candidates });
        }
        let mut dist: Vec<(T, usize)> = (0..self.x.nrows())
            .filter(|&i| Some(i) != exclude)
            .map(|i| (self.distance(i, query), i))
            .collect();
        let cmp = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        };
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_by(cmp);
        Ok(dist.into_iter().map(|(_, i)| i).collect())
    }

    /// Majority vote of the `k` nearest targets; a split vote returns 0.
    pub fn predict(&self, query: &[T], k: usize, include_self: bool, self_index: Option<usize>) -> Result<u8> {
        let exclude = if include_self { None } else { self_index };
        let ones = self
            .neighbors(query, k, exclude)?
            .into_iter()
            .filter(|&i| self.targets[i] == 1)
            .count();
        Ok(u8::from(2 * ones > k))
    }
}

/// Convenience wrapper around [`NeighborModel::predict`].
pub fn knn_predict<T: Scalar>(
    nm: &NeighborModel<'_, T>,
    x: &[T],
    k: usize,
    include_self: bool,
    self_index: Option<usize>,
) -> Result<u8> {
    nm.predict(x, k, include_self, self_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (FeatureMatrix<f64>, Vec<u8>) {
        let xs = [-3.0, -2.5, -2.0, -1.5, 1.5, 2.0, 2.5, 3.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v, 0.0]).collect();
        let y = xs.iter().map(|&v| u8::from(v > 0.0)).collect();
        (FeatureMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn self_match_with_k1() {
        let (x, y) = line();
        let nm = NeighborModel::new(&x, vec![0], &y).unwrap();
        for i in 0..x.nrows() {
            assert_eq!(nm.predict(x.row(i), 1, true, Some(i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn loo_on_separated_clusters() {
        let (x, y) = line();
        let nm = NeighborModel::new(&x, vec![0], &y).unwrap();
        for i in 0..x.nrows() {
            assert_eq!(nm.predict(x.row(i), 3, false, Some(i)).unwrap(), y[i]);
        }
    }

    #[test]
    fn distance_ties_break_by_row_index() {
        // every row is at distance 0 on the constant column
        let (x, y) = line();
        let nm = NeighborModel::new(&x, vec![1], &y).unwrap();
        assert_eq!(nm.neighbors(&[0.0, 0.0], 3, None).unwrap(), vec![0, 1, 2]);
        assert_eq!(nm.neighbors(&[0.0, 0.0], 3, Some(1)).unwrap(), vec![0, 2, 3]);
    }

    #[test]
    fn split_vote_is_zero() {
        let rows = vec![vec![0.0], vec![1.0], vec![5.0]];
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = [1, 0, 1];
        let nm = NeighborModel::new(&x, vec![0], &y).unwrap();
        assert_eq!(nm.predict(&[0.4], 2, true, None).unwrap(), 0);
        assert_eq!(nm.predict(&[0.4], 3, true, None).unwrap(), 1);
    }

    #[test]
    fn k_bounds() {
        let (x, y) = line();
        let nm = NeighborModel::new(&x, vec![0], &y).unwrap();
        assert!(matches!(
            nm.predict(x.row(0), 8, false, Some(0)),
            Err(Error::KExceedsCandidates { k: 8, candidates: 7 })
        ));
        assert!(nm.predict(x.row(0), 8, true, Some(0)).is_ok());
        assert!(nm.predict(x.row(0), 0, true, None).is_err());
    }

    #[test]
    fn subset_validation() {
        let (x, y) = line();
        assert!(NeighborModel::new(&x, vec![2], &y).is_err());
        assert!(NeighborModel::new(&x, vec![0, 0], &y).is_err());
        assert!(NeighborModel::new(&x, vec![0], &y[..3]).is_err());
    }

    #[test]
    fn f32_matches_f64() {
        let (x, y) = line();
        let x32 = x.map(|v| v as f32);
        let a = NeighborModel::new(&x, vec![0, 1], &y).unwrap();
        let b = NeighborModel::new(&x32, vec![0, 1], &y).unwrap();
        for i in 0..x.nrows() {
            assert_eq!(
                a.neighbors(x.row(i), 4, Some(i)).unwrap(),
                b.neighbors(x32.row(i), 4, Some(i)).unwrap()
            );
        }
    }
}
