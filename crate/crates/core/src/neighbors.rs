//! Exact k-nearest-neighbor search and the heat-kernel adjacency graph.
//!
//! The graph keeps `S_ij = exp(-‖x_i - x_j‖² / q)` only on k-nearest-neighbor
//! edges, symmetrized by union: `(i, j)` is an edge when either sample is among
//! the other's `k` nearest. The diagonal `S_ii = 1` is implicit and counted in
//! the degrees, so `D_ii = 1 + Σ_{j≠i} S_ij` and `L = D - S` still annihilates
//! the all-ones vector.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Default neighbor count for graph construction.
pub const DEFAULT_GRAPH_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// For every sample, its `k` nearest other samples by Euclidean distance,
/// ascending, ties broken by ascending index.
pub fn knn_indices(x: &DataMatrix, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    let n = x.n_samples();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in 1..={} for {n} samples",
            n.saturating_sub(1)
        )));
    }
    let lists = (0..n)
        .into_par_iter()
        .map(|i| nearest_of(x, i, k))
        .collect();
    Ok(lists)
}

fn nearest_of(x: &DataMatrix, i: usize, k: usize) -> Vec<Neighbor> {
    let mut candidates: Vec<(f64, usize)> = (0..x.n_samples())
        .filter(|&j| j != i)
        .map(|j| (x.squared_distance(i, j), j))
        .collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, order);
        candidates.truncate(k);
    }
    candidates.sort_by(order);
    candidates
        .into_iter()
        .map(|(d2, j)| Neighbor {
            index: j,
            distance: d2.sqrt(),
        })
        .collect()
}

/// Median of the squared distances from each sample to its `k`-th neighbor.
pub fn median_kth_squared_distance(lists: &[Vec<Neighbor>]) -> Result<f64> {
    let mut kth: Vec<f64> = lists
        .iter()
        .filter_map(|l| l.last().map(|nb| nb.distance * nb.distance))
        .collect();
    if kth.is_empty() {
        return Err(Error::EmptyInput);
    }
    kth.sort_by(f64::total_cmp);
    let mid = kth.len() / 2;
    let median = if kth.len() % 2 == 0 {
        0.5 * (kth[mid - 1] + kth[mid])
    } else {
        kth[mid]
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(Error::InvalidParameter(
            "median k-th neighbor distance is zero; cannot pick a kernel width".into(),
        ))
    }
}

/// Graph construction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub k: usize,
    /// Kernel width in squared-distance units; `None` picks the median
    /// squared distance to the `k`-th neighbor.
    pub q: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_GRAPH_K,
            q: None,
        }
    }
}

impl GraphConfig {
    pub fn build(&self, x: &DataMatrix) -> Result<NeighborGraph> {
        let lists = knn_indices(x, self.k)?;
        let q = match self.q {
            Some(q) => q,
            None => median_kth_squared_distance(&lists)?,
        };
        NeighborGraph::from_neighbor_lists(x, &lists, self.k, q)
    }
}

/// Sparse symmetric similarity graph with its degree and Laplacian structure.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    k: usize,
    q: f64,
    /// Off-diagonal edges per sample, sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

/// Builds the graph on `x` with `k` neighbors and kernel width `q`.
pub fn build_graph(x: &DataMatrix, k: usize, q: f64) -> Result<NeighborGraph> {
    let lists = knn_indices(x, k)?;
    NeighborGraph::from_neighbor_lists(x, &lists, k, q)
}

impl NeighborGraph {
    pub fn from_neighbor_lists(
        x: &DataMatrix,
        lists: &[Vec<Neighbor>],
        k: usize,
        q: f64,
    ) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel width q must be positive, got {q}"
            )));
        }
        let n = x.n_samples();
        if lists.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lists.len(),
            });
        }
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, list) in lists.iter().enumerate() {
            for nb in list {
                edges[i].push(nb.index);
                edges[nb.index].push(i);
            }
        }
        let adjacency: Vec<Vec<(usize, f64)>> = edges
            .into_iter()
            .enumerate()
            .map(|(i, mut js)| {
                js.sort_unstable();
                js.dedup();
                js.into_iter()
                    .map(|j| (j, (-x.squared_distance(i, j) / q).exp()))
                    .collect()
            })
            .collect();
        let degrees = adjacency
            .iter()
            .map(|row| 1.0 + row.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        Ok(Self {
            k,
            q,
            adjacency,
            degrees,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `D_ii`, including the implicit self weight.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Off-diagonal neighbors of sample `i` with their weights.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.adjacency[i]
            .binary_search_by_key(&j, |&(idx, _)| idx)
            .map(|pos| self.adjacency[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn similarity_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut s = DMatrix::identity(n, n);
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row {
                s[(i, j)] = w;
            }
        }
        s
    }

    pub fn laplacian_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.degrees)) - self.similarity_dense()
    }

    /// `L v` without forming `L`.
    pub fn laplacian_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n(), |i, _| {
            let off: f64 = self.adjacency[i].iter().map(|&(j, w)| w * v[j]).sum();
            (self.degrees[i] - 1.0) * v[i] - off
        })
    }

    /// `vᵀ L v = Σ_{edges} S_ij (v_i - v_j)²`.
    pub fn laplacian_quadratic(&self, v: &DVector<f64>) -> f64 {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w)))
            .map(|(i, j, w)| w * (v[i] - v[j]).powi(2))
            .sum()
    }

    /// `X D Xᵀ`.
    pub fn x_d_xt(&self, x: &DataMatrix) -> Result<DMatrix<f64>> {
        self.check_samples(x)?;
        let data = x.as_matrix();
        let mut scaled = data.clone();
        for (j, &d) in self.degrees.iter().enumerate() {
            scaled.column_mut(j).scale_mut(d);
        }
        Ok(symmetric_product(&scaled, data))
    }

    /// `X L Xᵀ`, accumulated edge by edge as `Σ S_ij (x_i - x_j)(x_i - x_j)ᵀ`
    /// so the result stays positive semidefinite in floating point.
    pub fn x_l_xt(&self, x: &DataMatrix) -> Result<DMatrix<f64>> {
        self.check_samples(x)?;
        let m = x.n_vars();
        let mut diffs = Vec::with_capacity(self.edge_count() * m);
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row.iter().filter(|&&(j, _)| j > i) {
                let scale = w.sqrt();
                let (xi, xj) = (x.sample(i), x.sample(j));
                diffs.extend((0..m).map(|r| scale * (xi[r] - xj[r])));
            }
        }
        if diffs.is_empty() {
            return Ok(DMatrix::zeros(m, m));
        }
        let e = DMatrix::from_column_slice(m, diffs.len() / m, &diffs);
        Ok(symmetric_product(&e, &e))
    }

    fn check_samples(&self, x: &DataMatrix) -> Result<()> {
        if x.n_samples() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.n_samples(),
            });
        }
        Ok(())
    }
}

fn symmetric_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a * b.transpose();
    (&p + p.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(seed: u64, m: usize, n: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn ids(list: &[Neighbor]) -> Vec<usize> {
        list.iter().map(|nb| nb.index).collect()
    }

    #[test]
    fn collinear_points() {
        let x = DataMatrix::from_row_slice(1, 3, &[0.0, 1.0, 3.0]).unwrap();
        let lists = knn_indices(&x, 1).unwrap();
        assert_eq!(ids(&lists[0]), vec![1]);
        assert_eq!(ids(&lists[1]), vec![0]);
        assert_eq!(ids(&lists[2]), vec![1]);
    }

    #[test]
    fn ties_break_by_index() {
        let x = DataMatrix::from_row_slice(1, 3, &[0.0, -1.0, 1.0]).unwrap();
        let lists = knn_indices(&x, 1).unwrap();
        assert_eq!(ids(&lists[0]), vec![1]);
    }

    #[test]
    fn full_k_lists_everyone() {
        let x = random_data(1, 2, 7);
        let lists = knn_indices(&x, 6).unwrap();
        for (i, list) in lists.iter().enumerate() {
            let mut got = ids(list);
            got.sort_unstable();
            let expected: Vec<usize> = (0..7).filter(|&j| j != i).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn k_out_of_range() {
        let x = random_data(2, 2, 5);
        assert!(knn_indices(&x, 0).is_err());
        assert!(knn_indices(&x, 5).is_err());
    }

    #[test]
    fn matches_brute_force_sort() {
        let x = random_data(3, 2, 50);
        let lists = knn_indices(&x, 5).unwrap();
        for i in 0..50 {
            let mut all: Vec<(f64, usize)> = (0..50)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = (x.sample(i) - x.sample(j)).norm();
                    (d, j)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all.iter().take(5).map(|p| p.1).collect();
            assert_eq!(ids(&lists[i]), expected);
        }
    }

    #[test]
    fn coincident_samples_weight_one() {
        let x = DataMatrix::from_row_slice(2, 3, &[1.0, 1.0, 5.0, 2.0, 2.0, 9.0]).unwrap();
        let g = build_graph(&x, 1, 1.0).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn weight_at_unit_ratio_is_inverse_e() {
        let x = DataMatrix::from_row_slice(1, 2, &[0.0, 2.0]).unwrap();
        let g = build_graph(&x, 1, 4.0).unwrap();
        assert!((g.weight(0, 1) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((g.weight(0, 1) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn rejects_non_positive_q() {
        let x = random_data(4, 2, 5);
        assert!(build_graph(&x, 2, 0.0).is_err());
        assert!(build_graph(&x, 2, -1.0).is_err());
    }

    #[test]
    fn laplacian_matches_dense_oracle() {
        let x = random_data(5, 3, 20);
        let g = build_graph(&x, 3, 0.5).unwrap();
        // independent dense assembly from pairwise distances and the KNN rule
        let lists = knn_indices(&x, 3).unwrap();
        let mut s = DMatrix::<f64>::identity(20, 20);
        for i in 0..20 {
            for nb in &lists[i] {
                let w = (-(x.sample(i) - x.sample(nb.index)).norm_squared() / 0.5).exp();
                s[(i, nb.index)] = w;
                s[(nb.index, i)] = w;
            }
        }
        let d = DMatrix::from_diagonal(&DVector::from_fn(20, |i, _| s.row(i).sum()));
        let l = &d - &s;
        assert!((g.laplacian_dense() - &l).amax() < 1e-15);
        assert!((&s - s.transpose()).amax() == 0.0);

        let ones = DVector::from_element(20, 1.0);
        assert!(g.laplacian_apply(&ones).amax() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let v = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
            let quad = (v.transpose() * &l * &v)[(0, 0)];
            assert!(quad >= -1e-10 * v.norm_squared());
            assert!((g.laplacian_quadratic(&v) - quad).abs() < 1e-12);
            assert!((g.laplacian_apply(&v) - &l * &v).amax() < 1e-12);
        }
    }

    #[test]
    fn weighted_gram_matrices_match_dense() {
        let x = random_data(7, 4, 30);
        let g = build_graph(&x, 4, 1.0).unwrap();
        let xm = x.as_matrix();
        let l = g.laplacian_dense();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(g.degrees()));
        assert!((g.x_l_xt(&x).unwrap() - xm * &l * xm.transpose()).amax() < 1e-12);
        assert!((g.x_d_xt(&x).unwrap() - xm * &d * xm.transpose()).amax() < 1e-12);
    }

    #[test]
    fn scaling_with_q_leaves_weights_unchanged() {
        let x = random_data(8, 3, 25);
        let c = 3.5;
        let scaled = DataMatrix::new(x.as_matrix() * c).unwrap();
        let g1 = build_graph(&x, 4, 0.7).unwrap();
        let g2 = build_graph(&scaled, 4, 0.7 * c * c).unwrap();
        assert!((g1.similarity_dense() - g2.similarity_dense()).amax() < 1e-12);
    }

    #[test]
    fn permutation_commutes() {
        let x = random_data(9, 2, 15);
        let perm: Vec<usize> = vec![4, 0, 7, 1, 9, 12, 3, 14, 2, 5, 11, 6, 13, 8, 10];
        let px = DataMatrix::new(x.as_matrix().select_columns(perm.iter())).unwrap();
        let g = build_graph(&x, 3, 0.3).unwrap();
        let pg = build_graph(&px, 3, 0.3).unwrap();
        let p = DMatrix::from_fn(15, 15, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        let expected = &p * g.laplacian_dense() * p.transpose();
        assert!((pg.laplacian_dense() - expected).amax() < 1e-14);
    }

    #[test]
    fn default_q_is_median_kth() {
        let x = DataMatrix::from_row_slice(1, 4, &[0.0, 1.0, 3.0, 6.0]).unwrap();
        let lists = knn_indices(&x, 1).unwrap();
        // k-th distances: 1, 1, 2, 3 -> squared 1, 1, 4, 9 -> median 2.5
        assert_eq!(median_kth_squared_distance(&lists).unwrap(), 2.5);
        let g = GraphConfig { k: 1, q: None }.build(&x).unwrap();
        assert_eq!(g.q(), 2.5);
    }
}
