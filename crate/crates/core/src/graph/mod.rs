//! Graph data model: adjacency, node features, sensitive channel, labels and
//! split masks, plus the operators derived from the adjacency.

mod io;
mod sbm;
mod split;

pub use io::{load_graph, read_masks, write_edge_list, write_masks, write_node_table};
pub use sbm::{generate_sbm, SbmConfig};
pub use split::{make_splits, Splits};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::sparse::CsrMatrix;

/// An undirected, unweighted attributed graph with a binary sensitive channel
/// and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: CsrMatrix,
    features: Array2<f64>,
    feature_names: Vec<String>,
    sensitive_index: usize,
    labels: Vec<u8>,
    splits: Splits,
}

impl Graph {
    /// Builds a graph from an undirected edge list.
    ///
    /// Reversed and repeated pairs are merged and self-loops dropped, so the
    /// stored adjacency is symmetric with unit weights and an empty diagonal.
    /// The sensitive channel is column `sensitive_index` of `features`.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        sensitive_index: usize,
        labels: Vec<u8>,
    ) -> Result<Self, GraphError> {
        if features.nrows() != n || labels.len() != n {
            return Err(GraphError::Shape(format!(
                "expected {n} rows, got {} feature rows and {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() || sensitive_index >= features.ncols() {
            return Err(GraphError::Shape(
                "feature names or sensitive column index do not match the feature matrix".into(),
            ));
        }
        for (row, &v) in features.column(sensitive_index).iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(GraphError::NonBinary {
                    column: feature_names[sensitive_index].clone(),
                    row,
                    value: v.to_string(),
                });
            }
        }
        if let Some(row) = labels.iter().position(|&y| y > 1) {
            return Err(GraphError::NonBinary {
                column: "label".into(),
                row,
                value: labels[row].to_string(),
            });
        }

        let mut pairs = Vec::new();
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(GraphError::NodeOutOfRange { id, n });
                }
            }
            if u != v {
                pairs.push((u.min(v), u.max(v)));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let triplets: Vec<_> = pairs
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .collect();
        Ok(Self {
            adjacency: CsrMatrix::from_triplets(n, &triplets),
            features,
            feature_names,
            sensitive_index,
            labels,
            splits: Splits::empty(n),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.adjacency
                .row(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, _)| (u, v))
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_index(&self) -> usize {
        self.sensitive_index
    }

    pub fn sensitive_name(&self) -> &str {
        &self.feature_names[self.sensitive_index]
    }

    /// The sensitive channel as 0/1 values.
    pub fn sensitive(&self) -> Vec<u8> {
        self.features
            .column(self.sensitive_index)
            .iter()
            .map(|&v| v as u8)
            .collect()
    }

    /// The sensitive channel as a real vector (h_sen).
    pub fn sensitive_channel(&self) -> Vec<f64> {
        self.features.column(self.sensitive_index).to_vec()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn set_splits(&mut self, splits: Splits) -> Result<(), GraphError> {
        if splits.len() != self.n() {
            return Err(GraphError::Shape("split masks do not cover the graph".into()));
        }
        self.splits = splits;
        Ok(())
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self, GraphError> {
        self.set_splits(splits)?;
        Ok(self)
    }

    /// Connected components by union-find; returns a component id per node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (u, v) in self.edges().collect::<Vec<_>>() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                if ids[root] == usize::MAX {
                    ids[root] = next;
                    next += 1;
                }
                ids[root]
            })
            .collect()
    }
}

/// Which operator is derived from the adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorMode {
    RawAdjacency,
    #[default]
    SymNormalized,
}

impl std::fmt::Display for OperatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorMode::RawAdjacency => "raw-adjacency",
            OperatorMode::SymNormalized => "sym-normalized",
        })
    }
}

impl std::str::FromStr for OperatorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw-adjacency" | "raw" => Ok(OperatorMode::RawAdjacency),
            "sym-normalized" | "normalized" => Ok(OperatorMode::SymNormalized),
            other => Err(format!("unknown operator mode `{other}`")),
        }
    }
}

/// A symmetric propagation operator derived from a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator {
    matrix: CsrMatrix,
    mode: OperatorMode,
}

impl NormalizedOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn mode(&self) -> OperatorMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

impl crate::sparse::LinearOperator for NormalizedOperator {
    fn dim(&self) -> usize {
        self.matrix.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.spmv(x, y)
    }
}

/// Derives the propagation operator.
///
/// `SymNormalized` returns `D̂^{-1/2} (A + I) D̂^{-1/2}` where `D̂` is the degree
/// matrix of `A + I`; isolated nodes get a unit diagonal entry.
pub fn normalize(g: &Graph, mode: OperatorMode) -> NormalizedOperator {
    let a = g.adjacency();
    let matrix = match mode {
        OperatorMode::RawAdjacency => a.clone(),
        OperatorMode::SymNormalized => {
            let n = a.n();
            let inv_sqrt: Vec<f64> = (0..n)
                .map(|i| {
                    let deg = a.row(i).map(|(_, v)| v).sum::<f64>() + 1.0;
                    1.0 / deg.sqrt()
                })
                .collect();
            let mut triplets = Vec::with_capacity(a.nnz() + n);
            for i in 0..n {
                triplets.push((i, i, inv_sqrt[i] * inv_sqrt[i]));
                for (j, v) in a.row(i) {
                    triplets.push((i, j, inv_sqrt[i] * v * inv_sqrt[j]));
                }
            }
            CsrMatrix::from_triplets(n, &triplets)
        }
    };
    NormalizedOperator { matrix, mode }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::LinearOperator;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};

    pub(crate) fn tiny(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut x = Array2::zeros((n, 2));
        for i in 0..n {
            x[[i, 0]] = (i % 2) as f64;
            x[[i, 1]] = i as f64;
        }
        Graph::new(
            n,
            edges.iter().copied(),
            x,
            vec!["s".into(), "f".into()],
            0,
            (0..n).map(|i| (i % 2) as u8).collect(),
        )
        .unwrap()
    }

    #[test]
    fn duplicate_and_reversed_edges_collapse() {
        let g = tiny(4, &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2), (0, 1), (2, 2)]);
        assert_eq!(g.num_edges(), 3);
        assert!(g.adjacency().is_symmetric());
        assert!(!g.adjacency().has_self_loops());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn out_of_range_edge_is_rejected() {
        let x = Array2::zeros((2, 1));
        let err = Graph::new(2, [(0, 5)], x, vec!["s".into()], 0, vec![0, 1]).unwrap_err();
        assert!(matches!(err, GraphError::NodeOutOfRange { id: 5, n: 2 }));
    }

    #[test]
    fn single_edge_normalizes_to_halves() {
        let g = tiny(2, &[(0, 1)]);
        let s = normalize(&g, OperatorMode::SymNormalized).matrix().to_dense();
        for v in s.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn raw_mode_is_identity_transform() {
        let g = tiny(4, &[(0, 1), (1, 2), (2, 3)]);
        let op = normalize(&g, OperatorMode::RawAdjacency);
        assert_eq!(op.matrix(), g.adjacency());
        assert_eq!(op.mode(), OperatorMode::RawAdjacency);
    }

    #[test]
    fn isolated_node_gets_unit_diagonal() {
        let g = tiny(3, &[(0, 1)]);
        let s = normalize(&g, OperatorMode::SymNormalized);
        assert_eq!(s.matrix().get(2, 2), 1.0);
    }

    #[test]
    fn triangle_top_eigenvalue_is_one() {
        let g = tiny(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = normalize(&g, OperatorMode::SymNormalized).matrix().to_dense();
        let eig = crate::eigen::full_dense_eigendecomposition(&s).unwrap();
        assert!((eig.eigenvalues()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_rayleigh_quotients_are_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let edges: Vec<_> = (0..400)
            .map(|_| (rng.random_range(0..120), rng.random_range(0..120)))
            .collect();
        let g = tiny(120, &edges);
        let s = normalize(&g, OperatorMode::SymNormalized);
        let mut y = vec![0.0; 120];
        for _ in 0..1000 {
            let mut x: Vec<f64> = (0..120).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nx = crate::sparse::norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            s.apply(&x, &mut y);
            let q = crate::sparse::dot(&x, &y);
            assert!(q.abs() <= 1.0 + 1e-12, "rayleigh quotient {q}");
        }
    }

    #[test]
    fn components_detect_disconnected_blocks() {
        let g = tiny(5, &[(0, 1), (2, 3)]);
        assert_eq!(g.components(), vec![0, 0, 1, 1, 2]);
    }
}
