//! Immutable attributed graphs: symmetric CSR adjacency, dense node features,
//! optional labels and disjoint train/validation/test splits.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Symmetric compressed-sparse-row adjacency without self-loops.
///
/// Row `v` lists the neighbors of `v` in strictly increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl Csr {
    /// Builds an undirected adjacency over `n` nodes. Direction is ignored,
    /// duplicates are merged and self-loops dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u != v {
                rows[u].push(v);
                rows[v].push(u);
            }
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            offsets.push(indices.len());
        }
        Csr { offsets, indices }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    /// Sorted neighbor list of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn row(&self, v: usize) -> &[usize] {
        &self.indices[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && v < self.num_nodes() && self.row(u).binary_search(&v).is_ok()
    }

    /// Copy with the undirected pair `{u, v}` added if absent or removed if present.
    pub fn toggled(&self, u: usize, v: usize) -> Csr {
        debug_assert!(u != v && u < self.num_nodes() && v < self.num_nodes());
        let mut offsets = Vec::with_capacity(self.offsets.len());
        let mut indices = Vec::with_capacity(self.indices.len() + 2);
        offsets.push(0);
        for x in 0..self.num_nodes() {
            let row = self.row(x);
            let other = if x == u {
                Some(v)
            } else if x == v {
                Some(u)
            } else {
                None
            };
            match other {
                None => indices.extend_from_slice(row),
                Some(y) => match row.binary_search(&y) {
                    Ok(i) => {
                        indices.extend_from_slice(&row[..i]);
                        indices.extend_from_slice(&row[i + 1..]);
                    }
                    Err(i) => {
                        indices.extend_from_slice(&row[..i]);
                        indices.push(y);
                        indices.extend_from_slice(&row[i..]);
                    }
                },
            }
            offsets.push(indices.len());
        }
        Csr { offsets, indices }
    }

    /// Undirected edges as `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.row(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }
}

/// Disjoint node-id sets, each kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn new(mut train: Vec<usize>, mut val: Vec<usize>, mut test: Vec<usize>) -> Self {
        for set in [&mut train, &mut val, &mut test] {
            set.sort_unstable();
            set.dedup();
        }
        Splits { train, val, test }
    }

    /// Swaps the training and test sets.
    pub fn reversed(&self) -> Self {
        Splits {
            train: self.test.clone(),
            val: self.val.clone(),
            test: self.train.clone(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &node in self.train.iter().chain(&self.val).chain(&self.test) {
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
            if std::mem::replace(&mut seen[node], true) {
                return Err(Error::OverlappingSplits { node });
            }
        }
        Ok(())
    }
}

#[derive(Debug, PartialEq)]
struct Attributes {
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    splits: Splits,
}

/// An undirected, unweighted, attributed graph. Node attributes are shared
/// between graphs that differ only in structure, so structural edits are cheap.
#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Csr,
    attrs: Arc<Attributes>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency
            && (Arc::ptr_eq(&self.attrs, &other.attrs) || self.attrs == other.attrs)
    }
}

/// Relation between a subgraph's node ids and the ids of the graph it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    forward: HashMap<usize, usize>,
    backward: Vec<usize>,
}

impl NodeMapping {
    /// Subgraph id of an original node, if it was kept.
    pub fn to_sub(&self, original: usize) -> Option<usize> {
        self.forward.get(&original).copied()
    }

    pub fn to_original(&self, sub: usize) -> usize {
        self.backward[sub]
    }

    /// Original ids in subgraph-id order.
    pub fn original_ids(&self) -> &[usize] {
        &self.backward
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }
}

impl Graph {
    /// Builds a graph with `features.nrows()` nodes.
    ///
    /// `labels` is either empty (no labels) or holds one entry per node.
    pub fn build(
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        splits: Splits,
    ) -> Result<Self> {
        let n = features.nrows();
        let adjacency = Csr::from_edges(n, edges.iter().copied())?;
        Self::from_parts(adjacency, features, labels, num_classes, splits)
    }

    pub fn from_parts(
        adjacency: Csr,
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        splits: Splits,
    ) -> Result<Self> {
        let n = features.nrows();
        if adjacency.num_nodes() != n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency has {} nodes but the feature matrix has {n} rows",
                adjacency.num_nodes()
            )));
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFiniteFeature { row, col });
        }
        let labels = if labels.is_empty() { vec![None; n] } else { labels };
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        for (node, label) in labels.iter().enumerate() {
            if let Some(label) = *label {
                if label >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        node,
                        label,
                        classes: num_classes,
                    });
                }
            }
        }
        splits.validate(n)?;
        Ok(Graph {
            adjacency,
            attrs: Arc::new(Attributes {
                features,
                labels,
                num_classes,
                splits,
            }),
        })
    }

    /// Same node attributes over a different edge set.
    pub(crate) fn with_adjacency(&self, adjacency: Csr) -> Self {
        debug_assert_eq!(adjacency.num_nodes(), self.num_nodes());
        Graph {
            adjacency,
            attrs: Arc::clone(&self.attrs),
        }
    }

    /// Same graph with replaced splits.
    pub fn with_splits(&self, splits: Splits) -> Result<Self> {
        splits.validate(self.num_nodes())?;
        let attrs = Attributes {
            features: self.attrs.features.clone(),
            labels: self.attrs.labels.clone(),
            num_classes: self.attrs.num_classes,
            splits,
        };
        Ok(Graph {
            adjacency: self.adjacency.clone(),
            attrs: Arc::new(attrs),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.num_edges()
    }

    pub fn num_features(&self) -> usize {
        self.attrs.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.attrs.num_classes
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.attrs.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.attrs.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.attrs.labels.get(v).copied().flatten()
    }

    pub fn splits(&self) -> &Splits {
        &self.attrs.splits
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        if v >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                node: v,
                n: self.num_nodes(),
            });
        }
        Ok(self.adjacency.row(v))
    }

    /// Labels of `nodes`, failing on the first unlabeled node.
    pub fn labels_of(&self, nodes: &[usize]) -> Result<Vec<usize>> {
        nodes
            .iter()
            .map(|&node| {
                if node >= self.num_nodes() {
                    return Err(Error::NodeOutOfRange {
                        node,
                        n: self.num_nodes(),
                    });
                }
                self.label(node).ok_or(Error::MissingLabel { node })
            })
            .collect()
    }

    /// Subgraph induced by `nodes`: kept nodes are renumbered in ascending
    /// original order and every edge with both endpoints kept survives.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<(Graph, NodeMapping)> {
        let n = self.num_nodes();
        let mut kept = nodes.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() {
            return Err(Error::EmptyNodeSet);
        }
        if let Some(&node) = kept.iter().find(|&&v| v >= n) {
            return Err(Error::NodeOutOfRange { node, n });
        }

        let mut local = vec![usize::MAX; n];
        for (sub, &orig) in kept.iter().enumerate() {
            local[orig] = sub;
        }
        let rows = kept
            .iter()
            .map(|&orig| {
                self.adjacency
                    .row(orig)
                    .iter()
                    .filter_map(|&u| (local[u] != usize::MAX).then_some(local[u]))
                    .collect()
            })
            .collect();
        let adjacency = Csr::from_rows(rows);

        let features = self.attrs.features.select(Axis(0), &kept);
        let labels = kept.iter().map(|&v| self.attrs.labels[v]).collect();
        let remap = |set: &[usize]| -> Vec<usize> {
            set.iter()
                .filter_map(|&v| (local[v] != usize::MAX).then_some(local[v]))
                .collect()
        };
        let splits = Splits::new(
            remap(&self.attrs.splits.train),
            remap(&self.attrs.splits.val),
            remap(&self.attrs.splits.test),
        );
        let forward = kept.iter().enumerate().map(|(s, &o)| (o, s)).collect();
        let sub = Graph {
            adjacency,
            attrs: Arc::new(Attributes {
                features,
                labels,
                num_classes: self.attrs.num_classes,
                splits,
            }),
        };
        Ok((
            sub,
            NodeMapping {
                forward,
                backward: kept,
            },
        ))
    }

    /// Keeps only the feature columns in `dims`, in ascending original order.
    pub fn restrict_features(&self, dims: &[usize]) -> Result<Graph> {
        let features = select_columns(&self.attrs.features, dims)?;
        Ok(Graph {
            adjacency: self.adjacency.clone(),
            attrs: Arc::new(Attributes {
                features,
                labels: self.attrs.labels.clone(),
                num_classes: self.attrs.num_classes,
                splits: self.attrs.splits.clone(),
            }),
        })
    }
}

/// Column subset of `features`, sorted ascending and deduplicated.
pub(crate) fn select_columns(features: &Array2<f64>, dims: &[usize]) -> Result<Array2<f64>> {
    let mut cols = dims.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.is_empty() {
        return Err(Error::EmptyDimSet);
    }
    let d = features.ncols();
    if let Some(&dim) = cols.iter().find(|&&c| c >= d) {
        return Err(Error::DimOutOfRange { dim, d });
    }
    Ok(features.select(Axis(1), &cols))
}

/// Fraction of `full`'s edges that survive in `sub`; 1 when `full` has none.
pub fn edge_preservation_ratio(full: &Graph, sub: &Graph) -> f64 {
    if full.num_edges() == 0 {
        1.0
    } else {
        sub.num_edges() as f64 / full.num_edges() as f64
    }
}
