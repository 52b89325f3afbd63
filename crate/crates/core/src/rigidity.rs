//! Planar bearing rigidity: bearings, the bearing rigidity matrix, the
//! infinitesimal-rigidity rank test, and the two Henneberg moves.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point or displacement in the plane.
pub type Vec2 = Vector2<f64>;

/// Separation below which two positions are treated as the same point.
pub const COINCIDENCE_EPS: f64 = 1e-9;

/// Default relative singular-value threshold for the rank test.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Ambient dimension. Everything in this crate is planar.
pub const DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("vertices {0} and {1} are coincident")]
    CoincidentPoints(usize, usize),
    #[error("configuration is degenerate (all points coincide or too few points)")]
    DegenerateConfiguration,
    #[error("invalid anchor pair ({0}, {1})")]
    InvalidAnchor(usize, usize),
    #[error("edge ({0}, {1}) is not in the graph")]
    MissingEdge(usize, usize),
    #[error("invalid edge ({0}, {1}) for a graph on {2} vertices")]
    InvalidEdge(usize, usize, usize),
    #[error("graph has {graph} vertices but configuration has {config}")]
    SizeMismatch { graph: usize, config: usize },
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
}

/// Normalized undirected edge `(min, max)`.
pub type Edge = (usize, usize);

pub fn edge(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Ordered positions of the robots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<Vec2>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec2>) -> Result<Self, RigidityError> {
        if positions.is_empty() {
            return Err(RigidityError::DegenerateConfiguration);
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(RigidityError::NonFinite(i));
            }
        }
        Ok(Self { positions })
    }

    pub fn from_xy(points: &[[f64; 2]]) -> Result<Self, RigidityError> {
        Self::new(points.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.positions.iter().fold(Vec2::zeros(), |acc, p| acc + p);
        sum / self.positions.len() as f64
    }

    /// Positions stacked as `[x0, y0, x1, y1, ...]`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            DIM * self.len(),
            self.positions.iter().flat_map(|p| [p.x, p.y]),
        )
    }
}

/// Simple undirected graph on vertices `0..n`. Edges are kept sorted, which
/// fixes the canonical (lexicographic) edge order used for bearing vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<Edge>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, RigidityError> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        self.edges.iter().copied().collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&edge(i, j))
    }

    /// Adds an edge; adding an existing edge is a no-op and returns `false`.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool, RigidityError> {
        if i == j || i >= self.n || j >= self.n {
            return Err(RigidityError::InvalidEdge(i, j, self.n));
        }
        Ok(self.edges.insert(edge(i, j)))
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<(), RigidityError> {
        if self.edges.remove(&edge(i, j)) {
            Ok(())
        } else {
            Err(RigidityError::MissingEdge(i, j))
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// Appends a fresh isolated vertex and returns its index.
    pub fn add_vertex(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    /// Removes vertex `v` and its incident edges. Vertices above `v` shift
    /// down by one.
    pub fn remove_vertex(&mut self, v: usize) -> Vec<Edge> {
        let removed: Vec<Edge> = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| a == v || b == v)
            .collect();
        let shift = |x: usize| if x > v { x - 1 } else { x };
        self.edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != v && b != v)
            .map(|&(a, b)| edge(shift(a), shift(b)))
            .collect();
        self.n -= 1;
        removed
    }

    /// Relabels vertices: vertex `old` becomes `perm[old]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        Graph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| edge(perm[a], perm[b]))
                .collect(),
        }
    }

    /// Breadth-first hop distances from `src`; unreachable vertices get `None`.
    pub fn hop_distances(&self, src: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in &adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// `2n - 3`, the edge count of a minimally rigid planar graph.
    pub fn minimal_edge_count(n: usize) -> usize {
        (2 * n).saturating_sub(3)
    }
}

/// A graph together with the positions of its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    pub graph: Graph,
    pub config: Configuration,
}

impl Framework {
    pub fn new(graph: Graph, config: Configuration) -> Result<Self, RigidityError> {
        if graph.n() != config.len() {
            return Err(RigidityError::SizeMismatch {
                graph: graph.n(),
                config: config.len(),
            });
        }
        for (i, j) in graph.edges() {
            if (config.positions[j] - config.positions[i]).norm() <= COINCIDENCE_EPS {
                return Err(RigidityError::CoincidentPoints(i, j));
            }
        }
        Ok(Self { graph, config })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn position(&self, v: usize) -> Vec2 {
        self.config.positions[v]
    }
}

/// Unit bearings in canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct BearingSet(pub Vec<Vec2>);

impl BearingSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Unit vector pointing from `p_i` to `p_j`.
pub fn bearing_of(p_i: &Vec2, p_j: &Vec2) -> Result<Vec2, RigidityError> {
    let d = p_j - p_i;
    let len = d.norm();
    if !(len > COINCIDENCE_EPS) {
        return Err(RigidityError::CoincidentPoints(0, 1));
    }
    Ok(d / len)
}

fn edge_bearing(fw: &Framework, (i, j): Edge) -> Result<(Vec2, f64), RigidityError> {
    let d = fw.position(j) - fw.position(i);
    let len = d.norm();
    if !(len > COINCIDENCE_EPS) {
        return Err(RigidityError::CoincidentPoints(i, j));
    }
    Ok((d / len, len))
}

pub fn bearing_function(fw: &Framework) -> Result<BearingSet, RigidityError> {
    fw.graph
        .edges()
        .map(|e| edge_bearing(fw, e).map(|(g, _)| g))
        .collect::<Result<Vec<_>, _>>()
        .map(BearingSet)
}

/// Orthogonal projector onto the complement of the unit vector `g`.
pub fn projector(g: &Vec2) -> Matrix2<f64> {
    Matrix2::identity() - g * g.transpose()
}

/// The `2m x 2n` bearing rigidity matrix. Block row `e = (i, j)` holds
/// `-P_g / |p_ij|` at column block `i` and `+P_g / |p_ij|` at column block `j`.
pub fn bearing_rigidity_matrix(fw: &Framework) -> Result<DMatrix<f64>, RigidityError> {
    let n = fw.n();
    let m = fw.graph.m();
    let mut r = DMatrix::zeros(DIM * m, DIM * n);
    for (row, e) in fw.graph.edges().enumerate() {
        let (g, len) = edge_bearing(fw, e)?;
        let block = projector(&g) / len;
        r.fixed_view_mut::<2, 2>(DIM * row, DIM * e.0)
            .copy_from(&(-block));
        r.fixed_view_mut::<2, 2>(DIM * row, DIM * e.1)
            .copy_from(&block);
    }
    Ok(r)
}

/// Orthonormal basis of the translations and the scaling about the centroid.
pub fn trivial_motion_basis(config: &Configuration) -> Result<DMatrix<f64>, RigidityError> {
    let n = config.len();
    if n < 2 {
        return Err(RigidityError::DegenerateConfiguration);
    }
    let c = config.centroid();
    let mut basis = DMatrix::zeros(DIM * n, DIM + 1);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    for v in 0..n {
        basis[(DIM * v, 0)] = inv_sqrt_n;
        basis[(DIM * v + 1, 1)] = inv_sqrt_n;
    }
    // The centred configuration sums to zero per axis, so it is already
    // orthogonal to both translation columns.
    let mut scale = DVector::zeros(DIM * n);
    for (v, p) in config.positions.iter().enumerate() {
        scale[DIM * v] = p.x - c.x;
        scale[DIM * v + 1] = p.y - c.y;
    }
    let norm = scale.norm();
    if norm <= COINCIDENCE_EPS {
        return Err(RigidityError::DegenerateConfiguration);
    }
    basis.set_column(DIM, &(scale / norm));
    Ok(basis)
}

/// Outcome of the infinitesimal bearing rigidity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IbrReport {
    pub rigid: bool,
    pub rank: usize,
    pub nullity: usize,
}

/// Numerical rank from singular values: count of `sigma > tol * sigma_max`.
pub fn numerical_rank(mat: &DMatrix<f64>, tol: f64) -> usize {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return 0;
    }
    let sv = mat.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Infinitesimal bearing rigidity: the framework is IBR iff the rigidity
/// matrix has rank `2n - 3`, i.e. its only motions are translation and scaling.
pub fn is_ibr(fw: &Framework, tol: f64) -> Result<IbrReport, RigidityError> {
    let n = fw.n();
    if n < 2 {
        return Err(RigidityError::DegenerateConfiguration);
    }
    let rank = if fw.graph.m() == 0 {
        0
    } else {
        numerical_rank(&bearing_rigidity_matrix(fw)?, tol)
    };
    Ok(IbrReport {
        rigid: rank == DIM * n - DIM - 1,
        rank,
        nullity: DIM * n - rank,
    })
}

/// Henneberg vertex addition: new vertex `g.n()` joined to both anchors.
pub fn vertex_addition(g: &Graph, anchors: (usize, usize)) -> Result<Graph, RigidityError> {
    let (i, j) = anchors;
    if i == j || i >= g.n() || j >= g.n() {
        return Err(RigidityError::InvalidAnchor(i, j));
    }
    let mut out = g.clone();
    let v = out.add_vertex();
    out.add_edge(v, i)?;
    out.add_edge(v, j)?;
    Ok(out)
}

/// Henneberg edge splitting: remove `(i, j)`, add vertex `g.n()` joined to
/// `i`, `j` and `third`.
pub fn edge_splitting(
    g: &Graph,
    split_edge: (usize, usize),
    third: usize,
) -> Result<Graph, RigidityError> {
    let (i, j) = split_edge;
    if !g.has_edge(i, j) {
        return Err(RigidityError::MissingEdge(i, j));
    }
    if third == i || third == j || third >= g.n() {
        return Err(RigidityError::InvalidAnchor(third, third));
    }
    let mut out = g.clone();
    out.remove_edge(i, j)?;
    let v = out.add_vertex();
    out.add_edge(v, i)?;
    out.add_edge(v, j)?;
    out.add_edge(v, third)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fw(points: &[[f64; 2]], edges: &[(usize, usize)]) -> Framework {
        let config = Configuration::from_xy(points).unwrap();
        Framework::new(Graph::from_edges(points.len(), edges).unwrap(), config).unwrap()
    }

    #[test]
    fn bearing_examples() {
        let g = bearing_of(&Vec2::new(0.0, 0.0), &Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(g, Vec2::new(1.0, 0.0));
        let g = bearing_of(&Vec2::new(0.0, 0.0), &Vec2::new(3.0, 4.0)).unwrap();
        assert!((g - Vec2::new(0.6, 0.8)).norm() < 1e-15);
        assert!(matches!(
            bearing_of(&Vec2::new(1.0, 1.0), &Vec2::new(1.0, 1.0)),
            Err(RigidityError::CoincidentPoints(..))
        ));
        let a = Vec2::new(0.3, -1.2);
        let b = Vec2::new(-2.0, 0.7);
        assert_eq!(bearing_of(&a, &b).unwrap(), -bearing_of(&b, &a).unwrap());
    }

    #[test]
    fn triangle_bearings_in_canonical_order() {
        let f = fw(
            &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            &[(1, 2), (0, 2), (0, 1)],
        );
        let b = bearing_function(&f).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-h, h)];
        for (got, want) in b.0.iter().zip(want.iter()) {
            assert!((got - want).norm() < 1e-15);
        }
        let empty = fw(&[[0.0, 0.0], [1.0, 0.0]], &[]);
        assert!(bearing_function(&empty).unwrap().is_empty());
    }

    #[test]
    fn single_edge_matrix() {
        let f = fw(&[[0.0, 0.0], [1.0, 0.0]], &[(0, 1)]);
        let r = bearing_rigidity_matrix(&f).unwrap();
        let want = DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
        assert!((r - want).abs().max() < 1e-15);
        let rep = is_ibr(&f, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((rep.rigid, rep.rank), (true, 1));
    }

    #[test]
    fn trivial_basis_two_points() {
        let c = Configuration::from_xy(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let b = trivial_motion_basis(&c).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want =
            DMatrix::from_row_slice(4, 3, &[h, 0.0, -h, 0.0, h, 0.0, h, 0.0, h, 0.0, h, 0.0]);
        assert!((b.clone() - want).abs().max() < 1e-15);
        let gram = b.transpose() * b;
        assert!((gram - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        let same = Configuration::from_xy(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(
            trivial_motion_basis(&same),
            Err(RigidityError::DegenerateConfiguration)
        );
    }

    #[test]
    fn triangle_and_collinear_path() {
        let tri = fw(
            &[[0.0, 0.0], [1.0, 0.1], [0.3, 0.9]],
            &[(0, 1), (0, 2), (1, 2)],
        );
        let rep = is_ibr(&tri, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(
            rep,
            IbrReport {
                rigid: true,
                rank: 3,
                nullity: 3
            }
        );
        let path = fw(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], &[(0, 1), (1, 2)]);
        assert!(!is_ibr(&path, DEFAULT_RANK_TOL).unwrap().rigid);
    }

    #[test]
    fn henneberg_moves() {
        let k2 = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let tri = vertex_addition(&k2, (0, 1)).unwrap();
        assert_eq!(
            tri,
            Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
        );
        let g4 = vertex_addition(&tri, (0, 2)).unwrap();
        assert_eq!((g4.n(), g4.m()), (4, 5));
        assert_eq!(
            vertex_addition(&tri, (0, 0)),
            Err(RigidityError::InvalidAnchor(0, 0))
        );

        let split = edge_splitting(&tri, (0, 1), 2).unwrap();
        assert_eq!((split.n(), split.m()), (4, 5));
        assert!(!split.has_edge(0, 1));
        let f = Framework::new(
            split,
            Configuration::from_xy(&[[0.0, 0.0], [1.0, 0.2], [0.4, 1.0], [0.6, -0.7]]).unwrap(),
        )
        .unwrap();
        assert!(is_ibr(&f, DEFAULT_RANK_TOL).unwrap().rigid);
        assert_eq!(
            edge_splitting(&tri.remove_vertex_clone(2), (0, 1), 1),
            Err(RigidityError::InvalidAnchor(1, 1))
        );
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            edge_splitting(&path, (0, 2), 1),
            Err(RigidityError::MissingEdge(0, 2))
        );
    }

    #[test]
    fn remove_vertex_shifts_labels() {
        let mut g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let removed = g.remove_vertex(1);
        assert_eq!(removed, vec![(0, 1), (1, 2)]);
        assert_eq!(g.edge_list(), vec![(0, 2), (1, 2)]);
        assert_eq!(g.n(), 3);
    }

    impl Graph {
        fn remove_vertex_clone(&self, v: usize) -> Graph {
            let mut g = self.clone();
            g.remove_vertex(v);
            g
        }
    }
}
