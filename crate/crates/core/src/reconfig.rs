//! Rigidity recovery when robots leave the network to recharge.
//!
//! Departures are handled bottom-up: all level-4 robots first, undoing the
//! Henneberg move that attached them, then level-3 robots, whose remaining
//! neighbors inherit an edge to one of the departing robot's level-1 (or
//! level-2) neighbors. That second move is an edge contraction, screened by
//! the common-neighbor test: an edge whose endpoints share two or more
//! neighbors can never be contracted without losing rigidity. Every path
//! ends with an explicit IBR check, and a greedy rank-increasing repair is
//! the last resort.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{EnergyLevel, Network, NetworkError};
use crate::rigidity::{
    bearing_rigidity_matrix, edge, is_ibr, numerical_rank, Configuration, Edge, Framework, Graph,
    RigidityError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconfigError {
    #[error("departure batch is empty")]
    EmptyBatch,
    #[error("robot {robot} departs at level {level}, only levels 3 and 4 may depart")]
    InvalidDepartureLevel { robot: usize, level: EnergyLevel },
    #[error("robot {0} is not in the network")]
    UnknownRobot(usize),
    #[error("only {0} robots would remain, need at least two")]
    TooFewRemaining(usize),
    #[error("vertex {vertex} has degree {degree}; reverse Henneberg needs 2 or 3")]
    IrreversibleDegree { vertex: usize, degree: usize },
    #[error("vertex {0} has no level-1 or level-2 neighbor")]
    NoEnergeticNeighbor(usize),
    #[error("local repair failed: {0}")]
    RepairFailed(String),
    #[error("rank cannot reach 2n - 3 by adding edges")]
    RepairImpossible,
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Robots leaving together in one simulation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepartureBatch {
    departing: BTreeMap<usize, EnergyLevel>,
}

impl DepartureBatch {
    pub fn new(
        departing: impl IntoIterator<Item = (usize, EnergyLevel)>,
    ) -> Result<Self, ReconfigError> {
        let departing: BTreeMap<usize, EnergyLevel> = departing.into_iter().collect();
        if departing.is_empty() {
            return Err(ReconfigError::EmptyBatch);
        }
        for (&robot, &level) in &departing {
            if level < EnergyLevel::THREE {
                return Err(ReconfigError::InvalidDepartureLevel { robot, level });
            }
        }
        Ok(Self { departing })
    }

    pub fn len(&self) -> usize {
        self.departing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.departing.is_empty()
    }

    pub fn robots(&self) -> impl Iterator<Item = (usize, EnergyLevel)> + '_ {
        self.departing.iter().map(|(&r, &l)| (r, l))
    }

    /// Level-4 robots first, then level-3, each group by robot id.
    pub fn bottom_up(&self) -> Vec<(usize, EnergyLevel)> {
        let mut out: Vec<_> = self.robots().collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "procedure", rename_all = "snake_case")]
pub enum Procedure {
    /// Degree-2 vertex dropped with its edges.
    ReverseVertexAddition,
    /// Degree-3 vertex dropped; one edge added between former neighbors.
    ReverseEdgeSplitting,
    /// Edge to `onto` contracted; the departed robot's neighbors attach to it.
    Contraction { onto: usize },
    /// Rank-increasing edge additions.
    Greedy,
}

/// What happened for one departing robot. Edges are robot-id pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartureRepair {
    pub robot: usize,
    pub level: EnergyLevel,
    pub procedure: Procedure,
    pub removed_edges: Vec<(usize, usize)>,
    pub added_edges: Vec<(usize, usize)>,
    pub locality: usize,
    pub used_fallback: bool,
}

/// Net effect of a batch. Edges are robot-id pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub removed_edges: Vec<(usize, usize)>,
    pub added_edges: Vec<(usize, usize)>,
    pub used_fallback: bool,
    /// Largest hop distance, in the graph just before each departure,
    /// between an added edge's endpoint and the departed vertex.
    pub locality: usize,
    pub departures: Vec<DepartureRepair>,
}

/// A local repair expressed in the labels of the framework before removal.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRepair {
    pub removed: Vec<Edge>,
    pub added: Vec<Edge>,
    pub procedure: Procedure,
}

pub fn common_neighbors(g: &Graph, v: usize, w: usize) -> Vec<usize> {
    let nv: BTreeSet<usize> = g.neighbors(v).into_iter().collect();
    g.neighbors(w)
        .into_iter()
        .filter(|x| nv.contains(x))
        .collect()
}

/// Sufficient test for non-contractibility: more than one common neighbor.
pub fn is_noncontractible(g: &Graph, e: Edge) -> Result<bool, ReconfigError> {
    if !g.has_edge(e.0, e.1) {
        return Err(RigidityError::MissingEdge(e.0, e.1).into());
    }
    Ok(common_neighbors(g, e.0, e.1).len() >= 2)
}

/// Merges the endpoints of `e` into the lower-labelled one. Parallel edges
/// collapse, and labels above the removed endpoint shift down.
pub fn contract_edge(g: &Graph, e: Edge) -> Result<Graph, ReconfigError> {
    let (keep, gone) = edge(e.0, e.1);
    if !g.has_edge(keep, gone) {
        return Err(RigidityError::MissingEdge(e.0, e.1).into());
    }
    let mut out = g.clone();
    for u in g.neighbors(gone) {
        if u != keep {
            out.add_edge(keep, u)?;
        }
    }
    out.remove_vertex(gone);
    Ok(out)
}

fn without_vertex(fw: &Framework, v: usize, extra: &[Edge]) -> Result<Framework, ReconfigError> {
    let mut g = fw.graph.clone();
    for &(a, b) in extra {
        g.add_edge(a, b)?;
    }
    g.remove_vertex(v);
    let mut pts = fw.config.positions.clone();
    pts.remove(v);
    Ok(Framework::new(g, Configuration::new(pts)?)?)
}

fn incident(g: &Graph, v: usize) -> Vec<Edge> {
    g.neighbors(v).into_iter().map(|w| edge(v, w)).collect()
}

/// Reverse Henneberg move for a departing level-4 vertex.
pub fn remove_level4(
    fw: &Framework,
    v: usize,
    tol: f64,
) -> Result<(Framework, LocalRepair), ReconfigError> {
    let g = &fw.graph;
    let nb = g.neighbors(v);
    let removed = incident(g, v);
    match nb.len() {
        0..=2 => {
            let out = without_vertex(fw, v, &[])?;
            if out.n() >= 2 && !is_ibr(&out, tol)?.rigid {
                return Err(ReconfigError::RepairFailed(format!(
                    "removing degree-{} vertex {v} leaves a flexible framework",
                    nb.len()
                )));
            }
            Ok((
                out,
                LocalRepair {
                    removed,
                    added: vec![],
                    procedure: Procedure::ReverseVertexAddition,
                },
            ))
        }
        3 => {
            for (a, b) in [(nb[0], nb[1]), (nb[0], nb[2]), (nb[1], nb[2])] {
                if g.has_edge(a, b) {
                    continue;
                }
                let out = without_vertex(fw, v, &[(a, b)])?;
                if is_ibr(&out, tol)?.rigid {
                    return Ok((
                        out,
                        LocalRepair {
                            removed,
                            added: vec![(a, b)],
                            procedure: Procedure::ReverseEdgeSplitting,
                        },
                    ));
                }
            }
            Err(ReconfigError::RepairFailed(format!(
                "no neighbor pair of vertex {v} restores rigidity"
            )))
        }
        degree => Err(ReconfigError::IrreversibleDegree { vertex: v, degree }),
    }
}

/// Inheritance repair for a departing level-3 vertex: contract the edge to a
/// level-1 neighbor (level-2 if no level-1 edge is contractible), so every
/// other neighbor of `v` gains an edge to it.
pub fn remove_level3(
    fw: &Framework,
    v: usize,
    levels: &[EnergyLevel],
    tol: f64,
) -> Result<(Framework, LocalRepair), ReconfigError> {
    let g = &fw.graph;
    let nb = g.neighbors(v);
    let energetic = |level: EnergyLevel| -> Vec<usize> {
        let mut c: Vec<usize> = nb.iter().copied().filter(|&w| levels[w] == level).collect();
        c.sort_by_key(|&w| (common_neighbors(g, v, w).len(), w));
        c
    };
    let tiers = [energetic(EnergyLevel::ONE), energetic(EnergyLevel::TWO)];
    if tiers.iter().all(|t| t.is_empty()) {
        return Err(ReconfigError::NoEnergeticNeighbor(v));
    }
    contract_onto(fw, v, tiers.iter().flatten().copied(), tol)
}

/// Tries to contract `v` onto each candidate neighbor in turn.
fn contract_onto(
    fw: &Framework,
    v: usize,
    candidates: impl IntoIterator<Item = usize>,
    tol: f64,
) -> Result<(Framework, LocalRepair), ReconfigError> {
    let g = &fw.graph;
    let nb = g.neighbors(v);
    let target = Graph::minimal_edge_count(g.n() - 1);
    let removed = incident(g, v);
    for w in candidates {
        if is_noncontractible(g, edge(v, w))? {
            continue;
        }
        let mut added: Vec<Edge> = nb
            .iter()
            .copied()
            .filter(|&u| u != w && !g.has_edge(u, w))
            .map(|u| edge(u, w))
            .collect();
        let mut out = without_vertex(fw, v, &added)?;
        // With no common neighbor the contraction keeps one edge too many;
        // drop a redundant inherited edge.
        if out.graph.m() > target {
            let mut pruned = false;
            for (idx, &(a, b)) in added.iter().enumerate() {
                let (a2, b2) = (shift(a, v), shift(b, v));
                let mut trial = out.clone();
                trial.graph.remove_edge(a2, b2)?;
                if is_ibr(&trial, tol)?.rigid {
                    out = trial;
                    added.remove(idx);
                    pruned = true;
                    break;
                }
            }
            if !pruned {
                continue;
            }
        }
        if out.graph.m() == target && is_ibr(&out, tol)?.rigid {
            return Ok((
                out,
                LocalRepair {
                    removed,
                    added,
                    procedure: Procedure::Contraction { onto: w },
                },
            ));
        }
    }
    Err(ReconfigError::RepairFailed(format!(
        "no contractible edge at vertex {v}"
    )))
}

/// Second local attempt when the level-specific procedure fails: a reverse
/// Henneberg move if the degree allows it, then contraction onto any
/// neighbor, highest level first.
fn local_fallback(
    fw: &Framework,
    v: usize,
    levels: &[EnergyLevel],
    tol: f64,
) -> Result<(Framework, LocalRepair), ReconfigError> {
    let g = &fw.graph;
    if g.degree(v) <= 3 {
        if let Ok(r) = remove_level4(fw, v, tol) {
            return Ok(r);
        }
    }
    let mut nb = g.neighbors(v).to_vec();
    nb.sort_by_key(|&w| (levels[w], common_neighbors(g, v, w).len(), w));
    contract_onto(fw, v, nb, tol)
}

fn shift(x: usize, removed: usize) -> usize {
    if x > removed {
        x - 1
    } else {
        x
    }
}

/// Adds edges in increasing hop distance, keeping each one only if it raises
/// the rank, until the framework is IBR. Returns the repaired framework and
/// the added edges.
pub fn greedy_rigidity_repair(
    fw: &Framework,
    tol: f64,
) -> Result<(Framework, Vec<Edge>), ReconfigError> {
    let n = fw.n();
    let target = Graph::minimal_edge_count(n);
    let rank_of = |f: &Framework| -> Result<usize, ReconfigError> {
        if f.graph.m() == 0 {
            return Ok(0);
        }
        Ok(numerical_rank(&bearing_rigidity_matrix(f)?, tol))
    };
    let mut cur = fw.clone();
    let mut rank = rank_of(&cur)?;
    let mut added = Vec::new();
    if rank == target {
        return Ok((cur, added));
    }
    let mut candidates = Vec::new();
    let dist: Vec<Vec<Option<usize>>> = (0..n).map(|s| fw.graph.hop_distances(s)).collect();
    for a in 0..n {
        for b in a + 1..n {
            if fw.graph.has_edge(a, b) {
                continue;
            }
            let hops = dist[a][b].unwrap_or(usize::MAX);
            candidates.push((hops, a, b));
        }
    }
    candidates.sort();
    for (_, a, b) in candidates {
        let mut trial = cur.clone();
        trial.graph.add_edge(a, b)?;
        if (trial.position(a) - trial.position(b)).norm() <= crate::rigidity::COINCIDENCE_EPS {
            continue;
        }
        let r = rank_of(&trial)?;
        if r > rank {
            cur = trial;
            rank = r;
            added.push((a, b));
            if rank == target {
                return Ok((cur, added));
            }
        }
    }
    Err(ReconfigError::RepairImpossible)
}

fn locality_of(pre: &Graph, v: usize, added: &[Edge]) -> usize {
    let dist = pre.hop_distances(v);
    added
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .map(|x| dist[x].unwrap_or(usize::MAX))
        .max()
        .unwrap_or(0)
}

/// Handles a whole departure batch bottom-up and returns the repaired
/// network with a freshly derived construction record. `levels` gives the
/// current level of every vertex of `net`.
pub fn reconfigure(
    net: &Network,
    levels: &[EnergyLevel],
    batch: &DepartureBatch,
    tol: f64,
) -> Result<(Network, RepairReport), ReconfigError> {
    if levels.len() != net.n() {
        return Err(NetworkError::LengthMismatch("levels vs network").into());
    }
    for (robot, _) in batch.robots() {
        if net.vertex_of(robot).is_none() {
            return Err(ReconfigError::UnknownRobot(robot));
        }
    }
    let remaining = net.n() - batch.len();
    if remaining < 2 {
        return Err(ReconfigError::TooFewRemaining(remaining));
    }
    let level_of: BTreeMap<usize, EnergyLevel> = net
        .robots
        .iter()
        .copied()
        .zip(levels.iter().copied())
        .collect();

    let mut fw = net.framework.clone();
    let mut robots = net.robots.clone();
    let mut departures = Vec::new();
    for (robot, level) in batch.bottom_up() {
        let v = robots
            .iter()
            .position(|&r| r == robot)
            .ok_or(ReconfigError::UnknownRobot(robot))?;
        let vertex_levels: Vec<EnergyLevel> = robots.iter().map(|r| level_of[r]).collect();
        let mut used_fallback = false;
        let local = if level == EnergyLevel::FOUR {
            match remove_level4(&fw, v, tol) {
                Ok(r) => Ok(r),
                Err(ReconfigError::IrreversibleDegree { .. }) => {
                    remove_level3(&fw, v, &vertex_levels, tol)
                }
                Err(e) => Err(e),
            }
        } else {
            remove_level3(&fw, v, &vertex_levels, tol)
        };
        let local = match local {
            Err(ReconfigError::RepairFailed(_)) | Err(ReconfigError::NoEnergeticNeighbor(_)) => {
                local_fallback(&fw, v, &vertex_levels, tol)
            }
            other => other,
        };
        let (next, repair) = match local {
            Ok(r) => r,
            Err(ReconfigError::RepairFailed(_)) => {
                used_fallback = true;
                let removed = incident(&fw.graph, v);
                let stripped = without_vertex(&fw, v, &[])?;
                let (repaired, added_post) = greedy_rigidity_repair(&stripped, tol)
                    .map_err(|e| ReconfigError::RepairFailed(e.to_string()))?;
                // Back to pre-removal labels for reporting.
                let unshift = |x: usize| if x >= v { x + 1 } else { x };
                let added = added_post
                    .iter()
                    .map(|&(a, b)| edge(unshift(a), unshift(b)))
                    .collect();
                (
                    repaired,
                    LocalRepair {
                        removed,
                        added,
                        procedure: Procedure::Greedy,
                    },
                )
            }
            Err(e) => return Err(e),
        };
        let to_robot = |(a, b): Edge| {
            let (ra, rb) = (robots[a], robots[b]);
            (ra.min(rb), ra.max(rb))
        };
        departures.push(DepartureRepair {
            robot,
            level,
            procedure: repair.procedure,
            removed_edges: repair.removed.iter().map(|&e| to_robot(e)).collect(),
            added_edges: repair.added.iter().map(|&e| to_robot(e)).collect(),
            locality: locality_of(&fw.graph, v, &repair.added),
            used_fallback,
        });
        fw = next;
        robots.remove(v);
    }

    let verdict = is_ibr(&fw, tol)?;
    if !verdict.rigid || fw.graph.m() != Graph::minimal_edge_count(fw.n()) {
        return Err(ReconfigError::RepairFailed(format!(
            "final framework rank {} with {} edges on {} vertices",
            verdict.rank,
            fw.graph.m(),
            fw.n()
        )));
    }
    let repaired = Network::from_framework(fw, robots)?;

    let before: BTreeSet<(usize, usize)> = net.robot_edges().into_iter().collect();
    let after: BTreeSet<(usize, usize)> = repaired.robot_edges().into_iter().collect();
    let report = RepairReport {
        removed_edges: before.difference(&after).copied().collect(),
        added_edges: after.difference(&before).copied().collect(),
        used_fallback: departures.iter().any(|d| d.used_fallback),
        locality: departures.iter().map(|d| d.locality).max().unwrap_or(0),
        departures,
    };
    Ok((repaired, report))
}
