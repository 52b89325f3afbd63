//! Energy-aware hierarchical bearing-rigid network construction.
//!
//! Robots are bucketed into four energy levels (level 1 = most charged).
//! The network is grown Henneberg-style starting from two level-1 robots,
//! and every new robot is attached so that it sits between a neighbor at
//! its own level or better and a neighbor at its own level or worse. That
//! spreads the low-energy robots through the graph so that robots leaving
//! together to recharge are rarely adjacent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rigidity::{
    edge, edge_splitting, is_ibr, numerical_rank, vertex_addition, Configuration, Edge, Framework,
    Graph, RigidityError, Vec2, DEFAULT_RANK_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("state of charge {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("need at least two robots, got {0}")]
    TooFewRobots(usize),
    #[error("no anchor pair satisfies the level constraints")]
    NoFeasibleAnchors,
    #[error("could not obtain a rigid framework after {0} jitter retries")]
    RigidityFailure(usize),
    #[error("cannot insert into an empty framework")]
    EmptyFramework,
    #[error("input lengths disagree: {0}")]
    LengthMismatch(&'static str),
    #[error("graph admits no Henneberg peeling")]
    NotConstructible,
    #[error(transparent)]
    Rigidity(#[from] RigidityError),
}

/// Energy hierarchy level, 1 (highest charge) through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyLevel(u8);

impl EnergyLevel {
    pub const ONE: EnergyLevel = EnergyLevel(1);
    pub const TWO: EnergyLevel = EnergyLevel(2);
    pub const THREE: EnergyLevel = EnergyLevel(3);
    pub const FOUR: EnergyLevel = EnergyLevel(4);

    pub fn new(level: u8) -> Option<Self> {
        (1..=4).contains(&level).then_some(EnergyLevel(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl std::fmt::Display for EnergyLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Buckets a state of charge: `[0.75, 1]` is level 1, `[0.5, 0.75)` level 2,
/// `[0.25, 0.5)` level 3 and `[0, 0.25)` level 4.
pub fn energy_level(soc: f64) -> Result<EnergyLevel, NetworkError> {
    // Tiny excursions from float round-off in the energy updates are accepted.
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&soc) {
        return Err(NetworkError::OutOfRange(soc));
    }
    let level = if soc >= 0.75 {
        1
    } else if soc >= 0.5 {
        2
    } else if soc >= 0.25 {
        3
    } else {
        4
    };
    Ok(EnergyLevel(level))
}

/// One Henneberg move. `v` is always the vertex count before the move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum HennebergStep {
    /// `anchors.0` is the better-or-equal level anchor, `anchors.1` the
    /// worse-or-equal one.
    VertexAddition { v: usize, anchors: (usize, usize) },
    /// Removes `split`, then joins `v` to both its endpoints and to `third`.
    EdgeSplitting {
        v: usize,
        split: (usize, usize),
        third: usize,
    },
}

impl HennebergStep {
    pub fn vertex(&self) -> usize {
        match *self {
            HennebergStep::VertexAddition { v, .. } | HennebergStep::EdgeSplitting { v, .. } => v,
        }
    }

    pub fn apply(&self, g: &Graph) -> Result<Graph, RigidityError> {
        match *self {
            HennebergStep::VertexAddition { anchors, .. } => vertex_addition(g, anchors),
            HennebergStep::EdgeSplitting { split, third, .. } => edge_splitting(g, split, third),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HennebergRecord {
    pub initial: (usize, usize),
    pub steps: Vec<HennebergStep>,
}

impl HennebergRecord {
    /// Rebuilds the graph from the initial edge.
    pub fn replay(&self) -> Result<Graph, RigidityError> {
        let mut g = Graph::from_edges(2, &[self.initial])?;
        for (t, step) in self.steps.iter().enumerate() {
            if step.vertex() != t + 2 {
                return Err(RigidityError::InvalidAnchor(step.vertex(), t + 2));
            }
            g = step.apply(&g)?;
        }
        Ok(g)
    }
}

/// A rigid framework whose vertex labels follow its construction order,
/// together with the robot id behind each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub framework: Framework,
    pub record: HennebergRecord,
    pub robots: Vec<usize>,
}

impl Network {
    pub fn n(&self) -> usize {
        self.robots.len()
    }

    pub fn vertex_of(&self, robot: usize) -> Option<usize> {
        self.robots.iter().position(|&r| r == robot)
    }

    /// Robot-id pairs of all edges.
    pub fn robot_edges(&self) -> Vec<(usize, usize)> {
        self.framework
            .graph
            .edges()
            .map(|(a, b)| {
                let (ra, rb) = (self.robots[a], self.robots[b]);
                (ra.min(rb), ra.max(rb))
            })
            .collect()
    }

    /// Robot ids adjacent to `robot`.
    pub fn robot_neighbors(&self, robot: usize) -> Vec<usize> {
        match self.vertex_of(robot) {
            Some(v) => {
                let mut out: Vec<usize> = self
                    .framework
                    .graph
                    .neighbors(v)
                    .into_iter()
                    .map(|w| self.robots[w])
                    .collect();
                out.sort_unstable();
                out
            }
            None => Vec::new(),
        }
    }

    /// Replaces the stored positions (e.g. after the robots moved).
    pub fn with_positions(&self, positions: Vec<Vec2>) -> Result<Network, NetworkError> {
        Ok(Network {
            framework: Framework::new(
                self.framework.graph.clone(),
                Configuration::new(positions)?,
            )?,
            record: self.record.clone(),
            robots: self.robots.clone(),
        })
    }

    /// Re-derives a construction order for an arbitrary minimally rigid
    /// framework and relabels vertices to follow it.
    pub fn from_framework(fw: Framework, robots: Vec<usize>) -> Result<Network, NetworkError> {
        if robots.len() != fw.n() {
            return Err(NetworkError::LengthMismatch("robots vs framework"));
        }
        let (order, record) = derive_record(&fw.graph)?;
        // order[new] = old
        let mut perm = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let graph = fw.graph.relabel(&perm);
        let positions = order.iter().map(|&old| fw.config.positions[old]).collect();
        let robots = order.iter().map(|&old| robots[old]).collect();
        Ok(Network {
            framework: Framework::new(graph, Configuration::new(positions)?)?,
            record,
            robots,
        })
    }
}

/// Peels degree-2 and degree-3 vertices off `g` (reverse Henneberg moves) and
/// returns the resulting construction order (new label -> old label) and the
/// record expressed in the new labels.
pub fn derive_record(g: &Graph) -> Result<(Vec<usize>, HennebergRecord), NetworkError> {
    if g.n() < 2 || g.m() != Graph::minimal_edge_count(g.n()) {
        return Err(NetworkError::NotConstructible);
    }
    // Generic rigidity is checked at pseudo-random positions; the seed is
    // fixed so the derived order is reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f4e7);
    let generic: Vec<Vec2> = (0..g.n())
        .map(|_| Vec2::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();

    enum Peeled {
        Add(usize, (usize, usize)),
        Split(usize, (usize, usize), usize),
    }

    // alive[i] = original label of current vertex i
    let mut alive: Vec<usize> = (0..g.n()).collect();
    let mut cur = g.clone();
    let mut peeled = Vec::new();
    while cur.n() > 2 {
        let mut done = false;
        for v in 0..cur.n() {
            if cur.degree(v) == 2 {
                let nb = cur.neighbors(v);
                peeled.push(Peeled::Add(alive[v], (alive[nb[0]], alive[nb[1]])));
                cur.remove_vertex(v);
                alive.remove(v);
                done = true;
                break;
            }
        }
        if done {
            continue;
        }
        'outer: for v in 0..cur.n() {
            if cur.degree(v) != 3 {
                continue;
            }
            let nb = cur.neighbors(v);
            for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
                let (x, y, z) = (nb[a], nb[b], nb[c]);
                if cur.has_edge(x, y) {
                    continue;
                }
                let mut cand = cur.clone();
                cand.add_edge(x, y)?;
                cand.remove_vertex(v);
                let mut cand_alive = alive.clone();
                cand_alive.remove(v);
                if generically_rigid(&cand, &cand_alive, &generic) {
                    peeled.push(Peeled::Split(alive[v], (alive[x], alive[y]), alive[z]));
                    cur = cand;
                    alive = cand_alive;
                    done = true;
                    break 'outer;
                }
            }
        }
        if !done {
            return Err(NetworkError::NotConstructible);
        }
    }
    if cur.m() != 1 {
        return Err(NetworkError::NotConstructible);
    }

    let mut order = vec![alive[0], alive[1]];
    order.extend(peeled.iter().rev().map(|p| match p {
        Peeled::Add(v, _) | Peeled::Split(v, _, _) => *v,
    }));
    let mut label = vec![0; g.n()];
    for (new, &old) in order.iter().enumerate() {
        label[old] = new;
    }
    let steps = peeled
        .iter()
        .rev()
        .map(|p| match *p {
            Peeled::Add(v, (a, b)) => HennebergStep::VertexAddition {
                v: label[v],
                anchors: (label[a], label[b]),
            },
            Peeled::Split(v, (a, b), c) => HennebergStep::EdgeSplitting {
                v: label[v],
                split: edge(label[a], label[b]),
                third: label[c],
            },
        })
        .collect();
    let record = HennebergRecord {
        initial: (0, 1),
        steps,
    };
    Ok((order, record))
}

fn generically_rigid(g: &Graph, labels: &[usize], generic: &[Vec2]) -> bool {
    let n = g.n();
    if n < 2 {
        return false;
    }
    let positions = labels.iter().map(|&l| generic[l]).collect();
    let Ok(config) = Configuration::new(positions) else {
        return false;
    };
    match Framework::new(g.clone(), config) {
        Ok(fw) => is_ibr(&fw, DEFAULT_RANK_TOL)
            .map(|r| r.rigid)
            .unwrap_or(false),
        Err(_) => false,
    }
}

/// A vertex that may serve as an anchor for a newcomer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorCandidate {
    pub vertex: usize,
    pub level: EnergyLevel,
    pub position: Vec2,
}

/// Which level bound of the sandwich rule a relaxed choice gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxedBound {
    Upper,
    Lower,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum NetworkWarning {
    /// Fewer than two level-1 robots; the two most charged were used instead.
    InsufficientLevelOne { robots: (usize, usize) },
    /// The level sandwich could not be met for this robot.
    RelaxedAnchors { robot: usize, relaxed: RelaxedBound },
    /// Construction was restarted on jittered positions.
    JitterRetry { attempt: usize },
}

// Below this |sin| the anchors and the newcomer are nearly collinear.
const WELL_CONDITIONED_SIN: f64 = 0.05;

fn sin_between(a: Vec2, b: Vec2) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.x * b.y - a.y * b.x).abs() / (na * nb)
}

/// All anchor pairs `(better, worse)` for a newcomer at `new_pos`, ordered by
/// preference: strict level sandwich first, then pairs relaxing one bound,
/// then anything. Within a tier, well-conditioned pairs come first, then
/// smaller summed distance, then lower indices.
pub fn ranked_anchor_pairs(
    candidates: &[AnchorCandidate],
    new_level: EnergyLevel,
    new_pos: Vec2,
) -> Vec<((usize, usize), Option<RelaxedBound>)> {
    let mut scored = Vec::new();
    for a in candidates {
        for b in candidates {
            if a.vertex == b.vertex {
                continue;
            }
            let lower_ok = a.level <= new_level;
            let upper_ok = new_level <= b.level;
            // (a, b) and (b, a) both appear; keep the orientation that best
            // matches the rule, dropping the mirror when it ranks no better.
            let relaxed = match (lower_ok, upper_ok) {
                (true, true) => None,
                (true, false) => Some(RelaxedBound::Upper),
                (false, true) => Some(RelaxedBound::Lower),
                (false, false) => Some(RelaxedBound::Both),
            };
            let tier = match relaxed {
                None => 0,
                Some(RelaxedBound::Upper) | Some(RelaxedBound::Lower) => 1,
                Some(RelaxedBound::Both) => 2,
            };
            let da = a.position - new_pos;
            let db = b.position - new_pos;
            let poor = sin_between(da, db) < WELL_CONDITIONED_SIN;
            let dist = da.norm() + db.norm();
            let lo = a.vertex.min(b.vertex);
            let hi = a.vertex.max(b.vertex);
            scored.push((tier, poor, dist, lo, hi, a.vertex, b.vertex, relaxed));
        }
    }
    scored.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.total_cmp(&y.2))
            .then(x.3.cmp(&y.3))
            .then(x.4.cmp(&y.4))
            .then(x.5.cmp(&y.5))
    });
    let mut seen = std::collections::BTreeSet::new();
    scored
        .into_iter()
        .filter(|s| seen.insert((s.3, s.4)))
        .map(|s| ((s.5, s.6), s.7))
        .collect()
}

/// Picks the anchor pair `(v_j, v_k)` with `level(v_j) <= new_level <=
/// level(v_k)`, nearest to the newcomer, lowest indices on ties.
pub fn choose_anchors(
    candidates: &[AnchorCandidate],
    new_level: EnergyLevel,
    new_pos: Vec2,
) -> Result<(usize, usize), NetworkError> {
    if candidates.len() < 2 {
        return Err(NetworkError::NoFeasibleAnchors);
    }
    ranked_anchor_pairs(candidates, new_level, new_pos)
        .into_iter()
        .find(|(_, relaxed)| relaxed.is_none())
        .map(|(pair, _)| pair)
        .ok_or(NetworkError::NoFeasibleAnchors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Probability of trying an edge split instead of a vertex addition.
    pub split_probability: f64,
    pub jitter_retries: usize,
    /// Jitter amplitude relative to the configuration diameter.
    pub jitter_scale: f64,
    pub rank_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            split_probability: 0.3,
            jitter_retries: 3,
            jitter_scale: 1e-4,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub network: Network,
    /// Level of each vertex at build time, indexed by vertex.
    pub levels: Vec<EnergyLevel>,
    pub warnings: Vec<NetworkWarning>,
}

/// Builds the hierarchical network over robots `0..n` with default options.
pub fn build_network(
    positions: &Configuration,
    socs: &[f64],
    seed: u64,
) -> Result<BuildOutcome, NetworkError> {
    let robots: Vec<usize> = (0..positions.len()).collect();
    build_network_with(positions, socs, &robots, seed, &BuildOptions::default())
}

/// Builds the hierarchical network over the given robots. `positions`,
/// `socs` and `robots` are parallel arrays.
pub fn build_network_with(
    positions: &Configuration,
    socs: &[f64],
    robots: &[usize],
    seed: u64,
    opts: &BuildOptions,
) -> Result<BuildOutcome, NetworkError> {
    let n = positions.len();
    if socs.len() != n || robots.len() != n {
        return Err(NetworkError::LengthMismatch("positions, socs and robots"));
    }
    if n < 2 {
        return Err(NetworkError::TooFewRobots(n));
    }
    let levels: Vec<EnergyLevel> = socs
        .iter()
        .map(|&s| energy_level(s))
        .collect::<Result<_, _>>()?;

    // The two most charged robots seed the core. The least charged robot
    // goes next: it is the only one that cannot be sandwiched (no placed
    // robot is at its level or worse), and once it is placed every remaining
    // robot has a feasible pair. The rest follow in descending SOC.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| socs[b].total_cmp(&socs[a]).then(a.cmp(&b)));
    if n > 3 {
        let last = order.pop().expect("n > 3");
        order.insert(2, last);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diameter = diameter(&positions.positions).max(1.0);
    let mut warnings = Vec::new();
    let mut pts = positions.positions.clone();
    for attempt in 0..=opts.jitter_retries {
        if attempt > 0 {
            warnings.push(NetworkWarning::JitterRetry { attempt });
            for p in pts.iter_mut() {
                p.x += opts.jitter_scale * diameter * (rng.gen::<f64>() - 0.5);
                p.y += opts.jitter_scale * diameter * (rng.gen::<f64>() - 0.5);
            }
        }
        let mut local = Vec::new();
        if let Some((network, vertex_levels)) =
            try_build(&pts, &levels, &order, robots, &mut rng, opts, &mut local)?
        {
            warnings.extend(local);
            return Ok(BuildOutcome {
                network,
                levels: vertex_levels,
                warnings,
            });
        }
    }
    Err(NetworkError::RigidityFailure(opts.jitter_retries))
}

fn diameter(points: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for a in points {
        for b in points {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn framework_of(g: &Graph, pts: &[Vec2]) -> Option<Framework> {
    let config = Configuration::new(pts.to_vec()).ok()?;
    Framework::new(g.clone(), config).ok()
}

fn rigid_at(g: &Graph, pts: &[Vec2], tol: f64) -> bool {
    framework_of(g, pts)
        .and_then(|fw| is_ibr(&fw, tol).ok())
        .map(|r| r.rigid)
        .unwrap_or(false)
}

#[allow(clippy::too_many_arguments)]
fn try_build(
    pts: &[Vec2],
    levels: &[EnergyLevel],
    order: &[usize],
    robots: &[usize],
    rng: &mut ChaCha8Rng,
    opts: &BuildOptions,
    warnings: &mut Vec<NetworkWarning>,
) -> Result<Option<(Network, Vec<EnergyLevel>)>, NetworkError> {
    let (a, b) = (order[0], order[1]);
    if levels[b] != EnergyLevel::ONE {
        warnings.push(NetworkWarning::InsufficientLevelOne {
            robots: (robots[a], robots[b]),
        });
    }
    let mut placed_pts = vec![pts[a], pts[b]];
    let mut placed_levels = vec![levels[a], levels[b]];
    let mut graph = Graph::from_edges(2, &[(0, 1)])?;
    if !rigid_at(&graph, &placed_pts, opts.rank_tol) {
        return Ok(None);
    }
    let mut steps = Vec::new();

    for &src in &order[2..] {
        let level = levels[src];
        let pos = pts[src];
        let v = graph.n();
        let mut trial_pts = placed_pts.clone();
        trial_pts.push(pos);

        let mut next: Option<(Graph, HennebergStep)> = None;
        if rng.gen_bool(opts.split_probability) {
            next = try_edge_split(&graph, &placed_pts, &placed_levels, level, pos)
                .into_iter()
                .find_map(|(split, third)| {
                    let g = edge_splitting(&graph, split, third).ok()?;
                    rigid_at(&g, &trial_pts, opts.rank_tol)
                        .then_some((g, HennebergStep::EdgeSplitting { v, split, third }))
                });
        }
        if next.is_none() {
            let cands: Vec<AnchorCandidate> = (0..graph.n())
                .map(|w| AnchorCandidate {
                    vertex: w,
                    level: placed_levels[w],
                    position: placed_pts[w],
                })
                .collect();
            for (anchors, relaxed) in ranked_anchor_pairs(&cands, level, pos) {
                let g = vertex_addition(&graph, anchors)?;
                if rigid_at(&g, &trial_pts, opts.rank_tol) {
                    if let Some(relaxed) = relaxed {
                        warnings.push(NetworkWarning::RelaxedAnchors {
                            robot: robots[src],
                            relaxed,
                        });
                    }
                    next = Some((g, HennebergStep::VertexAddition { v, anchors }));
                    break;
                }
            }
        }
        let Some((g, step)) = next else {
            return Ok(None);
        };
        graph = g;
        steps.push(step);
        placed_pts.push(pos);
        placed_levels.push(level);
    }

    let ordered_robots: Vec<usize> = order.iter().map(|&i| robots[i]).collect();
    let framework = Framework::new(graph, Configuration::new(placed_pts)?)?;
    Ok(Some((
        Network {
            framework,
            record: HennebergRecord {
                initial: (0, 1),
                steps,
            },
            robots: ordered_robots,
        },
        placed_levels,
    )))
}

/// Edge-split candidates `(split, third)` meeting the level rules: the split
/// edge has an endpoint `j` with degree at least two and `level(j) <= new`,
/// and `third` has `new <= level(third)`. Ordered by summed distance, then
/// indices.
fn try_edge_split(
    g: &Graph,
    pts: &[Vec2],
    levels: &[EnergyLevel],
    new_level: EnergyLevel,
    new_pos: Vec2,
) -> Vec<(Edge, usize)> {
    let mut out = Vec::new();
    for j in 0..g.n() {
        if levels[j] > new_level || g.degree(j) < 2 {
            continue;
        }
        for k in g.neighbors(j) {
            for l in 0..g.n() {
                if l == j || l == k || levels[l] < new_level {
                    continue;
                }
                let d = (pts[j] - new_pos).norm()
                    + (pts[k] - new_pos).norm()
                    + (pts[l] - new_pos).norm();
                out.push((d, edge(j, k), l));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    out.dedup_by(|x, y| x.1 == y.1 && x.2 == y.2);
    out.into_iter().map(|(_, e, l)| (e, l)).collect()
}

/// Attaches a returning robot by vertex addition. `levels` gives the current
/// level of each existing vertex.
pub fn insert_robot(
    net: &Network,
    levels: &[EnergyLevel],
    robot: usize,
    pos: Vec2,
    soc: f64,
    rank_tol: f64,
) -> Result<(Network, Option<NetworkWarning>), NetworkError> {
    let n = net.n();
    if n == 0 {
        return Err(NetworkError::EmptyFramework);
    }
    if n < 2 {
        return Err(NetworkError::TooFewRobots(n));
    }
    if levels.len() != n {
        return Err(NetworkError::LengthMismatch("levels vs network"));
    }
    let level = energy_level(soc)?;
    let cands: Vec<AnchorCandidate> = (0..n)
        .map(|w| AnchorCandidate {
            vertex: w,
            level: levels[w],
            position: net.framework.position(w),
        })
        .collect();
    let mut pts = net.framework.config.positions.clone();
    pts.push(pos);
    for (anchors, relaxed) in ranked_anchor_pairs(&cands, level, pos) {
        let g = vertex_addition(&net.framework.graph, anchors)?;
        if !rigid_at(&g, &pts, rank_tol) {
            continue;
        }
        let mut record = net.record.clone();
        record
            .steps
            .push(HennebergStep::VertexAddition { v: n, anchors });
        let mut robots = net.robots.clone();
        robots.push(robot);
        let framework = Framework::new(g, Configuration::new(pts)?)?;
        let warning = relaxed.map(|relaxed| NetworkWarning::RelaxedAnchors { robot, relaxed });
        return Ok((
            Network {
                framework,
                record,
                robots,
            },
            warning,
        ));
    }
    Err(NetworkError::RigidityFailure(0))
}

/// Level-sandwich check for one recorded step, given per-vertex levels.
pub fn step_satisfies_sandwich(step: &HennebergStep, levels: &[EnergyLevel]) -> bool {
    match *step {
        HennebergStep::VertexAddition { v, anchors: (a, b) } => {
            levels[a] <= levels[v] && levels[v] <= levels[b]
        }
        HennebergStep::EdgeSplitting {
            v,
            split: (i, j),
            third,
        } => (levels[i] <= levels[v] || levels[j] <= levels[v]) && levels[v] <= levels[third],
    }
}

/// Largest set of mutually adjacent vertices sharing one level.
pub fn largest_same_level_clique(g: &Graph, levels: &[EnergyLevel]) -> usize {
    let adj = g.adjacency();
    let n = g.n();
    let mut best = if n > 0 { 1 } else { 0 };
    // Planar minimally rigid graphs are sparse; a bounded DFS is plenty.
    fn grow(
        clique: &mut Vec<usize>,
        start: usize,
        n: usize,
        adj: &[Vec<usize>],
        levels: &[EnergyLevel],
        best: &mut usize,
    ) {
        *best = (*best).max(clique.len());
        for c in start..n {
            if levels[c] != levels[clique[0]] {
                continue;
            }
            if clique.iter().all(|&u| adj[u].contains(&c)) {
                clique.push(c);
                grow(clique, c + 1, n, adj, levels, best);
                clique.pop();
            }
        }
    }
    for v in 0..n {
        let mut clique = vec![v];
        grow(&mut clique, v + 1, n, &adj, levels, &mut best);
    }
    best
}

/// Rank of the bearing rigidity matrix at generic positions, for callers that
/// want a purely combinatorial check.
pub fn generic_rank(g: &Graph, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec2> = (0..g.n())
        .map(|_| Vec2::new(rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    match framework_of(g, &pts) {
        Some(fw) => crate::rigidity::bearing_rigidity_matrix(&fw)
            .map(|m| numerical_rank(&m, DEFAULT_RANK_TOL))
            .unwrap_or(0),
        None => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(l: u8) -> EnergyLevel {
        EnergyLevel::new(l).unwrap()
    }

    #[test]
    fn level_brackets() {
        assert_eq!(energy_level(1.0).unwrap(), lv(1));
        assert_eq!(energy_level(0.75).unwrap(), lv(1));
        assert_eq!(energy_level(0.74).unwrap(), lv(2));
        assert_eq!(energy_level(0.5).unwrap(), lv(2));
        assert_eq!(energy_level(0.30).unwrap(), lv(3));
        assert_eq!(energy_level(0.25).unwrap(), lv(3));
        assert_eq!(energy_level(0.1).unwrap(), lv(4));
        assert_eq!(energy_level(0.0).unwrap(), lv(4));
        assert!(matches!(
            energy_level(1.5),
            Err(NetworkError::OutOfRange(_))
        ));
        assert!(matches!(
            energy_level(-0.1),
            Err(NetworkError::OutOfRange(_))
        ));
        assert!(matches!(
            energy_level(f64::NAN),
            Err(NetworkError::OutOfRange(_))
        ));
    }

    #[test]
    fn two_robots_form_single_edge() {
        let c = Configuration::from_xy(&[[0.0, 0.0], [1.0, 0.5]]).unwrap();
        let out = build_network(&c, &[0.9, 0.95], 1).unwrap();
        assert_eq!(out.network.framework.graph.m(), 1);
        assert!(out.network.record.steps.is_empty());
        assert_eq!(out.network.robots, vec![1, 0]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn five_robot_build() {
        let c =
            Configuration::from_xy(&[[0.1, 0.2], [0.8, 0.3], [0.5, 0.9], [0.2, 0.7], [0.9, 0.8]])
                .unwrap();
        let out = build_network(&c, &[0.9, 0.8, 0.6, 0.4, 0.1], 7).unwrap();
        let net = &out.network;
        assert_eq!(net.framework.graph.m(), 7);
        assert!(is_ibr(&net.framework, DEFAULT_RANK_TOL).unwrap().rigid);
        assert_eq!(net.record.replay().unwrap(), net.framework.graph);
        // Only the least charged robot, placed third, is relaxed.
        assert_eq!(
            out.warnings,
            vec![NetworkWarning::RelaxedAnchors {
                robot: 4,
                relaxed: RelaxedBound::Upper
            }]
        );
        assert_eq!(net.robots[2], 4);
        for step in &net.record.steps[1..] {
            assert!(step_satisfies_sandwich(step, &out.levels), "{step:?}");
        }
    }

    #[test]
    fn anchors_sandwich_and_fallback() {
        let p = |x: f64, y: f64| Vec2::new(x, y);
        let all_one: Vec<AnchorCandidate> = (0..3)
            .map(|i| AnchorCandidate {
                vertex: i,
                level: lv(1),
                position: p(i as f64, (i * i) as f64),
            })
            .collect();
        assert_eq!(
            choose_anchors(&all_one, lv(3), p(0.5, 2.0)),
            Err(NetworkError::NoFeasibleAnchors)
        );
        let ranked = ranked_anchor_pairs(&all_one, lv(3), p(0.5, 2.0));
        assert_eq!(ranked[0].1, Some(RelaxedBound::Upper));

        let mixed = vec![
            AnchorCandidate {
                vertex: 0,
                level: lv(1),
                position: p(0.0, 0.0),
            },
            AnchorCandidate {
                vertex: 1,
                level: lv(4),
                position: p(1.0, 0.0),
            },
        ];
        let (a, b) = choose_anchors(&mixed, lv(2), p(0.5, 1.0)).unwrap();
        assert_eq!((a, b), (0, 1));

        // Four equidistant candidates on a circle; all level 2.
        let ring: Vec<AnchorCandidate> = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| AnchorCandidate {
                vertex: i,
                level: lv(2),
                position: p(x, y),
            })
            .collect();
        assert_eq!(choose_anchors(&ring, lv(2), p(0.0, 0.0)).unwrap(), (0, 1));
    }

    #[test]
    fn insert_into_k2_and_empty() {
        let c = Configuration::from_xy(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let out = build_network(&c, &[1.0, 0.9], 3).unwrap();
        let (net, warn) = insert_robot(
            &out.network,
            &out.levels,
            7,
            Vec2::new(0.5, 0.8),
            0.95,
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(warn.is_none());
        assert_eq!(net.framework.graph.m(), 3);
        assert_eq!(net.record.steps.len(), 1);
        assert_eq!(net.robots, vec![0, 1, 7]);

        let empty = Network {
            framework: Framework {
                graph: Graph::empty(0),
                config: Configuration { positions: vec![] },
            },
            record: HennebergRecord {
                initial: (0, 1),
                steps: vec![],
            },
            robots: vec![],
        };
        assert_eq!(
            insert_robot(&empty, &[], 0, Vec2::zeros(), 1.0, DEFAULT_RANK_TOL).unwrap_err(),
            NetworkError::EmptyFramework
        );
    }

    #[test]
    fn peeling_reproduces_graph() {
        let c = Configuration::from_xy(&[
            [0.0, 0.0],
            [1.0, 0.1],
            [0.4, 1.0],
            [1.3, 1.1],
            [-0.2, 0.8],
            [0.7, -0.6],
        ])
        .unwrap();
        let out = build_network(&c, &[0.9, 0.85, 0.6, 0.3, 0.2, 0.55], 11).unwrap();
        let shuffled: Vec<usize> = vec![3, 5, 0, 1, 4, 2];
        let g = out.network.framework.graph.relabel(&shuffled);
        let (order, rec) = derive_record(&g).unwrap();
        let mut perm = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        assert_eq!(rec.replay().unwrap(), g.relabel(&perm));
    }

    #[test]
    fn minimally_rigid_graphs_have_no_same_level_k4() {
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(largest_same_level_clique(&k4, &[lv(1); 4]), 4);
        assert_eq!(
            largest_same_level_clique(&k4, &[lv(1), lv(2), lv(1), lv(2)]),
            2
        );
    }
}
