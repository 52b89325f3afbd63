//! Voronoi partition of a convex mission space, cell centroids and the
//! locational coverage cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rigidity::Vec2;

/// Generators closer than this are treated as coincident and jittered.
const TIE_EPS: f64 = 1e-12;
const TIE_JITTER: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("cell has zero area")]
    ZeroArea,
    #[error("no generators")]
    NoGenerators,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    #[default]
    Uniform,
}

/// Convex polygon listed counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MissionSpaceRaw")]
pub struct MissionSpace {
    vertices: Vec<Vec2>,
    #[serde(default)]
    density: Density,
}

#[derive(Deserialize)]
struct MissionSpaceRaw {
    vertices: Vec<Vec2>,
    #[serde(default)]
    density: Density,
}

impl TryFrom<MissionSpaceRaw> for MissionSpace {
    type Error = CoverageError;

    fn try_from(raw: MissionSpaceRaw) -> Result<Self, CoverageError> {
        let mut space = MissionSpace::new(raw.vertices)?;
        space.density = raw.density;
        Ok(space)
    }
}

impl MissionSpace {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, CoverageError> {
        let n = vertices.len();
        if n < 3 {
            return Err(CoverageError::DegeneratePolygon(format!("{n} vertices")));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(CoverageError::DegeneratePolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if cross(b - a, c - b) <= 1e-9 {
                return Err(CoverageError::DegeneratePolygon(format!(
                    "not strictly convex and counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        if polygon_area(&vertices) <= 0.0 {
            return Err(CoverageError::DegeneratePolygon("non-positive area".into()));
        }
        Ok(Self {
            vertices,
            density: Density::Uniform,
        })
    }

    pub fn rectangle(min: Vec2, max: Vec2) -> Result<Self, CoverageError> {
        Self::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn density(&self) -> Density {
        self.density
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            cross(b - a, p - a) >= -1e-12
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    pub owner: usize,
    pub generator: Vec2,
    pub polygon: Vec<Vec2>,
    pub centroid: Vec2,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// One cell per generator, in input order.
    pub cells: Vec<VoronoiCell>,
    /// Owners whose generator was nudged to break a tie.
    pub jittered: Vec<usize>,
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| cross(poly[i], poly[(i + 1) % n]))
        .sum::<f64>()
}

/// Keeps the part of `poly` with `normal . q <= offset`.
fn clip(poly: &[Vec2], normal: Vec2, offset: f64) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (da, db) = (normal.dot(&a) - offset, normal.dot(&b) - offset);
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            out.push(a + (b - a) * (da / (da - db)));
        }
    }
    out
}

/// Bounded Voronoi cells of `sites` (robot id, position) inside `space`.
pub fn voronoi_partition(
    sites: &[(usize, Vec2)],
    space: &MissionSpace,
) -> Result<Partition, CoverageError> {
    if sites.is_empty() {
        return Err(CoverageError::NoGenerators);
    }
    let mut points: Vec<Vec2> = sites.iter().map(|s| s.1).collect();
    let mut jittered = Vec::new();
    for i in 1..points.len() {
        let mut k = 0;
        while points[..i]
            .iter()
            .any(|q| (q - points[i]).norm() <= TIE_EPS)
        {
            let angle = 2.399_963_229_728_653 * (i + k) as f64;
            points[i] += Vec2::new(angle.cos(), angle.sin()) * TIE_JITTER;
            k += 1;
        }
        if k > 0 {
            jittered.push(sites[i].0);
        }
    }
    let mut cells = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let mut poly = space.vertices.clone();
        for (j, &q) in points.iter().enumerate() {
            if i == j || poly.is_empty() {
                continue;
            }
            poly = clip(&poly, q - p, 0.5 * (q.norm_squared() - p.norm_squared()));
        }
        let mass = polygon_area(&poly);
        let centroid = cell_centroid(&poly, space.density).unwrap_or(p);
        cells.push(VoronoiCell {
            owner: sites[i].0,
            generator: p,
            polygon: poly,
            centroid,
            mass,
        });
    }
    Ok(Partition { cells, jittered })
}

/// Area centroid of a polygon under the given density.
pub fn cell_centroid(poly: &[Vec2], density: Density) -> Result<Vec2, CoverageError> {
    match density {
        Density::Uniform => {
            let area = polygon_area(poly);
            if area <= 1e-15 {
                return Err(CoverageError::ZeroArea);
            }
            let n = poly.len();
            let mut c = Vec2::zeros();
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                c += (a + b) * cross(a, b);
            }
            Ok(c / (6.0 * area))
        }
    }
}

/// Exact `integral |q - p|^2 dq` over a convex polygon.
pub fn second_moment(poly: &[Vec2], p: Vec2) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let a = poly[0] - p;
    poly.windows(2)
        .skip(1)
        .map(|w| {
            let (b, c) = (w[0] - p, w[1] - p);
            let area = 0.5 * cross(b - a, c - a);
            area / 6.0
                * (a.norm_squared()
                    + b.norm_squared()
                    + c.norm_squared()
                    + a.dot(&b)
                    + a.dot(&c)
                    + b.dot(&c))
        })
        .sum()
}

/// Locational cost of each cell with respect to its generator.
pub fn cell_costs(cells: &[VoronoiCell]) -> Vec<f64> {
    cells
        .iter()
        .map(|c| second_moment(&c.polygon, c.generator))
        .collect()
}

/// Total locational cost `sum_i integral_{V_i} |q - p_i|^2 dq`.
pub fn coverage_cost(cells: &[VoronoiCell]) -> f64 {
    cell_costs(cells).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn unit() -> MissionSpace {
        MissionSpace::rectangle(Vec2::zeros(), Vec2::new(1.0, 1.0)).unwrap()
    }

    fn sites(points: &[[f64; 2]]) -> Vec<(usize, Vec2)> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, Vec2::new(p[0], p[1])))
            .collect()
    }

    #[test]
    fn space_validation() {
        assert!(MissionSpace::new(vec![Vec2::zeros(), Vec2::new(1.0, 0.0)]).is_err());
        // Clockwise.
        assert!(MissionSpace::new(vec![
            Vec2::zeros(),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0)
        ])
        .is_err());
        // Collinear middle vertex.
        assert!(MissionSpace::new(vec![
            Vec2::zeros(),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0)
        ])
        .is_err());
        let json = r#"{"vertices":[[0,0],[2,0],[0,1]]}"#;
        let s: MissionSpace = serde_json::from_str(json).unwrap();
        assert!((s.area() - 1.0).abs() < 1e-15);
        assert!(
            serde_json::from_str::<MissionSpace>(r#"{"vertices":[[0,0],[0,1],[2,0]]}"#).is_err()
        );
    }

    #[test]
    fn single_robot_owns_everything() {
        let p = voronoi_partition(&sites(&[[0.2, 0.7]]), &unit()).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert!((p.cells[0].mass - 1.0).abs() < 1e-15);
        assert!((p.cells[0].centroid - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn two_robots_split_in_half() {
        let p = voronoi_partition(&sites(&[[0.25, 0.5], [0.75, 0.5]]), &unit()).unwrap();
        assert!((p.cells[0].mass - 0.5).abs() < 1e-15);
        assert!((p.cells[1].mass - 0.5).abs() < 1e-15);
        assert!(p.cells[0].polygon.iter().all(|v| v.x <= 0.5 + 1e-15));
        assert!((p.cells[0].centroid - Vec2::new(0.25, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn centroids_of_known_shapes() {
        let sq = unit().vertices().to_vec();
        assert!(
            (cell_centroid(&sq, Density::Uniform).unwrap() - Vec2::new(0.5, 0.5)).norm() < 1e-15
        );
        let tri = [Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let c = cell_centroid(&tri, Density::Uniform).unwrap();
        assert!((c - Vec2::new(1.0 / 3.0, 1.0 / 3.0)).norm() < 1e-15);
        let left = [
            Vec2::zeros(),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(
            (cell_centroid(&left, Density::Uniform).unwrap() - Vec2::new(0.25, 0.5)).norm() < 1e-15
        );
        assert_eq!(
            cell_centroid(&[Vec2::zeros(), Vec2::new(1.0, 0.0)], Density::Uniform),
            Err(CoverageError::ZeroArea)
        );
    }

    #[test]
    fn cost_closed_forms() {
        let center = voronoi_partition(&sites(&[[0.5, 0.5]]), &unit()).unwrap();
        assert!((coverage_cost(&center.cells) - 1.0 / 6.0).abs() < 1e-15);
        let corner = voronoi_partition(&sites(&[[0.0, 0.0]]), &unit()).unwrap();
        // integral over the unit square of x^2 + y^2.
        assert!((coverage_cost(&corner.cells) - 2.0 / 3.0).abs() < 1e-15);
        let pair = voronoi_partition(&sites(&[[0.25, 0.5], [0.75, 0.5]]), &unit()).unwrap();
        // Each half is a 0.5 x 1 box about its generator: (w^3 h + w h^3) / 12.
        let half = (0.5f64.powi(3) * 1.0 + 0.5 * 1.0f64.powi(3)) / 12.0;
        assert!((coverage_cost(&pair.cells) - 2.0 * half).abs() < 1e-15);
        assert!(coverage_cost(&pair.cells) < coverage_cost(&center.cells));
    }

    #[test]
    fn coincident_generators_are_jittered() {
        let p = voronoi_partition(&sites(&[[0.5, 0.5], [0.5, 0.5], [0.2, 0.2]]), &unit()).unwrap();
        assert_eq!(p.jittered, vec![1]);
        let total: f64 = p.cells.iter().map(|c| c.mass).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_partitions_conserve_area_and_assign_nearest() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let space = MissionSpace::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 0.2),
            Vec2::new(3.5, 2.0),
            Vec2::new(1.0, 3.0),
            Vec2::new(-0.5, 1.5),
        ])
        .unwrap();
        for n in 1..12 {
            let pts: Vec<(usize, Vec2)> = (0..n)
                .map(|i| loop {
                    let q = Vec2::new(rng.gen_range(-0.5..3.5), rng.gen_range(0.0..3.0));
                    if space.contains(q) {
                        break (i, q);
                    }
                })
                .collect();
            let p = voronoi_partition(&pts, &space).unwrap();
            let total: f64 = p.cells.iter().map(|c| c.mass).sum();
            assert!((total - space.area()).abs() <= 1e-9 * space.area());
            for _ in 0..100 {
                let q = Vec2::new(rng.gen_range(-0.5..3.5), rng.gen_range(0.0..3.0));
                if !space.contains(q) {
                    continue;
                }
                let nearest = (0..n)
                    .min_by(|&a, &b| {
                        (pts[a].1 - q)
                            .norm()
                            .partial_cmp(&(pts[b].1 - q).norm())
                            .unwrap()
                    })
                    .unwrap();
                let owner = p
                    .cells
                    .iter()
                    .find(|c| inside(&c.polygon, q))
                    .map(|c| c.owner);
                assert_eq!(owner, Some(nearest));
            }
            // Moving one generator to its centroid never raises the cost.
            let base = coverage_cost(&p.cells);
            for i in 0..n {
                let mut moved = pts.clone();
                moved[i].1 = p.cells[i].centroid;
                let after = coverage_cost(&voronoi_partition(&moved, &space).unwrap().cells);
                assert!(after <= base + 1e-12);
            }
        }
    }

    fn inside(poly: &[Vec2], q: Vec2) -> bool {
        let n = poly.len();
        n >= 3 && (0..n).all(|i| cross(poly[(i + 1) % n] - poly[i], q - poly[i]) >= 0.0)
    }

    #[test]
    fn cost_scales_with_fourth_power() {
        let pts = sites(&[[0.1, 0.3], [0.7, 0.6], [0.4, 0.9]]);
        let h1 = coverage_cost(&voronoi_partition(&pts, &unit()).unwrap().cells);
        let alpha = 2.5;
        let scaled: Vec<(usize, Vec2)> = pts.iter().map(|&(i, p)| (i, p * alpha)).collect();
        let big = MissionSpace::rectangle(Vec2::zeros(), Vec2::new(alpha, alpha)).unwrap();
        let h2 = coverage_cost(&voronoi_partition(&scaled, &big).unwrap().cells);
        assert!((h2 - alpha.powi(4) * h1).abs() < 1e-12 * h2);
    }
}
