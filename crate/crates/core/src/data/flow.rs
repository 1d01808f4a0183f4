use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::delaunay::{circumcenter, delaunay, orient2d, Point};
use super::DataError;
use crate::complex::SimplicialComplex;

/// Generator settings for the two-hole synthetic flow dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub n_points: usize,
    /// Label `0` is the first hole, label `1` the second.
    pub hole_centers: [Point; 2],
    pub hole_radius: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Distance of the waypoint outside the hole boundary.
    pub waypoint_margin: f64,
    /// Half-width of the uniform per-sample waypoint perturbation.
    pub waypoint_jitter: f64,
    pub seed: u64,
}

impl FlowParams {
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n_points: 100,
            hole_centers: [[0.3, 0.3], [0.7, 0.7]],
            hole_radius: 0.15,
            n_train: 200,
            n_test: 50,
            waypoint_margin: 0.06,
            waypoint_jitter: 0.05,
            seed,
        }
    }

    /// 400 points, 1000 training and 200 test trajectories.
    pub fn full_scale(seed: u64) -> Self {
        Self { n_points: 400, n_train: 1000, n_test: 200, ..Self::desk_scale(seed) }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |m: String| Err(DataError::InvalidParameter(m));
        if self.n_points < 20 {
            return fail(format!("n_points must be at least 20, got {}", self.n_points));
        }
        let r = self.hole_radius;
        if !(r > 0.0 && r < 0.5) {
            return fail(format!("hole radius {r} outside (0, 0.5)"));
        }
        for c in &self.hole_centers {
            if c.iter().any(|&x| x - r < 0.0 || x + r > 1.0) {
                return fail(format!("hole at {c:?} with radius {r} leaves the unit square"));
            }
        }
        let [a, b] = self.hole_centers;
        if ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= 2.0 * r {
            return fail("holes overlap".into());
        }
        if !(self.waypoint_margin >= 0.0 && self.waypoint_jitter >= 0.0) {
            return fail("waypoint margin and jitter must be non-negative".into());
        }
        Ok(())
    }
}

/// One labelled edge flow.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryInstance {
    /// `±1` on traversed edges relative to their canonical orientation.
    pub signal: Vec<f64>,
    pub label: usize,
}

impl TrajectoryInstance {
    /// Non-zero entries as `(edge, sign)`.
    pub fn support(&self) -> Vec<(usize, i8)> {
        self.signal.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, v.signum() as i8)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticFlow {
    pub complex: SimplicialComplex,
    /// Position of each vertex of `complex`.
    pub positions: Vec<Point>,
    pub train: Vec<TrajectoryInstance>,
    pub test: Vec<TrajectoryInstance>,
    pub params: FlowParams,
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn contains(tri: [Point; 3], p: Point) -> bool {
    let [a, b, c] = tri;
    orient2d(a, b, p) >= 0 && orient2d(b, c, p) >= 0 && orient2d(c, a, p) >= 0
}

/// Euclidean-length shortest path that avoids `blocked` vertices.
fn shortest_path(
    adj: &[Vec<(usize, f64)>],
    from: usize,
    to: usize,
    blocked: &[bool],
) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![usize::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Reverse((Dist(0.0), from)));
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if u == to {
            break;
        }
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if !blocked[v] && nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Reverse((Dist(nd), v)));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut path = vec![to];
    while *path.last().expect("non-empty") != from {
        path.push(prev[*path.last().expect("non-empty")]);
    }
    path.reverse();
    Some(path)
}

struct Dist(f64);

impl PartialEq for Dist {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn nearest(positions: &[Point], target: Point, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..positions.len()).collect();
    idx.sort_by(|&a, &b| dist2(positions[a], target).total_cmp(&dist2(positions[b], target)).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

struct Router<'a> {
    complex: &'a SimplicialComplex,
    positions: &'a [Point],
    adj: Vec<Vec<(usize, f64)>>,
    starts: Vec<usize>,
    ends: Vec<usize>,
    params: &'a FlowParams,
}

impl Router<'_> {
    /// One trajectory, or `None` when the far corner cannot be reached
    /// without revisiting the first leg.
    fn try_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<TrajectoryInstance> {
        let label = rng.random_range(0..2usize);
        let start = self.starts[rng.random_range(0..self.starts.len())];
        let end = self.ends[rng.random_range(0..self.ends.len())];
        let c = self.params.hole_centers[label];
        let dir = if label == 0 { -std::f64::consts::FRAC_1_SQRT_2 } else { std::f64::consts::FRAC_1_SQRT_2 };
        let reach = self.params.hole_radius + self.params.waypoint_margin;
        let jitter = self.params.waypoint_jitter;
        let mut target = [c[0] + reach * dir, c[1] + reach * dir];
        for t in &mut target {
            *t = (*t + rng.random_range(-1.0..=1.0) * jitter).clamp(0.0, 1.0);
        }
        let waypoint = nearest(self.positions, target, 1)[0];
        let none = vec![false; self.adj.len()];
        let first = shortest_path(&self.adj, start, waypoint, &none)?;
        // the second leg may not touch the first, so the walk stays simple
        let mut blocked = vec![false; self.adj.len()];
        for &v in &first[..first.len() - 1] {
            blocked[v] = true;
        }
        let second = shortest_path(&self.adj, waypoint, end, &blocked)?;
        let path: Vec<usize> = first.iter().chain(&second[1..]).copied().collect();
        let mut signal = vec![0.0; self.complex.count(1)];
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            let e = self.complex.find(&[u.min(v), u.max(v)]).expect("path follows edges");
            signal[e] = if u < v { 1.0 } else { -1.0 };
        }
        Some(TrajectoryInstance { signal, label })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrajectoryInstance, DataError> {
        (0..MAX_ROUTING_ATTEMPTS)
            .find_map(|_| self.try_sample(rng))
            .ok_or_else(|| DataError::InvalidParameter("no simple route past the holes; try another seed".into()))
    }
}

const MAX_ROUTING_ATTEMPTS: usize = 100;

/// Samples points, triangulates, punches the two holes and routes labelled
/// trajectories from the top-left to the bottom-right corner past one of
/// the holes.
///
/// Points inside a hole are discarded before triangulating; afterwards any
/// triangle whose circumcentre lies in a hole disk, or which covers a hole
/// centre, is removed and the complex is the closure of what remains.
pub fn generate_synthetic_flow(params: &FlowParams) -> Result<SyntheticFlow, DataError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let r2 = params.hole_radius * params.hole_radius;
    let in_hole = |p: Point| params.hole_centers.iter().any(|&c| dist2(p, c) < r2);
    let sampled: Vec<Point> = (0..params.n_points).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let kept: Vec<Point> = sampled.into_iter().filter(|&p| !in_hole(p)).collect();
    let tris = delaunay(&kept)?;
    let surviving: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| {
            let corners = [kept[t[0]], kept[t[1]], kept[t[2]]];
            !in_hole(circumcenter(corners[0], corners[1], corners[2]))
                && !params.hole_centers.iter().any(|&c| contains(corners, c))
        })
        .collect();
    if surviving.is_empty() {
        return Err(DataError::DisconnectedAfterHolePunch);
    }
    // relabel the vertices that survive, in their original order
    let mut new_id = vec![usize::MAX; kept.len()];
    let mut positions = Vec::new();
    let mut used: Vec<usize> = surviving.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    for old in used {
        new_id[old] = positions.len();
        positions.push(kept[old]);
    }
    let tops: Vec<Vec<usize>> = surviving.iter().map(|t| t.iter().map(|&v| new_id[v]).collect()).collect();
    let complex = SimplicialComplex::build(&tops)?;
    if complex.connected_components() != 1 {
        return Err(DataError::DisconnectedAfterHolePunch);
    }
    // planar, so beta_2 = 0 and beta_1 = 1 - chi
    let [v, e, t] = [0, 1, 2].map(|k| complex.count(k) as isize);
    let cycles = (1 - (v - e + t)) as usize;
    if cycles != 2 {
        return Err(DataError::HolesNotEnclosed(cycles));
    }
    let mut adj = vec![Vec::new(); complex.count(0)];
    for e in complex.simplices(1) {
        let (a, b) = (e.vertices()[0], e.vertices()[1]);
        let w = dist2(positions[a], positions[b]).sqrt();
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let router = Router {
        complex: &complex,
        positions: &positions,
        adj,
        starts: nearest(&positions, [0.0, 1.0], 3),
        ends: nearest(&positions, [1.0, 0.0], 3),
        params,
    };
    let train = (0..params.n_train).map(|_| router.sample(&mut rng)).collect::<Result<_, _>>()?;
    let test = (0..params.n_test).map(|_| router.sample(&mut rng)).collect::<Result<_, _>>()?;
    Ok(SyntheticFlow { complex, positions, train, test, params: params.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::harmonic_dimension;

    #[test]
    fn desk_scale_dataset_properties() {
        for seed in [1, 2, 3] {
            let flow = generate_synthetic_flow(&FlowParams::desk_scale(seed)).unwrap();
            let lap = flow.complex.laplacian(1).unwrap();
            assert!(harmonic_dimension(&lap.full, None).unwrap() >= 2, "seed {seed}");
            assert_eq!(flow.train.len(), 200);
            assert_eq!(flow.test.len(), 50);
            let b1 = flow.complex.incidence_matrix(1).unwrap();
            for t in flow.train.iter().chain(&flow.test) {
                let div = b1.mul_vec(&t.signal);
                let nz: Vec<f64> = div.iter().copied().filter(|v| *v != 0.0).collect();
                assert_eq!(nz.len(), 2);
                assert_eq!(nz.iter().sum::<f64>(), 0.0);
                assert!(t.signal.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
            }
            let ones = flow.train.iter().filter(|t| t.label == 1).count();
            assert!(ones > 50 && ones < 150);
        }
    }

    #[test]
    fn hole_interiors_are_empty() {
        let p = FlowParams::desk_scale(4);
        let flow = generate_synthetic_flow(&p).unwrap();
        for t in flow.complex.simplices(2) {
            let v = t.vertices();
            let corners = [flow.positions[v[0]], flow.positions[v[1]], flow.positions[v[2]]];
            let ccw = if orient2d(corners[0], corners[1], corners[2]) > 0 {
                corners
            } else {
                [corners[0], corners[2], corners[1]]
            };
            for c in p.hole_centers {
                assert!(!contains(ccw, c));
            }
        }
    }

    #[test]
    fn holes_must_be_enclosed_by_the_mesh() {
        for seed in 0..3 {
            let flow = generate_synthetic_flow(&FlowParams::desk_scale(seed)).unwrap();
            assert_eq!(crate::hodge::harmonic_dimension(&flow.complex.laplacian(1).unwrap().full, None).unwrap(), 2);
        }
        // sparse enough that a hole opens onto the hull
        let p = FlowParams { n_points: 60, n_train: 24, n_test: 8, ..FlowParams::desk_scale(3) };
        assert!(matches!(generate_synthetic_flow(&p), Err(DataError::HolesNotEnclosed(0))));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_synthetic_flow(&FlowParams::desk_scale(7)).unwrap();
        let b = generate_synthetic_flow(&FlowParams::desk_scale(7)).unwrap();
        assert_eq!(a.complex.to_text(), b.complex.to_text());
        assert_eq!(a.train, b.train);
        let c = generate_synthetic_flow(&FlowParams::desk_scale(8)).unwrap();
        assert_ne!(a.complex.to_text(), c.complex.to_text());
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut p = FlowParams::desk_scale(1);
        p.hole_centers = [[0.3, 0.3], [0.4, 0.4]];
        assert!(matches!(p.validate(), Err(DataError::InvalidParameter(_))));
        p = FlowParams::desk_scale(1);
        p.hole_centers[0] = [0.05, 0.5];
        assert!(p.validate().is_err());
        p = FlowParams::desk_scale(1);
        p.n_points = 10;
        assert!(p.validate().is_err());
    }

    #[test]
    fn shortest_path_prefers_short_edges_and_respects_blocks() {
        // square 0-1-2-3 with a long diagonal 0-2
        let mut adj = vec![Vec::new(); 4];
        for (a, b, w) in [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0), (0, 2, 3.0)] {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let open = vec![false; 4];
        let p = shortest_path(&adj, 0, 2, &open).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(shortest_path(&adj, 0, 2, &[false, true, false, true]).unwrap(), vec![0, 2]);
        assert!(shortest_path(&adj, 0, 3, &[false, true, true, true]).is_none());
    }

    #[test]
    fn routes_are_simple_paths() {
        let flow = generate_synthetic_flow(&FlowParams::desk_scale(5)).unwrap();
        let b1 = flow.complex.incidence_matrix(1).unwrap();
        for t in &flow.train {
            // a simple path touches each interior vertex exactly twice
            let mut degree = vec![0usize; flow.complex.count(0)];
            for (e, v) in t.signal.iter().enumerate() {
                if *v != 0.0 {
                    for &u in flow.complex.simplices(1)[e].vertices() {
                        degree[u] += 1;
                    }
                }
            }
            assert!(degree.iter().all(|&d| d <= 2));
            assert_eq!(b1.mul_vec(&t.signal).iter().filter(|v| **v != 0.0).count(), 2);
        }
    }
}
