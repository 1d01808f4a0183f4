//! Bowyer–Watson Delaunay triangulation of planar points.
//!
//! Orientation and in-circle tests use a floating-point filter: a sign is
//! trusted when the determinant exceeds a forward error bound, and values
//! the filter cannot certify are treated as zero once they fall below
//! `1e-12`.

use std::collections::HashMap;

use super::DataError;

pub type Point = [f64; 2];

const FALLBACK_EPSILON: f64 = 1e-12;
const ORIENT_BOUND: f64 = 3.4e-16;
const INCIRCLE_BOUND: f64 = 1.2e-15;

fn filtered_sign(det: f64, permanent: f64, coeff: f64) -> i8 {
    let bound = coeff * permanent;
    if det > bound {
        1
    } else if det < -bound {
        -1
    } else if det.abs() <= FALLBACK_EPSILON {
        0
    } else {
        det.signum() as i8
    }
}

/// `+1` when `a, b, c` turn counter-clockwise, `-1` clockwise, `0` collinear.
pub fn orient2d(a: Point, b: Point, c: Point) -> i8 {
    let l = (b[0] - a[0]) * (c[1] - a[1]);
    let r = (b[1] - a[1]) * (c[0] - a[0]);
    filtered_sign(l - r, l.abs() + r.abs(), ORIENT_BOUND)
}

/// `+1` when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `a, b, c`.
pub fn in_circle(a: Point, b: Point, c: Point, d: Point) -> i8 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let bc = bdx * cdy - cdx * bdy;
    let ca = cdx * ady - adx * cdy;
    let ab = adx * bdy - bdx * ady;
    let det = alift * bc + blift * ca + clift * ab;
    let permanent = ((bdx * cdy).abs() + (cdx * bdy).abs()) * alift
        + ((cdx * ady).abs() + (adx * cdy).abs()) * blift
        + ((adx * bdy).abs() + (bdx * ady).abs()) * clift;
    filtered_sign(det, permanent, INCIRCLE_BOUND)
}

/// Centre of the circle through `a`, `b`, `c`.
pub fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

fn is_degenerate(points: &[Point]) -> bool {
    let Some(&a) = points.first() else { return true };
    let Some(&b) = points.iter().find(|p| (p[0] - a[0]).abs() + (p[1] - a[1]).abs() > FALLBACK_EPSILON) else {
        return true;
    };
    points.iter().all(|&c| orient2d(a, b, c) == 0)
}

/// Delaunay triangles as counter-clockwise index triples, sorted.
/// Points closer than `1e-12` to an earlier point are skipped.
pub fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>, DataError> {
    if points.len() < 3 || is_degenerate(points) {
        return Err(DataError::DegenerateTriangulation);
    }
    let n = points.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let m = 1e6 * span;
    let mut pts: Vec<Point> = points.to_vec();
    pts.push([mid[0] - m, mid[1] - m]);
    pts.push([mid[0] + m, mid[1] - m]);
    pts.push([mid[0], mid[1] + m]);

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    let mut inserted: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let p = pts[i];
        if inserted.iter().any(|&j| (pts[j][0] - p[0]).abs() + (pts[j][1] - p[1]).abs() <= FALLBACK_EPSILON) {
            continue;
        }
        inserted.push(i);
        let mut bad: Vec<usize> =
            (0..tris.len()).filter(|&t| in_circle(pts[tris[t][0]], pts[tris[t][1]], pts[tris[t][2]], p) > 0).collect();
        if bad.is_empty() {
            bad = (0..tris.len())
                .filter(|&t| {
                    let [a, b, c] = tris[t];
                    orient2d(pts[a], pts[b], p) >= 0 && orient2d(pts[b], pts[c], p) >= 0 && orient2d(pts[c], pts[a], p) >= 0
                })
                .collect();
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in &bad {
            let [a, b, c] = tris[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *edge_count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        for &t in &bad {
            let [a, b, c] = tris[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if edge_count[&(u.min(v), u.max(v))] == 1 {
                    boundary.push((u, v));
                }
            }
        }
        bad.sort_unstable();
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for (u, v) in boundary {
            if orient2d(pts[u], pts[v], p) > 0 {
                tris.push([u, v, i]);
            }
        }
    }
    let mut out: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .map(|[a, b, c]| {
            // rotate so the smallest index leads, keeping orientation
            if a < b && a < c {
                [a, b, c]
            } else if b < c {
                [b, c, a]
            } else {
                [c, a, b]
            }
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [r.random::<f64>(), r.random::<f64>()]).collect()
    }

    fn area(pts: &[Point], t: &[usize; 3]) -> f64 {
        let [a, b, c] = [pts[t[0]], pts[t[1]], pts[t[2]]];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    fn hull_area(pts: &[Point]) -> f64 {
        let mut p = pts.to_vec();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        let mut hull: Vec<Point> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
            for &q in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                    hull.pop();
                }
                hull.push(q);
            }
            hull.pop();
        }
        (0..hull.len())
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn unit_square_gives_two_triangles() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.1, 0.9]];
        let tris = delaunay(&pts).unwrap();
        assert_eq!(tris.len(), 2);
        for t in &tris {
            assert!(area(&pts, t) > 0.0);
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Point> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert_eq!(delaunay(&pts), Err(DataError::DegenerateTriangulation));
        assert_eq!(delaunay(&[[0.0, 0.0], [1.0, 1.0]]), Err(DataError::DegenerateTriangulation));
        assert_eq!(delaunay(&[[0.5, 0.5]; 4]), Err(DataError::DegenerateTriangulation));
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let (a, b, c) = ([0.1, 0.2], [0.9, 0.3], [0.4, 0.8]);
        let o = circumcenter(a, b, c);
        let d = |p: Point| ((p[0] - o[0]).powi(2) + (p[1] - o[1]).powi(2)).sqrt();
        assert!((d(a) - d(b)).abs() < 1e-14 && (d(a) - d(c)).abs() < 1e-14);
    }

    #[test]
    fn empty_circumcircles_and_full_hull_coverage() {
        for (seed, n) in [(1, 20), (2, 60), (3, 120), (4, 200)] {
            let pts = random_points(n, seed);
            let tris = delaunay(&pts).unwrap();
            for t in &tris {
                assert!(area(&pts, t) > 0.0);
                let [a, b, c] = [pts[t[0]], pts[t[1]], pts[t[2]]];
                for (i, &p) in pts.iter().enumerate() {
                    if !t.contains(&i) {
                        assert!(in_circle(a, b, c, p) <= 0, "point {i} inside circumcircle of {t:?}");
                    }
                }
            }
            let total: f64 = tris.iter().map(|t| area(&pts, t)).sum();
            assert!((total - hull_area(&pts)).abs() < 1e-9, "n={n}");
            // Euler: T = 2n - 2 - h for points in general position
            assert!(tris.len() <= 2 * n - 5);
        }
    }

    #[test]
    fn matches_brute_force_triangulation() {
        for seed in 10..40 {
            let pts = random_points(25, seed);
            let n = pts.len();
            let mut brute = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let (a, b, c) = match orient2d(pts[i], pts[j], pts[k]) {
                            1 => (i, j, k),
                            -1 => (i, k, j),
                            _ => continue,
                        };
                        if (0..n).all(|l| l == i || l == j || l == k || in_circle(pts[a], pts[b], pts[c], pts[l]) < 0) {
                            brute.push([a, b, c]);
                        }
                    }
                }
            }
            brute.sort_unstable();
            assert_eq!(delaunay(&pts).unwrap(), brute);
        }
    }
}
