//! Convex-set intersection by GJK distance on vertex sets.
//!
//! Works uniformly for full and degenerate hulls since only support points
//! are needed. Sets whose distance is within a small scale-relative
//! tolerance count as touching, hence overlapping.

use super::hull::ConvexHull;
use crate::types::Vec3;

const MAX_ITERATIONS: usize = 128;

fn support(points: &[Vec3], dir: &Vec3) -> Vec3 {
    let mut best = points[0];
    let mut best_d = best.dot(dir);
    for p in &points[1..] {
        let d = p.dot(dir);
        if d > best_d {
            best_d = d;
            best = *p;
        }
    }
    best
}

/// True when the hulls share at least one point.
pub fn hulls_overlap(a: &ConvexHull, b: &ConvexHull) -> bool {
    point_sets_overlap(a.vertices(), b.vertices())
}

/// True when the convex hulls of two point sets intersect.
pub fn point_sets_overlap(a: &[Vec3], b: &[Vec3]) -> bool {
    convex_distance(a, b) <= touch_tolerance(a, b)
}

fn touch_tolerance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let scale = a.iter().chain(b).map(|p| p.abs().max()).fold(0.0f64, f64::max);
    1e-9 * scale.max(1e-3)
}

/// Euclidean distance between the convex hulls of two non-empty point sets
/// (0 when they intersect).
pub fn convex_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "convex_distance needs points");
    let minkowski = |d: &Vec3| support(a, d) - support(b, &-d);
    let tol = touch_tolerance(a, b);
    let mut v = a[0] - b[0];
    let mut simplex: Vec<Vec3> = vec![v];
    for _ in 0..MAX_ITERATIONS {
        let vv = v.norm_squared();
        if vv <= tol * tol {
            return 0.0;
        }
        let w = minkowski(&-v);
        // No support point gets meaningfully closer: v is the closest point.
        if vv - v.dot(&w) <= 1e-12 * vv || simplex.iter().any(|s| (s - w).norm_squared() <= 1e-24 * vv) {
            return vv.sqrt();
        }
        simplex.push(w);
        let (closest, reduced) = closest_on_simplex(&simplex);
        simplex = reduced;
        if simplex.len() == 4 {
            return 0.0;
        }
        if closest.norm_squared() >= vv {
            // Numerical stall; the previous estimate is the best we have.
            return vv.sqrt();
        }
        v = closest;
    }
    v.norm()
}

/// Closest point to the origin on the simplex and the minimal subset of
/// vertices supporting it.
fn closest_on_simplex(s: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    match s.len() {
        1 => (s[0], s.to_vec()),
        2 => closest_on_segment(s[0], s[1]),
        3 => closest_on_triangle(s[0], s[1], s[2]),
        4 => closest_on_tetrahedron(s[0], s[1], s[2], s[3]),
        _ => unreachable!("simplex has at most four vertices"),
    }
}

fn closest_on_segment(a: Vec3, b: Vec3) -> (Vec3, Vec<Vec3>) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom <= 0.0 {
        return (a, vec![a]);
    }
    let t = -a.dot(&ab) / denom;
    if t <= 0.0 {
        (a, vec![a])
    } else if t >= 1.0 {
        (b, vec![b])
    } else {
        (a + ab * t, vec![a, b])
    }
}

// Voronoi-region walk for the origin against triangle abc.
fn closest_on_triangle(a: Vec3, b: Vec3, c: Vec3) -> (Vec3, Vec<Vec3>) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, vec![a]);
    }
    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, vec![b]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a + ab * t, vec![a, b]);
    }
    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, vec![c]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a + ac * t, vec![a, c]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * t, vec![b, c]);
    }
    let denom = va + vb + vc;
    if denom.abs() <= f64::MIN_POSITIVE {
        // Degenerate triangle: fall back to its edges.
        return [
            closest_on_segment(a, b),
            closest_on_segment(b, c),
            closest_on_segment(a, c),
        ]
        .into_iter()
        .min_by(|x, y| x.0.norm_squared().total_cmp(&y.0.norm_squared()))
        .unwrap();
    }
    let v = vb / denom;
    let w = vc / denom;
    (a + ab * v + ac * w, vec![a, b, c])
}

fn closest_on_tetrahedron(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> (Vec3, Vec<Vec3>) {
    // Origin and the opposite vertex on different sides of a face plane
    // means the origin is outside through that face.
    let outside = |p: Vec3, q: Vec3, r: Vec3, opposite: Vec3| {
        let n = (q - p).cross(&(r - p));
        let sign_o = -p.dot(&n);
        let sign_d = (opposite - p).dot(&n);
        sign_o * sign_d < 0.0
    };
    let faces = [(a, b, c, d), (a, c, d, b), (a, d, b, c), (b, d, c, a)];
    let mut best: Option<(Vec3, Vec<Vec3>)> = None;
    for (p, q, r, opposite) in faces {
        if outside(p, q, r, opposite) {
            let cand = closest_on_triangle(p, q, r);
            if best.as_ref().is_none_or(|b| cand.0.norm_squared() < b.0.norm_squared()) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or((Vec3::zeros(), vec![a, b, c, d]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;
    use crate::rng::Rng;
    use approx::assert_relative_eq;

    fn cube_at(offset: Vec3) -> ConvexHull {
        let pts: Vec<Vec3> = (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64) + offset)
            .collect();
        convex_hull(&pts).unwrap()
    }

    #[test]
    fn identical_hulls_overlap() {
        let a = cube_at(Vec3::zeros());
        assert!(hulls_overlap(&a, &a));
    }

    #[test]
    fn distant_cubes_do_not_overlap() {
        assert!(!hulls_overlap(
            &cube_at(Vec3::zeros()),
            &cube_at(Vec3::new(5.0, 0.0, 0.0))
        ));
        assert_relative_eq!(
            convex_distance(
                cube_at(Vec3::zeros()).vertices(),
                cube_at(Vec3::new(5.0, 0.0, 0.0)).vertices()
            ),
            4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn face_sharing_cubes_touch() {
        let a = cube_at(Vec3::zeros());
        let b = cube_at(Vec3::new(1.0, 0.0, 0.0));
        assert!(hulls_overlap(&a, &b));
        // Dense sampling of the shared face: every sample lies in both cubes.
        let mut rng = Rng::new(5);
        for _ in 0..1000 {
            let p = Vec3::new(1.0, rng.uniform(), rng.uniform());
            let inside = |h: &ConvexHull| h.face_planes().iter().all(|(n, d)| n.dot(&p) - d <= 1e-12);
            assert!(inside(&a) && inside(&b));
        }
        assert!(!hulls_overlap(&a, &cube_at(Vec3::new(1.001, 0.0, 0.0))));
    }

    #[test]
    fn degenerate_hulls() {
        let square: Vec<Vec3> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(x, y)| Vec3::new(x, y, 0.5))
            .collect();
        let sq = convex_hull(&square).unwrap();
        assert!(sq.is_degenerate());
        assert!(hulls_overlap(&sq, &cube_at(Vec3::zeros())));
        assert!(!hulls_overlap(&sq, &cube_at(Vec3::new(0.0, 0.0, 0.6))));
        let point = convex_hull(&[Vec3::new(0.5, 0.5, 0.5)]).unwrap();
        assert!(hulls_overlap(&point, &cube_at(Vec3::zeros())));
        assert!(hulls_overlap(&point, &sq));
    }

    #[test]
    fn crossing_segments() {
        let a = [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let b = [Vec3::new(0.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        assert!(point_sets_overlap(&a, &b));
        let c = [Vec3::new(0.0, -1.0, 0.1), Vec3::new(0.0, 1.0, 0.1)];
        assert!(!point_sets_overlap(&a, &c));
        assert_relative_eq!(convex_distance(&a, &c), 0.1, epsilon = 1e-12);
    }
}
