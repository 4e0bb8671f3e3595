//! 3D convex hulls via quickhull, with explicit handling of inputs whose
//! affine dimension is below three.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::Vec3;

/// Convex hull of a point set.
///
/// For full-dimensional input `faces` holds outward-oriented triangles over
/// `vertices`. Lower-dimensional input is flagged degenerate: `vertices` then
/// holds the extreme points (polygon, segment ends or a single point), there
/// are no faces and the volume is zero.
#[derive(Debug, Clone)]
pub struct ConvexHull {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    volume: f64,
    dimension: u8,
}

impl ConvexHull {
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Affine dimension of the input (0 to 3).
    pub fn dimension(&self) -> u8 {
        self.dimension
    }

    pub fn is_degenerate(&self) -> bool {
        self.dimension < 3
    }

    /// Outward unit normal and offset (`n·x = d`) of each face.
    pub fn face_planes(&self) -> Vec<(Vec3, f64)> {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                let n = (b - a).cross(&(c - a));
                let len = n.norm();
                let n = if len > 0.0 { n / len } else { n };
                (n, n.dot(&a))
            })
            .collect()
    }

    /// Hull of the union of this hull and `other`.
    pub fn merge(&self, other: &ConvexHull) -> ConvexHull {
        let mut pts = Vec::with_capacity(self.vertices.len() + other.vertices.len());
        pts.extend_from_slice(&self.vertices);
        pts.extend_from_slice(&other.vertices);
        convex_hull(&pts).expect("hull vertices are never empty")
    }
}

struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(v: [usize; 3], pts: &[Vec3]) -> Self {
        let [a, b, c] = v.map(|i| pts[i]);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        let normal = if len > 0.0 { n / len } else { Vec3::zeros() };
        Face {
            v,
            normal,
            offset: normal.dot(&a),
            outside: Vec::new(),
            alive: true,
        }
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.v;
        [(a, b), (b, c), (c, a)]
    }
}

/// Computes the convex hull of `points`.
pub fn convex_hull(points: &[Vec3]) -> Result<ConvexHull> {
    if points.is_empty() {
        return Err(Error::Geometry("convex hull of an empty point set".into()));
    }
    let (lo, hi) = points
        .iter()
        .fold((points[0], points[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let diag = (hi - lo).norm();
    let magnitude = lo.abs().max().max(hi.abs().max());
    let eps = 1e-10 * (diag + magnitude).max(f64::MIN_POSITIVE);

    // Extreme points along each axis seed the initial simplex.
    let mut extremes = Vec::with_capacity(6);
    for k in 0..3 {
        let (mut imin, mut imax) = (0, 0);
        for (i, p) in points.iter().enumerate() {
            if p[k] < points[imin][k] {
                imin = i;
            }
            if p[k] > points[imax][k] {
                imax = i;
            }
        }
        extremes.push(imin);
        extremes.push(imax);
    }
    let (mut i0, mut i1, mut best) = (extremes[0], extremes[0], -1.0);
    for &a in &extremes {
        for &b in &extremes {
            let d = (points[a] - points[b]).norm_squared();
            if d > best {
                (i0, i1, best) = (a, b, d);
            }
        }
    }
    if best.sqrt() <= eps {
        return Ok(ConvexHull {
            vertices: vec![points[0]],
            faces: Vec::new(),
            volume: 0.0,
            dimension: 0,
        });
    }
    let axis = (points[i1] - points[i0]).normalize();
    let (i2, line_dist) = farthest(points, |p| {
        let d = p - points[i0];
        (d - axis * d.dot(&axis)).norm()
    });
    if line_dist <= eps {
        return Ok(ConvexHull {
            vertices: vec![points[i0], points[i1]],
            faces: Vec::new(),
            volume: 0.0,
            dimension: 1,
        });
    }
    let plane_n = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).normalize();
    let (i3, plane_dist) = farthest(points, |p| plane_n.dot(&(p - points[i0])).abs());
    if plane_dist <= eps {
        return Ok(planar_hull(points, points[i0], axis, plane_n));
    }
    Ok(quickhull(points, [i0, i1, i2, i3], eps))
}

fn farthest(points: &[Vec3], metric: impl Fn(&Vec3) -> f64) -> (usize, f64) {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, metric(p)))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

fn planar_hull(points: &[Vec3], origin: Vec3, u: Vec3, n: Vec3) -> ConvexHull {
    let w = n.cross(&u);
    let mut idx: Vec<(f64, f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = p - origin;
            (d.dot(&u), d.dot(&w), i)
        })
        .collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    idx.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let cross = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    // Andrew's monotone chain.
    let mut hull: Vec<(f64, f64, usize)> = Vec::with_capacity(2 * idx.len());
    for p in idx.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in idx.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    ConvexHull {
        vertices: hull.iter().map(|&(_, _, i)| points[i]).collect(),
        faces: Vec::new(),
        volume: 0.0,
        dimension: 2,
    }
}

fn quickhull(points: &[Vec3], simplex: [usize; 4], eps: f64) -> ConvexHull {
    let [a, b, c, d] = simplex;
    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let centroid = (points[a] + points[b] + points[c] + points[d]) / 4.0;

    let add_face = |v: [usize; 3], faces: &mut Vec<Face>, edges: &mut HashMap<(usize, usize), usize>| {
        let f = Face::new(v, points);
        let id = faces.len();
        for e in f.edges() {
            edges.insert(e, id);
        }
        faces.push(f);
        id
    };

    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let f = Face::new(tri, points);
        let v = if f.distance(&centroid) > 0.0 {
            [tri[0], tri[2], tri[1]]
        } else {
            tri
        };
        add_face(v, &mut faces, &mut edges);
    }

    for (i, p) in points.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = best_face(&faces, 0..faces.len(), p, eps) {
            faces[f].outside.push(i);
        }
    }

    let mut pending: Vec<usize> = (0..faces.len()).collect();
    let mut on_hull = vec![false; points.len()];
    for &i in &simplex {
        on_hull[i] = true;
    }
    while let Some(fid) = pending.pop() {
        if !faces[fid].alive || faces[fid].outside.is_empty() {
            continue;
        }
        let apex = *faces[fid]
            .outside
            .iter()
            .max_by(|&&x, &&y| {
                faces[fid]
                    .distance(&points[x])
                    .total_cmp(&faces[fid].distance(&points[y]))
            })
            .unwrap();
        let p = points[apex];

        // Flood the faces visible from the apex and collect the horizon.
        let mut visible = vec![fid];
        let mut is_visible: HashMap<usize, bool> = HashMap::from([(fid, true)]);
        let mut horizon = Vec::new();
        let mut stack = vec![fid];
        while let Some(f) = stack.pop() {
            for (u, v) in faces[f].edges() {
                let Some(&nb) = edges.get(&(v, u)) else { continue };
                match is_visible.get(&nb) {
                    Some(true) => {}
                    Some(false) => horizon.push((u, v)),
                    None => {
                        if faces[nb].distance(&p) > eps {
                            is_visible.insert(nb, true);
                            visible.push(nb);
                            stack.push(nb);
                        } else {
                            is_visible.insert(nb, false);
                            horizon.push((u, v));
                        }
                    }
                }
            }
        }

        let mut orphans = Vec::new();
        for &f in &visible {
            faces[f].alive = false;
            for e in faces[f].edges() {
                if edges.get(&e) == Some(&f) {
                    edges.remove(&e);
                }
            }
            orphans.append(&mut faces[f].outside);
        }
        on_hull[apex] = true;
        let first_new = faces.len();
        for (u, v) in horizon {
            let id = add_face([u, v, apex], &mut faces, &mut edges);
            pending.push(id);
        }
        for i in orphans {
            if i == apex {
                continue;
            }
            if let Some(f) = best_face(&faces, first_new..faces.len(), &points[i], eps) {
                faces[f].outside.push(i);
            }
        }
    }

    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    let mut out_faces = Vec::new();
    for f in faces.iter().filter(|f| f.alive) {
        let mapped = f.v.map(|i| {
            if remap[i] == usize::MAX {
                remap[i] = vertices.len();
                vertices.push(points[i]);
            }
            remap[i]
        });
        out_faces.push(mapped);
    }
    let center = vertices.iter().sum::<Vec3>() / vertices.len() as f64;
    let volume = out_faces
        .iter()
        .map(|f| {
            let [p, q, r] = f.map(|i| vertices[i] - center);
            p.dot(&q.cross(&r))
        })
        .sum::<f64>()
        / 6.0;
    ConvexHull {
        vertices,
        faces: out_faces,
        volume: volume.max(0.0),
        dimension: 3,
    }
}

fn best_face(faces: &[Face], candidates: std::ops::Range<usize>, p: &Vec3, eps: f64) -> Option<usize> {
    let mut best = None;
    let mut best_d = eps;
    for f in candidates {
        if !faces[f].alive {
            continue;
        }
        let d = faces[f].distance(p);
        if d > best_d {
            best_d = d;
            best = Some(f);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use approx::assert_relative_eq;

    fn unit_cube() -> Vec<Vec3> {
        (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect()
    }

    #[test]
    fn cube_volume() {
        let h = convex_hull(&unit_cube()).unwrap();
        assert!(!h.is_degenerate());
        assert_relative_eq!(h.volume(), 1.0, epsilon = 1e-12);
        assert_eq!(h.vertices().len(), 8);
        assert_eq!(h.faces().len(), 12);
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let h = convex_hull(&pts).unwrap();
        assert!(h.is_degenerate());
        assert_eq!(h.dimension(), 2);
        assert_eq!(h.volume(), 0.0);
        assert_eq!(h.vertices().len(), 4);
    }

    #[test]
    fn regular_tetrahedron_volume() {
        // edge length 1
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
            Vec3::new(0.5, 3f64.sqrt() / 6.0, (2.0f64 / 3.0).sqrt()),
        ];
        let h = convex_hull(&pts).unwrap();
        assert_relative_eq!(h.volume(), 1.0 / (6.0 * 2f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn lower_dimensional_inputs() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let h = convex_hull(&[p, p]).unwrap();
        assert_eq!(h.dimension(), 0);
        let h = convex_hull(&[Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0]).unwrap();
        assert_eq!(h.dimension(), 1);
        assert_eq!(h.vertices().len(), 2);
        assert!(convex_hull(&[]).is_err());
    }

    #[test]
    fn random_cloud_hull_contains_all_points() {
        let mut rng = Rng::new(3);
        let pts: Vec<Vec3> = (0..2000)
            .map(|_| Vec3::new(rng.normal(0.0, 1.0), rng.normal(0.0, 2.0), rng.normal(0.0, 0.5)))
            .collect();
        let h = convex_hull(&pts).unwrap();
        for (n, d) in h.face_planes() {
            for p in &pts {
                assert!(n.dot(p) - d <= 1e-9);
            }
        }
        let bbox = crate::types::Box3::enclosing(pts.iter()).unwrap();
        assert!(h.volume() <= bbox.volume());
        // Hull of hull vertices is the same body.
        let again = convex_hull(h.vertices()).unwrap();
        assert_relative_eq!(again.volume(), h.volume(), max_relative = 1e-12);
    }

    #[test]
    fn thin_noisy_slab() {
        let mut rng = Rng::new(9);
        let pts: Vec<Vec3> = (0..3000)
            .map(|_| Vec3::new(rng.uniform(), rng.uniform(), rng.normal(0.0, 0.005)))
            .collect();
        let h = convex_hull(&pts).unwrap();
        assert!(!h.is_degenerate());
        assert!(h.volume() > 0.0 && h.volume() < 0.05);
        for (n, d) in h.face_planes() {
            for p in &pts {
                assert!(n.dot(p) - d <= 1e-9);
            }
        }
    }
}
