use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use super::knn::KdTree;
use crate::error::{Error, Result};
use crate::types::{PointCloud, Vec3};

/// Least-squares plane through `points`: unit normal and offset `d` with
/// `n·p = d`. `None` when the points do not span a plane.
pub(crate) fn fit_plane<'a>(points: impl Iterator<Item = &'a Vec3> + Clone) -> Option<(Vec3, f64)> {
    let (normal, centroid, eigen) = principal_axes(points)?;
    // Collinear or coincident sets have two vanishing eigenvalues.
    let mut vals = [eigen[0], eigen[1], eigen[2]];
    vals.sort_by(f64::total_cmp);
    if vals[1] <= 1e-12 * vals[2].max(f64::MIN_POSITIVE) {
        return None;
    }
    Some((normal, normal.dot(&centroid)))
}

/// Smallest-variance direction, centroid and covariance eigenvalues.
fn principal_axes<'a>(points: impl Iterator<Item = &'a Vec3> + Clone) -> Option<(Vec3, Vec3, Vec3)> {
    let n = points.clone().count();
    if n < 3 {
        return None;
    }
    let centroid = points.clone().sum::<Vec3>() / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n as f64);
    let smallest = eig.eigenvalues.imin();
    let normal: Vec3 = eig.eigenvectors.column(smallest).into();
    let len = normal.norm();
    if len.is_nan() || len <= 0.0 {
        return None;
    }
    Some((normal / len, centroid, eig.eigenvalues))
}

/// Estimates unoriented normals from the covariance of each point's `k`
/// nearest neighbours (plus the point itself). Clouds that already carry
/// normals are returned unchanged.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if cloud.has_normals() {
        return Ok(cloud.clone());
    }
    if k < 3 {
        return Err(Error::InvalidInput(format!(
            "k = {k} neighbours is too few for a normal"
        )));
    }
    if cloud.len() <= k {
        return Err(Error::InvalidInput(format!(
            "cloud has {} points, need more than k = {k}",
            cloud.len()
        )));
    }
    let pts = cloud.positions();
    let tree = KdTree::new(pts);
    let normals: Vec<Vec3> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let nbrs = tree.nearest(&pts[i], k, Some(i));
            let hood = std::iter::once(&pts[i]).chain(nbrs.iter().map(|&j| &pts[j]));
            principal_axes(hood.clone()).map_or(Vec3::z(), |(n, _, _)| n)
        })
        .collect();
    cloud.with_normals(normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn planar_points_get_vertical_normals() {
        let mut rng = Rng::new(1);
        let pts: Vec<Vec3> = (0..500).map(|_| Vec3::new(rng.uniform(), rng.uniform(), 0.0)).collect();
        let cloud = estimate_normals(&PointCloud::from_positions(pts).unwrap(), 8).unwrap();
        for n in cloud.normals().unwrap() {
            assert!((n.z.abs() - 1.0).abs() < 1e-3, "{n:?}");
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let mut rng = Rng::new(4);
        let pts: Vec<Vec3> = (0..3000)
            .map(|_| Vec3::new(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)).normalize())
            .collect();
        let cloud = estimate_normals(&PointCloud::from_positions(pts.clone()).unwrap(), 12).unwrap();
        let limit = 5f64.to_radians().cos();
        for (p, n) in pts.iter().zip(cloud.normals().unwrap()) {
            assert!(p.dot(n).abs() >= limit, "normal {n:?} at {p:?}");
        }
    }

    #[test]
    fn existing_normals_are_kept() {
        let pts = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let normals = vec![Vec3::x(); 4];
        let cloud = PointCloud::new(pts, None, Some(normals)).unwrap();
        assert_eq!(estimate_normals(&cloud, 3).unwrap(), cloud);
    }

    #[test]
    fn too_few_points() {
        let cloud = PointCloud::from_positions(vec![Vec3::zeros(); 5]).unwrap();
        assert!(estimate_normals(&cloud, 5).is_err());
    }

    #[test]
    fn collinear_points_have_no_plane() {
        let pts: Vec<Vec3> = (0..10).map(|i| Vec3::x() * i as f64).collect();
        assert!(fit_plane(pts.iter()).is_none());
        let (n, d) = fit_plane([Vec3::zeros(), Vec3::x(), Vec3::y()].iter()).unwrap();
        assert!((n.z.abs() - 1.0).abs() < 1e-12 && d.abs() < 1e-12);
    }
}
