use super::region::Region;
use super::strategy::{Similarity, Strategy};
use crate::error::{Error, Result};

/// Cloud-level normalizers for the size, volume and fill terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneExtent {
    /// AABB volume of the whole cloud.
    pub size: f64,
    /// Convex-hull volume of the whole cloud.
    pub volume: f64,
}

fn intersection(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum::<f64>().clamp(0.0, 1.0)
}

fn positive(total: f64, what: &str) -> Result<()> {
    if total > 0.0 && total.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} of the cloud must be positive, got {total}"
        )))
    }
}

pub fn s_color(a: &Region, b: &Region) -> Result<f64> {
    match (a.color_hist(), b.color_hist()) {
        (Some(x), Some(y)) => Ok(intersection(x, y)),
        _ => Err(Error::InvalidInput("color similarity needs point colors".into())),
    }
}

pub fn s_size(a: &Region, b: &Region, cloud_size: f64) -> Result<f64> {
    positive(cloud_size, "size")?;
    Ok((1.0 - (a.aabb_volume() + b.aabb_volume()) / cloud_size).clamp(0.0, 1.0))
}

pub fn s_volume(a: &Region, b: &Region, cloud_volume: f64) -> Result<f64> {
    positive(cloud_volume, "hull volume")?;
    Ok((1.0 - (a.hull_volume() + b.hull_volume()) / cloud_volume).clamp(0.0, 1.0))
}

pub fn s_fill(a: &Region, b: &Region, cloud_size: f64) -> Result<f64> {
    positive(cloud_size, "size")?;
    let union = a.aabb().union(b.aabb()).volume();
    Ok((1.0 - (union - a.aabb_volume() - b.aabb_volume()) / cloud_size).clamp(0.0, 1.0))
}

pub fn s_seg(a: &Region, b: &Region) -> Result<f64> {
    match (a.class_hist(), b.class_hist()) {
        (Some(x), Some(y)) if x.len() == y.len() => Ok(intersection(x, y)),
        (Some(x), Some(y)) => Err(Error::DimensionMismatch(format!(
            "class histograms have {} and {} bins",
            x.len(),
            y.len()
        ))),
        _ => Err(Error::InvalidInput(
            "segmentation similarity needs segmentation scores".into(),
        )),
    }
}

/// Sum of the enabled similarity terms.
pub fn similarity(a: &Region, b: &Region, strategy: &Strategy, extent: &SceneExtent) -> Result<f64> {
    let mut s = 0.0;
    for &flag in &strategy.flags {
        s += match flag {
            Similarity::Color => s_color(a, b)?,
            Similarity::Size => s_size(a, b, extent.size)?,
            Similarity::Volume => s_volume(a, b, extent.volume)?,
            Similarity::Fill => s_fill(a, b, extent.size)?,
            Similarity::Seg => s_seg(a, b)?,
        };
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;
    use crate::types::{Box3, Vec3};
    use approx::assert_relative_eq;

    // A region whose AABB is a cube of the given volume at `origin`.
    fn cube(origin: f64, volume: f64) -> Region {
        let e = volume.cbrt();
        let min = [origin, 0.0, 0.0];
        let max = [origin + e, e, e];
        let pts: Vec<Vec3> = (0..8)
            .map(|k| {
                Vec3::new(
                    if k & 1 == 0 { min[0] } else { max[0] },
                    if k & 2 == 0 { min[1] } else { max[1] },
                    if k & 4 == 0 { min[2] } else { max[2] },
                )
            })
            .collect();
        Region::from_parts(
            vec![0],
            Box3::new(min, max).unwrap(),
            convex_hull(&pts).unwrap(),
            None,
            None,
        )
    }

    fn with_hists(color: Option<Vec<f64>>, class: Option<Vec<f64>>) -> Region {
        let hull = convex_hull(&[Vec3::zeros()]).unwrap();
        Region::from_parts(vec![0], Box3::new([0.0; 3], [0.0; 3]).unwrap(), hull, color, class)
    }

    #[test]
    fn color_examples() {
        let mut h1 = vec![0.0; 75];
        let mut h2 = vec![0.0; 75];
        h1[0] = 0.5;
        h1[1] = 0.5;
        h2[0] = 0.5;
        h2[1] = 0.25;
        h2[2] = 0.25;
        let a = with_hists(Some(h1.clone()), None);
        let b = with_hists(Some(h2), None);
        assert_relative_eq!(s_color(&a, &b).unwrap(), 0.75);
        assert_relative_eq!(s_color(&a, &with_hists(Some(h1), None)).unwrap(), 1.0);
        let mut h3 = vec![0.0; 75];
        h3[40] = 1.0;
        assert_eq!(s_color(&a, &with_hists(Some(h3), None)).unwrap(), 0.0);
        assert!(s_color(&a, &with_hists(None, None)).is_err());
    }

    #[test]
    fn size_examples() {
        assert_relative_eq!(
            s_size(&cube(0.0, 10.0), &cube(50.0, 20.0), 100.0).unwrap(),
            0.7,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s_size(&cube(0.0, 40.0), &cube(50.0, 60.0), 100.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let p = with_hists(None, None);
        assert_eq!(s_size(&p, &p, 100.0).unwrap(), 1.0);
        assert!(s_size(&p, &p, 0.0).is_err());
    }

    #[test]
    fn volume_examples() {
        let p = with_hists(None, None);
        assert_eq!(s_volume(&p, &p, 3.0).unwrap(), 1.0);
        assert_relative_eq!(
            s_volume(&cube(0.0, 5.0), &cube(9.0, 15.0), 100.0).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s_volume(&cube(0.0, 30.0), &cube(9.0, 70.0), 100.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fill_examples() {
        // b inside a
        let a = cube(0.0, 8.0);
        let b = cube(0.5, 1.0);
        assert_eq!(s_fill(&a, &b, 100.0).unwrap(), 1.0);
        // union 40, parts 10 + 20: boxes [0,1]x[0,1]x[0,10], [3,4]x[0,1]x[0,20]
        let mk = |x0: f64, h: f64| {
            let pts = [Vec3::new(x0, 0.0, 0.0), Vec3::new(x0 + 1.0, 1.0, h)];
            Region::from_parts(
                vec![0],
                Box3::new([x0, 0.0, 0.0], [x0 + 1.0, 1.0, h]).unwrap(),
                convex_hull(&pts).unwrap(),
                None,
                None,
            )
        };
        let (r1, r2) = (mk(0.0, 10.0), mk(1.0, 20.0));
        assert_relative_eq!(r1.aabb().union(r2.aabb()).volume(), 40.0);
        assert_relative_eq!(s_fill(&r1, &r2, 100.0).unwrap(), 0.9, epsilon = 1e-12);
        // far apart unit boxes
        assert_eq!(s_fill(&cube(0.0, 1.0), &cube(1000.0, 1.0), 100.0).unwrap(), 0.0);
    }

    #[test]
    fn seg_examples() {
        let pure = |c: usize| {
            let mut h = vec![0.0; 4];
            h[c] = 1.0;
            with_hists(None, Some(h))
        };
        assert_eq!(s_seg(&pure(3), &pure(3)).unwrap(), 1.0);
        assert_eq!(s_seg(&pure(1), &pure(2)).unwrap(), 0.0);
        let half = with_hists(None, Some(vec![0.5, 0.5, 0.0, 0.0]));
        assert_relative_eq!(s_seg(&half, &pure(0)).unwrap(), 0.5);
        assert!(s_seg(&half, &with_hists(None, Some(vec![1.0]))).is_err());
        assert!(s_seg(&half, &with_hists(None, None)).is_err());
    }

    #[test]
    fn combined_is_sum_of_terms() {
        let a = cube(0.0, 10.0);
        let b = cube(2.5, 20.0);
        let extent = SceneExtent {
            size: 100.0,
            volume: 100.0,
        };
        let st = Strategy::parse("SZ+V+F", 0.0).unwrap();
        let expect = s_size(&a, &b, 100.0).unwrap() + s_volume(&a, &b, 100.0).unwrap() + s_fill(&a, &b, 100.0).unwrap();
        assert_relative_eq!(similarity(&a, &b, &st, &extent).unwrap(), expect);
        let seg = Strategy::parse("SG", 0.0).unwrap();
        assert!(similarity(&a, &b, &seg, &extent).is_err());
    }
}
