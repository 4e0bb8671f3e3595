use crate::error::{Error, Result};
use crate::types::{Box3, Vec3};

/// Tightest axis-aligned box around `points`.
pub fn aabb_of<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Result<Box3> {
    Box3::enclosing(points).ok_or_else(|| Error::Geometry("bounding box of an empty point set".into()))
}

/// Volume of the intersection of two boxes (0 when disjoint).
pub fn intersection_volume(a: &Box3, b: &Box3) -> f64 {
    (0..3)
        .map(|k| (a.max[k].min(b.max[k]) - a.min[k].max(b.min[k])).max(0.0))
        .product()
}

/// Intersection over union of two axis-aligned boxes.
///
/// Zero-volume boxes have IoU 1 with an identical box and 0 otherwise.
pub fn iou3d(a: &Box3, b: &Box3) -> f64 {
    let inter = intersection_volume(a, b);
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cube(lo: f64, hi: f64) -> Box3 {
        Box3::new([lo; 3], [hi; 3]).unwrap()
    }

    #[test]
    fn aabb_examples() {
        let pts = [Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0)];
        let b = aabb_of(&pts).unwrap();
        assert_eq!(b.min, [0.0; 3]);
        assert_eq!(b.max, [1.0, 2.0, 3.0]);

        let p = Vec3::new(0.5, -1.0, 2.0);
        let b = aabb_of(std::iter::once(&p)).unwrap();
        assert_eq!(b.min, b.max);

        let corners: Vec<Vec3> = (0..8)
            .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        assert_eq!(aabb_of(&corners).unwrap(), cube(0.0, 1.0));

        assert!(aabb_of(&[]).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = cube(0.0, 2.0);
        assert_eq!(iou3d(&a, &a), 1.0);
        // intersection is the unit cube [1,2]^3, union 8 + 8 - 1
        assert_relative_eq!(iou3d(&a, &cube(1.0, 3.0)), 1.0 / 15.0, epsilon = 1e-12);
        assert_eq!(iou3d(&a, &cube(5.0, 6.0)), 0.0);
    }

    #[test]
    fn degenerate_boxes() {
        let flat = Box3::new([0.0, 0.0, 1.0], [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(iou3d(&flat, &flat), 1.0);
        let other = Box3::new([0.0, 0.0, 1.0], [2.0, 1.0, 1.0]).unwrap();
        assert_eq!(iou3d(&flat, &other), 0.0);
    }

    fn arb_box() -> impl Strategy<Value = Box3> {
        (prop::array::uniform3(-5f64..5.0), prop::array::uniform3(0f64..4.0)).prop_map(|(min, ext)| Box3 {
            min,
            max: std::array::from_fn(|k| min[k] + ext[k]),
        })
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou3d(&a, &b);
            prop_assert_eq!(ab, iou3d(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
