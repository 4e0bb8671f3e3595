//! Synthetic cuboid scenes with exact ground truth.
//!
//! Each object is an axis-aligned cuboid sampled on its faces; a floor plane
//! at `z = 0` is sampled everywhere outside the object footprints. Objects
//! resting on the floor have no bottom face (it would coincide with the
//! floor); floating objects get all six faces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::intersection_volume;
use crate::rng::Rng;
use crate::types::{Box3, LabeledBox, PointCloud, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub class_id: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Inclusive range for the number of randomly placed objects.
    pub num_objects: [usize; 2],
    pub size_min: [f64; 3],
    pub size_max: [f64; 3],
    pub points_per_face: usize,
    pub floor_points: usize,
    /// Isotropic Gaussian position noise, meters.
    pub noise_sigma: f64,
    /// Floor spans `[0, x] × [0, y]`.
    pub floor_extent: [f64; 2],
    /// Minimum clearance between random object footprints.
    pub min_gap: f64,
    /// Inset of every sampled face from the cuboid edges, leaving holes
    /// along each edge.
    pub face_gap: f64,
    pub num_classes: usize,
    pub seed: u64,
    /// Explicit objects; when present no random objects are placed.
    pub objects: Option<Vec<ObjectSpec>>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_objects: [3, 8],
            size_min: [0.4, 0.4, 0.4],
            size_max: [1.2, 1.2, 1.0],
            points_per_face: 1200,
            floor_points: 12000,
            noise_sigma: 0.005,
            floor_extent: [8.0, 8.0],
            min_gap: 0.4,
            face_gap: 0.0,
            num_classes: 18,
            seed: 0,
            objects: None,
        }
    }
}

/// Per-point ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointLabel {
    /// Object class, or `num_classes` for the floor.
    pub class: usize,
    /// Object index, `-1` for the floor.
    pub instance: i64,
    /// Planar patch id: 0 for the floor, `1 + 6·object + face` otherwise.
    pub patch: usize,
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub cloud: PointCloud,
    pub gt_boxes: Vec<LabeledBox>,
    pub labels: Vec<PointLabel>,
}

impl SynthScene {
    /// `class,instance,patch` CSV, one row per point.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("class,instance,patch\n");
        for l in &self.labels {
            out.push_str(&format!("{},{},{}\n", l.class, l.instance, l.patch));
        }
        out
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthScene> {
    let mut rng = Rng::new(spec.seed);
    let objects = match &spec.objects {
        Some(objs) => {
            validate_objects(objs, spec.num_classes)?;
            objs.clone()
        }
        None => place_objects(spec, &mut rng)?,
    };

    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut normals = Vec::new();
    let mut labels = Vec::new();
    let mut emit = |p: Vec3, n: Vec3, c: Vec3, label: PointLabel, rng: &mut Rng| {
        let noisy = p + Vec3::new(
            rng.normal(0.0, spec.noise_sigma),
            rng.normal(0.0, spec.noise_sigma),
            rng.normal(0.0, spec.noise_sigma),
        );
        positions.push(noisy);
        normals.push(n);
        colors.push(c.map(|v| (v + rng.normal(0.0, 0.02)).clamp(0.0, 1.0)));
        labels.push(label);
    };

    let floor_color = Vec3::new(0.55, 0.5, 0.45);
    let footprints: Vec<Box3> = objects.iter().map(|o| Box3 { min: o.min, max: o.max }).collect();
    let mut placed = 0;
    let mut attempts = 0usize;
    while placed < spec.floor_points {
        attempts += 1;
        if attempts > spec.floor_points.saturating_mul(100).max(1000) {
            return Err(Error::InvalidInput("objects cover the floor; cannot sample it".into()));
        }
        let p = Vec3::new(
            rng.uniform() * spec.floor_extent[0],
            rng.uniform() * spec.floor_extent[1],
            0.0,
        );
        let covered = footprints
            .iter()
            .any(|b| p.x >= b.min[0] && p.x <= b.max[0] && p.y >= b.min[1] && p.y <= b.max[1] && b.min[2] <= 1e-9);
        if covered {
            continue;
        }
        let label = PointLabel {
            class: spec.num_classes,
            instance: -1,
            patch: 0,
        };
        emit(p, Vec3::z(), floor_color, label, &mut rng);
        placed += 1;
    }

    for (oi, obj) in objects.iter().enumerate() {
        let hue_color = Vec3::new(rng.uniform(), rng.uniform(), rng.uniform());
        let rests_on_floor = obj.min[2] <= 1e-9;
        for (fi, (axis, upper)) in [(2, true), (0, false), (0, true), (1, false), (1, true), (2, false)]
            .into_iter()
            .enumerate()
        {
            if axis == 2 && !upper && rests_on_floor {
                continue;
            }
            let mut n = Vec3::zeros();
            n[axis] = if upper { 1.0 } else { -1.0 };
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let label = PointLabel {
                class: obj.class_id,
                instance: oi as i64,
                patch: 1 + 6 * oi + fi,
            };
            for _ in 0..spec.points_per_face {
                let mut p = Vec3::zeros();
                p[axis] = if upper { obj.max[axis] } else { obj.min[axis] };
                for w in [u, v] {
                    let lo = obj.min[w] + spec.face_gap;
                    let hi = obj.max[w] - spec.face_gap;
                    p[w] = rng.uniform_range(lo, hi.max(lo));
                }
                emit(p, n, hue_color, label, &mut rng);
            }
        }
    }

    let gt_boxes = objects
        .iter()
        .map(|o| LabeledBox::new(Box3 { min: o.min, max: o.max }, o.class_id, None))
        .collect();
    Ok(SynthScene {
        cloud: PointCloud::new(positions, Some(colors), Some(normals))?,
        gt_boxes,
        labels,
    })
}

fn validate_objects(objects: &[ObjectSpec], num_classes: usize) -> Result<()> {
    for (i, o) in objects.iter().enumerate() {
        Box3::new(o.min, o.max).map_err(|e| Error::Validation {
            index: i,
            message: e.to_string(),
        })?;
        if o.class_id >= num_classes {
            return Err(Error::Validation {
                index: i,
                message: format!("class {} outside 0..{num_classes}", o.class_id),
            });
        }
        for (j, other) in objects[..i].iter().enumerate() {
            let a = Box3 { min: o.min, max: o.max };
            let b = Box3 {
                min: other.min,
                max: other.max,
            };
            if intersection_volume(&a, &b) > 0.0 {
                return Err(Error::Validation {
                    index: i,
                    message: format!("object overlaps object {j}"),
                });
            }
        }
    }
    Ok(())
}

fn place_objects(spec: &SynthSpec, rng: &mut Rng) -> Result<Vec<ObjectSpec>> {
    let [lo, hi] = spec.num_objects;
    if lo > hi || spec.num_classes == 0 {
        return Err(Error::InvalidInput("bad object count range or class count".into()));
    }
    let count = lo + rng.below(hi - lo + 1);
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(count);
    for i in 0..count {
        let mut placed = false;
        for _ in 0..1000 {
            let size: [f64; 3] = std::array::from_fn(|k| rng.uniform_range(spec.size_min[k], spec.size_max[k]));
            let x = rng.uniform_range(spec.min_gap, spec.floor_extent[0] - size[0] - spec.min_gap);
            let y = rng.uniform_range(spec.min_gap, spec.floor_extent[1] - size[1] - spec.min_gap);
            let candidate = ObjectSpec {
                class_id: rng.below(spec.num_classes),
                min: [x, y, 0.0],
                max: [x + size[0], y + size[1], size[2]],
            };
            let clear = objects.iter().all(|o| {
                candidate.min[0] >= o.max[0] + spec.min_gap
                    || o.min[0] >= candidate.max[0] + spec.min_gap
                    || candidate.min[1] >= o.max[1] + spec.min_gap
                    || o.min[1] >= candidate.max[1] + spec.min_gap
            });
            if clear {
                objects.push(candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InvalidInput(format!(
                "could not place object {i} without overlap; enlarge the floor or reduce objects"
            )));
        }
    }
    Ok(objects)
}
