//! Deterministic 2.5D bin-picking environment.
//!
//! Objects are convex footprints resting flat on the floor. Grasps either
//! remove an object or fail by an explicit geometric rule; shifts translate
//! objects along the push direction with contact-ordered chain resolution.
//! Identical scene and action always produce an identical result.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{BinpickError, Result};
use crate::geom::{
    max_travel_inside, overlaps, point_sweep_contact, sweep_contact, Footprint, Vec2,
};
use crate::heightmap::{pixel_to_world, GridSpec, Heightmap};
use crate::primitives::{
    feasible, pose_of, ActionParams, BinBox, GraspParams, GripperModel, Pose, PrimitiveAction,
    ShiftParams,
};

/// Radius of the closed-finger tip sweeping through the scene during a shift.
pub const SHIFT_TIP_RADIUS: f64 = 0.01;
/// Closing margin: the object must be narrower than the commanded width by
/// this much along the closing axis.
pub const GRASP_CLOSE_MARGIN: f64 = 0.002;
/// Attempt cap for rejection-sampled placement.
pub const SPAWN_ATTEMPT_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectTypeId {
    Cube,
    Rod,
    Can,
    ElongatedBox,
    Ball,
    Tube,
}

/// Footprint geometry in the object's local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootprintSpec {
    Rect { len_x: f64, len_y: f64 },
    Disc { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectShape {
    pub type_id: ObjectTypeId,
    pub footprint: FootprintSpec,
    pub body_height: f64,
    pub color: [f32; 3],
}

impl ObjectShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.footprint {
            FootprintSpec::Rect { len_x, len_y } => len_x > 0.0 && len_y > 0.0,
            FootprintSpec::Disc { radius } => radius > 0.0,
        };
        if !ok || self.body_height <= 0.0 || self.body_height > 0.15 {
            return Err(BinpickError::InputValidation(format!(
                "invalid object shape {self:?}"
            )));
        }
        Ok(())
    }

    /// Catalog shape for a type id: training set plus the unseen set.
    pub fn standard(type_id: ObjectTypeId) -> ObjectShape {
        match type_id {
            ObjectTypeId::Cube => ObjectShape {
                type_id,
                footprint: FootprintSpec::Rect {
                    len_x: 0.04,
                    len_y: 0.04,
                },
                body_height: 0.04,
                color: [0.85, 0.2, 0.2],
            },
            ObjectTypeId::Rod => ObjectShape {
                type_id,
                footprint: FootprintSpec::Rect {
                    len_x: 0.02,
                    len_y: 0.10,
                },
                body_height: 0.02,
                color: [0.2, 0.35, 0.85],
            },
            ObjectTypeId::Can => ObjectShape {
                type_id,
                footprint: FootprintSpec::Disc { radius: 0.025 },
                body_height: 0.08,
                color: [0.2, 0.7, 0.3],
            },
            ObjectTypeId::ElongatedBox => ObjectShape {
                type_id,
                footprint: FootprintSpec::Rect {
                    len_x: 0.03,
                    len_y: 0.12,
                },
                body_height: 0.03,
                color: [0.9, 0.6, 0.15],
            },
            ObjectTypeId::Ball => ObjectShape {
                type_id,
                footprint: FootprintSpec::Disc { radius: 0.025 },
                body_height: 0.05,
                color: [0.9, 0.85, 0.2],
            },
            ObjectTypeId::Tube => ObjectShape {
                type_id,
                footprint: FootprintSpec::Rect {
                    len_x: 0.02,
                    len_y: 0.10,
                },
                body_height: 0.04,
                color: [0.6, 0.3, 0.75],
            },
        }
    }
}

/// The two object sets used by the experiments.
pub const TRAIN_OBJECT_SET: [ObjectTypeId; 2] = [ObjectTypeId::Cube, ObjectTypeId::Rod];
pub const UNSEEN_OBJECT_SET: [ObjectTypeId; 4] = [
    ObjectTypeId::Can,
    ObjectTypeId::ElongatedBox,
    ObjectTypeId::Ball,
    ObjectTypeId::Tube,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: ObjectShape,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub id: u32,
}

impl SceneObject {
    pub fn footprint(&self) -> Footprint {
        let center = Vec2::new(self.x, self.y);
        match self.shape.footprint {
            FootprintSpec::Rect { len_x, len_y } => {
                Footprint::rect(center, self.yaw, 0.5 * len_x, 0.5 * len_y)
            }
            FootprintSpec::Disc { radius } => Footprint::disc(center, radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScene {
    pub bin: BinBox,
    pub objects: Vec<SceneObject>,
    /// Seed the scene was generated from, for replayable fixtures.
    pub seed: u64,
}

impl BinScene {
    pub fn new(bin: BinBox, objects: Vec<SceneObject>, seed: u64) -> Result<Self> {
        let scene = BinScene { bin, objects, seed };
        scene.validate()?;
        Ok(scene)
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Check the scene invariants: footprints inside the interior, pairwise
    /// non-overlapping, valid shapes.
    pub fn validate(&self) -> Result<()> {
        for obj in &self.objects {
            obj.shape.validate()?;
            if !obj
                .footprint()
                .inside_box(self.bin.x0, self.bin.x1, self.bin.y0, self.bin.y1)
            {
                return Err(BinpickError::InputValidation(format!(
                    "object {} extends outside the bin interior",
                    obj.id
                )));
            }
        }
        for i in 0..self.objects.len() {
            for j in (i + 1)..self.objects.len() {
                if overlaps(&self.objects[i].footprint(), &self.objects[j].footprint()) {
                    return Err(BinpickError::InputValidation(format!(
                        "objects {} and {} overlap",
                        self.objects[i].id, self.objects[j].id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scene point-reflected about the bin center with all yaws advanced by
    /// pi. The rectangular bin maps onto itself.
    pub fn rotated_pi(&self) -> BinScene {
        let (cx, cy) = self.bin.center();
        let objects = self
            .objects
            .iter()
            .map(|o| SceneObject {
                x: 2.0 * cx - o.x,
                y: 2.0 * cy - o.y,
                yaw: crate::primitives::wrap_pi(o.yaw + PI),
                ..*o
            })
            .collect();
        BinScene {
            bin: self.bin,
            objects,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    InfeasiblePose,
    Missed,
    FingerCollision,
    TooWide,
    WallClamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_scene: BinScene,
    pub reward: f32,
    pub success: bool,
    pub failure_reason: FailureReason,
    pub removed_object_id: Option<u32>,
}

fn place_rejection<F>(
    bin: &BinBox,
    n: usize,
    object_set: &[ObjectTypeId],
    seed: u64,
    accept_center: F,
) -> Result<BinScene>
where
    F: Fn(f64, f64) -> bool,
{
    if !(1..=6).contains(&n) {
        return Err(BinpickError::InputValidation(format!(
            "object count {n} outside 1..=6"
        )));
    }
    if object_set.is_empty() {
        return Err(BinpickError::InputValidation("empty object set".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    for id in 0..n {
        let type_id = object_set[rng.gen_range(0..object_set.len())];
        let shape = ObjectShape::standard(type_id);
        let mut placed = false;
        for _ in 0..SPAWN_ATTEMPT_CAP {
            let x = rng.gen_range(bin.x0..bin.x1);
            let y = rng.gen_range(bin.y0..bin.y1);
            let yaw = rng.gen_range(-PI..PI);
            if !accept_center(x, y) {
                continue;
            }
            let candidate = SceneObject {
                shape,
                x,
                y,
                yaw,
                id: id as u32,
            };
            let fp = candidate.footprint();
            if !fp.inside_box(bin.x0, bin.x1, bin.y0, bin.y1) {
                continue;
            }
            if objects.iter().any(|o| overlaps(&o.footprint(), &fp)) {
                continue;
            }
            objects.push(candidate);
            placed = true;
            break;
        }
        if !placed {
            return Err(BinpickError::Capacity(format!(
                "failed to place object {id} after {SPAWN_ATTEMPT_CAP} attempts"
            )));
        }
    }
    BinScene::new(*bin, objects, seed)
}

/// Spawn `n` objects uniformly inside the bin by rejection sampling.
pub fn spawn_random(bin: &BinBox, n: usize, object_set: &[ObjectTypeId], seed: u64) -> Result<BinScene> {
    place_rejection(bin, n, object_set, seed, |_, _| true)
}

/// Spawn `n` objects whose centroids lie within 4 cm of an interior wall face.
pub fn spawn_near_wall(bin: &BinBox, n: usize, object_set: &[ObjectTypeId], seed: u64) -> Result<BinScene> {
    let b = *bin;
    place_rejection(bin, n, object_set, seed, move |x, y| {
        let d = (x - b.x0).min(b.x1 - x).min(y - b.y0).min(b.y1 - y);
        d <= 0.04
    })
}

/// Rasterize the scene to a heightmap: wall ring at wall height in gray,
/// object cells at body height in the object color, floor at zero in black.
pub fn render(scene: &BinScene, spec: &GridSpec) -> Heightmap {
    let mut hm = Heightmap::zeros(*spec);
    let bin = &scene.bin;
    let outer_x0 = bin.x0 - bin.wall_thickness;
    let outer_x1 = bin.x1 + bin.wall_thickness;
    let outer_y0 = bin.y0 - bin.wall_thickness;
    let outer_y1 = bin.y1 + bin.wall_thickness;
    // Highest id wins on (invariant-breaking) overlap, so sort ascending.
    let mut order: Vec<&SceneObject> = scene.objects.iter().collect();
    order.sort_by_key(|o| o.id);
    for r in 0..spec.height_px {
        for c in 0..spec.width_px {
            let (x, y) = pixel_to_world(spec, r, c);
            let inside_interior = bin.contains_xy(x, y);
            let inside_outer = x > outer_x0 && x < outer_x1 && y > outer_y0 && y < outer_y1;
            if inside_outer && !inside_interior {
                hm.z[[r, c]] = bin.wall_height as f32;
                for ch in 0..3 {
                    hm.rgb[[r, c, ch]] = 0.5;
                }
            } else if inside_interior {
                let p = Vec2::new(x, y);
                for obj in &order {
                    if obj.footprint().contains(p) {
                        hm.z[[r, c]] = obj.shape.body_height as f32;
                        for ch in 0..3 {
                            hm.rgb[[r, c, ch]] = obj.shape.color[ch];
                        }
                    }
                }
            }
        }
    }
    hm
}

fn unchanged(scene: &BinScene, reason: FailureReason) -> StepResult {
    StepResult {
        next_scene: scene.clone(),
        reward: 0.0,
        success: false,
        failure_reason: reason,
        removed_object_id: None,
    }
}

/// Execute a grasp: a deterministic rule sequence over pose feasibility,
/// candidate capture geometry, finger clearance, and depth.
pub fn execute_grasp(scene: &BinScene, g: &GraspParams, z: f64, spec: &GridSpec) -> StepResult {
    let gm = GripperModel::default();
    let action = PrimitiveAction {
        params: ActionParams::Grasp(*g),
        z,
    };
    let pose = pose_of(&action, spec);
    if !feasible(&pose, g.width, &gm, &scene.bin) {
        return unchanged(scene, FailureReason::InfeasiblePose);
    }

    let (px, py) = pixel_to_world(spec, g.row, g.col);
    let p = Vec2::new(px, py);
    let Some(candidate) = scene
        .objects
        .iter()
        .filter(|o| o.footprint().contains(p))
        .min_by_key(|o| o.id)
    else {
        return unchanged(scene, FailureReason::Missed);
    };

    let u = Vec2::from_angle(g.yaw);
    if candidate.footprint().extent_along(u) > g.width - GRASP_CLOSE_MARGIN {
        return unchanged(scene, FailureReason::TooWide);
    }

    for sign in [1.0, -1.0] {
        let finger = Footprint::rect(
            p.add(u.scale(sign * 0.5 * g.width)),
            g.yaw,
            gm.finger_half_along,
            gm.finger_half_perp,
        );
        if !finger.inside_box(scene.bin.x0, scene.bin.x1, scene.bin.y0, scene.bin.y1) {
            return unchanged(scene, FailureReason::FingerCollision);
        }
        for other in &scene.objects {
            if other.id != candidate.id
                && other.shape.body_height > z
                && overlaps(&finger, &other.footprint())
            {
                return unchanged(scene, FailureReason::FingerCollision);
            }
        }
    }

    if z >= candidate.shape.body_height {
        return unchanged(scene, FailureReason::Missed);
    }

    let removed = candidate.id;
    let mut next = scene.clone();
    next.objects.retain(|o| o.id != removed);
    StepResult {
        next_scene: next,
        reward: 1.0,
        success: true,
        failure_reason: FailureReason::None,
        removed_object_id: Some(removed),
    }
}

/// Push one object along `u` by at most `dist`, clamped by walls and by other
/// objects at their current positions. Objects contacted before the travel is
/// spent are pushed recursively with the residual; each object moves at most
/// once per shift.
fn push_object(
    objects: &mut Vec<SceneObject>,
    bin: &BinBox,
    idx: usize,
    u: Vec2,
    dist: f64,
    moved: &mut Vec<bool>,
    wall_clamped: &mut bool,
) {
    moved[idx] = true;
    let fp = objects[idx].footprint();
    let wall_limit = max_travel_inside(&fp, u, dist, bin.x0, bin.x1, bin.y0, bin.y1);
    let mut travel = wall_limit;
    let mut blocker: Option<usize> = None;
    for j in 0..objects.len() {
        if j == idx {
            continue;
        }
        if let Some(t) = sweep_contact(&fp, u, travel, &objects[j].footprint()) {
            if t < travel {
                travel = t;
                blocker = Some(j);
            }
        }
    }
    if blocker.is_none() && wall_limit < dist {
        *wall_clamped = true;
    }
    objects[idx].x += u.x * travel;
    objects[idx].y += u.y * travel;
    if let Some(j) = blocker {
        let residual = dist - travel;
        if residual > 0.0 && !moved[j] {
            push_object(objects, bin, j, u, residual, moved, wall_clamped);
        }
    }
}

/// Execute a shift: sweep the closed-finger tip along the push direction and
/// translate contacted objects with the residual travel.
pub fn execute_shift(scene: &BinScene, s: &ShiftParams, z: f64, spec: &GridSpec) -> StepResult {
    let gm = GripperModel::default();
    let action = PrimitiveAction {
        params: ActionParams::Shift(*s),
        z,
    };
    let start = pose_of(&action, spec);
    let dir = Vec2::from_angle(s.push_dir);
    let end = Pose {
        position: [
            start.position[0] + s.push_dist * dir.x,
            start.position[1] + s.push_dist * dir.y,
            start.position[2],
        ],
        rotation: start.rotation,
    };
    if !feasible(&start, 0.0, &gm, &scene.bin) || !feasible(&end, 0.0, &gm, &scene.bin) {
        return unchanged(scene, FailureReason::InfeasiblePose);
    }

    let p = Vec2::new(start.position[0], start.position[1]);
    let mut contacts: Vec<(f64, usize)> = Vec::new();
    for (i, obj) in scene.objects.iter().enumerate() {
        if let Some(t) = point_sweep_contact(p, dir, s.push_dist, &obj.footprint(), SHIFT_TIP_RADIUS) {
            contacts.push((t, i));
        }
    }
    contacts.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(scene.objects[a.1].id.cmp(&scene.objects[b.1].id))
    });

    let mut next = scene.clone();
    let mut moved = vec![false; next.objects.len()];
    let mut wall_clamped = false;
    for (t, i) in contacts {
        if moved[i] {
            continue;
        }
        let residual = s.push_dist - t;
        if residual > 0.0 {
            push_object(
                &mut next.objects,
                &scene.bin,
                i,
                dir,
                residual,
                &mut moved,
                &mut wall_clamped,
            );
        }
    }

    StepResult {
        next_scene: next,
        reward: 0.0,
        success: false,
        failure_reason: if wall_clamped {
            FailureReason::WallClamp
        } else {
            FailureReason::None
        },
        removed_object_id: None,
    }
}

/// Apply a primitive action to the scene.
pub fn step(scene: &BinScene, a: &PrimitiveAction, spec: &GridSpec) -> StepResult {
    match &a.params {
        ActionParams::Grasp(g) => execute_grasp(scene, g, a.z, spec),
        ActionParams::Shift(s) => execute_shift(scene, s, a.z, spec),
    }
}

/// Rotate an action by pi together with [`BinScene::rotated_pi`]. The grid
/// must be centered on the bin for the pixel reflection to match the world
/// reflection.
pub fn rotate_action_pi(a: &PrimitiveAction, spec: &GridSpec) -> Option<PrimitiveAction> {
    crate::primitives::rotate_action(a, PI, spec)
}

/// Convenience environment bundle: grid, bin, and the empty-bin reference
/// rendering used for change detection.
#[derive(Debug, Clone)]
pub struct BinWorld {
    pub spec: GridSpec,
    pub bin: BinBox,
    pub empty_reference: Heightmap,
}

impl BinWorld {
    pub fn new(spec: GridSpec) -> Self {
        let bin = BinBox::centered_in(&spec);
        let empty = BinScene {
            bin,
            objects: Vec::new(),
            seed: 0,
        };
        let empty_reference = render(&empty, &spec);
        BinWorld {
            spec,
            bin,
            empty_reference,
        }
    }

    /// Standard world: 76 x 96 cells at 5 mm.
    pub fn default_world() -> Self {
        BinWorld::new(GridSpec::default_bin())
    }

    /// Reduced world: 38 x 48 cells at 1 cm, covering the same extent.
    pub fn reduced_world() -> Self {
        BinWorld::new(GridSpec {
            origin_x: 0.0,
            origin_y: 0.0,
            cell: 0.01,
            height_px: 38,
            width_px: 48,
        })
    }
}
