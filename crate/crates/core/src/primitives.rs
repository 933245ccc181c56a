//! Grasp and shift motion primitives: parameter bounds, normalization to the
//! actor's [-1, 1] channels, rotation transforms for augmentation, z
//! extraction from the heightmap, and pose feasibility against the bin.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{BinpickError, Result};
use crate::heightmap::{pixel_to_world, rotate_pixel, GridSpec, Heightmap};

pub const PITCH_RANGE: (f64, f64) = (-FRAC_PI_4, FRAC_PI_4);
pub const YAW_RANGE: (f64, f64) = (-FRAC_PI_2, FRAC_PI_2); // half-open upper bound
pub const WIDTH_RANGE: (f64, f64) = (0.01, 0.08);
pub const ROLL_RANGE: (f64, f64) = (-FRAC_PI_4, FRAC_PI_4);
pub const PUSH_DIR_RANGE: (f64, f64) = (-PI, PI); // half-open upper bound
pub const PUSH_DIST_RANGE: (f64, f64) = (0.02, 0.15);

/// Fingers envelop the object: grasp depth below the observed surface.
pub const GRASP_Z_OFFSET: f64 = 0.015;
/// Shift tip rides slightly below the surface with a floor clearance.
pub const SHIFT_Z_OFFSET: f64 = 0.010;
pub const SHIFT_Z_FLOOR: f64 = 0.005;

/// Wrap into [-pi/2, pi/2): the parallel-jaw gripper is pi-periodic in yaw.
pub fn wrap_half_pi(a: f64) -> f64 {
    a - PI * ((a + FRAC_PI_2) / PI).floor()
}

/// Wrap into [-pi, pi).
pub fn wrap_pi(a: f64) -> f64 {
    a - 2.0 * PI * ((a + PI) / (2.0 * PI)).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Grasp,
    Shift,
}

impl PrimitiveKind {
    /// Number of continuous action channels.
    pub fn action_dim(&self) -> usize {
        match self {
            PrimitiveKind::Grasp => 3,
            PrimitiveKind::Shift => 5,
        }
    }

    /// Per-channel (lo, hi) bounds, in normalization order.
    pub fn bounds(&self) -> &'static [(f64, f64)] {
        match self {
            PrimitiveKind::Grasp => &[PITCH_RANGE, YAW_RANGE, WIDTH_RANGE],
            PrimitiveKind::Shift => &[
                ROLL_RANGE,
                PITCH_RANGE,
                YAW_RANGE,
                PUSH_DIR_RANGE,
                PUSH_DIST_RANGE,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspParams {
    pub row: usize,
    pub col: usize,
    pub pitch: f64,
    pub yaw: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftParams {
    pub row: usize,
    pub col: usize,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub push_dir: f64,
    pub push_dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionParams {
    Grasp(GraspParams),
    Shift(ShiftParams),
}

/// One motion primitive action: discrete pixel, continuous parameters, and
/// the z derived from the heightmap at selection time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ActionRecord", into = "ActionRecord")]
pub struct PrimitiveAction {
    pub params: ActionParams,
    pub z: f64,
}

impl PrimitiveAction {
    pub fn kind(&self) -> PrimitiveKind {
        match self.params {
            ActionParams::Grasp(_) => PrimitiveKind::Grasp,
            ActionParams::Shift(_) => PrimitiveKind::Shift,
        }
    }

    pub fn pixel(&self) -> (usize, usize) {
        match self.params {
            ActionParams::Grasp(g) => (g.row, g.col),
            ActionParams::Shift(s) => (s.row, s.col),
        }
    }

    pub fn yaw(&self) -> f64 {
        match self.params {
            ActionParams::Grasp(g) => g.yaw,
            ActionParams::Shift(s) => s.yaw,
        }
    }
}

/// Flat serialized form for episode logs.
#[derive(Serialize, Deserialize, Clone)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ActionRecord {
    Grasp {
        row: usize,
        col: usize,
        pitch: f64,
        yaw: f64,
        width: f64,
        z: f64,
    },
    Shift {
        row: usize,
        col: usize,
        roll: f64,
        pitch: f64,
        yaw: f64,
        push_dir: f64,
        push_dist: f64,
        z: f64,
    },
}

impl From<ActionRecord> for PrimitiveAction {
    fn from(r: ActionRecord) -> Self {
        match r {
            ActionRecord::Grasp {
                row,
                col,
                pitch,
                yaw,
                width,
                z,
            } => PrimitiveAction {
                params: ActionParams::Grasp(GraspParams {
                    row,
                    col,
                    pitch,
                    yaw,
                    width,
                }),
                z,
            },
            ActionRecord::Shift {
                row,
                col,
                roll,
                pitch,
                yaw,
                push_dir,
                push_dist,
                z,
            } => PrimitiveAction {
                params: ActionParams::Shift(ShiftParams {
                    row,
                    col,
                    roll,
                    pitch,
                    yaw,
                    push_dir,
                    push_dist,
                }),
                z,
            },
        }
    }
}

impl From<PrimitiveAction> for ActionRecord {
    fn from(a: PrimitiveAction) -> Self {
        match a.params {
            ActionParams::Grasp(g) => ActionRecord::Grasp {
                row: g.row,
                col: g.col,
                pitch: g.pitch,
                yaw: g.yaw,
                width: g.width,
                z: a.z,
            },
            ActionParams::Shift(s) => ActionRecord::Shift {
                row: s.row,
                col: s.col,
                roll: s.roll,
                pitch: s.pitch,
                yaw: s.yaw,
                push_dir: s.push_dir,
                push_dist: s.push_dist,
                z: a.z,
            },
        }
    }
}

/// Target height for the tool center point, from the heightmap at the pixel.
pub fn extract_z(hm: &Heightmap, row: usize, col: usize, kind: PrimitiveKind) -> Result<f64> {
    if row >= hm.spec.height_px || col >= hm.spec.width_px {
        return Err(BinpickError::Range(format!(
            "pixel ({row}, {col}) outside {}x{} grid",
            hm.spec.height_px, hm.spec.width_px
        )));
    }
    let surface = hm.z[[row, col]] as f64;
    Ok(match kind {
        PrimitiveKind::Grasp => (surface - GRASP_Z_OFFSET).max(0.0),
        PrimitiveKind::Shift => (surface - SHIFT_Z_OFFSET).max(SHIFT_Z_FLOOR),
    })
}

fn check_in_bounds(values: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    for (v, (lo, hi)) in values.iter().zip(bounds) {
        if !v.is_finite() || *v < *lo || *v > *hi {
            return Err(BinpickError::InputValidation(format!(
                "parameter {v} outside [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// Affine map of each channel onto [-1, 1]: lo -> -1, hi -> +1.
pub fn normalize(params: &ActionParams) -> Result<Vec<f64>> {
    let (values, kind) = match params {
        ActionParams::Grasp(g) => (vec![g.pitch, g.yaw, g.width], PrimitiveKind::Grasp),
        ActionParams::Shift(s) => (
            vec![s.roll, s.pitch, s.yaw, s.push_dir, s.push_dist],
            PrimitiveKind::Shift,
        ),
    };
    let bounds = kind.bounds();
    check_in_bounds(&values, bounds)?;
    Ok(values
        .iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
        .collect())
}

/// Inverse of [`normalize`]. Angles on half-open ranges wrap their upper
/// bound back to the lower; the tanh-squashed actor can emit exactly +1.
pub fn denormalize(kind: PrimitiveKind, pixel: (usize, usize), v: &[f64]) -> Result<ActionParams> {
    if v.len() != kind.action_dim() {
        return Err(BinpickError::InputValidation(format!(
            "expected {} channels, got {}",
            kind.action_dim(),
            v.len()
        )));
    }
    for x in v {
        if !x.is_finite() || *x < -1.0 || *x > 1.0 {
            return Err(BinpickError::InputValidation(format!(
                "normalized value {x} outside [-1, 1]"
            )));
        }
    }
    let bounds = kind.bounds();
    let mut raw: Vec<f64> = v
        .iter()
        .zip(bounds)
        .map(|(x, (lo, hi))| lo + 0.5 * (x + 1.0) * (hi - lo))
        .collect();
    let (row, col) = pixel;
    Ok(match kind {
        PrimitiveKind::Grasp => {
            raw[1] = wrap_half_pi(raw[1]);
            ActionParams::Grasp(GraspParams {
                row,
                col,
                pitch: raw[0],
                yaw: raw[1],
                width: raw[2],
            })
        }
        PrimitiveKind::Shift => {
            raw[2] = wrap_half_pi(raw[2]);
            raw[3] = wrap_pi(raw[3]);
            ActionParams::Shift(ShiftParams {
                row,
                col,
                roll: raw[0],
                pitch: raw[1],
                yaw: raw[2],
                push_dir: raw[3],
                push_dist: raw[4],
            })
        }
    })
}

/// Rotate an action with a rotated heightmap: the pixel turns about the image
/// center, yaw turns pi-periodically, the shift direction turns fully.
/// None when the rotated pixel leaves the frame.
pub fn rotate_action(a: &PrimitiveAction, angle: f64, spec: &GridSpec) -> Option<PrimitiveAction> {
    let (row, col) = a.pixel();
    let (nr, nc) = rotate_pixel(spec, row, col, angle)?;
    let params = match a.params {
        ActionParams::Grasp(g) => ActionParams::Grasp(GraspParams {
            row: nr,
            col: nc,
            yaw: wrap_half_pi(g.yaw + angle),
            ..g
        }),
        ActionParams::Shift(s) => ActionParams::Shift(ShiftParams {
            row: nr,
            col: nc,
            yaw: wrap_half_pi(s.yaw + angle),
            push_dir: wrap_pi(s.push_dir + angle),
            ..s
        }),
    };
    Some(PrimitiveAction { params, z: a.z })
}

/// 3x3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [f64; 9]);

impl Mat3 {
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
        ]
    }

    /// Intrinsic roll-pitch-yaw about tool x, y, z: R = Rz(yaw) Ry(pitch) Rx(roll).
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Mat3 {
        let (si, ci) = roll.sin_cos();
        let (sj, cj) = pitch.sin_cos();
        let (sk, ck) = yaw.sin_cos();
        Mat3([
            ck * cj,
            ck * sj * si - sk * ci,
            ck * sj * ci + sk * si,
            sk * cj,
            sk * sj * si + ck * ci,
            sk * sj * ci - ck * si,
            -sj,
            cj * si,
            cj * ci,
        ])
    }
}

/// Rigid tool pose: TCP position and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: [f64; 3],
    pub rotation: Mat3,
}

/// Pose of an action's tool center point: position from the cell center and
/// cached z, orientation from the Euler angles (roll is zero for grasps).
pub fn pose_of(a: &PrimitiveAction, spec: &GridSpec) -> Pose {
    let (row, col) = a.pixel();
    let (x, y) = pixel_to_world(spec, row, col);
    let rotation = match a.params {
        ActionParams::Grasp(g) => Mat3::from_rpy(0.0, g.pitch, g.yaw),
        ActionParams::Shift(s) => Mat3::from_rpy(s.roll, s.pitch, s.yaw),
    };
    Pose {
        position: [x, y, a.z],
        rotation,
    }
}

/// Tool-frame sites of interest on the gripper and the wrist-mounted camera,
/// plus the planar finger pad cross-section used by the grasp rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperModel {
    pub finger_base_height: f64,
    pub wrist_height: f64,
    pub camera_offset: [f64; 3],
    /// Finger pad half-extent along the closing axis.
    pub finger_half_along: f64,
    /// Finger pad half-extent perpendicular to the closing axis.
    pub finger_half_perp: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            finger_base_height: 0.05,
            wrist_height: 0.10,
            camera_offset: [0.05, 0.0, 0.12],
            finger_half_along: 0.005,
            finger_half_perp: 0.01,
        }
    }
}

impl GripperModel {
    /// Tool-frame site offsets at the commanded finger width.
    pub fn sites(&self, width: f64) -> [[f64; 3]; 6] {
        let h = 0.5 * width;
        [
            [h, 0.0, 0.0],
            [-h, 0.0, 0.0],
            [h, 0.0, self.finger_base_height],
            [-h, 0.0, self.finger_base_height],
            [0.0, 0.0, self.wrist_height],
            self.camera_offset,
        ]
    }
}

/// Interior box of the bin with wall geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub wall_height: f64,
    pub wall_thickness: f64,
}

impl BinBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(BinpickError::InputValidation(
                "bin interior must have positive extent".into(),
            ));
        }
        Ok(BinBox {
            x0,
            x1,
            y0,
            y1,
            wall_height: 0.20,
            wall_thickness: 0.02,
        })
    }

    /// 40 cm x 30 cm interior centered in the given grid.
    pub fn centered_in(spec: &GridSpec) -> Self {
        let (cx, cy) = spec.center();
        BinBox {
            x0: cx - 0.20,
            x1: cx + 0.20,
            y0: cy - 0.15,
            y1: cy + 0.15,
            wall_height: 0.20,
            wall_thickness: 0.02,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

/// True when every transformed site clears the bin: sites below the wall top
/// must lie strictly inside the interior rectangle and no site may go below
/// the floor. Each site is checked together with its xy-mirrored twin, since
/// the pi-periodic yaw leaves the wrist orientation unresolved and a reach
/// plan cannot rely on either side being free.
pub fn feasible(pose: &Pose, width: f64, gm: &GripperModel, bb: &BinBox) -> bool {
    let [px, py, pz] = pose.position;
    for site in gm.sites(width) {
        let o = pose.rotation.apply(site);
        let z = pz + o[2];
        if z < 0.0 {
            return false;
        }
        if z < bb.wall_height {
            for sign in [1.0, -1.0] {
                if !bb.contains_xy(px + sign * o[0], py + sign * o[1]) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heightmap::GridSpec;

    fn spec() -> GridSpec {
        GridSpec::default_bin()
    }

    fn grasp(row: usize, col: usize, pitch: f64, yaw: f64, width: f64, z: f64) -> PrimitiveAction {
        PrimitiveAction {
            params: ActionParams::Grasp(GraspParams {
                row,
                col,
                pitch,
                yaw,
                width,
            }),
            z,
        }
    }

    #[test]
    fn extract_z_offsets_and_floors() {
        let mut hm = Heightmap::zeros(spec());
        hm.z[[10, 10]] = 0.04;
        assert!((extract_z(&hm, 10, 10, PrimitiveKind::Grasp).unwrap() - 0.025).abs() < 1e-9);
        assert_eq!(extract_z(&hm, 0, 0, PrimitiveKind::Grasp).unwrap(), 0.0);
        assert_eq!(extract_z(&hm, 0, 0, PrimitiveKind::Shift).unwrap(), 0.005);
        assert!(extract_z(&hm, 100, 0, PrimitiveKind::Grasp).is_err());
        // Never above the surface height itself.
        assert!(extract_z(&hm, 10, 10, PrimitiveKind::Shift).unwrap() <= 0.04);
    }

    #[test]
    fn normalize_midpoints_and_bounds() {
        let p = ActionParams::Grasp(GraspParams {
            row: 0,
            col: 0,
            pitch: 0.0,
            yaw: 0.0,
            width: 0.045,
        });
        let v = normalize(&p).unwrap();
        for x in &v {
            assert!(x.abs() < 1e-12);
        }
        let lo = denormalize(PrimitiveKind::Grasp, (0, 0), &[-1.0, -1.0, -1.0]).unwrap();
        match lo {
            ActionParams::Grasp(g) => {
                assert!((g.pitch + FRAC_PI_4).abs() < 1e-12);
                assert!((g.yaw + FRAC_PI_2).abs() < 1e-12);
                assert!((g.width - 0.01).abs() < 1e-12);
            }
            _ => panic!("wrong kind"),
        }
        let oob = ActionParams::Grasp(GraspParams {
            row: 0,
            col: 0,
            pitch: 0.0,
            yaw: 0.0,
            width: 0.2,
        });
        assert!(normalize(&oob).is_err());
    }

    #[test]
    fn denormalize_wraps_half_open_upper_bound() {
        let p = denormalize(PrimitiveKind::Grasp, (0, 0), &[0.0, 1.0, 0.0]).unwrap();
        match p {
            ActionParams::Grasp(g) => assert!((g.yaw + FRAC_PI_2).abs() < 1e-12),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn rotate_action_wraps_yaw_and_direction() {
        let a = grasp(10, 10, 0.1, PI / 3.0, 0.05, 0.02);
        let same = rotate_action(&a, 0.0, &spec()).unwrap();
        assert_eq!(same, a);
        let turned = rotate_action(&a, FRAC_PI_2, &spec()).unwrap();
        assert!((turned.yaw() - (PI / 3.0 + FRAC_PI_2 - PI)).abs() < 1e-12);

        let s = PrimitiveAction {
            params: ActionParams::Shift(ShiftParams {
                row: 38,
                col: 48,
                roll: 0.0,
                pitch: 0.0,
                yaw: 0.0,
                push_dir: 3.0 * PI / 4.0,
                push_dist: 0.1,
            }),
            z: 0.005,
        };
        let turned = rotate_action(&s, FRAC_PI_2, &spec()).unwrap();
        match turned.params {
            ActionParams::Shift(sp) => assert!((sp.push_dir + 3.0 * PI / 4.0).abs() < 1e-12),
            _ => panic!("wrong kind"),
        }
        // Pixel near the corner leaves the frame under a quarter turn.
        let corner = grasp(0, 0, 0.0, 0.0, 0.05, 0.0);
        assert!(rotate_action(&corner, FRAC_PI_2, &spec()).is_none());
    }

    #[test]
    fn pose_rotation_convention() {
        let a = grasp(38, 48, 0.0, FRAC_PI_4, 0.05, 0.0);
        let pose = pose_of(&a, &spec());
        let x_axis = pose.rotation.apply([1.0, 0.0, 0.0]);
        assert!((x_axis[0] - (0.5f64).sqrt()).abs() < 1e-12);
        assert!((x_axis[1] - (0.5f64).sqrt()).abs() < 1e-12);
        assert!(x_axis[2].abs() < 1e-12);

        // Rz(0.3) Ry(0.2) Rx(0.1) composition against a direct product.
        let m = Mat3::from_rpy(0.1, 0.2, 0.3);
        let rx = Mat3([1.0, 0.0, 0.0, 0.0, 0.1f64.cos(), -0.1f64.sin(), 0.0, 0.1f64.sin(), 0.1f64.cos()]);
        let ry = Mat3([0.2f64.cos(), 0.0, 0.2f64.sin(), 0.0, 1.0, 0.0, -0.2f64.sin(), 0.0, 0.2f64.cos()]);
        let rz = Mat3([0.3f64.cos(), -0.3f64.sin(), 0.0, 0.3f64.sin(), 0.3f64.cos(), 0.0, 0.0, 0.0, 1.0]);
        let v = [0.3, -0.5, 0.7];
        let direct = rz.apply(ry.apply(rx.apply(v)));
        let composed = m.apply(v);
        for i in 0..3 {
            assert!((direct[i] - composed[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn feasibility_examples() {
        let gm = GripperModel::default();
        let bb = BinBox::centered_in(&spec());
        let (cx, cy) = bb.center();
        let vertical = Pose {
            position: [cx, cy, 0.025],
            rotation: Mat3::from_rpy(0.0, 0.0, 0.0),
        };
        assert!(feasible(&vertical, 0.06, &gm, &bb));

        // Finger tip 1 mm outside the interior x-range at z = 0.05.
        let near_wall = Pose {
            position: [bb.x1 - 0.029, cy, 0.05],
            rotation: Mat3::from_rpy(0.0, 0.0, 0.0),
        };
        assert!(!feasible(&near_wall, 0.06, &gm, &bb));

        // Sites above the wall height are unconstrained in xy: a pose high
        // above the bin passes even though wrist xy would exit a tiny bin.
        let high = Pose {
            position: [cx, cy, 0.25],
            rotation: Mat3::from_rpy(0.0, 0.0, 0.0),
        };
        assert!(feasible(&high, 0.06, &gm, &bb));
    }

    #[test]
    fn feasible_monotone_in_bin_size() {
        let gm = GripperModel::default();
        let small = BinBox::new(0.10, 0.30, 0.10, 0.25).unwrap();
        let large = BinBox::new(0.05, 0.40, 0.05, 0.33).unwrap();
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let pose = Pose {
                position: [
                    0.05 + 0.35 * next(),
                    0.05 + 0.28 * next(),
                    0.0 + 0.12 * next(),
                ],
                rotation: Mat3::from_rpy(
                    -FRAC_PI_4 + FRAC_PI_2 * next(),
                    -FRAC_PI_4 + FRAC_PI_2 * next(),
                    -FRAC_PI_2 + PI * next(),
                ),
            };
            let w = 0.01 + 0.07 * next();
            if feasible(&pose, w, &gm, &small) {
                assert!(feasible(&pose, w, &gm, &large));
            }
        }
    }

    #[test]
    fn action_json_round_trip_is_flat() {
        let a = grasp(3, 7, 0.1, -0.2, 0.05, 0.01);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"kind\":\"grasp\""));
        assert!(s.contains("\"row\":3"));
        assert!(!s.contains("params"));
        let back: PrimitiveAction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn normalize_round_trip_random_shift_params() {
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let p = ActionParams::Shift(ShiftParams {
                row: 1,
                col: 2,
                roll: -FRAC_PI_4 + FRAC_PI_2 * next(),
                pitch: -FRAC_PI_4 + FRAC_PI_2 * next(),
                yaw: -FRAC_PI_2 + (PI - 1e-9) * next(),
                push_dir: -PI + (2.0 * PI - 1e-9) * next(),
                push_dist: 0.02 + 0.13 * next(),
            });
            let v = normalize(&p).unwrap();
            let q = denormalize(PrimitiveKind::Shift, (1, 2), &v).unwrap();
            let (ActionParams::Shift(a), ActionParams::Shift(b)) = (p, q) else {
                panic!("wrong kinds");
            };
            for (x, y) in [
                (a.roll, b.roll),
                (a.pitch, b.pitch),
                (a.yaw, b.yaw),
                (a.push_dir, b.push_dir),
                (a.push_dist, b.push_dist),
            ] {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }
}
