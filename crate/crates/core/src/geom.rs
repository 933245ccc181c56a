//! Planar geometry for footprints: overlap tests, directional extents,
//! containment, and swept first-contact queries.
//!
//! All shapes are convex (oriented rectangles and discs) and all queries are
//! closed-form, so results are deterministic. Separation comparisons use a
//! small tolerance so that bodies clamped exactly into contact do not register
//! as overlapping.

/// Tolerance for contact/overlap decisions, in meters.
pub const CONTACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Convex planar footprint of an object or gripper finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    /// Oriented rectangle: center, yaw, half extents along the local axes.
    Rect {
        center: Vec2,
        yaw: f64,
        half_x: f64,
        half_y: f64,
    },
    /// Disc: center and radius.
    Disc { center: Vec2, radius: f64 },
}

impl Footprint {
    pub fn rect(center: Vec2, yaw: f64, half_x: f64, half_y: f64) -> Self {
        Footprint::Rect {
            center,
            yaw,
            half_x,
            half_y,
        }
    }

    pub fn disc(center: Vec2, radius: f64) -> Self {
        Footprint::Disc { center, radius }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            Footprint::Rect { center, .. } | Footprint::Disc { center, .. } => center,
        }
    }

    pub fn translated(&self, delta: Vec2) -> Footprint {
        match *self {
            Footprint::Rect {
                center,
                yaw,
                half_x,
                half_y,
            } => Footprint::Rect {
                center: center.add(delta),
                yaw,
                half_x,
                half_y,
            },
            Footprint::Disc { center, radius } => Footprint::Disc {
                center: center.add(delta),
                radius,
            },
        }
    }

    /// Local unit axes of a rectangle (ex, ey). Discs have no orientation.
    fn axes(&self) -> Option<(Vec2, Vec2)> {
        match *self {
            Footprint::Rect { yaw, .. } => {
                let ex = Vec2::from_angle(yaw);
                Some((ex, ex.perp()))
            }
            Footprint::Disc { .. } => None,
        }
    }

    fn corners(&self) -> Option<[Vec2; 4]> {
        match *self {
            Footprint::Rect {
                center,
                half_x,
                half_y,
                ..
            } => {
                let (ex, ey) = self.axes().unwrap();
                let dx = ex.scale(half_x);
                let dy = ey.scale(half_y);
                Some([
                    center.add(dx).add(dy),
                    center.add(dx).sub(dy),
                    center.sub(dx).sub(dy),
                    center.sub(dx).add(dy),
                ])
            }
            Footprint::Disc { .. } => None,
        }
    }

    /// Inclusive point containment.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Footprint::Rect {
                center,
                half_x,
                half_y,
                ..
            } => {
                let (ex, ey) = self.axes().unwrap();
                let d = p.sub(center);
                d.dot(ex).abs() <= half_x && d.dot(ey).abs() <= half_y
            }
            Footprint::Disc { center, radius } => p.sub(center).norm() <= radius,
        }
    }

    /// Full width of the footprint projected onto direction `u` (unit vector).
    pub fn extent_along(&self, u: Vec2) -> f64 {
        match *self {
            Footprint::Rect {
                half_x, half_y, ..
            } => {
                let (ex, ey) = self.axes().unwrap();
                2.0 * (half_x * u.dot(ex).abs() + half_y * u.dot(ey).abs())
            }
            Footprint::Disc { radius, .. } => 2.0 * radius,
        }
    }

    /// Signed interval of the projection onto `u`, relative to point `origin`.
    pub fn span_along(&self, u: Vec2, origin: Vec2) -> (f64, f64) {
        let c = self.center().sub(origin).dot(u);
        let h = 0.5 * self.extent_along(u);
        (c - h, c + h)
    }

    /// Axis-aligned support extrema (min_x, max_x, min_y, max_y).
    pub fn aabb(&self) -> (f64, f64, f64, f64) {
        match *self {
            Footprint::Rect {
                center,
                half_x,
                half_y,
                ..
            } => {
                let (ex, ey) = self.axes().unwrap();
                let rx = half_x * ex.x.abs() + half_y * ey.x.abs();
                let ry = half_x * ex.y.abs() + half_y * ey.y.abs();
                (center.x - rx, center.x + rx, center.y - ry, center.y + ry)
            }
            Footprint::Disc { center, radius } => (
                center.x - radius,
                center.x + radius,
                center.y - radius,
                center.y + radius,
            ),
        }
    }

    /// True if the footprint lies entirely within the axis-aligned box.
    pub fn inside_box(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let (fx0, fx1, fy0, fy1) = self.aabb();
        fx0 >= x0 && fx1 <= x1 && fy0 >= y0 && fy1 <= y1
    }

    /// Closest point on the footprint boundary-or-interior to `p`.
    fn closest_point(&self, p: Vec2) -> Vec2 {
        match *self {
            Footprint::Rect {
                center,
                half_x,
                half_y,
                ..
            } => {
                let (ex, ey) = self.axes().unwrap();
                let d = p.sub(center);
                let lx = d.dot(ex).clamp(-half_x, half_x);
                let ly = d.dot(ey).clamp(-half_y, half_y);
                center.add(ex.scale(lx)).add(ey.scale(ly))
            }
            Footprint::Disc { center, radius } => {
                let d = p.sub(center);
                let n = d.norm();
                if n <= radius || n == 0.0 {
                    p
                } else {
                    center.add(d.scale(radius / n))
                }
            }
        }
    }

    /// Distance from point `p` to the footprint (0 when inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            p.sub(self.closest_point(p)).norm()
        }
    }
}

/// True when the two footprints penetrate by more than [`CONTACT_TOL`].
/// Touching contact does not count as overlap.
pub fn overlaps(a: &Footprint, b: &Footprint) -> bool {
    match (a, b) {
        (Footprint::Disc { center: ca, radius: ra }, Footprint::Disc { center: cb, radius: rb }) => {
            cb.sub(*ca).norm() - (ra + rb) < -CONTACT_TOL
        }
        (Footprint::Rect { .. }, Footprint::Disc { center, radius })
        | (Footprint::Disc { center, radius }, Footprint::Rect { .. }) => {
            let rect = if matches!(a, Footprint::Rect { .. }) { a } else { b };
            rect.distance_to_point(*center) - radius < -CONTACT_TOL
        }
        (Footprint::Rect { .. }, Footprint::Rect { .. }) => {
            // SAT over both rectangles' edge normals.
            let (ax, ay) = a.axes().unwrap();
            let (bx, by) = b.axes().unwrap();
            for axis in [ax, ay, bx, by] {
                let (a0, a1) = a.span_along(axis, Vec2::new(0.0, 0.0));
                let (b0, b1) = b.span_along(axis, Vec2::new(0.0, 0.0));
                let gap = (b0 - a1).max(a0 - b1);
                if gap >= -CONTACT_TOL {
                    return false;
                }
            }
            true
        }
    }
}

/// Ray `p + t*u` entry parameter into a convex polygon given as corner list,
/// or None when the ray misses. Entry at negative t reports 0 when the origin
/// is inside.
fn ray_convex_entry(p: Vec2, u: Vec2, corners: &[Vec2]) -> Option<f64> {
    let n = corners.len();
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        // Inward normal for counter-clockwise winding.
        let edge = b.sub(a);
        let normal = edge.perp();
        let denom = normal.dot(u);
        let num = normal.dot(a.sub(p));
        if denom.abs() < 1e-15 {
            if num > 0.0 {
                return None; // parallel and outside this half-plane
            }
            continue;
        }
        let t = num / denom;
        if denom > 0.0 {
            t_enter = t_enter.max(t);
        } else {
            t_exit = t_exit.min(t);
        }
        if t_enter > t_exit {
            return None;
        }
    }
    if t_exit < 0.0 {
        return None;
    }
    Some(t_enter.max(0.0))
}

/// Ray `p + t*u` entry into a circle of radius r at c. None when missed.
fn ray_circle_entry(p: Vec2, u: Vec2, c: Vec2, r: f64) -> Option<f64> {
    let m = p.sub(c);
    let b = m.dot(u);
    let cc = m.dot(m) - r * r;
    if cc <= 0.0 {
        return Some(0.0); // starts inside
    }
    let disc = b * b - cc;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t < 0.0 {
        // Ray starts outside but the near intersection is behind; the far one
        // being ahead means the origin would be inside, handled above.
        return None;
    }
    Some(t)
}

/// First parameter t in [0, max_d] at which a disc of radius `inflate`
/// centered on `p + t*u` touches the footprint. `u` must be a unit vector.
pub fn point_sweep_contact(p: Vec2, u: Vec2, max_d: f64, fp: &Footprint, inflate: f64) -> Option<f64> {
    let t = match *fp {
        Footprint::Disc { center, radius } => ray_circle_entry(p, u, center, radius + inflate)?,
        Footprint::Rect {
            center,
            half_x,
            half_y,
            ..
        } => {
            if fp.distance_to_point(p) <= inflate {
                return Some(0.0);
            }
            let (ex, ey) = fp.axes().unwrap();
            let mut best = f64::INFINITY;
            // Rounded rectangle: two expanded slabs plus four corner circles.
            let slab_x = expand_rect_corners(center, ex, ey, half_x + inflate, half_y);
            let slab_y = expand_rect_corners(center, ex, ey, half_x, half_y + inflate);
            for slab in [&slab_x, &slab_y] {
                if let Some(t) = ray_convex_entry(p, u, slab) {
                    best = best.min(t);
                }
            }
            if inflate > 0.0 {
                for corner in fp.corners().unwrap() {
                    if let Some(t) = ray_circle_entry(p, u, corner, inflate) {
                        best = best.min(t);
                    }
                }
            }
            if best.is_finite() {
                best
            } else {
                return None;
            }
        }
    };
    (t <= max_d).then_some(t)
}

fn expand_rect_corners(center: Vec2, ex: Vec2, ey: Vec2, hx: f64, hy: f64) -> [Vec2; 4] {
    let dx = ex.scale(hx);
    let dy = ey.scale(hy);
    // Counter-clockwise winding.
    [
        center.add(dx).add(dy),
        center.sub(dx).add(dy),
        center.sub(dx).sub(dy),
        center.add(dx).sub(dy),
    ]
}

/// First parameter t in [0, max_d] at which footprint `moving`, translated by
/// `t*u`, touches footprint `fixed`. Returns 0 when already in contact.
pub fn sweep_contact(moving: &Footprint, u: Vec2, max_d: f64, fixed: &Footprint) -> Option<f64> {
    match (moving, fixed) {
        (Footprint::Disc { center, radius }, _) => {
            point_sweep_contact(*center, u, max_d, fixed, *radius)
        }
        (Footprint::Rect { .. }, Footprint::Disc { center, radius }) => {
            // Equivalent sweep of the disc center backwards against the rect.
            point_sweep_contact(*center, u.scale(-1.0), max_d, moving, *radius)
        }
        (Footprint::Rect { .. }, Footprint::Rect { .. }) => {
            if overlaps(moving, fixed) {
                return Some(0.0);
            }
            let ca = moving.corners().unwrap();
            let cb = fixed.corners().unwrap();
            // Reorder to counter-clockwise winding for the half-plane test.
            let ccw_a = [ca[0], ca[3], ca[2], ca[1]];
            let ccw_b = [cb[0], cb[3], cb[2], cb[1]];
            let mut best = f64::INFINITY;
            for v in ccw_a {
                if let Some(t) = ray_convex_entry(v, u, &ccw_b) {
                    best = best.min(t);
                }
            }
            let back = u.scale(-1.0);
            for v in ccw_b {
                if let Some(t) = ray_convex_entry(v, back, &ccw_a) {
                    best = best.min(t);
                }
            }
            (best <= max_d).then_some(best)
        }
    }
}

/// Maximum translation distance along `u` keeping the footprint inside the
/// box. Returns 0 when any move along `u` exits immediately, `max_d` when the
/// box never limits within that range.
pub fn max_travel_inside(fp: &Footprint, u: Vec2, max_d: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (fx0, fx1, fy0, fy1) = fp.aabb();
    let mut limit = max_d;
    if u.x > 1e-15 {
        limit = limit.min((x1 - fx1) / u.x);
    } else if u.x < -1e-15 {
        limit = limit.min((x0 - fx0) / u.x);
    }
    if u.y > 1e-15 {
        limit = limit.min((y1 - fy1) / u.y);
    } else if u.y < -1e-15 {
        limit = limit.min((y0 - fy0) / u.y);
    }
    limit.clamp(0.0, max_d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(theta: f64) -> Vec2 {
        Vec2::from_angle(theta)
    }

    #[test]
    fn rect_contains_and_extent() {
        let r = Footprint::rect(Vec2::new(1.0, 2.0), 0.0, 0.02, 0.05);
        assert!(r.contains(Vec2::new(1.019, 2.049)));
        assert!(!r.contains(Vec2::new(1.021, 2.0)));
        assert!((r.extent_along(unit(0.0)) - 0.04).abs() < 1e-12);
        assert!((r.extent_along(unit(std::f64::consts::FRAC_PI_2)) - 0.10).abs() < 1e-12);
    }

    #[test]
    fn rotated_rect_extent_matches_projection() {
        let yaw = 0.7;
        let r = Footprint::rect(Vec2::new(0.0, 0.0), yaw, 0.01, 0.05);
        // Along its own long axis the extent is the full length.
        let ey = unit(yaw).perp();
        assert!((r.extent_along(ey) - 0.10).abs() < 1e-12);
    }

    #[test]
    fn overlap_tolerates_touching() {
        let a = Footprint::rect(Vec2::new(0.0, 0.0), 0.0, 0.02, 0.02);
        let b = Footprint::rect(Vec2::new(0.04, 0.0), 0.0, 0.02, 0.02);
        assert!(!overlaps(&a, &b)); // exact touch
        let c = Footprint::rect(Vec2::new(0.039, 0.0), 0.0, 0.02, 0.02);
        assert!(overlaps(&a, &c));
    }

    #[test]
    fn disc_rect_overlap() {
        let r = Footprint::rect(Vec2::new(0.0, 0.0), 0.0, 0.02, 0.02);
        let inside = Footprint::disc(Vec2::new(0.049, 0.0), 0.03);
        assert!(overlaps(&inside, &r));
        let touching = Footprint::disc(Vec2::new(0.05, 0.0), 0.03);
        assert!(!overlaps(&touching, &r));
        let far = Footprint::disc(Vec2::new(0.06, 0.0), 0.03);
        assert!(!overlaps(&far, &r));
    }

    #[test]
    fn point_sweep_hits_rect_face() {
        let fp = Footprint::rect(Vec2::new(0.10, 0.0), 0.0, 0.02, 0.02);
        let t = point_sweep_contact(Vec2::new(0.0, 0.0), unit(0.0), 1.0, &fp, 0.01).unwrap();
        // Face at x=0.08, inflated by 0.01 -> contact at 0.07.
        assert!((t - 0.07).abs() < 1e-12);
    }

    #[test]
    fn point_sweep_hits_rect_corner_circle() {
        let fp = Footprint::rect(Vec2::new(0.10, 0.10), 0.0, 0.02, 0.02);
        // Aim diagonally at the lower-left corner (0.08, 0.08).
        let u = unit(std::f64::consts::FRAC_PI_4);
        let t = point_sweep_contact(Vec2::new(0.0, 0.0), u, 1.0, &fp, 0.01).unwrap();
        let corner_dist = (0.08f64 * 0.08 + 0.08 * 0.08).sqrt();
        assert!((t - (corner_dist - 0.01)).abs() < 1e-9);
    }

    #[test]
    fn sweep_rect_vs_rect_first_contact() {
        let a = Footprint::rect(Vec2::new(0.0, 0.0), 0.0, 0.02, 0.02);
        let b = Footprint::rect(Vec2::new(0.10, 0.0), 0.0, 0.02, 0.02);
        let t = sweep_contact(&a, unit(0.0), 1.0, &b).unwrap();
        assert!((t - 0.06).abs() < 1e-12);
        assert!(sweep_contact(&a, unit(std::f64::consts::FRAC_PI_2), 1.0, &b).is_none());
    }

    #[test]
    fn sweep_rotated_rect_contact_matches_marching_oracle() {
        let a = Footprint::rect(Vec2::new(0.0, 0.0), 0.3, 0.02, 0.04);
        let b = Footprint::rect(Vec2::new(0.12, 0.03), -0.5, 0.03, 0.01);
        let u = unit(0.1);
        let analytic = sweep_contact(&a, u, 0.5, &b).unwrap();
        // Marching oracle: finest step then bisect.
        let mut lo = 0.0;
        let mut hi = 0.5;
        let steps = 5000;
        for i in 0..=steps {
            let t = 0.5 * i as f64 / steps as f64;
            if overlaps(&a.translated(u.scale(t)), &b) {
                hi = t;
                lo = t - 0.5 / steps as f64;
                break;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if overlaps(&a.translated(u.scale(mid)), &b) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(
            (analytic - lo).abs() < 1e-6,
            "analytic {analytic} vs marched {lo}"
        );
    }

    #[test]
    fn travel_clamps_at_wall() {
        let fp = Footprint::rect(Vec2::new(0.40, 0.15), 0.0, 0.02, 0.02);
        let d = max_travel_inside(&fp, unit(0.0), 1.0, 0.04, 0.44, 0.04, 0.34);
        assert!((d - 0.02).abs() < 1e-12);
        let d_back = max_travel_inside(&fp, unit(std::f64::consts::PI), 1.0, 0.04, 0.44, 0.04, 0.34);
        assert!((d_back - 0.34).abs() < 1e-12);
    }
}
