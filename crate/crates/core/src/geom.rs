//! Small planar geometry helpers shared by the kinematics and environment
//! modules.

use serde::{Deserialize, Serialize};

/// A point (or free vector) in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// A planar pose: position plus heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub position: Point2,
    pub heading: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2 {
            position: Point2::new(x, y),
            heading,
        }
    }
}

/// Axis-aligned rectangle, used for workspace bounds and grid extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn new(min: Point2, max: Point2) -> Self {
        debug_assert!(min.x < max.x && min.y < max.y);
        Aabb { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// True when the whole disc of radius `r` around `p` lies inside the box.
    pub fn contains_disc(&self, p: Point2, r: f64) -> bool {
        p.x - r >= self.min.x
            && p.x + r <= self.max.x
            && p.y - r >= self.min.y
            && p.y + r <= self.max.y
    }
}

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Unit vector at the given heading.
pub fn unit(heading: f64) -> Point2 {
    Point2::new(heading.cos(), heading.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(0.1).abs() - 0.1 < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.3) - 0.3).abs() < 1e-12);
        assert!((wrap_angle(-2.0 * PI - 0.3) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn aabb_disc_containment() {
        let b = Aabb::new(Point2::new(0.0, 0.0), Point2::new(2.0, 1.0));
        assert!(b.contains_disc(Point2::new(1.0, 0.5), 0.4));
        assert!(!b.contains_disc(Point2::new(1.0, 0.5), 0.6));
        assert!(!b.contains_disc(Point2::new(0.1, 0.5), 0.2));
    }
}
