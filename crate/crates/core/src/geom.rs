//! Planar vectors and lattice bases.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Basis `(u, v)` of a planar lattice `Zu + Zv`, positively oriented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub u: Vec2,
    pub v: Vec2,
}

impl LatticeBasis {
    /// Builds a basis, flipping `v` if needed so that `cross(u, v) > 0`.
    pub fn new(u: Vec2, v: Vec2) -> Result<Self> {
        for c in [u.x, u.y, v.x, v.y] {
            check_finite("basis", c)?;
        }
        let cr = u.cross(v);
        let scale = u.norm_sq().max(v.norm_sq());
        if cr.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::DegenerateBasis(cr));
        }
        Ok(if cr > 0.0 {
            LatticeBasis { u, v }
        } else {
            LatticeBasis { u, v: -v }
        })
    }

    /// `Z^2`.
    pub fn square() -> Self {
        LatticeBasis { u: Vec2::new(1.0, 0.0), v: Vec2::new(0.0, 1.0) }
    }

    /// Triangular lattice with unit covolume.
    pub fn triangular() -> Self {
        let c = (2.0 / 3f64.sqrt()).sqrt();
        LatticeBasis {
            u: Vec2::new(c, 0.0),
            v: Vec2::new(0.5 * c, 0.5 * 3f64.sqrt() * c),
        }
    }

    /// Basis `(1, 0), (a, b)` rescaled to the requested covolume.
    pub fn from_modulus(a: f64, b: f64, covolume: f64) -> Self {
        let s = (covolume / b).sqrt();
        LatticeBasis { u: Vec2::new(s, 0.0), v: Vec2::new(s * a, s * b) }
    }

    pub fn covolume(&self) -> f64 {
        self.u.cross(self.v)
    }

    pub fn scaled(&self, s: f64) -> Self {
        LatticeBasis { u: s * self.u, v: s * self.v }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        LatticeBasis { u: self.u.rotate(angle), v: self.v.rotate(angle) }
    }

    /// Rescaled copy with covolume 1.
    pub fn unimodular(&self) -> Self {
        self.scaled(1.0 / self.covolume().sqrt())
    }

    /// Dual lattice `{q : p.q in Z for all p}`, positively oriented.
    pub fn dual(&self) -> Self {
        let d = self.covolume();
        // Rows of the inverse transpose.
        let du = Vec2::new(self.v.y / d, -self.v.x / d);
        let dv = Vec2::new(-self.u.y / d, self.u.x / d);
        LatticeBasis { u: du, v: dv }
    }

    /// Lagrange-Gauss reduction: `|u| <= |v|` and `|u.v| <= |u|^2 / 2`,
    /// orientation preserved.
    pub fn reduced(&self) -> Self {
        let (mut u, mut v) = (self.u, self.v);
        for _ in 0..10_000 {
            if v.norm_sq() < u.norm_sq() {
                // (u, v) -> (v, -u) keeps orientation
                let t = u;
                u = v;
                v = -t;
            }
            let k = (u.dot(v) / u.norm_sq()).round();
            if k == 0.0 {
                break;
            }
            v = v - k * u;
        }
        if v.norm_sq() < u.norm_sq() {
            let t = u;
            u = v;
            v = -t;
        }
        LatticeBasis { u, v }
    }

    pub fn point(&self, i: f64, j: f64) -> Vec2 {
        i * self.u + j * self.v
    }

    /// Fractional coordinates of `x` in this basis.
    pub fn fractional(&self, x: Vec2) -> (f64, f64) {
        let d = self.covolume();
        (x.cross(self.v) / d, self.u.cross(x) / d)
    }

    pub fn shortest_vector_length(&self) -> f64 {
        self.reduced().u.norm()
    }

    /// Angle of `u` measured from the positive x-axis.
    pub fn angle(&self) -> f64 {
        self.u.y.atan2(self.u.x)
    }
}

/// Covolume that makes a lattice admissible at density 1.
pub const UNIT_DENSITY_COVOLUME: f64 = 2.0 * PI;
