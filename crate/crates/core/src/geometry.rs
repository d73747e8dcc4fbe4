//! Small planar helpers shared by every module.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// The rotation `E = [[0, 1], [-1, 0]]` that maps a normal to the level-set
/// tangent.
pub fn rot_e() -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, 0.0)
}

/// `E * v` without building the matrix.
#[inline]
pub fn apply_e(v: &Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// Unit heading vector `m(alpha) = (cos alpha, sin alpha)`.
#[inline]
pub fn heading(alpha: f64) -> Vec2 {
    let (s, c) = alpha.sin_cos();
    Vec2::new(c, s)
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean - radius, mean + radius]
}

/// Axis-aligned rectangle in workspace coordinates (Px).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub const WORKSPACE_WIDTH: f64 = 1280.0;
    pub const WORKSPACE_HEIGHT: f64 = 720.0;

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    /// The 1280x720 Px camera workspace.
    pub fn workspace() -> Self {
        Self::new(0.0, Self::WORKSPACE_WIDTH, 0.0, Self::WORKSPACE_HEIGHT)
    }

    /// The workspace scaled by two about its center.
    pub fn padded_workspace() -> Self {
        Self::workspace().scaled(2.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Self::new(c.x - hw, c.x + hw, c.y - hh, c.y + hh)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min
    }

    /// Cell-centred `nx * ny` grid, row-major in `y`.
    pub fn cell_centers(&self, nx: usize, ny: usize) -> Vec<Vec2> {
        let dx = self.width() / nx as f64;
        let dy = self.height() / ny as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Vec2::new(
                    self.x_min + (i as f64 + 0.5) * dx,
                    self.y_min + (j as f64 + 0.5) * dy,
                ));
            }
        }
        out
    }

    /// Node grid including the boundary, `nx * ny` points (both >= 2).
    pub fn nodes(&self, nx: usize, ny: usize) -> Vec<Vec2> {
        let dx = self.width() / (nx - 1) as f64;
        let dy = self.height() / (ny - 1) as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push(Vec2::new(self.x_min + i as f64 * dx, self.y_min + j as f64 * dy));
            }
        }
        out
    }
}

impl Default for Region {
    fn default() -> Self {
        Self::padded_workspace()
    }
}
