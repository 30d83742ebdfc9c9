use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Output image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
}

impl Frame {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Normalized center of pixel `(x, y)` in `[0, 1]^2`.
    pub fn pixel_center(&self, x: u32, y: u32) -> [f32; 2] {
        [
            (x as f32 + 0.5) / self.width as f32,
            (y as f32 + 0.5) / self.height as f32,
        ]
    }
}

/// Pinhole camera looking down its local `-z` axis, plus the cubic scene
/// box that maps world space onto the unit cube the encodings expect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    /// Camera-to-world `[R | t]`, 3x4 row-major.
    pub pose: [f32; 12],
    pub focal: f32,
    /// Principal point in pixels.
    pub principal: [f32; 2],
    #[serde(default = "default_near")]
    pub near: f32,
    #[serde(default = "default_far")]
    pub far: f32,
    /// Minimum corner of the scene cube in world units.
    #[serde(default)]
    pub scene_min: [f32; 3],
    /// Edge length of the scene cube.
    #[serde(default = "default_scene_size")]
    pub scene_size: f32,
}

fn default_near() -> f32 {
    0.0
}

fn default_far() -> f32 {
    1.0e3
}

fn default_scene_size() -> f32 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f32; 3],
    pub direction: [f32; 3],
    pub t_near: f32,
    pub t_far: f32,
}

impl Ray {
    pub fn new(origin: [f32; 3], direction: [f32; 3], t_near: f32, t_far: f32) -> Result<Self> {
        let norm = dot(direction, direction).sqrt();
        if !((norm - 1.0).abs() <= 1e-6) {
            return Err(Error::domain(format!("ray direction has norm {norm}")));
        }
        if !(t_near < t_far) || origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("empty ray interval [{t_near}, {t_far}]")));
        }
        Ok(Self {
            origin,
            direction,
            t_near,
            t_far,
        })
    }

    pub fn at(&self, t: f32) -> [f32; 3] {
        [
            self.origin[0] + t * self.direction[0],
            self.origin[1] + t * self.direction[1],
            self.origin[2] + t * self.direction[2],
        ]
    }

    /// Restricts the interval to the part inside `[0, 1]^3`, or `None` when
    /// the ray misses the cube.
    pub fn clip_to_unit_cube(&self) -> Option<Ray> {
        let (mut t0, mut t1) = (self.t_near, self.t_far);
        for i in 0..3 {
            let (o, d) = (self.origin[i], self.direction[i]);
            if d == 0.0 {
                if !(0.0..=1.0).contains(&o) {
                    return None;
                }
                continue;
            }
            let (mut a, mut b) = ((0.0 - o) / d, (1.0 - o) / d);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        (t0 < t1).then_some(Ray {
            t_near: t0,
            t_far: t1,
            ..*self
        })
    }
}

pub(crate) fn dot(a: [f32; 3], b: [f32; 3]) -> f32 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Camera {
    /// Camera at `origin` looking along `-z` with an identity rotation.
    pub fn looking_down_z(origin: [f32; 3], focal: f32, frame: Frame) -> Self {
        Self {
            pose: [
                1.0, 0.0, 0.0, origin[0], //
                0.0, 1.0, 0.0, origin[1], //
                0.0, 0.0, 1.0, origin[2],
            ],
            focal,
            principal: [frame.width as f32 / 2.0, frame.height as f32 / 2.0],
            near: default_near(),
            far: default_far(),
            scene_min: [0.0; 3],
            scene_size: 1.0,
        }
    }

    fn rotation_column(&self, c: usize) -> [f32; 3] {
        [self.pose[c], self.pose[4 + c], self.pose[8 + c]]
    }

    pub fn origin(&self) -> [f32; 3] {
        [self.pose[3], self.pose[7], self.pose[11]]
    }

    pub fn validate(&self) -> Result<()> {
        if self.pose.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("camera pose has non-finite entries"));
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(self.rotation_column(i), self.rotation_column(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                if (d - expected).abs() > 1e-3 {
                    return Err(Error::config("camera rotation is not orthonormal"));
                }
            }
        }
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(Error::config(format!("focal length {} must be positive", self.focal)));
        }
        if self.principal.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("principal point must be finite"));
        }
        if !(self.near >= 0.0 && self.near < self.far) {
            return Err(Error::config(format!(
                "near/far planes [{}, {}] are invalid",
                self.near, self.far
            )));
        }
        if !(self.scene_size.is_finite() && self.scene_size > 0.0)
            || self.scene_min.iter().any(|v| !v.is_finite())
        {
            return Err(Error::config("scene cube must be finite with positive size"));
        }
        Ok(())
    }

    /// Maps a world-space ray into unit-cube coordinates. The cube scaling is
    /// uniform, so directions stay unit length and `t` scales with it.
    pub fn to_unit_cube(&self, ray: &Ray) -> Ray {
        let s = self.scene_size;
        let o = ray.origin;
        Ray {
            origin: [
                (o[0] - self.scene_min[0]) / s,
                (o[1] - self.scene_min[1]) / s,
                (o[2] - self.scene_min[2]) / s,
            ],
            direction: ray.direction,
            t_near: ray.t_near / s,
            t_far: ray.t_far / s,
        }
    }
}

/// One ray per pixel through the pixel center, row-major from the top-left.
pub fn generate_rays(camera: &Camera, frame: Frame) -> Result<Vec<Ray>> {
    camera.validate()?;
    let right = camera.rotation_column(0);
    let up = camera.rotation_column(1);
    let back = camera.rotation_column(2);
    let origin = camera.origin();
    let mut rays = Vec::with_capacity(frame.pixels());
    for y in 0..frame.height {
        for x in 0..frame.width {
            let cx = (x as f32 + 0.5 - camera.principal[0]) / camera.focal;
            let cy = -(y as f32 + 0.5 - camera.principal[1]) / camera.focal;
            let d = [
                cx * right[0] + cy * up[0] - back[0],
                cx * right[1] + cy * up[1] - back[1],
                cx * right[2] + cy * up[2] - back[2],
            ];
            let n = dot(d, d).sqrt();
            let dir = [d[0] / n, d[1] / n, d[2] / n];
            rays.push(Ray::new(origin, dir, camera.near, camera.far)?);
        }
    }
    Ok(rays)
}
