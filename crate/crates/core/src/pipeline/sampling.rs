use rand::Rng;

use super::camera::Ray;
use crate::{Error, Result};

/// One query location along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    /// Position in the unit scene cube.
    pub position: [f32; 3],
    /// Unit view direction (the ray direction).
    pub direction: [f32; 3],
    /// Ray parameter of the sample.
    pub t: f32,
    /// Length of the stratum the sample stands for.
    pub delta: f32,
}

/// Splits `[t_near, t_far]` into `n` equal strata and places one sample in
/// each: at the stratum midpoint, or uniformly inside it when `jitter` is
/// given. Positions are clamped into `[0, 1]^3` against rounding.
pub fn sample_ray<R: Rng>(ray: &Ray, n: usize, jitter: Option<&mut R>) -> Result<Vec<SamplePoint>> {
    if n == 0 {
        return Err(Error::config("samples per ray must be at least 1"));
    }
    if !(ray.t_near < ray.t_far) {
        return Err(Error::domain("empty ray interval"));
    }
    let span = ray.t_far - ray.t_near;
    let delta = span / n as f32;
    let mut jitter = jitter;
    let samples = (0..n)
        .map(|i| {
            let u = match jitter.as_deref_mut() {
                Some(rng) => rng.gen::<f32>(),
                None => 0.5,
            };
            let t = ray.t_near + (i as f32 + u) * delta;
            let p = ray.at(t);
            SamplePoint {
                position: p.map(|v| v.clamp(0.0, 1.0)),
                direction: ray.direction,
                t,
                delta,
            }
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn ray() -> Ray {
        Ray::new([0.5, 0.5, 1.0], [0.0, 0.0, -1.0], 0.0, 1.0).unwrap()
    }

    #[test]
    fn single_sample_is_midpoint() {
        let s = sample_ray::<ChaCha8Rng>(&ray(), 1, None).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].t, 0.5);
        assert_eq!(s[0].delta, 1.0);
        assert_eq!(s[0].position, [0.5, 0.5, 0.5]);
    }

    #[test]
    fn deltas_cover_interval() {
        let r = Ray::new([0.1, 0.2, 0.3], [0.0, 1.0, 0.0], 0.1, 0.7).unwrap();
        for n in [2, 3, 8, 13] {
            let s = sample_ray::<ChaCha8Rng>(&r, n, None).unwrap();
            let total: f32 = s.iter().map(|p| p.delta).sum();
            assert!((total - 0.6).abs() < 1e-6);
            assert!(s.windows(2).all(|w| w[0].t < w[1].t));
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample_ray::<ChaCha8Rng>(&ray(), 0, None).is_err());
    }
}
