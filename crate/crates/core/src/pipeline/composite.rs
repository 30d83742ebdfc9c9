use crate::{Error, Result};

/// Result of emission-absorption compositing along one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub color: [f32; 3],
    /// Transmittance in front of each sample, `T_i`.
    pub transmittance: Vec<f32>,
    /// Per-sample contribution `T_i * alpha_i`.
    pub weights: Vec<f32>,
}

/// `alpha_i = 1 - exp(-sigma_i * delta_i)`, `T_i = prod_{j<i} (1 - alpha_j)`,
/// `C = sum_i T_i alpha_i c_i`.
pub fn composite_ray(deltas: &[f32], sigmas: &[f32], colors: &[[f32; 3]]) -> Result<Composite> {
    if deltas.len() != sigmas.len() || deltas.len() != colors.len() {
        return Err(Error::shape(format!(
            "{} deltas, {} densities, {} colors",
            deltas.len(),
            sigmas.len(),
            colors.len()
        )));
    }
    if sigmas.iter().any(|s| s.is_nan() || *s < 0.0) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::domain("densities must be non-negative and deltas positive"));
    }
    let n = sigmas.len();
    let mut color = [0.0f32; 3];
    let mut transmittance = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut t = 1.0f32;
    for i in 0..n {
        let alpha = 1.0 - (-sigmas[i] * deltas[i]).exp();
        let w = t * alpha;
        transmittance.push(t);
        weights.push(w);
        for (c, v) in color.iter_mut().zip(colors[i]) {
            *c += w * v;
        }
        t *= 1.0 - alpha;
    }
    Ok(Composite {
        color,
        transmittance,
        weights,
    })
}
