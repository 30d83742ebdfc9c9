//! Real spherical harmonics up to degree 3 for view-direction encoding.

/// Width of the view-direction encoding.
pub const SH_WIDTH: usize = 16;

/// The 16 real spherical-harmonic basis values (degrees 0..=3, ordered by
/// degree then order `m = -l..=l`) of a unit direction.
pub fn view_direction_encoding(dir: [f32; 3]) -> [f32; SH_WIDTH] {
    let [x, y, z] = dir;
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    [
        0.282_094_79,
        -0.488_602_51 * y,
        0.488_602_51 * z,
        -0.488_602_51 * x,
        1.092_548_4 * xy,
        -1.092_548_4 * yz,
        0.946_174_7 * zz - 0.315_391_57,
        -1.092_548_4 * xz,
        0.546_274_2 * (xx - yy),
        0.590_043_6 * y * (-3.0 * xx + yy),
        2.890_611_4 * xy * z,
        0.457_045_8 * y * (1.0 - 5.0 * zz),
        0.373_176_33 * z * (5.0 * zz - 3.0),
        0.457_045_8 * x * (1.0 - 5.0 * zz),
        1.445_305_7 * z * (xx - yy),
        0.590_043_6 * x * (-xx + 3.0 * yy),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_term() {
        for d in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]] {
            assert_eq!(view_direction_encoding(d)[0], 0.282_094_79);
        }
    }

    #[test]
    fn odd_degrees_flip_under_antipode() {
        let d = [0.48, -0.6, 0.64];
        let a = view_direction_encoding(d);
        let b = view_direction_encoding([-d[0], -d[1], -d[2]]);
        for i in 0..SH_WIDTH {
            let odd = (1..4).contains(&i) || i >= 9;
            let expected = if odd { -a[i] } else { a[i] };
            assert!((b[i] - expected).abs() < 1e-6, "component {i}");
        }
    }
}
