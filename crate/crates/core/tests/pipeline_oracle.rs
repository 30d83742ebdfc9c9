mod common;

use ngpc_core::encoding::{EncodingConfig, GridKind};
use ngpc_core::pipeline::*;
use ngpc_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotated_camera(frame: Frame) -> Camera {
    // rotation of 30 degrees about +y, then placed outside the cube
    let (s, c) = (0.5f32, 0.866_025_4f32);
    Camera {
        pose: [c, 0.0, s, 1.1, 0.0, 1.0, 0.0, 0.45, -s, 0.0, c, 1.4],
        focal: 9.0,
        principal: [frame.width as f32 / 2.0 - 0.3, frame.height as f32 / 2.0 + 0.2],
        near: 0.0,
        far: 10.0,
        scene_min: [0.0; 3],
        scene_size: 1.0,
    }
}

#[test]
fn rays_match_pinhole_oracle() {
    let frame = Frame::new(8, 8);
    let cam = rotated_camera(frame);
    let rays = generate_rays(&cam, frame).unwrap();
    assert_eq!(rays.len(), 64);
    let p: Vec<f64> = cam.pose.iter().map(|&v| v as f64).collect();
    for j in 0..8 {
        for i in 0..8 {
            let x = (i as f64 + 0.5 - cam.principal[0] as f64) / cam.focal as f64;
            let y = -(j as f64 + 0.5 - cam.principal[1] as f64) / cam.focal as f64;
            let local = [x, y, -1.0];
            let mut d = [0.0f64; 3];
            for r in 0..3 {
                d[r] = (0..3).map(|c| p[r * 4 + c] * local[c]).sum();
            }
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let ray = &rays[j * 8 + i];
            for r in 0..3 {
                assert!((ray.direction[r] as f64 - d[r] / n).abs() < 1e-6);
                assert_eq!(ray.origin[r] as f64, p[r * 4 + 3]);
            }
        }
    }
}

#[test]
fn jittered_samples_match_stratified_oracle() {
    let ray = Ray::new([0.2, 0.3, 0.9], [0.0, 0.6, -0.8], 0.05, 1.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let samples = sample_ray(&ray, 8, Some(&mut rng)).unwrap();
    let mut oracle = ChaCha8Rng::seed_from_u64(99);
    for (i, s) in samples.iter().enumerate() {
        let u: f32 = oracle.gen();
        let t = 0.05 + (i as f64 + u as f64) * (1.0 / 8.0);
        assert!((s.t as f64 - t).abs() < 1e-6, "sample {i}");
        assert!((s.delta as f64 - 0.125).abs() < 1e-6);
        assert!(s.t >= 0.05 + i as f32 * 0.125 - 1e-6 && s.t <= 0.05 + (i + 1) as f32 * 0.125 + 1e-6);
    }
    let two = sample_ray::<ChaCha8Rng>(&ray, 2, None).unwrap();
    assert_eq!(two[0].delta, two[1].delta);
}

#[test]
fn sh_on_z_axis_matches_zonal_closed_form() {
    let v = view_direction_encoding([0.0, 0.0, 1.0]);
    let pi = std::f64::consts::PI;
    // only m = 0 terms survive on the pole: sqrt((2l + 1) / (4 pi))
    let zonal = [(0usize, 0), (2, 1), (6, 2), (12, 3)];
    for (i, x) in v.iter().enumerate() {
        let want = zonal
            .iter()
            .find(|(k, _)| *k == i)
            .map(|(_, l)| ((2 * l + 1) as f64 / (4.0 * pi)).sqrt())
            .unwrap_or(0.0);
        assert!((*x as f64 - want).abs() < 1e-6, "component {i}: {x} vs {want}");
    }
}

#[test]
fn sh_basis_is_orthonormal() {
    // Fibonacci sphere quadrature
    let n = 20_000;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut gram = [[0.0f64; SH_WIDTH]; SH_WIDTH];
    for k in 0..n {
        let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        let y = view_direction_encoding([(r * phi.cos()) as f32, (r * phi.sin()) as f32, z as f32]);
        for i in 0..SH_WIDTH {
            for j in 0..SH_WIDTH {
                gram[i][j] += y[i] as f64 * y[j] as f64;
            }
        }
    }
    let w = 4.0 * std::f64::consts::PI / n as f64;
    for i in 0..SH_WIDTH {
        for j in 0..SH_WIDTH {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((gram[i][j] * w - want).abs() < 2e-3, "({i}, {j}) = {}", gram[i][j] * w);
        }
    }
}

#[test]
fn two_sample_composite_matches_hand_expansion() {
    let (s1, s2, d1, d2) = (0.7f64, 2.5f64, 0.3f64, 0.4f64);
    let (c1, c2) = ([0.9, 0.1, 0.4], [0.2, 0.8, 0.6]);
    let a1 = 1.0 - (-s1 * d1).exp();
    let a2 = 1.0 - (-s2 * d2).exp();
    let c = composite_ray(&[d1 as f32, d2 as f32], &[s1 as f32, s2 as f32], &[c1, c2]).unwrap();
    for k in 0..3 {
        let want = a1 * c1[k] as f64 + (1.0 - a1) * a2 * c2[k] as f64;
        assert!((c.color[k] as f64 - want).abs() < 1e-6);
    }
    assert!((c.transmittance[1] as f64 - (1.0 - a1)).abs() < 1e-6);
}

fn small_config(app: App) -> PipelineConfig {
    let enc = EncodingConfig::new(GridKind::Hash, app.input_dim(), 4, 1.6, 2, 1 << 10, 5).unwrap();
    PipelineConfig::new(app, enc, Frame::new(16, 16)).unwrap()
}

/// NeRF query rebuilt from the f64 encoding and MLP oracles.
fn nerf_oracle(p: &Pipeline, pos: [f32; 3], dir: [f32; 3]) -> (f64, [f64; 3]) {
    let cfg = p.table().config();
    let vals: Vec<f64> = p.table().values().iter().map(|&v| v as f64).collect();
    let feats = common::encode_f64(cfg, &vals, &pos);
    let w = |m: &ngpc_core::mlp::MlpModel| -> Vec<Vec<f64>> {
        m.weights().iter().map(|l| l.iter().map(|&v| v as f64).collect()).collect()
    };
    let latent = common::mlp_f64(p.primary().widths(), &w(p.primary()), common::identity, &feats);
    let mut color_in = latent.clone();
    color_in.extend(view_direction_encoding(dir).iter().map(|&v| v as f64));
    let color = p.color().unwrap();
    let rgb = common::mlp_f64(color.widths(), &w(color), common::sigmoid, &color_in);
    (latent[0].exp(), [rgb[0], rgb[1], rgb[2]])
}

#[test]
fn nerf_query_matches_composed_oracle() {
    let p = Pipeline::random(small_config(App::Nerf), 0.5, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let pos = [rng.gen(), rng.gen(), rng.gen()];
        let d: [f32; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let dir = [d[0] / n, d[1] / n, d[2] / n];
        let (sigma, rgb) = p.query_nerf(pos, dir).unwrap();
        let (ws, wrgb) = nerf_oracle(&p, pos, dir);
        assert!(common::close(sigma as f64, ws, 1e-4, 1.0));
        for k in 0..3 {
            assert!((rgb[k] as f64 - wrgb[k]).abs() < 1e-5);
        }
    }
}

#[test]
fn nerf_frame_matches_per_pixel_oracle() {
    let cfg = small_config(App::Nerf);
    let p = Pipeline::random(cfg.clone(), 0.5, 8).unwrap();
    let cam = rotated_camera(cfg.frame);
    let img = render_frame(&p, &cam).unwrap();
    assert_eq!(img.pixels(), 256);
    let rays = generate_rays(&cam, cfg.frame).unwrap();
    let n = cfg.samples_per_ray;
    let mut hit = 0;
    for (i, ray) in rays.iter().enumerate() {
        let px = img.pixel(i as u32 % 16, i as u32 / 16);
        let Some(c) = ray.clip_to_unit_cube() else {
            assert_eq!(px, [0.0; 3]);
            continue;
        };
        hit += 1;
        let (t0, t1) = (c.t_near as f64, c.t_far as f64);
        let delta = (t1 - t0) / n as f64;
        let mut trans = 1.0f64;
        let mut out = [0.0f64; 3];
        for s in 0..n {
            let t = t0 + (s as f64 + 0.5) * delta;
            let pos: [f32; 3] = std::array::from_fn(|k| {
                ((ray.origin[k] as f64 + t * ray.direction[k] as f64) as f32).clamp(0.0, 1.0)
            });
            let (sigma, rgb) = nerf_oracle(&p, pos, ray.direction);
            let alpha = 1.0 - (-sigma * delta).exp();
            for k in 0..3 {
                out[k] += trans * alpha * rgb[k];
            }
            trans *= 1.0 - alpha;
        }
        for k in 0..3 {
            assert!((px[k] as f64 - out[k]).abs() < 1e-4, "pixel {i}: {:?} vs {out:?}", px);
        }
    }
    assert!(hit > 100);
}

#[test]
fn gia_frame_matches_queries() {
    let cfg = small_config(App::Gia);
    let p = Pipeline::random(cfg.clone(), 0.5, 2).unwrap();
    let cam = Camera::looking_down_z([0.0; 3], 1.0, cfg.frame);
    let img = render_frame(&p, &cam).unwrap();
    for y in 0..16 {
        for x in 0..16 {
            let uv = [(x as f32 + 0.5) / 16.0, (y as f32 + 0.5) / 16.0];
            assert_eq!(img.pixel(x, y), p.query_gia(uv).unwrap());
        }
    }
}

#[test]
fn single_pixel_frame_is_one_composited_ray() {
    let mut cfg = small_config(App::Nvr);
    cfg.frame = Frame::new(1, 1);
    let p = Pipeline::random(cfg.clone(), 0.5, 4).unwrap();
    let cam = Camera::looking_down_z([0.5, 0.5, 2.0], 1.0, cfg.frame);
    let img = render_frame(&p, &cam).unwrap();
    let ray = generate_rays(&cam, cfg.frame).unwrap()[0];
    assert_eq!(img.pixel(0, 0), p.render_ray(&ray, None).unwrap());
}

#[test]
fn render_is_a_pure_function_of_seed() {
    let mut cfg = small_config(App::Nerf);
    cfg.jitter_seed = Some(5);
    let p = Pipeline::random(cfg.clone(), 0.5, 6).unwrap();
    let cam = rotated_camera(cfg.frame);
    let a = render_frame(&p, &cam).unwrap();
    let b = render_frame(&p, &cam).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.jitter_seed = Some(6);
    let (c, t, m, col) = p.into_parts();
    let _ = c;
    let q = Pipeline::from_parts(other, t, m, col).unwrap();
    assert_ne!(render_frame(&q, &cam).unwrap(), a);
}

#[test]
fn degenerate_camera_is_config_error() {
    let cfg = small_config(App::Nerf);
    let p = Pipeline::zeros(cfg.clone()).unwrap();
    let mut cam = rotated_camera(cfg.frame);
    cam.pose[5] = 0.0;
    assert!(matches!(render_frame(&p, &cam), Err(Error::Config(_))));
}

#[test]
fn gia_fits_a_constant_image() {
    let target = Image::from_fn(16, 16, |_, _| [0.25, 0.5, 0.8]);
    let enc = EncodingConfig::new(GridKind::Hash, 2, 16, 1.25992, 2, 1 << 14, 16).unwrap();
    let cfg = PipelineConfig::new(App::Gia, enc, Frame::new(1, 1)).unwrap();
    let run = train_gia(&target, cfg, 500, DEFAULT_GIA_LEARNING_RATE, 3).unwrap();
    assert!(run.final_psnr > 40.0, "final PSNR {}", run.final_psnr);
    // PSNR > 40 dB is MSE < 1e-4
    assert!(10f64.powf(-run.final_psnr / 10.0) < 1e-4);
}

#[test]
fn gia_smoothed_psnr_does_not_decrease() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let target = Image::from_fn(16, 16, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
    let enc = EncodingConfig::new(GridKind::Hash, 2, 16, 1.25992, 2, 1 << 12, 8).unwrap();
    let cfg = PipelineConfig::new(App::Gia, enc, Frame::new(1, 1)).unwrap();
    let run = train_gia(&target, cfg, 400, DEFAULT_GIA_LEARNING_RATE, 2).unwrap();
    let window = 50;
    let smooth: Vec<f64> = run
        .psnr_curve
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    // full-batch descent at this step size oscillates slightly; the moving
    // average may not fall by more than 0.1 dB between neighbours
    for (i, w) in smooth.windows(2).enumerate() {
        assert!(w[1] >= w[0] - 0.1, "smoothed PSNR fell at {i}: {} -> {}", w[0], w[1]);
    }
    assert!(run.final_psnr > run.psnr_curve[0]);
}

proptest! {
    #[test]
    fn transmittance_is_monotone_and_energy_bounded(
        samples in prop::collection::vec((0.0f32..50.0, 0.001f32..1.0, [0.0f32..1.0, 0.0f32..1.0, 0.0f32..1.0]), 1..32)
    ) {
        let sigmas: Vec<f32> = samples.iter().map(|s| s.0).collect();
        let deltas: Vec<f32> = samples.iter().map(|s| s.1).collect();
        let colors: Vec<[f32; 3]> = samples.iter().map(|s| s.2).collect();
        let c = composite_ray(&deltas, &sigmas, &colors).unwrap();
        prop_assert!(c.transmittance.iter().all(|t| (0.0..=1.0).contains(t)));
        prop_assert!(c.transmittance.windows(2).all(|w| w[1] <= w[0]));
        let total: f32 = c.weights.iter().sum();
        prop_assert!(total <= 1.0 + 1e-5);
        for k in 0..3 {
            let max = colors.iter().map(|x| x[k]).fold(0.0f32, f32::max);
            prop_assert!(c.color[k] >= 0.0 && c.color[k] <= max + 1e-5);
        }
    }

    #[test]
    fn nerf_density_is_view_invariant(seed in any::<u64>(), pos in [0.0f32..=1.0, 0.0f32..=1.0, 0.0f32..=1.0], theta in 0.0f32..3.14, phi in 0.0f32..6.28) {
        let p = Pipeline::random(small_config(App::Nerf), 0.5, seed).unwrap();
        let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let (a, _) = p.query_nerf(pos, dir).unwrap();
        let (b, _) = p.query_nerf(pos, [0.0, 0.0, 1.0]).unwrap();
        prop_assert_eq!(a, b);
    }
}
