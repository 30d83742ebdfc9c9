use super::{App, Frame, Image, Pipeline, PipelineConfig, TABLE_INIT_SCALE};
use crate::encoding::{encode_backward_into, encode_point};
use crate::mlp::{sgd_step, Gradients, MlpGrads};
use crate::{Error, Result};

/// Plain-SGD step size that fits both constant and high-frequency targets.
pub const DEFAULT_GIA_LEARNING_RATE: f32 = 10.0;

/// Outcome of fitting a GIA pipeline to one image.
#[derive(Debug, Clone)]
pub struct GiaTraining {
    pub pipeline: Pipeline,
    /// PSNR before each step, then once more after the last step.
    pub psnr_curve: Vec<f64>,
    pub final_psnr: f64,
}

/// Peak signal-to-noise ratio for signals in `[0, 1]`, in dB.
pub fn psnr(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

/// Full-batch gradient descent on the per-channel mean squared error between
/// the network output at every pixel center and `target`.
///
/// The frame of `config` is replaced by the target size. Parameters start
/// from [`Pipeline::random`] with `seed`.
pub fn train_gia(
    target: &Image,
    mut config: PipelineConfig,
    steps: usize,
    learning_rate: f32,
    seed: u64,
) -> Result<GiaTraining> {
    if target.is_empty() {
        return Err(Error::config("target image is empty"));
    }
    if config.app != App::Gia {
        return Err(Error::config("train_gia needs a GIA pipeline config"));
    }
    if !learning_rate.is_finite() || learning_rate < 0.0 {
        return Err(Error::domain("learning rate must be finite and non-negative"));
    }
    config.frame = Frame::new(target.width(), target.height());
    let pipeline = Pipeline::random(config, TABLE_INIT_SCALE, seed)?;
    let (config, mut table, mut mlp, _) = pipeline.into_parts();

    let frame = config.frame;
    let batch = frame.pixels();
    let positions: Vec<[f32; 2]> = (0..batch)
        .map(|i| {
            let (x, y) = ((i % frame.width as usize) as u32, (i / frame.width as usize) as u32);
            frame.pixel_center(x, y)
        })
        .collect();
    // feature-major target: channel c of pixel b at c * batch + b
    let mut target_fm = vec![0.0f32; 3 * batch];
    for (b, px) in target.data().chunks_exact(3).enumerate() {
        for c in 0..3 {
            target_fm[c * batch + b] = px[c];
        }
    }
    let width = config.encoding.output_width();
    let scale = 2.0 / (3 * batch) as f32;

    let mut curve = Vec::with_capacity(steps + 1);
    let mut features = vec![0.0f32; width * batch];
    let mut upstream_col = vec![0.0f32; width];

    let encode_all = |table: &_, features: &mut [f32]| -> Result<()> {
        for (b, p) in positions.iter().enumerate() {
            let e = encode_point(p, table)?;
            for (j, v) in e.as_slice().iter().enumerate() {
                features[j * batch + b] = *v;
            }
        }
        Ok(())
    };
    let mse_of = |out: &[f32]| -> f64 {
        let sum: f64 = out
            .iter()
            .zip(&target_fm)
            .map(|(y, t)| ((y - t) as f64).powi(2))
            .sum();
        sum / (3 * batch) as f64
    };

    for _ in 0..steps {
        encode_all(&table, &mut features)?;
        let trace = mlp.trace_batch(&features, batch);
        let out = trace.output();
        curve.push(psnr(mse_of(out)));
        let upstream: Vec<f32> = out.iter().zip(&target_fm).map(|(y, t)| scale * (y - t)).collect();

        let mut weight_grads: Vec<Vec<f32>> = mlp.weights().iter().map(|w| vec![0.0; w.len()]).collect();
        let input_grad = mlp.backward_batch(&trace, &upstream, &mut weight_grads);
        let mut table_grad = vec![0.0f32; table.values().len()];
        for (b, p) in positions.iter().enumerate() {
            for j in 0..width {
                upstream_col[j] = input_grad[j * batch + b];
            }
            encode_backward_into(p, &table, &upstream_col, &mut table_grad)?;
        }
        let grads = Gradients {
            mlp: MlpGrads {
                weights: weight_grads,
                input: Vec::new(),
            },
            table: table_grad,
        };
        sgd_step(&mut mlp, &mut table, &grads, learning_rate)?;
    }

    encode_all(&table, &mut features)?;
    let final_psnr = psnr(mse_of(mlp.trace_batch(&features, batch).output()));
    curve.push(final_psnr);
    let pipeline = Pipeline::from_parts(config, table, mlp, None)?;
    Ok(GiaTraining {
        pipeline,
        psnr_curve: curve,
        final_psnr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{EncodingConfig, GridKind};

    fn cfg() -> PipelineConfig {
        let enc = EncodingConfig::new(GridKind::Hash, 2, 4, 1.5, 2, 1 << 8, 4).unwrap();
        PipelineConfig::new(App::Gia, enc, Frame::new(1, 1)).unwrap()
    }

    #[test]
    fn empty_target_is_config_error() {
        let img = Image::new(0, 0, Vec::new()).unwrap();
        assert!(matches!(train_gia(&img, cfg(), 1, 0.1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_learning_rate_is_flat() {
        let img = Image::from_fn(4, 4, |x, y| [x as f32 / 4.0, y as f32 / 4.0, 0.5]);
        let run = train_gia(&img, cfg(), 5, 0.0, 1).unwrap();
        assert_eq!(run.psnr_curve.len(), 6);
        assert!(run.psnr_curve.iter().all(|&p| p == run.psnr_curve[0]));
    }

    #[test]
    fn psnr_of_known_mse() {
        assert!((psnr(0.01) - 20.0).abs() < 1e-12);
        assert_eq!(psnr(0.0), f64::INFINITY);
    }
}
