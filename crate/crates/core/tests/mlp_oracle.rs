mod common;

use ngpc_core::encoding::{EncodingConfig, FeatureTable, GridKind};
use ngpc_core::mlp::*;
use ngpc_core::pipeline::{App, Frame, PipelineConfig};
use ngpc_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_f64(m: &MlpModel) -> Vec<Vec<f64>> {
    m.weights().iter().map(|w| w.iter().map(|&v| v as f64).collect()).collect()
}

fn act_fn(a: OutputActivation) -> fn(f64) -> f64 {
    match a {
        OutputActivation::Identity => common::identity,
        OutputActivation::Sigmoid => common::sigmoid,
        OutputActivation::Exp => f64::exp,
    }
}

#[test]
fn forward_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = MlpModel::random(vec![32, 64, 64, 1], OutputActivation::Identity, 4).unwrap();
    let w = to_f64(&m);
    for _ in 0..200 {
        let x: Vec<f32> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = m.forward(&x).unwrap();
        let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let want = common::mlp_f64(m.widths(), &w, common::identity, &xd);
        assert!((got[0] as f64 - want[0]).abs() < 1e-5, "{} vs {}", got[0], want[0]);
    }
}

#[test]
fn batch_of_512_equals_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = MlpModel::random(layer_widths(32, 4, 3), OutputActivation::Sigmoid, 5).unwrap();
    let xs: Vec<Vec<f32>> = (0..512)
        .map(|_| (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let batch = m.forward_batch(&xs).unwrap();
    for (x, y) in xs.iter().zip(&batch) {
        let single = m.forward(x).unwrap();
        assert_eq!(
            y.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            single.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
    assert!(m.forward_batch(&[]).unwrap().is_empty());
}

#[test]
fn batch_reports_bad_element() {
    let m = MlpModel::zeros(vec![2, 4, 1], OutputActivation::Identity).unwrap();
    let xs = vec![vec![0.0, 1.0], vec![0.0, f32::NAN]];
    match m.forward_batch(&xs) {
        Err(Error::Batch { index, .. }) => assert_eq!(index, 1),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let acts = [OutputActivation::Identity, OutputActivation::Sigmoid, OutputActivation::Exp];
    for case in 0..100 {
        let n_in = rng.gen_range(1..=12);
        let hidden = rng.gen_range(0..=3);
        let n_out = rng.gen_range(1..=4);
        let act = acts[case % 3];
        let widths: Vec<usize> = std::iter::once(n_in)
            .chain((0..hidden).map(|_| rng.gen_range(2..=16)))
            .chain(std::iter::once(n_out))
            .collect();
        let m = MlpModel::random(widths.clone(), act, rng.gen()).unwrap();
        let x: Vec<f32> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let up: Vec<f32> = (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = m.backward(&x, &up).unwrap();

        let w = to_f64(&m);
        let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let f = act_fn(act);
        let loss = |w: &[Vec<f64>], x: &[f64]| -> f64 {
            common::mlp_f64(&widths, w, f, x).iter().zip(&up).map(|(y, u)| y * *u as f64).sum()
        };
        let h = 1e-6;
        let mut fd_w = Vec::new();
        for k in 0..w.len() {
            for i in 0..w[k].len() {
                let (mut p, mut q) = (w.clone(), w.clone());
                p[k][i] += h;
                q[k][i] -= h;
                fd_w.push((loss(&p, &xd) - loss(&q, &xd)) / (2.0 * h));
            }
        }
        let fd_x: Vec<f64> = (0..n_in)
            .map(|j| {
                let (mut p, mut q) = (xd.clone(), xd.clone());
                p[j] += h;
                q[j] -= h;
                (loss(&w, &p) - loss(&w, &q)) / (2.0 * h)
            })
            .collect();
        let analytic_w: Vec<f64> = g.weights.iter().flatten().map(|&v| v as f64).collect();
        let analytic_x: Vec<f64> = g.input.iter().map(|&v| v as f64).collect();
        let scale = fd_w.iter().chain(&fd_x).fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in analytic_w.iter().chain(&analytic_x).zip(fd_w.iter().chain(&fd_x)) {
            assert!(
                common::close(*a, *b, 1e-4, 1e-2 * scale),
                "case {case} {widths:?} {act:?}: analytic {a} fd {b}"
            );
        }
    }
}

#[test]
fn sgd_on_one_parameter() {
    let mut m = MlpModel::from_weights(vec![1, 1], vec![vec![0.5]], OutputActivation::Identity).unwrap();
    let cfg = EncodingConfig::new(GridKind::Hash, 2, 1, 1.0, 1, 1, 1).unwrap();
    let mut t = FeatureTable::filled(cfg, 2.0).unwrap();
    // loss = (w * x - y)^2 with x = 2, y = 3: dL/dw = 2 (1 - 3) 2 = -8
    let x = [2.0f32];
    let y = m.forward(&x).unwrap()[0];
    let g = m.backward(&x, &[2.0 * (y - 3.0)]).unwrap();
    assert_eq!(g.weights[0], vec![-8.0]);
    let grads = Gradients { mlp: g, table: vec![1.0] };
    sgd_step(&mut m, &mut t, &grads, 0.25).unwrap();
    assert_eq!(m.weights()[0], vec![2.5]);
    assert_eq!(t.values(), &[1.75]);
}

#[test]
fn zero_input_gives_zero_for_every_preset_network() {
    for app in App::ALL {
        for kind in [GridKind::Hash, GridKind::Dense, GridKind::Tiled] {
            let cfg = PipelineConfig::published(app, kind, Frame::new(1, 1)).unwrap();
            let m = MlpModel::random(cfg.primary_widths(), OutputActivation::Identity, 3).unwrap();
            let y = m.forward(&vec![0.0; m.input_width()]).unwrap();
            assert!(y.iter().all(|&v| v == 0.0));
            if let Some(w) = cfg.color_widths() {
                let c = MlpModel::random(w, OutputActivation::Identity, 4).unwrap();
                assert!(c.forward(&vec![0.0; 32]).unwrap().iter().all(|&v| v == 0.0));
            }
        }
    }
}

proptest! {
    #[test]
    fn single_hidden_layer_is_positively_homogeneous(
        seed in any::<u64>(),
        alpha in 0.01f32..8.0,
        x in prop::collection::vec(-1.0f32..1.0, 8),
    ) {
        let m = MlpModel::random(vec![8, 16, 2], OutputActivation::Identity, seed).unwrap();
        let y = m.forward(&x).unwrap();
        let xs: Vec<f32> = x.iter().map(|v| alpha * v).collect();
        let ys = m.forward(&xs).unwrap();
        for (a, b) in y.iter().zip(&ys) {
            prop_assert!((alpha * a - b).abs() <= 1e-4 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact(seed in any::<u64>(), hidden in 0usize..4) {
        let m = MlpModel::random(layer_widths(16, hidden, 3), OutputActivation::Sigmoid, seed).unwrap();
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        prop_assert_eq!(MlpModel::read_checkpoint(buf.as_slice()).unwrap(), m);
    }
}
