use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ngpc_core::encoding::{encode_batch, FeatureTable};
use ngpc_core::mlp::MlpModel;
use ngpc_core::pipeline::{render_frame, train_gia, Image, Pipeline};
use ngpc_perf::{area_power, bandwidth_model, mean_speedups, sweep, to_csv, PerfReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{self, EncodeConfig, PerfSweepConfig, RenderConfig, TrainGiaConfig};
use crate::verify::{self, VerifyLevel};

const ENCODE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Encode { points: Option<PathBuf> },
    Render,
    TrainGia,
    PerfSweep,
    Verify { level: VerifyLevel },
}

/// One CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config: Option<PathBuf>,
    /// Output directory.
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub paper_defaults: bool,
    pub no_timestamp: bool,
}

impl RunSpec {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config: None,
            out: out.into(),
            seed: 0,
            threads: None,
            paper_defaults: false,
            no_timestamp: false,
        }
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
    pub success: bool,
}

pub fn run(spec: &RunSpec) -> Result<Outcome> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    pool.install(|| dispatch(spec))
}

fn dispatch(spec: &RunSpec) -> Result<Outcome> {
    if let Command::Verify { level } = spec.command {
        return Ok(verify_outcome(level, spec.seed));
    }
    std::fs::create_dir_all(&spec.out).with_context(|| format!("creating {}", spec.out.display()))?;
    let cfg_path = spec.config.as_deref();
    match &spec.command {
        Command::Encode { points } => {
            let cfg = config::load::<EncodeConfig>(cfg_path)?.materialize(spec.paper_defaults)?;
            cmd_encode(&cfg, points.as_deref(), spec)
        }
        Command::Render => {
            let cfg = config::load::<RenderConfig>(cfg_path)?.materialize(spec.paper_defaults)?;
            cmd_render(&cfg, spec)
        }
        Command::TrainGia => {
            let cfg = config::load::<TrainGiaConfig>(cfg_path)?.materialize(spec.paper_defaults)?;
            cmd_train_gia(&cfg, spec)
        }
        Command::PerfSweep => {
            let cfg = config::load::<PerfSweepConfig>(cfg_path)?.materialize(spec.paper_defaults)?;
            cmd_perf_sweep(&cfg, spec)
        }
        Command::Verify { .. } => unreachable!(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `#`-prefixed provenance lines: command, optional timestamp, config.
fn header(command: &str, spec: &RunSpec, config_toml: &str) -> String {
    let mut h = format!("# ngpc {command}\n");
    if !spec.no_timestamp {
        h.push_str(&format!("# generated: {}\n", chrono::Utc::now().to_rfc3339()));
    }
    h.push_str(&format!("# seed: {}\n", spec.seed));
    h.push_str("# config:\n");
    for line in config_toml.lines() {
        if line.is_empty() {
            h.push_str("#\n");
        } else {
            h.push_str(&format!("#   {line}\n"));
        }
    }
    h
}

pub fn cmd_encode(cfg: &EncodeConfig, points: Option<&Path>, spec: &RunSpec) -> Result<Outcome> {
    let encoding = cfg.encoding.clone().expect("materialized");
    let table = match &cfg.table {
        Some(p) => {
            let t = FeatureTable::read_from(BufReader::new(File::open(p)?))
                .with_context(|| format!("loading {}", p.display()))?;
            if t.config() != &encoding {
                bail!("table {} does not match the configured encoding", p.display());
            }
            t
        }
        None => FeatureTable::random(encoding.clone(), cfg.table_scale, spec.seed)?,
    };
    let src = points
        .or(cfg.points.as_deref())
        .context("encode needs a points file (--points or `points` in the config)")?;
    let pts = crate::features::read_points(BufReader::new(File::open(src)?), encoding.dim)
        .with_context(|| format!("reading {}", src.display()))?;

    let path = spec.out.join("features.ngef");
    let mut w = crate::features::FeatureWriter::new(
        create(&path)?,
        u32::try_from(pts.len()).context("too many points")?,
        encoding.dim as u32,
        encoding.output_width() as u32,
    )?;
    for chunk in pts.chunks(ENCODE_CHUNK) {
        for f in encode_batch(chunk, &table)? {
            w.write_row(f.as_slice())?;
        }
    }
    w.finish()?;
    let cfg_path = spec.out.join("encode.toml");
    write_text(&cfg_path, &config::to_toml(cfg)?)?;
    Ok(Outcome {
        lines: vec![format!("encoded {} points -> {}", pts.len(), path.display())],
        files: vec![path, cfg_path],
        success: true,
    })
}

fn load_mlp(path: &Path) -> Result<MlpModel> {
    MlpModel::read_checkpoint(BufReader::new(File::open(path)?)).with_context(|| format!("loading {}", path.display()))
}

pub fn cmd_render(cfg: &RenderConfig, spec: &RunSpec) -> Result<Outcome> {
    let pc = cfg.pipeline.clone().expect("materialized");
    let camera = cfg.camera.clone().expect("materialized");
    let pipeline = if cfg.table.is_some() || cfg.primary.is_some() {
        let (Some(t), Some(m)) = (&cfg.table, &cfg.primary) else {
            bail!("trained parameters need both `table` and `primary`");
        };
        let table = FeatureTable::read_from(BufReader::new(File::open(t)?))
            .with_context(|| format!("loading {}", t.display()))?;
        let color = cfg.color.as_deref().map(load_mlp).transpose()?;
        Pipeline::from_parts(pc, table, load_mlp(m)?, color)?
    } else {
        Pipeline::random(pc, cfg.table_scale, spec.seed)?
    };
    let img = render_frame(&pipeline, &camera)?;
    let path = spec.out.join("render.ppm");
    img.write_ppm(create(&path)?)?;
    let cfg_path = spec.out.join("render.toml");
    write_text(&cfg_path, &config::to_toml(cfg)?)?;
    Ok(Outcome {
        lines: vec![format!(
            "rendered {}x{} {} frame -> {}",
            img.width(),
            img.height(),
            pipeline.config().app.name(),
            path.display()
        )],
        files: vec![path, cfg_path],
        success: true,
    })
}

/// Uniform RGB noise, the desk-scale high-frequency target.
pub fn noise_image(width: u32, height: u32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(width, height, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

pub fn cmd_train_gia(cfg: &TrainGiaConfig, spec: &RunSpec) -> Result<Outcome> {
    let target = match &cfg.target {
        Some(p) => Image::read_ppm(BufReader::new(File::open(p)?)).with_context(|| format!("loading {}", p.display()))?,
        None => noise_image(cfg.noise_width, cfg.noise_height, cfg.noise_seed),
    };
    let pc = cfg.pipeline.clone().expect("materialized");
    let run = train_gia(&target, pc, cfg.steps, cfg.learning_rate, spec.seed)?;

    let dir = &spec.out;
    let curve_path = dir.join("psnr.csv");
    let mut curve = header("train-gia", spec, &config::to_toml(cfg)?);
    curve.push_str("step,psnr_db\n");
    for (i, p) in run.psnr_curve.iter().enumerate() {
        curve.push_str(&format!("{i},{p:.6}\n"));
    }
    write_text(&curve_path, &curve)?;

    let table_path = dir.join("gia_table.ngft");
    run.pipeline.table().write_to(create(&table_path)?)?;
    let mlp_path = dir.join("gia_mlp.ngmp");
    run.pipeline.primary().write_checkpoint(create(&mlp_path)?)?;
    let camera = ngpc_core::pipeline::Camera::looking_down_z([0.0; 3], 1.0, run.pipeline.config().frame);
    let img_path = dir.join("gia.ppm");
    render_frame(&run.pipeline, &camera)?.write_ppm(create(&img_path)?)?;
    let target_path = dir.join("target.ppm");
    target.write_ppm(create(&target_path)?)?;
    Ok(Outcome {
        lines: vec![format!(
            "trained {} steps on {}x{}: PSNR {:.2} dB -> {:.2} dB",
            cfg.steps,
            target.width(),
            target.height(),
            run.psnr_curve[0],
            run.final_psnr
        )],
        files: vec![curve_path, table_path, mlp_path, img_path, target_path],
        success: true,
    })
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated: Option<String>,
    seed: u64,
    config: &'a PerfSweepConfig,
    rows: &'a [PerfReport],
}

pub fn cmd_perf_sweep(cfg: &PerfSweepConfig, spec: &RunSpec) -> Result<Outcome> {
    let archs = cfg.archs();
    let reports = sweep(&cfg.profiles, &archs)?;
    let cfg_toml = config::to_toml(cfg)?;
    let head = header("perf-sweep", spec, &cfg_toml);
    let dir = &spec.out;
    let mut files = Vec::new();

    let sweep_csv = dir.join("sweep.csv");
    write_text(&sweep_csv, &format!("{head}{}", to_csv(&reports)))?;
    files.push(sweep_csv);

    let doc = SweepDocument {
        generated: (!spec.no_timestamp).then(|| chrono::Utc::now().to_rfc3339()),
        seed: spec.seed,
        config: cfg,
        rows: &reports,
    };
    let sweep_json = dir.join("sweep.json");
    write_text(&sweep_json, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    files.push(sweep_json);

    let mut bw = format!(
        "{head}app,encoding,fps,input_gb_s,output_gb_s,total_gb_s,access_time_ms\n"
    );
    for p in &cfg.profiles {
        let b = bandwidth_model(p, &cfg.arch, cfg.bandwidth_fps)?;
        bw.push_str(&format!(
            "{},{},{},{:.3},{:.3},{:.3},{:.3}\n",
            p.app, p.encoding, cfg.bandwidth_fps, b.input_gb_s, b.output_gb_s, b.total_gb_s, b.access_time_ms
        ));
    }
    let bw_path = dir.join("bandwidth.csv");
    write_text(&bw_path, &bw)?;
    files.push(bw_path);

    let mut ap = format!("{head}nfp_count,area_pct,power_pct\n");
    for a in &archs {
        let (area, power) = area_power(a);
        ap.push_str(&format!("{},{area:.2},{power:.2}\n", a.nfp_count));
    }
    let ap_path = dir.join("area_power.csv");
    write_text(&ap_path, &ap)?;
    files.push(ap_path);

    let mut summary = format!("{head}encoding,nfp_count,mean_speedup\n");
    let mut lines = Vec::new();
    for (enc, n, m) in mean_speedups(&reports) {
        summary.push_str(&format!("{enc},{n},{m:.4}\n"));
        lines.push(format!("{enc} N={n}: mean speedup {m:.2}x"));
    }
    let summary_path = dir.join("summary.csv");
    write_text(&summary_path, &summary)?;
    files.push(summary_path);

    let violations = reports.iter().filter(|r| r.speedup > r.amdahl_bound).count();
    lines.push(format!("{} rows, {violations} above the Amdahl bound", reports.len()));
    Ok(Outcome {
        files,
        lines,
        success: violations == 0,
    })
}

fn verify_outcome(level: VerifyLevel, seed: u64) -> Outcome {
    let checks = verify::run_checks(level, seed);
    let success = checks.iter().all(|c| c.passed);
    let mut lines: Vec<String> = checks.iter().map(|c| c.to_string()).collect();
    let failed = checks.iter().filter(|c| !c.passed).count();
    lines.push(format!("{} checks, {failed} failed", checks.len()));
    Outcome {
        files: Vec::new(),
        lines,
        success,
    }
}
