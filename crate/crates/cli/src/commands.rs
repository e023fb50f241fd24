use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dscr_core::autograd::{grad_check_graph, GradCheckOptions, Tape, Tensor4, Var};
use dscr_core::hsdata::format::read_cube_with_sidecar;
use dscr_core::hsdata::{read_cube, synth_cube, write_cube, write_cube_with_stats, BandInfo, HsCube, PatchSpec};
use dscr_core::metrics::{pca_rgb, Evaluator, RgbImage};
use dscr_core::model::{cube_to_tensor, forward, forward_graph, init_weights, load_weights, param_count, tensor_to_cube};
use dscr_core::model::ModelConfig;
use dscr_core::pipeline::{prepare as prepare_band, PrepareConfig};
use dscr_core::resample::DegradationSpec;
use dscr_core::train::{fit_from, write_history_csv, Checkpoint, TrainConfig, Trainer};

use crate::manifest::{Manifest, TileEntry};
use crate::{EvalArgs, GradcheckArgs, ParamsArgs, PrepareArgs, SrArgs, SynthArgs, TrainArgs, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn band(id: u16) -> Result<BandInfo> {
    BandInfo::new(id).map_err(|e| usage(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let band = band(a.band)?;
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    create_dir(&a.out_dir)?;
    for i in 0..a.count {
        let seed = a.seed.wrapping_add(i as u64);
        let data = synth_cube(a.channels, a.height, a.width, seed, a.spatial_sigma, a.channel_mix)?;
        let provenance = format!(
            "synthetic: seed={seed} sigma={} mix={} ({}x{}x{})",
            a.spatial_sigma, a.channel_mix, a.channels, a.height, a.width
        );
        let cube = HsCube::new(band, data, provenance)?;
        let path = a.out_dir.join(format!("synth_{i:03}.hsc"));
        write_cube(&cube, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn prepare(a: &PrepareArgs) -> Result<()> {
    let info = band(a.band)?;
    let mut cubes = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let cube = read_cube(path).with_context(|| format!("reading {}", path.display()))?;
        if cube.band.band_id != a.band {
            return Err(usage(format!("{} is band {}, expected {}", path.display(), cube.band.band_id, a.band)));
        }
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        cubes.push((id, cube));
    }
    let (nh, nw) = info.nominal_tile();
    let patch = PatchSpec { lr_size: a.patch_size, lr_stride: a.patch_stride, scale: a.scale };
    let cfg = PrepareConfig {
        tile: Some((a.tile_h.unwrap_or(nh), a.tile_w.unwrap_or(nw))),
        seed: a.seed,
        patch,
        degradation: Some(DegradationSpec { scale: a.scale, ..DegradationSpec::for_spectrometer(info.spectrometer) }),
        ..PrepareConfig::default()
    };
    let prepared = prepare_band(&cubes, &cfg)?;

    let tiles_dir = a.out.join("tiles");
    create_dir(&tiles_dir)?;
    let mut tiles = Vec::with_capacity(prepared.hr_tiles.len());
    for (i, (hr, lr)) in prepared.hr_tiles.iter().zip(&prepared.lr_tiles).enumerate() {
        let source = prepared.sources[i].clone();
        let prov = format!("{} tile at ({}, {})", source.cube_id, source.row, source.col);
        let hr_rel = PathBuf::from("tiles").join(format!("tile_{i:04}_hr.hsc"));
        let lr_rel = PathBuf::from("tiles").join(format!("tile_{i:04}_lr.hsc"));
        let stats = Some(&prepared.norm_stats);
        write_cube_with_stats(&HsCube::new(info, hr.clone(), format!("{prov}, normalized"))?, stats, &a.out.join(&hr_rel))?;
        write_cube_with_stats(&HsCube::new(info, lr.clone(), format!("{prov}, degraded"))?, stats, &a.out.join(&lr_rel))?;
        tiles.push(TileEntry { id: i, source, hr: hr_rel, lr: lr_rel });
    }

    let manifest = Manifest {
        band_id: a.band,
        channels: prepared.hr_tiles.first().map(|t| t.channels()).unwrap_or(0),
        inputs: a.inputs.clone(),
        degradation: prepared.degradation,
        patch,
        norm_stats: prepared.norm_stats,
        split: prepared.split.clone(),
        tiles,
        rejected: prepared.rejected.clone(),
    };
    manifest.save(&a.out)?;
    let (tr, va, te) = prepared.split.counts();
    println!(
        "{} tiles ({} rejected): train {tr}, val {va}, test {te}; patches {}/{}/{}",
        prepared.hr_tiles.len(),
        prepared.rejected.len(),
        prepared.dataset.train.len(),
        prepared.dataset.val.len(),
        prepared.dataset.test.len()
    );
    Ok(())
}

/// Architecture name accepted in the training config.
fn model_for(name: &str, channels: usize) -> Result<ModelConfig> {
    match name {
        "dscr" => Ok(ModelConfig::dscr(channels)),
        "dscr-s" | "dscr_s" | "small" => Ok(ModelConfig::dscr_small(channels)),
        other => Err(usage(format!("unknown model {other:?}; expected \"dscr\" or \"dscr-s\""))),
    }
}

fn read_train_config(path: Option<&Path>) -> Result<(String, TrainConfig)> {
    let Some(path) = path else {
        return Ok(("dscr-s".into(), TrainConfig::default()));
    };
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&raw).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let model = match value.as_object_mut().and_then(|o| o.remove("model")) {
        None => "dscr-s".to_string(),
        Some(serde_json::Value::String(s)) => s,
        Some(other) => return Err(usage(format!("\"model\" must be a string, got {other}"))),
    };
    let cfg: TrainConfig =
        serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok((model, cfg))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    band(a.band)?;
    let manifest = Manifest::load(&a.dataset)?;
    if manifest.band_id != a.band {
        return Err(usage(format!("dataset is band {}, --band is {}", manifest.band_id, a.band)));
    }
    let (model_name, mut cfg) = read_train_config(a.config.as_deref())?;
    let model = model_for(&model_name, manifest.channels)?;
    cfg.checkpoint_dir = Some(a.out.clone());
    create_dir(&a.out)?;

    let data = manifest.load_dataset(&a.dataset)?;
    if data.val.is_empty() || data.test.is_empty() {
        let (tr, va, te) = manifest.split.counts();
        return Err(usage(format!(
            "split {tr}/{va}/{te} leaves no validation or test tiles; prepare more or larger inputs"
        )));
    }
    log::info!("training {model_name} on {} / {} / {} patches", data.train.len(), data.val.len(), data.test.len());

    let last = a.out.join("last");
    let trainer = if a.resume && Checkpoint::exists(&last) {
        let t = Trainer::from_checkpoint(Checkpoint::load(&last)?);
        if t.weights.config != model {
            return Err(usage("checkpoint architecture differs from the configuration"));
        }
        log::info!("resuming after epoch {}", t.epoch);
        t
    } else {
        Trainer::new(&model, &cfg)?
    };
    let run = fit_from(trainer, &data, &cfg)?;
    write_history_csv(&run.history, &a.out.join("history.csv"))?;
    write_json(&a.out.join("run.json"), &run)?;
    if let Some(best) = &run.best_checkpoint {
        println!("best checkpoint: {}", best.display());
    }
    match (run.best_epoch, run.best_val_loss) {
        (Some(e), Some(v)) => println!("best val loss {v:.6e} at epoch {e}"),
        _ => println!("no epochs run"),
    }
    Ok(())
}

pub fn sr(a: &SrArgs) -> Result<()> {
    let weights = load_weights(&a.weights).with_context(|| format!("loading {}", a.weights.display()))?;
    let (input, sidecar) = read_cube_with_sidecar(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    weights.check_channels(input.data.channels())?;
    let out = forward(&weights, &cube_to_tensor(&[&input.data])?)?;
    let hr = tensor_to_cube(&out, 0);
    if let Some(i) = hr.first_non_finite() {
        return Err(dscr_core::Error::NonFinite { index: i }.into());
    }
    let provenance = format!("super-resolved x{} from {} with {}", weights.config.scale, a.input.display(), a.weights.display());
    let cube = HsCube::new(input.band, hr, provenance)?;
    write_cube_with_stats(&cube, sidecar.as_ref().and_then(|s| s.norm_stats.as_ref()), &a.output)?;
    Ok(())
}

fn parse_labelled(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_string(), PathBuf::from(path))),
        _ => Err(usage(format!("--test expects LABEL=PATH, got {spec:?}"))),
    }
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    image::save_buffer(path, &img.data, img.width as u32, img.height as u32, image::ExtendedColorType::Rgb8)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let labelled = a.tests.iter().map(|s| parse_labelled(s)).collect::<Result<Vec<_>>>()?;
    let reference = read_cube(&a.reference).with_context(|| format!("reading {}", a.reference.display()))?;
    let mut tests = Vec::with_capacity(labelled.len());
    for (label, path) in &labelled {
        if tests.iter().any(|(l, _): &(String, HsCube)| l == label) {
            return Err(usage(format!("duplicate label {label:?}")));
        }
        tests.push((label.clone(), read_cube(path).with_context(|| format!("reading {}", path.display()))?));
    }

    let mut ev = Evaluator::new(Some(reference.band.band_id));
    let pairs: Vec<(&str, &dscr_core::hsdata::Cube)> = tests.iter().map(|(l, c)| (l.as_str(), &c.data)).collect();
    ev.add(&reference.data, &pairs)?;
    let report = ev.finish()?;

    create_dir(&a.out)?;
    fs::write(a.out.join("report.csv"), report.to_csv()).context("writing report.csv")?;
    fs::write(a.out.join("report.json"), report.to_json()? + "\n").context("writing report.json")?;

    match pca_rgb(&reference.data, &reference.data) {
        Ok(img) => {
            save_png(&img, &a.out.join("pca_ref.png"))?;
            let basis = dscr_core::metrics::PcaBasis::fit(&reference.data)?;
            for (label, cube) in &tests {
                save_png(&basis.render(&cube.data)?, &a.out.join(format!("pca_{}.png", file_label(label))))?;
            }
        }
        Err(e) => log::warn!("skipping PCA images: {e}"),
    }
    print!("{}", report.to_csv());
    Ok(())
}

/// Gradient-check failure; maps to the numeric exit code.
#[derive(Debug)]
struct GradcheckFailed(u64);

impl std::fmt::Display for GradcheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "gradient check failed for {} seed(s)", self.0)
    }
}

impl std::error::Error for GradcheckFailed {}

pub fn gradcheck(a: &GradcheckArgs) -> Result<()> {
    if a.channels == 0 || a.size == 0 || a.seeds == 0 {
        return Err(usage("--channels, --size and --seeds must be positive"));
    }
    let config = if a.full { ModelConfig::dscr(a.channels) } else { ModelConfig::dscr_small(a.channels) };
    let opts = GradCheckOptions { tolerance: a.tolerance, step: a.step, ..GradCheckOptions::default() };
    let mut failures = 0;
    for seed in a.seed..a.seed + a.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = init_weights(&config, seed)?;
        let names = weights.tensor_names();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        // random biases keep deep ReLUs away from exact kinks
        let params: Vec<Tensor4<f64>> = weights
            .tensors()
            .iter()
            .zip(&names)
            .map(|(t, n)| {
                let t = t.cast::<f64>();
                if n.ends_with("bias") {
                    Tensor4::from_fn(t.dims(), |_| rng.random_range(0.05..0.5))
                } else {
                    t
                }
            })
            .collect();
        let (c, s) = (a.channels, a.size);
        let lr = Tensor4::from_fn([1, c, s, s], |_| rng.random_range(0.0..1.0));
        let hr = Tensor4::from_fn([1, c, s * config.scale, s * config.scale], |_| rng.random_range(0.0..1.0));
        let report = grad_check_graph(
            &names,
            &params,
            move |tape: &mut Tape<f64>, p: &[Var]| {
                let y = forward_graph(tape, &config, p, &lr)?;
                let t = tape.constant(hr.clone());
                tape.mse_loss(y, t)
            },
            &GradCheckOptions { seed, ..opts },
        );
        println!(
            "seed {seed:>3}: {}  max rel err {:.3e}",
            if report.passed { "PASS" } else { "FAIL" },
            report.max_rel_error()
        );
        if !report.passed {
            println!("{report}");
            failures += 1;
        }
    }
    if failures > 0 {
        bail!(GradcheckFailed(failures));
    }
    println!("all {} seeds passed (tolerance {:.1e})", a.seeds, a.tolerance);
    Ok(())
}

pub fn params(a: &ParamsArgs) -> Result<()> {
    let config = ModelConfig {
        channels: a.channels,
        n_modules: a.modules,
        dw_kernel: a.kernel,
        pointwise_per_module: a.pointwise_per_module,
        scale: 4,
        share_module_weights: a.shared,
        final_linear: true,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    println!("{}", param_count(&config));
    Ok(())
}

pub fn is_gradcheck_failure(err: &anyhow::Error) -> bool {
    err.chain().any(|c| c.downcast_ref::<GradcheckFailed>().is_some())
}
