use std::path::{Path, PathBuf};

use lsqgan::ansatz::Shots;
use lsqgan::autoencoder::{train_ae_with, AeConfig, AeTrainConfig, AutoEncoder};
use lsqgan::bp::{
    loss_scan_point, mc_generator_gradient_variance, DepthRule, GradientScanSpec, InitSpec, ScanObservable,
};
use lsqgan::data_io::{
    hash_file, load_checkpoint, load_features, load_mnist_split, read_checkpoint, save_checkpoint, save_features,
    write_idx, CheckpointKind, FeatureSet, ImageDataset, Manifest, Provenance,
};
use lsqgan::gan::{
    critic_to_checkpoint, init_style_generator, new_critic, sample_latent, AnyGenerator, ClassicalGenerator, GanConfig,
    GanTrainer, Generator,
};
use lsqgan::metrics::{frechet_distance_samples, inception_score_analogue, jsd_features, train_classifier, ClassifierConfig};
use lsqgan::shots::{feature_l2_scan, frechet_scan, histogram_kl_scan, image_scan, ShotRow, ShotSamples, ShotScanConfig};
use lsqgan::{rng, AnsatzKind, Error, Result, StyleConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;

pub const OUT_ENV: &str = "LSQGAN_OUT";

/// Output directory for a run, created if missing.
fn out_dir(command: &str, o: &Output) -> Result<PathBuf> {
    let dir = match &o.out {
        Some(p) => p.clone(),
        None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from).join(command),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Writes the manifest before any work is done.
fn start_run<A: Serialize>(command: &str, o: &Output, seed: u64, args: &A, inputs: &[&Path]) -> Result<PathBuf> {
    let dir = out_dir(command, o)?;
    let mut m = Manifest::new(command, seed, serde_json::to_value(args)?);
    for p in inputs {
        m.add_input(p)?;
    }
    m.write(&dir.join("manifest.json"))?;
    Ok(dir)
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn idx_files(src: &ImageSource) -> Vec<PathBuf> {
    ["images-idx3-ubyte", "labels-idx1-ubyte"]
        .iter()
        .map(|stem| {
            let plain = src.data.join(format!("{}-{stem}", src.split));
            let gz = plain.with_file_name(format!("{}-{stem}.gz", src.split));
            if !plain.exists() && gz.exists() {
                gz
            } else {
                plain
            }
        })
        .collect()
}

fn load_images(src: &ImageSource) -> Result<ImageDataset> {
    let ds = load_mnist_split(&src.data, &src.split)?;
    Ok(match src.limit {
        Some(n) => ds.take(n),
        None => ds,
    })
}

fn load_generator(path: &Path) -> Result<AnyGenerator> {
    AnyGenerator::from_checkpoint(&read_checkpoint(path)?)
}

fn load_ae(path: &Path) -> Result<AutoEncoder> {
    AutoEncoder::from_checkpoint(&load_checkpoint(path, CheckpointKind::Autoencoder)?)
}

fn parse_ansatz(s: &str) -> Result<AnsatzKind> {
    s.parse()
}

/// A width that is either fixed or `c/n`.
#[derive(Clone, Copy, Debug)]
enum Width {
    Fixed(f64),
    InverseN(f64),
}

impl Width {
    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("width must be a positive number or c/n, got {s:?}"));
        let (w, inverse) = match s.strip_suffix("/n") {
            Some(c) => (c.trim().parse::<f64>().map_err(|_| bad())?, true),
            None => (s.parse::<f64>().map_err(|_| bad())?, false),
        };
        if !(w > 0.0 && w.is_finite()) {
            return Err(bad());
        }
        Ok(if inverse { Width::InverseN(w) } else { Width::Fixed(w) })
    }

    fn at(self, n: usize) -> f64 {
        match self {
            Width::Fixed(w) => w,
            Width::InverseN(c) => c / n as f64,
        }
    }
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    mse: f64,
}

pub fn train_ae(a: &TrainAe) -> Result<()> {
    let files = idx_files(&a.images);
    let dir = start_run("train-ae", &a.output, a.seed, a, &[&files[0], &files[1]])?;
    let ds = load_images(&a.images)?;
    let images = ds.images();
    let cfg = AeConfig { input_dim: ds.pixel_dim(), hidden: a.hidden.clone(), latent_dim: a.latent_dim };
    let mut ae = AutoEncoder::new(&cfg, a.seed)?;
    let mut rows = vec![LossRow { epoch: 0, mse: ae.reconstruction_mse(&images)? }];
    let tc = AeTrainConfig { epochs: a.epochs, lr: a.lr, batch: a.batch, seed: a.seed };
    train_ae_with(&mut ae, &images, &tc, |epoch, mse| log::info!("epoch {epoch}: mse {mse:.5}"))?
        .into_iter()
        .enumerate()
        .for_each(|(i, mse)| rows.push(LossRow { epoch: i + 1, mse }));
    if rows.iter().any(|r| !r.mse.is_finite()) {
        return Err(Error::Numeric("autoencoder loss became non-finite".into()));
    }
    write_csv(&dir.join("ae_loss.csv"), &rows)?;
    let hash = save_checkpoint(&dir.join("ae.ckpt"), &ae.to_checkpoint()?)?;
    println!("{}\t{hash}", dir.join("ae.ckpt").display());
    Ok(())
}

pub fn extract_features(a: &ExtractFeatures) -> Result<()> {
    let files = idx_files(&a.images);
    let dir = start_run("extract-features", &a.output, 0, a, &[&a.ae, &files[0], &files[1]])?;
    let ae = load_ae(&a.ae)?;
    let ds = load_images(&a.images)?;
    let rows = ae.encode_batch(&ds.images())?;
    let fs = FeatureSet::new(rows, Provenance::Real, 0)?
        .with_sources(vec![hash_file(&a.ae)?, hash_file(&files[0])?])
        .with_labels(ds.labels().to_vec())?;
    let path = dir.join("features.bin");
    let hash = save_features(&path, &fs)?;
    println!("{}\t{hash}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    generator_loss: f64,
    critic_loss: f64,
    jsd: f64,
    frechet: f64,
}

fn train_with<G: Generator>(a: &TrainGan, dir: &Path, generator: G, data: &[Vec<f64>]) -> Result<()> {
    let critic = new_critic(data[0].len(), &a.critic_hidden, rng::derive(a.seed, 5))?;
    let cfg = GanConfig {
        lambda: a.lambda,
        batch: a.batch,
        epochs: a.epochs,
        n_critic: a.n_critic,
        lr: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        delta: a.delta,
        seed: a.seed,
        eval_size: a.eval_size,
        jsd_k: a.jsd_k,
        checkpoint_every: a.checkpoint_every,
    };
    let every = a.checkpoint_every;
    let mut t = GanTrainer::new(generator, critic, cfg)?;
    let history = t.train(data, |t, m| {
        if every > 0 && m.epoch > 0 && m.epoch % every == 0 {
            save_checkpoint(&dir.join(format!("generator_epoch{}.ckpt", m.epoch)), &t.generator.to_checkpoint()?)?;
            save_checkpoint(&dir.join(format!("critic_epoch{}.ckpt", m.epoch)), &critic_to_checkpoint(&t.critic)?)?;
        }
        Ok(())
    })?;
    let rows: Vec<MetricsRow> = history
        .iter()
        .map(|m| MetricsRow {
            epoch: m.epoch,
            generator_loss: m.generator_loss,
            critic_loss: m.critic_loss,
            jsd: m.jsd,
            frechet: m.frechet,
        })
        .collect();
    write_csv(&dir.join("train_metrics.csv"), &rows)?;
    let hash = save_checkpoint(&dir.join("generator.ckpt"), &t.generator.to_checkpoint()?)?;
    save_checkpoint(&dir.join("critic.ckpt"), &critic_to_checkpoint(&t.critic)?)?;
    println!("{}\t{hash}", dir.join("generator.ckpt").display());
    Ok(())
}

pub fn train_gan(a: &TrainGan) -> Result<()> {
    let dir = start_run("train-gan", &a.output, a.seed, a, &[&a.features])?;
    let fs = load_features(&a.features)?;
    let dim = fs.dim();
    let data = fs.into_rows();
    let gen_seed = rng::derive(a.seed, 9);
    match a.generator {
        GeneratorFamily::Quantum => {
            if dim % 2 != 0 {
                return Err(invalid(format!("quantum generator needs an even feature dimension, got {dim}")));
            }
            let n = a.n.unwrap_or(dim / 2);
            if 2 * n != dim {
                return Err(Error::Dimension { expected: dim, actual: 2 * n });
            }
            let cfg = StyleConfig {
                kind: parse_ansatz(&a.ansatz)?,
                n,
                depth: a.depth,
                latent_dim: a.latent_dim.unwrap_or(n),
                rescale: a.rescale,
            };
            train_with(a, &dir, init_style_generator(cfg, a.delta, gen_seed)?, &data)
        }
        GeneratorFamily::Classical => {
            let latent = a.latent_dim.unwrap_or(dim / 2).max(1);
            train_with(a, &dir, ClassicalGenerator::new(latent, &a.hidden, dim, gen_seed)?, &data)
        }
    }
}

fn to_pixels(images: &[Vec<f64>]) -> Vec<u8> {
    images.iter().flatten().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
}

pub fn generate(a: &Generate) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&a.generator];
    if let Some(ae) = &a.ae {
        inputs.push(ae);
    }
    let dir = start_run("generate", &a.output, a.seed, a, &inputs)?;
    if a.count == 0 {
        return Err(invalid("count must be positive"));
    }
    let g = load_generator(&a.generator)?;
    let zs = sample_latent(a.count, g.latent_dim(), &mut rng::stream(a.seed, 0));
    let shots = Shots::from_count(a.shots);
    let rows = zs
        .par_iter()
        .enumerate()
        .map(|(i, z)| g.generate_with_shots(z, shots, rng::derive(a.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let fs = FeatureSet::new(rows, Provenance::Generated, a.shots)?.with_sources(vec![hash_file(&a.generator)?]);
    let path = dir.join("features.bin");
    let hash = save_features(&path, &fs)?;
    println!("{}\t{hash}", path.display());
    if let Some(ae_path) = &a.ae {
        let ae = load_ae(ae_path)?;
        let images = ae.decode_batch(fs.rows())?;
        let side = (ae.input_dim() as f64).sqrt() as usize;
        let (r, c) = if side * side == ae.input_dim() { (side, side) } else { (1, ae.input_dim()) };
        let ds = ImageDataset::new(to_pixels(&images), vec![0; images.len()], r, c, "generated")?;
        write_idx(&ds, &dir.join("images-idx3-ubyte"), &dir.join("labels-idx1-ubyte"))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricRow {
    metric: &'static str,
    value: f64,
    sample_count: usize,
    seed: u64,
    extractor: &'static str,
}

pub fn evaluate(a: &Evaluate) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&a.real, &a.fake];
    if let Some(ae) = &a.ae {
        inputs.push(ae);
    }
    let dir = start_run("evaluate", &a.output, a.seed, a, &inputs)?;
    let real = load_features(&a.real)?;
    let fake = load_features(&a.fake)?;
    if real.dim() != fake.dim() {
        return Err(Error::Dimension { expected: real.dim(), actual: fake.dim() });
    }
    let k = a.k.min(real.len());
    let count = fake.len();
    let row = |metric, value, extractor| MetricRow { metric, value, sample_count: count, seed: a.seed, extractor };
    let mut rows = vec![
        row("jsd", jsd_features(real.rows(), fake.rows(), k, a.seed)?, "latent_features"),
        row("frechet", frechet_distance_samples(real.rows(), fake.rows())?, "latent_features"),
    ];
    if let Some(ae_path) = &a.ae {
        let ae = load_ae(ae_path)?;
        let real_img = ae.decode_batch(real.rows())?;
        let fake_img = ae.decode_batch(fake.rows())?;
        rows.push(row("jsd", jsd_features(&real_img, &fake_img, k, a.seed)?, "pixels"));
        rows.push(row("frechet", frechet_distance_samples(&real_img, &fake_img)?, "pixels"));
        if let Some(data) = &a.classifier_data {
            let ds = load_mnist_split(data, "train")?.take(a.classifier_limit);
            let labels: Vec<usize> = ds.labels().iter().map(|&l| l as usize).collect();
            let classes = labels.iter().max().map_or(1, |m| m + 1);
            let cfg = ClassifierConfig { epochs: a.classifier_epochs, seed: a.seed, ..ClassifierConfig::default() };
            let (clf, acc) = train_classifier(&ds.images(), &labels, classes, &cfg)?;
            log::info!("classifier training accuracy {acc:.3}");
            rows.push(row("inception_score", inception_score_analogue(&clf, &fake_img)?, "dense_classifier"));
            rows.push(row("inception_score_real", inception_score_analogue(&clf, &real_img)?, "dense_classifier"));
        }
    }
    if let Some(bad) = rows.iter().find(|r| !r.value.is_finite()) {
        return Err(Error::Numeric(format!("{} ({}) is not finite", bad.metric, bad.extractor)));
    }
    for r in &rows {
        println!("{}\t{}\t{}", r.metric, r.extractor, r.value);
    }
    write_csv(&dir.join("metrics.csv"), &rows)
}

#[derive(Serialize)]
struct ScanRow {
    mode: &'static str,
    ansatz: String,
    observable: String,
    n: usize,
    depth: usize,
    width: f64,
    draws: usize,
    variance: f64,
    stderr: f64,
    mean: f64,
    analytic_mean: Option<f64>,
    bound: Option<f64>,
    bound_branch: Option<String>,
}

pub fn bp_scan(a: &BpScan) -> Result<()> {
    let dir = start_run("bp-scan", &a.output, a.seed, a, &[])?;
    let kind = parse_ansatz(&a.ansatz)?;
    let rule: DepthRule = a.depth_rule.parse()?;
    let width = Width::parse(&a.width)?;
    if a.n_min < 2 || a.n_min > a.n_max {
        return Err(invalid(format!("invalid qubit range {}..={}", a.n_min, a.n_max)));
    }
    if a.draws < 3 {
        return Err(invalid("need at least 3 draws"));
    }
    let mut rows = Vec::new();
    for n in a.n_min..=a.n_max {
        let depth = rule.depth(n);
        let seed = rng::derive(a.seed, n as u64);
        let row = match a.mode {
            ScanMode::Loss => {
                let obs: ScanObservable = a.observable.parse()?;
                let init = match (a.init, width) {
                    (InitFamily::Normal, Width::Fixed(w)) => InitSpec::normal(w)?,
                    (InitFamily::Normal, Width::InverseN(c)) => InitSpec::normal(c)?.inverse_n(),
                    (InitFamily::Uniform, Width::Fixed(w)) => InitSpec::uniform(w)?,
                    (InitFamily::Uniform, Width::InverseN(c)) => InitSpec::uniform(c)?.inverse_n(),
                };
                let p = loss_scan_point(kind, n, depth, obs, &init, a.draws, seed)?;
                ScanRow {
                    mode: "loss",
                    ansatz: kind.to_string(),
                    observable: obs.to_string(),
                    n,
                    depth,
                    width: p.width,
                    draws: a.draws,
                    variance: p.estimate.variance,
                    stderr: p.estimate.stderr,
                    mean: p.estimate.mean,
                    analytic_mean: Some(p.analytic_mean),
                    bound: p.bound.map(|b| b.value),
                    bound_branch: p.bound.map(|b| b.branch.to_string()),
                }
            }
            ScanMode::GanGrad => {
                let spec = GradientScanSpec::new(kind, n, depth, width.at(n));
                let est = mc_generator_gradient_variance(&spec, a.draws, seed)?;
                ScanRow {
                    mode: "gan-grad",
                    ansatz: kind.to_string(),
                    observable: "generator_loss".into(),
                    n,
                    depth,
                    width: spec.delta,
                    draws: a.draws,
                    variance: est.variance,
                    stderr: est.stderr,
                    mean: est.mean,
                    analytic_mean: None,
                    bound: None,
                    bound_branch: None,
                }
            }
        };
        if !row.variance.is_finite() {
            return Err(Error::Numeric(format!("variance at n = {n} is not finite")));
        }
        log::info!("n={n} depth={depth} var={:.4e} ± {:.1e}", row.variance, row.stderr);
        rows.push(row);
    }
    write_csv(&dir.join("scan.csv"), &rows)?;
    println!("{}", dir.join("scan.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct BoundRow {
    observable: String,
    n: usize,
    sigma: f64,
    bound: f64,
    branch: String,
    average_case: Option<f64>,
    extreme_case: Option<f64>,
}

pub fn bound_table(a: &BoundTable) -> Result<()> {
    let dir = start_run("bound-table", &a.output, 0, a, &[])?;
    let obs: ScanObservable = a.observable.parse()?;
    if !matches!(obs, ScanObservable::LocalZ | ScanObservable::LocalX) {
        return Err(invalid(format!("no closed-form bound for {obs}")));
    }
    if a.n_min < 1 || a.n_min > a.n_max {
        return Err(invalid(format!("invalid qubit range {}..={}", a.n_min, a.n_max)));
    }
    let widths = a.sigmas.iter().map(|s| Width::parse(s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for w in widths {
        for n in a.n_min..=a.n_max {
            let sigma = w.at(n);
            let b = obs.bound(n, sigma)?.expect("local observables have bounds");
            rows.push(BoundRow {
                observable: obs.to_string(),
                n,
                sigma,
                bound: b.value,
                branch: b.branch.to_string(),
                average_case: b.branches.map(|x| x.0),
                extreme_case: b.branches.map(|x| x.1),
            });
        }
    }
    write_csv(&dir.join("bounds.csv"), &rows)?;
    println!("{}", dir.join("bounds.csv").display());
    Ok(())
}

pub fn shot_scan(a: &ShotScan) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&a.generator, &a.train];
    if let Some(ae) = &a.ae {
        inputs.push(ae);
    }
    let dir = start_run("shot-scan", &a.output, a.seed, a, &inputs)?;
    if a.k_min > a.k_max || a.k_max > 40 {
        return Err(invalid(format!("invalid shot exponents {}..={}", a.k_min, a.k_max)));
    }
    let cfg = ShotScanConfig {
        shots: (a.k_min..=a.k_max).map(|k| 1u64 << k).collect(),
        samples: a.samples,
        bins: a.bins,
        seed: a.seed,
        reference_limit: a.reference_limit,
    };
    let g = load_generator(&a.generator)?;
    let train = load_features(&a.train)?;
    if train.dim() != g.feature_dim() {
        return Err(Error::Dimension { expected: g.feature_dim(), actual: train.dim() });
    }
    let samples = ShotSamples::generate(&g, &cfg)?;
    let mut rows: Vec<ShotRow> = feature_l2_scan(&samples, train.rows(), &cfg)?;
    rows.extend(histogram_kl_scan(&samples, train.rows(), &cfg)?);
    rows.extend(frechet_scan(&samples, train.rows())?);
    write_csv(&dir.join("shots.csv"), &rows)?;
    if let Some(ae_path) = &a.ae {
        let ae = load_ae(ae_path)?;
        let limit = train.len().min(cfg.samples);
        let reference = ae.decode_batch(&train.rows()[..limit])?;
        write_csv(&dir.join("shots_images.csv"), &image_scan(&samples, &ae, Some(&reference))?)?;
    }
    println!("{}", dir.join("shots.csv").display());
    Ok(())
}
