//! Finite-shot robustness scans of a trained generator.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Shots;
use crate::autoencoder::AutoEncoder;
use crate::error::{check_dim, Error, Result};
use crate::gan::{sample_latent, Generator};
use crate::metrics::{frechet_distance_samples, histogram, kl_divergence_smoothed};
use crate::rng;

/// Smoothing added to empty histogram bins before taking KL.
pub const KL_SMOOTHING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotScanConfig {
    pub shots: Vec<u64>,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    /// Training rows used for the pairwise-separation references.
    pub reference_limit: usize,
}

impl Default for ShotScanConfig {
    fn default() -> Self {
        ShotScanConfig { shots: (4..=13).map(|k| 1u64 << k).collect(), samples: 10_000, bins: 500, seed: 0, reference_limit: 2000 }
    }
}

impl ShotScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots.is_empty() || self.shots.contains(&0) {
            return Err(Error::invalid("shot grid must be non-empty with every entry >= 1"));
        }
        if self.samples < 2 || self.bins == 0 {
            return Err(Error::invalid("need at least 2 samples and 1 bin"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    FeatureL2,
    HistogramKl,
    Frechet,
    PixelL2,
    TrainMeanSeparation,
    TrainMinSeparation,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::FeatureL2 => "feature_l2",
            Statistic::HistogramKl => "histogram_kl",
            Statistic::Frechet => "frechet",
            Statistic::PixelL2 => "pixel_l2",
            Statistic::TrainMeanSeparation => "train_mean_separation",
            Statistic::TrainMinSeparation => "train_min_separation",
        })
    }
}

/// One scan output; `shots == 0` marks analytic (infinite-shot) values and
/// shot-independent references.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRow {
    pub shots: u64,
    pub statistic: Statistic,
    pub value: f64,
    pub stderr: f64,
}

/// Generated features for a fixed set of latent vectors at every shot level.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSamples {
    pub analytic: Vec<Vec<f64>>,
    /// `(shots, features)` in grid order.
    pub levels: Vec<(u64, Vec<Vec<f64>>)>,
}

impl ShotSamples {
    /// Sample `i` at shot level `s` measures with seed `derive(derive(seed, s), i)`.
    pub fn generate<G: Generator + ?Sized>(g: &G, cfg: &ShotScanConfig) -> Result<Self> {
        cfg.validate()?;
        let zs = sample_latent(cfg.samples, g.latent_dim(), &mut rng::stream(cfg.seed, 0));
        let analytic = zs.par_iter().map(|z| g.generate(z)).collect::<Result<Vec<_>>>()?;
        let levels = cfg
            .shots
            .iter()
            .map(|&s| {
                let base = rng::derive(cfg.seed, s);
                let feats = zs
                    .par_iter()
                    .enumerate()
                    .map(|(i, z)| g.generate_with_shots(z, Shots::Finite(s), rng::derive(base, i as u64)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((s, feats))
            })
            .collect::<Result<_>>()?;
        Ok(ShotSamples { analytic, levels })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// Mean and minimum pairwise distance within the first `limit` rows.
pub fn pairwise_separation(rows: &[Vec<f64>], limit: usize) -> Result<(f64, f64)> {
    let rows = &rows[..rows.len().min(limit)];
    if rows.len() < 2 {
        return Err(Error::invalid("need at least two rows for pairwise separations"));
    }
    let (sum, min, count) = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            let mut m = f64::INFINITY;
            for j in i + 1..rows.len() {
                let d = dist(&rows[i], &rows[j]);
                s += d;
                m = m.min(d);
            }
            (s, m, rows.len() - i - 1)
        })
        .reduce(|| (0.0, f64::INFINITY, 0), |a, b| (a.0 + b.0, a.1.min(b.1), a.2 + b.2));
    Ok((sum / count as f64, min))
}

/// Mean `‖x̃_shots − x̃_∞‖₂` per shot level, plus the training-set
/// separation references.
pub fn feature_l2_scan(samples: &ShotSamples, train: &[Vec<f64>], cfg: &ShotScanConfig) -> Result<Vec<ShotRow>> {
    let mut rows = Vec::new();
    for (s, feats) in &samples.levels {
        let d: Vec<f64> = feats.iter().zip(&samples.analytic).map(|(a, b)| dist(a, b)).collect();
        let (value, stderr) = mean_stderr(&d);
        rows.push(ShotRow { shots: *s, statistic: Statistic::FeatureL2, value, stderr });
    }
    if !train.is_empty() {
        let (mean, min) = pairwise_separation(train, cfg.reference_limit)?;
        rows.push(ShotRow { shots: 0, statistic: Statistic::TrainMeanSeparation, value: mean, stderr: 0.0 });
        rows.push(ShotRow { shots: 0, statistic: Statistic::TrainMinSeparation, value: min, stderr: 0.0 });
    }
    Ok(rows)
}

/// Mean over components of `KL(H̃_i ‖ H_train,i)` on `bins` equal bins over `[-1, 1]`.
pub fn histogram_kl(fake: &[Vec<f64>], train: &[Vec<f64>], bins: usize) -> Result<(f64, f64)> {
    let dim = train.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
    if fake.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(dim, fake[0].len())?;
    let col = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    let per: Vec<f64> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let p = histogram(&col(fake, i), bins, -1.0, 1.0);
            let q = histogram(&col(train, i), bins, -1.0, 1.0);
            kl_divergence_smoothed(&p, &q, KL_SMOOTHING)
        })
        .collect::<Result<_>>()?;
    Ok(mean_stderr(&per))
}

/// Histogram KL to the training features at every shot level; the
/// analytic value is reported with `shots = 0`.
pub fn histogram_kl_scan(samples: &ShotSamples, train: &[Vec<f64>], cfg: &ShotScanConfig) -> Result<Vec<ShotRow>> {
    let mut rows = Vec::new();
    let (value, stderr) = histogram_kl(&samples.analytic, train, cfg.bins)?;
    rows.push(ShotRow { shots: 0, statistic: Statistic::HistogramKl, value, stderr });
    for (s, feats) in &samples.levels {
        let (value, stderr) = histogram_kl(feats, train, cfg.bins)?;
        rows.push(ShotRow { shots: *s, statistic: Statistic::HistogramKl, value, stderr });
    }
    Ok(rows)
}

/// Fréchet distance of each shot level to `reference`; analytic at `shots = 0`.
pub fn frechet_scan(samples: &ShotSamples, reference: &[Vec<f64>]) -> Result<Vec<ShotRow>> {
    let mut rows = vec![ShotRow {
        shots: 0,
        statistic: Statistic::Frechet,
        value: frechet_distance_samples(&samples.analytic, reference)?,
        stderr: 0.0,
    }];
    for (s, feats) in &samples.levels {
        rows.push(ShotRow { shots: *s, statistic: Statistic::Frechet, value: frechet_distance_samples(feats, reference)?, stderr: 0.0 });
    }
    Ok(rows)
}

/// Decodes every level: mean pixel L2 to the analytic images and Fréchet
/// distance of the decoded images to `reference` (the analytic decodes when
/// `None`).
pub fn image_scan(samples: &ShotSamples, ae: &AutoEncoder, reference: Option<&[Vec<f64>]>) -> Result<Vec<ShotRow>> {
    let analytic = ae.decode_batch(&samples.analytic)?;
    let reference = reference.unwrap_or(&analytic);
    let mut rows = vec![ShotRow {
        shots: 0,
        statistic: Statistic::Frechet,
        value: frechet_distance_samples(&analytic, reference)?,
        stderr: 0.0,
    }];
    for (s, feats) in &samples.levels {
        let imgs = ae.decode_batch(feats)?;
        let d: Vec<f64> = imgs.iter().zip(&analytic).map(|(a, b)| dist(a, b)).collect();
        let (value, stderr) = mean_stderr(&d);
        rows.push(ShotRow { shots: *s, statistic: Statistic::PixelL2, value, stderr });
        rows.push(ShotRow { shots: *s, statistic: Statistic::Frechet, value: frechet_distance_samples(&imgs, reference)?, stderr: 0.0 });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{AnsatzKind, StyleConfig};
    use crate::gan::init_style_generator;
    use crate::stats::power_law_fit;

    fn small_gen() -> crate::ansatz::StyleGenerator {
        let cfg = StyleConfig { kind: AnsatzKind::Circuit1, n: 3, depth: 1, latent_dim: 3, rescale: false };
        init_style_generator(cfg, 0.8, 4).unwrap()
    }

    #[test]
    fn l2_shrinks_like_inverse_sqrt_shots() {
        let g = small_gen();
        let cfg = ShotScanConfig { shots: vec![16, 64, 256, 1024], samples: 400, ..Default::default() };
        let s = ShotSamples::generate(&g, &cfg).unwrap();
        let rows = feature_l2_scan(&s, &s.analytic, &cfg).unwrap();
        let l2: Vec<&ShotRow> = rows.iter().filter(|r| r.statistic == Statistic::FeatureL2).collect();
        let x: Vec<f64> = l2.iter().map(|r| r.shots as f64).collect();
        let y: Vec<f64> = l2.iter().map(|r| r.value).collect();
        let fit = power_law_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.05, "{fit:?}");
        assert_eq!(rows.iter().filter(|r| r.shots == 0).count(), 2);
        assert_eq!(s, ShotSamples::generate(&g, &cfg).unwrap());
    }

    #[test]
    fn kl_of_train_against_itself_is_zero() {
        let g = small_gen();
        let cfg = ShotScanConfig { shots: vec![8], samples: 100, ..Default::default() };
        let s = ShotSamples::generate(&g, &cfg).unwrap();
        let (kl, _) = histogram_kl(&s.analytic, &s.analytic, 500).unwrap();
        assert!(kl.abs() < 1e-9);
        let fd = frechet_scan(&s, &s.analytic).unwrap();
        assert!(fd[0].value.abs() < 1e-9 && fd[1].value > 0.0);
        assert!(ShotScanConfig { shots: vec![0], ..Default::default() }.validate().is_err());
    }
}
