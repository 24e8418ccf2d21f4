//! Distances between sample sets: KL/JS on histograms, k-means binning,
//! Fréchet distance of Gaussian summaries and a classifier-based IS analogue.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::neural::{Activation, AdamConfig, AdamState, Mlp};
use crate::rng;

/// `Σ p ln(p/q)`; `+∞` if `q` vanishes where `p` does not.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc)
}

/// KL after adding `eps` to every bin of both inputs and renormalizing.
pub fn kl_divergence_smoothed(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    let smooth = |v: &[f64]| {
        let s: f64 = v.iter().map(|x| x + eps).sum();
        v.iter().map(|x| (x + eps) / s).collect::<Vec<_>>()
    };
    kl_divergence(&smooth(p), &smooth(q))
}

pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(0.5 * kl_divergence(p, &m)? + 0.5 * kl_divergence(q, &m)?)
}

/// Counts to probabilities.
pub fn normalize(counts: &[f64]) -> Vec<f64> {
    let s: f64 = counts.iter().sum();
    if s > 0.0 {
        counts.iter().map(|c| c / s).collect()
    } else {
        vec![0.0; counts.len()]
    }
}

/// Equal-width histogram over `[lo, hi]`, normalized; out-of-range values
/// land in the edge bins.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let b = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        h[b] += 1.0;
    }
    normalize(&h)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansModel {
    centers: Vec<Vec<f64>>,
    iterations: usize,
}

impl KMeansModel {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Index of the nearest center (lowest index on ties).
    pub fn assign(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.centers.iter().enumerate() {
            let d = sq_dist(x, c);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Normalized cluster occupancy of `samples`.
    pub fn histogram(&self, samples: &[Vec<f64>]) -> Vec<f64> {
        let labels: Vec<usize> = samples.par_iter().map(|s| self.assign(s)).collect();
        let mut h = vec![0.0; self.k()];
        for l in labels {
            h[l] += 1.0;
        }
        normalize(&h)
    }
}

pub const KMEANS_TOL: f64 = 1e-6;
pub const KMEANS_MAX_ITER: usize = 300;

fn check_samples(samples: &[Vec<f64>]) -> Result<usize> {
    let d = samples.first().ok_or(Error::EmptyDataset)?.len();
    for s in samples {
        check_dim(d, s.len())?;
    }
    Ok(d)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// Samples are put in lexicographic order first, so the model depends on
/// the set of samples and the seed but not on their order.
pub fn fit_kmeans(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansModel> {
    let dim = check_samples(samples)?;
    let mut sorted: Vec<&Vec<f64>> = samples.iter().collect();
    sorted.sort_by(|a, b| lex_cmp(a, b));
    let samples: Vec<&[f64]> = sorted.into_iter().map(|v| v.as_slice()).collect();
    let samples = samples.as_slice();
    if k == 0 {
        return Err(Error::invalid("k-means needs k >= 1"));
    }
    if k > samples.len() {
        return Err(Error::invalid(format!("k = {k} exceeds the {} samples", samples.len())));
    }
    let mut r = rng::stream(seed, 0);
    let mut centers = vec![samples[r.random_range(0..samples.len())].to_vec()];
    let mut d2: Vec<f64> = samples.iter().map(|s| sq_dist(s, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = r.random::<f64>() * total;
            let mut idx = samples.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if t < w {
                    idx = i;
                    break;
                }
                t -= w;
            }
            idx
        } else {
            r.random_range(0..samples.len())
        };
        centers.push(samples[pick].to_vec());
        let c = centers.last().expect("just pushed");
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(sq_dist(s, c));
        }
    }

    let mut model = KMeansModel { centers, iterations: 0 };
    for it in 1..=KMEANS_MAX_ITER {
        let labels: Vec<usize> = samples.par_iter().map(|s| model.assign(s)).collect();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (s, &l) in samples.iter().zip(&labels) {
            counts[l] += 1;
            for (acc, v) in sums[l].iter_mut().zip(s.iter()) {
                *acc += v;
            }
        }
        let mut moved: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|v| v / counts[c] as f64).collect();
            moved = moved.max(sq_dist(&new, &model.centers[c]).sqrt());
            model.centers[c] = new;
        }
        model.iterations = it;
        if moved < KMEANS_TOL {
            break;
        }
    }
    Ok(model)
}

/// JS divergence between cluster occupancies, clusters fitted on `real`.
pub fn jsd_features(real: &[Vec<f64>], fake: &[Vec<f64>], k: usize, seed: u64) -> Result<f64> {
    let model = fit_kmeans(real, k, seed)?;
    if fake.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(model.centers[0].len(), check_samples(fake)?)?;
    js_divergence(&model.histogram(real), &model.histogram(fake))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::invalid("covariance must be square"));
        }
        check_dim(mean.len(), cov.nrows())?;
        Ok(GaussianSummary { mean, cov })
    }

    /// Sample mean and unbiased covariance.
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let d = check_samples(samples)?;
        let n = samples.len();
        let mut mean = DVector::zeros(d);
        for s in samples {
            mean += DVector::from_column_slice(s);
        }
        mean /= n as f64;
        let mut centered = DMatrix::zeros(d, n);
        for (j, s) in samples.iter().enumerate() {
            for i in 0..d {
                centered[(i, j)] = s[i] - mean[i];
            }
        }
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
        let cov = (&centered * centered.transpose()) / denom;
        Ok(GaussianSummary { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal square root of a symmetric PSD matrix; negative eigenvalues
/// are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// `‖μa−μb‖² + Tr(Σa + Σb − 2(ΣaΣb)^{1/2})`.
pub fn frechet_distance(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let sa = psd_sqrt(&a.cov);
    let inner = symmetrize(&(&sa * &b.cov * &sa));
    let tr_sqrt: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum();
    let dm = (&a.mean - &b.mean).norm_squared();
    let fd = dm + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
    if !fd.is_finite() {
        return Err(Error::Numeric("Fréchet distance is not finite".into()));
    }
    Ok(fd.max(0.0))
}

pub fn frechet_distance_samples(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    frechet_distance(&GaussianSummary::from_samples(a)?, &GaussianSummary::from_samples(b)?)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `exp(E_x KL(p(y|x) ‖ p(y)))` with `p(y|x)` the softmax of `classifier`.
pub fn inception_score_analogue(classifier: &Mlp, images: &[Vec<f64>]) -> Result<f64> {
    check_samples(images)?;
    let probs: Vec<Vec<f64>> = images
        .par_iter()
        .map(|x| classifier.forward(x).map(|l| softmax(&l)))
        .collect::<Result<_>>()?;
    let c = classifier.output_dim();
    let mut marginal = vec![0.0; c];
    for p in &probs {
        for (m, v) in marginal.iter_mut().zip(p) {
            *m += v / probs.len() as f64;
        }
    }
    let mut mean_kl = 0.0;
    for p in &probs {
        mean_kl += kl_divergence(p, &marginal)? / probs.len() as f64;
    }
    Ok(mean_kl.exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: vec![128], epochs: 5, batch: 64, lr: 1e-3, seed: 0 }
    }
}

/// Softmax-regression MLP on labelled samples; returns the model and the
/// final training accuracy.
pub fn train_classifier(
    samples: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
    cfg: &ClassifierConfig,
) -> Result<(Mlp, f64)> {
    let d = check_samples(samples)?;
    check_dim(samples.len(), labels.len())?;
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {num_classes} classes")));
    }
    let mut sizes = vec![d];
    sizes.extend(&cfg.hidden);
    sizes.push(num_classes);
    let mut net = Mlp::lecun(&sizes, Activation::leaky(), Activation::Identity, cfg.seed)?;
    let mut opt = AdamState::new(net.param_count(), AdamConfig::new(cfg.lr, 0.9, 0.999));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, 1 + epoch as u64));
        for chunk in order.chunks(cfg.batch.max(1)) {
            let x = DMatrix::from_fn(d, chunk.len(), |i, j| samples[chunk[j]][i]);
            let logits = net.forward_batch(&x)?;
            let mut up = DMatrix::zeros(num_classes, chunk.len());
            for j in 0..chunk.len() {
                let p = softmax(logits.column(j).as_slice());
                for c in 0..num_classes {
                    let y = if labels[chunk[j]] == c { 1.0 } else { 0.0 };
                    up[(c, j)] = (p[c] - y) / chunk.len() as f64;
                }
            }
            let (g, _) = net.backward_batch(&x, &up)?;
            opt.step_slices(net.param_slices_mut(), &g)?;
        }
    }
    let correct = samples
        .iter()
        .zip(labels)
        .filter(|(x, &l)| {
            let logits = net.forward(x).unwrap_or_default();
            argmax(&logits) == l
        })
        .count();
    Ok((net, correct as f64 / samples.len() as f64))
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(kl_divergence_smoothed(&[0.5, 0.5], &[1.0, 0.0], 1e-12).unwrap().is_finite());
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn js_examples() {
        assert_eq!(js_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let v = js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn histogram_clamps_edges() {
        let h = histogram(&[-1.0, 1.0, 0.0, 5.0], 4, -1.0, 1.0);
        assert_eq!(h, vec![0.25, 0.0, 0.25, 0.5]);
    }

    fn blobs(centers: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::stream(seed, 0);
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per {
                let a: f64 = StandardNormal.sample(&mut r);
                let b: f64 = StandardNormal.sample(&mut r);
                out.push(vec![c[0] + spread * a, c[1] + spread * b]);
            }
        }
        out
    }

    #[test]
    fn kmeans_recovers_blobs() {
        let cs = [[0.0, 0.0], [5.0, 5.0], [-5.0, 5.0]];
        let data = blobs(&cs, 100, 0.3, 2);
        let m = fit_kmeans(&data, 3, 7).unwrap();
        for c in &cs {
            let near = m.centers().iter().map(|x| sq_dist(x, c).sqrt()).fold(f64::INFINITY, f64::min);
            assert!(near < 0.3, "{c:?}");
        }
        assert_eq!(m, fit_kmeans(&data, 3, 7).unwrap());
        let one = fit_kmeans(&data, 1, 0).unwrap();
        let mean_x = data.iter().map(|s| s[0]).sum::<f64>() / data.len() as f64;
        assert!((one.centers()[0][0] - mean_x).abs() < 1e-12);
        assert!(fit_kmeans(&data, 0, 0).is_err());
        assert!(fit_kmeans(&[], 2, 0).is_err());
    }

    #[test]
    fn jsd_feature_examples() {
        let data = blobs(&[[0.0, 0.0], [3.0, 0.0]], 50, 0.5, 4);
        assert_eq!(jsd_features(&data, &data, 4, 1).unwrap(), 0.0);
        // every shifted point lands in the single farthest-right cluster
        let shifted: Vec<Vec<f64>> = data.iter().map(|s| vec![s[0] + 1000.0, s[1]]).collect();
        let v = jsd_features(&data, &shifted, 4, 1).unwrap();
        let h = fit_kmeans(&data, 4, 1).unwrap().histogram(&data);
        let mut q = vec![0.0; 4];
        q[fit_kmeans(&data, 4, 1).unwrap().assign(&shifted[0])] = 1.0;
        assert!((v - js_divergence(&h, &q).unwrap()).abs() < 1e-15);
        // a far shift piles every fake sample into one cluster, which tends
        // to ln 2 as the real set spreads over more clusters
        let spread = blobs(&[[0.0, 0.0]], 400, 1.0, 6);
        let gone: Vec<Vec<f64>> = spread.iter().map(|s| vec![s[0] + 1e6, s[1]]).collect();
        let v8 = jsd_features(&spread, &gone, 8, 2).unwrap();
        let v64 = jsd_features(&spread, &gone, 64, 2).unwrap();
        assert!(v8 < v64 && v64 < 2f64.ln() && v64 > 0.85 * 2f64.ln());
    }

    #[test]
    fn frechet_examples() {
        let g = |m: f64, v: f64| GaussianSummary::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, v)).unwrap();
        assert!(frechet_distance(&g(0.0, 1.0), &g(0.0, 1.0)).unwrap().abs() < 1e-12);
        assert!((frechet_distance(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((frechet_distance(&g(0.0, 1.0), &g(0.0, 4.0)).unwrap() - 1.0).abs() < 1e-12);
        let bad = GaussianSummary::new(DVector::zeros(2), DMatrix::zeros(2, 3));
        assert!(bad.is_err());
        let two = GaussianSummary::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!(frechet_distance(&g(0.0, 1.0), &two).is_err());
    }

    #[test]
    fn inception_score_bounds() {
        // constant classifier
        let c = Mlp::zeros(&[3, 4], Activation::Identity, Activation::Identity).unwrap();
        let imgs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!((inception_score_analogue(&c, &imgs).unwrap() - 1.0).abs() < 1e-12);
        // near one-hot classifier with balanced usage
        let mut sharp = Mlp::zeros(&[3, 3], Activation::Identity, Activation::Identity).unwrap();
        let mut p = vec![0.0; 12];
        for i in 0..3 {
            p[i * 3 + i] = 60.0;
        }
        sharp.set_params_flat(&p).unwrap();
        assert!((inception_score_analogue(&sharp, &imgs).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn classifier_learns_blobs() {
        let data = blobs(&[[0.0, 0.0], [4.0, 4.0]], 60, 0.5, 8);
        let labels: Vec<usize> = (0..120).map(|i| i / 60).collect();
        let cfg = ClassifierConfig { hidden: vec![8], epochs: 30, batch: 16, lr: 1e-2, seed: 3 };
        let (_, acc) = train_classifier(&data, &labels, 2, &cfg).unwrap();
        assert!(acc > 0.95);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn js_bounded_and_symmetric(a in proptest::collection::vec(0.0f64..1.0, 6), b in proptest::collection::vec(0.0f64..1.0, 6)) {
            let (p, q) = (normalize(&a), normalize(&b));
            prop_assume!(p.iter().sum::<f64>() > 0.5 && q.iter().sum::<f64>() > 0.5);
            let v = js_divergence(&p, &q).unwrap();
            prop_assert!((-1e-15..=2f64.ln() + 1e-12).contains(&v));
            prop_assert!((v - js_divergence(&q, &p).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn frechet_nonnegative_and_symmetric(seed in any::<u64>()) {
            let mut r = rng::stream(seed, 0);
            let mut draw = || -> Vec<Vec<f64>> {
                (0..40).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
            };
            let (a, b) = (draw(), draw());
            let ab = frechet_distance_samples(&a, &b).unwrap();
            let ba = frechet_distance_samples(&b, &a).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(frechet_distance_samples(&a, &a).unwrap() < 1e-9);
        }

        #[test]
        fn jsd_invariant_under_joint_permutation(seed in any::<u64>(), rot in 1usize..30) {
            let real = blobs(&[[0.0, 0.0], [2.0, 1.0]], 20, 0.6, seed);
            let fake = blobs(&[[0.5, 0.0], [2.0, 2.0]], 20, 0.6, seed ^ 1);
            let base = jsd_features(&real, &fake, 3, 5).unwrap();
            let (mut rr, mut fr) = (real.clone(), fake.clone());
            rr.rotate_left(rot);
            fr.rotate_left(rot);
            rr.reverse();
            let v = jsd_features(&rr, &fr, 3, 5).unwrap();
            prop_assert!((base - v).abs() < 1e-12);
        }
    }
}
