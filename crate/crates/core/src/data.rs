//! Labelled datasets: generators for two-spirals, Gaussian feature blobs and
//! circuit-labelled qubit tasks, plus deterministic mini-batching.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::circuit::BareCircuit;
use crate::error::{Error, Result};
use crate::math;

/// Row-major `n_samples × width` features with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    width: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(
        width: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if width == 0 {
            return Err(Error::Dataset("feature width must be positive".into()));
        }
        if n_classes == 0 {
            return Err(Error::Dataset("n_classes must be positive".into()));
        }
        if features.len() != width * labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature values for {} rows of width {width}",
                features.len(),
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::Dataset(format!(
                "row {i}: label {l} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            width,
            features,
            labels,
            n_classes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features
            .chunks_exact(self.width)
            .zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Replaces every row by `f(row)`, keeping the labels.
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let mut features = Vec::new();
        let mut width = None;
        for (row, _) in self.rows() {
            let mapped = f(row)?;
            match width {
                None => width = Some(mapped.len()),
                Some(w) if w != mapped.len() => {
                    return Err(Error::Dataset("mapped rows have differing widths".into()))
                }
                _ => {}
            }
            features.extend(mapped);
        }
        Dataset::new(
            width.unwrap_or(self.width),
            features,
            self.labels.clone(),
            self.n_classes,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralsConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub turns: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SpiralsConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 200,
            turns: 1.0,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

/// Smallest radial parameter; keeps the two arms apart at the centre.
pub const SPIRAL_T_MIN: f64 = 0.05;

/// A single noiseless spiral point for class `class` at parameter `t`.
pub fn spiral_point(t: f64, class: usize, turns: f64) -> [f64; 2] {
    let theta = 2.0 * PI * turns * t + PI * class as f64;
    [t * math::cos(theta), t * math::sin(theta)]
}

/// Two interleaved Archimedean spirals offset by π. Samples alternate
/// between the classes; train rows are drawn before test rows from one
/// seeded stream.
pub fn gen_spirals(config: &SpiralsConfig) -> Result<(Dataset, Dataset)> {
    if config.n_train == 0 || config.n_test == 0 {
        return Err(Error::Config(
            "spiral sample counts must be positive".into(),
        ));
    }
    if config.noise_sigma < 0.0 || !config.noise_sigma.is_finite() {
        return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
    }
    if !config.turns.is_finite() {
        return Err(Error::Config("turns must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |n: usize| -> Result<Dataset> {
        let mut features = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            // (t_min, 1]
            let t = 1.0 - rng.random::<f64>() * (1.0 - SPIRAL_T_MIN);
            let [px, py] = spiral_point(t, class, config.turns);
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            features.push(px + config.noise_sigma * e1);
            features.push(py + config.noise_sigma * e2);
            labels.push(class);
        }
        Dataset::new(2, features, labels, 2)
    };
    let train = draw(config.n_train)?;
    let test = draw(config.n_test)?;
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobsConfig {
    pub width: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Distance between the two class means.
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Unit direction along which the blob means are placed: `𝟙/√width`.
pub fn blob_direction(width: usize) -> Vec<f64> {
    let c = 1.0 / math::sqrt(width as f64);
    alloc::vec![c; width]
}

/// Two isotropic Gaussian classes with means `±(separation/2)·u`,
/// `u = 𝟙/√width`. Labels alternate 0, 1, 0, …
pub fn gen_feature_blobs(config: &BlobsConfig) -> Result<(Dataset, Dataset)> {
    if config.width == 0 {
        return Err(Error::Config("blob width must be >= 1".into()));
    }
    if config.n_train == 0 || config.n_test == 0 {
        return Err(Error::Config("blob sample counts must be positive".into()));
    }
    if config.sigma < 0.0
        || config.sigma.is_nan()
        || !config.separation.is_finite()
        || !config.sigma.is_finite()
    {
        return Err(Error::Config("blob sigma/separation invalid".into()));
    }
    let u = blob_direction(config.width);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |n: usize| -> Result<Dataset> {
        let mut features = Vec::with_capacity(n * config.width);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let sign = if class == 0 { -1.0 } else { 1.0 };
            for &uj in &u {
                let e: f64 = rng.sample(StandardNormal);
                features.push(sign * config.separation / 2.0 * uj + config.sigma * e);
            }
            labels.push(class);
        }
        Dataset::new(config.width, features, labels, 2)
    };
    let train = draw(config.n_train)?;
    let test = draw(config.n_test)?;
    Ok((train, test))
}

/// `n` points drawn uniformly from `[-1, 1]^width`.
pub fn uniform_inputs<R: Rng + ?Sized>(n: usize, width: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..width).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Balanced binary task on uniform qubit inputs labelled by a teacher
/// circuit: class 1 when the teacher's `⟨Z⟩` on `readout` is negative.
/// Inputs are rejection-sampled so rows alternate between the classes.
pub fn gen_circuit_task(
    teacher: &BareCircuit,
    readout: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if readout >= teacher.n_qubits() {
        return Err(Error::Index {
            index: readout,
            n_qubits: teacher.n_qubits(),
        });
    }
    if n_train == 0 || n_test == 0 {
        return Err(Error::Config("task sample counts must be positive".into()));
    }
    let n = teacher.n_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Result<Dataset> {
        let mut pools: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        let wanted = [count.div_ceil(2), count / 2];
        let max_attempts = 1000 * count;
        let mut attempts = 0;
        while pools[0].len() < wanted[0] || pools[1].len() < wanted[1] {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::Config(format!(
                    "teacher circuit too unbalanced to draw {count} balanced samples"
                )));
            }
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let label = usize::from(teacher.run(&x)?[readout] < 0.0);
            if pools[label].len() < wanted[label] {
                pools[label].push(x);
            }
        }
        let mut features = Vec::with_capacity(count * n);
        let mut labels = Vec::with_capacity(count);
        let [mut zeros, mut ones] = pools.map(|p| p.into_iter());
        for i in 0..count {
            let class = i % 2;
            let x = if class == 0 {
                zeros.next()
            } else {
                ones.next()
            };
            features.extend(x.expect("pool sized for its class"));
            labels.push(class);
        }
        Dataset::new(n, features, labels, 2)
    };
    let train = draw(n_train)?;
    let test = draw(n_test)?;
    Ok((train, test))
}

/// A teacher circuit with angles uniform in `[-spread, spread]`.
pub fn random_teacher<R: Rng + ?Sized>(
    n_qubits: usize,
    depth: usize,
    spread: f64,
    rng: &mut R,
) -> Result<BareCircuit> {
    let w = (0..n_qubits * depth)
        .map(|_| rng.random_range(-spread..=spread))
        .collect();
    BareCircuit::new(n_qubits, depth, w)
}

/// Two related teacher-labelled tasks: task A is labelled by a random
/// circuit of depth `shared_depth`; task B's teacher repeats A's layers and
/// appends `extra_depth` layers with angles in `[-extra_spread, extra_spread]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelatedTasksConfig {
    pub n_qubits: usize,
    pub shared_depth: usize,
    pub extra_depth: usize,
    pub extra_spread: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl RelatedTasksConfig {
    pub fn new(n_qubits: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            shared_depth: 2,
            extra_depth: 2,
            extra_spread: 0.5,
            n_train: 400,
            n_test: 200,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelatedTasks {
    pub teacher_a: BareCircuit,
    pub teacher_b: BareCircuit,
    pub task_a: (Dataset, Dataset),
    pub task_b: (Dataset, Dataset),
}

/// Both tasks read out qubit 0.
pub fn gen_related_tasks(config: &RelatedTasksConfig) -> Result<RelatedTasks> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let teacher_a = random_teacher(config.n_qubits, config.shared_depth, PI, &mut rng)?;
    let extra = random_teacher(
        config.n_qubits,
        config.extra_depth,
        config.extra_spread,
        &mut rng,
    )?;
    let mut w = teacher_a.weights().to_vec();
    w.extend_from_slice(extra.weights());
    let teacher_b = BareCircuit::new(config.n_qubits, config.shared_depth + config.extra_depth, w)?;
    let task_a = gen_circuit_task(
        &teacher_a,
        0,
        config.n_train,
        config.n_test,
        epoch_seed(config.seed, 2),
    )?;
    let task_b = gen_circuit_task(
        &teacher_b,
        0,
        config.n_train,
        config.n_test,
        epoch_seed(config.seed, 3),
    )?;
    Ok(RelatedTasks {
        teacher_a,
        teacher_b,
        task_a,
        task_b,
    })
}

/// A task that is linear in the read-outs of `extractor`: uniform inputs are
/// labelled by `a·f(x) > b`, with `a` uniform in `[-1, 1]^n` and `b` the
/// median score, so classes are balanced. Returns `(train, test, a, b)`.
pub fn gen_linear_feature_task(
    extractor: &BareCircuit,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset, Vec<f64>, f64)> {
    let n = extractor.n_qubits();
    let total = n_train + n_test;
    if n_train == 0 || n_test == 0 {
        return Err(Error::Config("sample counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let xs = uniform_inputs(total, n, &mut rng);
    let mut scores = Vec::with_capacity(total);
    for x in &xs {
        let f = extractor.run(x)?;
        scores.push(f.iter().zip(&a).map(|(f, w)| f * w).sum::<f64>());
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let b = (sorted[(total - 1) / 2] + sorted[total / 2]) / 2.0;
    let labels: Vec<usize> = scores.iter().map(|&s| usize::from(s > b)).collect();
    let features = xs.concat();
    let train = Dataset::new(
        n,
        features[..n_train * n].to_vec(),
        labels[..n_train].to_vec(),
        2,
    )?;
    let test = Dataset::new(
        n,
        features[n_train * n..].to_vec(),
        labels[n_train..].to_vec(),
        2,
    )?;
    Ok((train, test, a, b))
}

/// Gaussian draw helper used by generators that need `N(0, σ²)` samples.
pub fn normal_samples<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("{e}")))?;
    Ok((0..n).map(|_| normal.sample(rng)).collect())
}

/// A deterministic permutation of `0..dataset.len()` split into chunks of
/// `batch_size`; the final short chunk is kept.
pub fn batches(dataset: &Dataset, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    index_batches(dataset.len(), batch_size, epoch_seed)
}

pub fn index_batches(n: usize, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    let batch_size = batch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed);
    order.shuffle(&mut rng);
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}

/// Per-epoch shuffle seed derived from a run seed: the `epoch`-th ChaCha
/// stream keyed by `seed`.
pub fn epoch_seed(seed: u64, epoch: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dataset_invariants() {
        assert!(Dataset::new(2, vec![0.0; 4], vec![0, 1], 2).is_ok());
        assert!(Dataset::new(2, vec![0.0; 3], vec![0, 1], 2).is_err());
        assert!(Dataset::new(2, vec![0.0; 4], vec![0, 2], 2).is_err());
        assert!(Dataset::new(0, vec![], vec![], 2).is_err());
    }

    #[test]
    fn default_spirals() {
        let (train, test) = gen_spirals(&SpiralsConfig::default()).unwrap();
        assert_eq!((train.len(), test.len()), (2000, 200));
        for ds in [&train, &test] {
            let c = ds.class_counts();
            assert!(c[0].abs_diff(c[1]) <= 1);
            assert!(ds.features().iter().all(|v| v.abs() < 1.5));
        }
    }

    #[test]
    fn spiral_origin_degeneracy() {
        assert_eq!(spiral_point(0.0, 0, 1.5), [0.0, 0.0]);
        let p1 = spiral_point(0.0, 1, 1.5);
        assert!(p1[0].abs() < 1e-15 && p1[1].abs() < 1e-15);
        // generated t never reaches the origin
        let cfg = SpiralsConfig {
            noise_sigma: 0.0,
            ..SpiralsConfig::default()
        };
        let (train, _) = gen_spirals(&cfg).unwrap();
        for (row, _) in train.rows() {
            let r = math::sqrt(row[0] * row[0] + row[1] * row[1]);
            assert!((SPIRAL_T_MIN - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn spirals_deterministic_and_validated() {
        let cfg = SpiralsConfig {
            seed: 4,
            ..SpiralsConfig::default()
        };
        assert_eq!(gen_spirals(&cfg).unwrap(), gen_spirals(&cfg).unwrap());
        let other = SpiralsConfig { seed: 5, ..cfg };
        assert_ne!(gen_spirals(&cfg).unwrap(), gen_spirals(&other).unwrap());
        assert!(gen_spirals(&SpiralsConfig { n_train: 0, ..cfg }).is_err());
        assert!(gen_spirals(&SpiralsConfig {
            noise_sigma: -1.0,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn blob_shapes() {
        let cfg = BlobsConfig {
            width: 512,
            n_train: 245,
            n_test: 153,
            separation: 1.0,
            sigma: 1.0,
            seed: 1,
        };
        let (train, test) = gen_feature_blobs(&cfg).unwrap();
        assert_eq!((train.len(), test.len(), train.width()), (245, 153, 512));
        assert!(gen_feature_blobs(&BlobsConfig { width: 0, ..cfg }).is_err());
    }

    #[test]
    fn batch_chunks() {
        let sizes: Vec<usize> = index_batches(25, 10, 3).iter().map(|b| b.len()).collect();
        assert_eq!(sizes, [10, 10, 5]);
        let singles = index_batches(7, 1, 3);
        assert_eq!(singles.len(), 7);
        let mut seen: Vec<usize> = singles.into_iter().flatten().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
        assert_eq!(index_batches(30, 4, 9), index_batches(30, 4, 9));
        assert_ne!(epoch_seed(1, 0), epoch_seed(1, 1));
    }

    #[test]
    fn circuit_task_labels_follow_teacher() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let teacher = random_teacher(2, 2, PI, &mut rng).unwrap();
        let (train, _) = gen_circuit_task(&teacher, 0, 50, 10, 3).unwrap();
        for (x, label) in train.rows() {
            let z = teacher.run(x).unwrap()[0];
            assert_eq!(label, usize::from(z < 0.0));
        }
        assert_eq!(train.class_counts(), [25, 25]);
        assert!(gen_circuit_task(&teacher, 2, 5, 5, 0).is_err());
    }

    #[test]
    fn related_tasks_share_layers() {
        let tasks = gen_related_tasks(&RelatedTasksConfig::new(3, 4)).unwrap();
        assert_eq!(tasks.teacher_b.depth(), 4);
        assert_eq!(&tasks.teacher_b.weights()[..6], tasks.teacher_a.weights());
        assert_eq!(tasks.task_a.0.class_counts(), [200, 200]);
        assert_eq!(tasks.task_b.1.class_counts(), [100, 100]);
        assert_eq!(
            tasks,
            gen_related_tasks(&RelatedTasksConfig::new(3, 4)).unwrap()
        );
    }

    #[test]
    fn linear_feature_task_is_separable_by_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ext = random_teacher(3, 2, PI, &mut rng).unwrap();
        let (train, test, a, b) = gen_linear_feature_task(&ext, 40, 20, 5).unwrap();
        for (x, label) in train.rows().chain(test.rows()) {
            let s: f64 = ext.run(x).unwrap().iter().zip(&a).map(|(f, w)| f * w).sum();
            assert_eq!(label, usize::from(s > b));
        }
        let ones: usize = train.class_counts()[1] + test.class_counts()[1];
        assert_eq!(ones, 30);
    }

    #[test]
    fn map_rows_keeps_labels() {
        let ds = Dataset::new(2, vec![1.0, 2.0, 3.0, 4.0], vec![1, 0], 2).unwrap();
        let mapped = ds.map_rows(|r| Ok(vec![r[0] + r[1]])).unwrap();
        assert_eq!(mapped.features(), [3.0, 7.0]);
        assert_eq!(mapped.labels(), [1, 0]);
    }
}
