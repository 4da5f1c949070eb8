//! Seeded Gaussian blobs on the unit sphere.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{FeatureMatrix, LabelVector};

/// Centroids are rejected while their inner product with an earlier
/// centroid is at or above this.
pub const MAX_CENTROID_SIMILARITY: f64 = 0.5;
/// Rejections allowed per centroid before giving up.
pub const MAX_CENTROID_ATTEMPTS: usize = 100_000;
/// Noise multiplier applied to outlier samples.
pub const OUTLIER_NOISE_SCALE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassSize {
    Fixed(usize),
    /// Uniform in `min..=max`.
    Range {
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub samples_per_class: ClassSize,
    pub d: usize,
    pub intra_class_std: f64,
    pub seed: u64,
    /// Fraction of samples drawn with tripled noise, in `[0, 0.2]`.
    pub outlier_fraction: f64,
}

impl Default for BlobSpec {
    /// 50 classes of 20 samples in 64 dimensions, noise 0.05.
    fn default() -> Self {
        Self {
            num_classes: 50,
            samples_per_class: ClassSize::Fixed(20),
            d: 64,
            intra_class_std: 0.05,
            seed: 0,
            outlier_fraction: 0.0,
        }
    }
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        let sizes_ok = match self.samples_per_class {
            ClassSize::Fixed(s) => s >= 1,
            ClassSize::Range { min, max } => min >= 1 && min <= max,
        };
        if self.num_classes < 2
            || !sizes_ok
            || self.d == 0
            || !(self.intra_class_std > 0.0 && self.intra_class_std.is_finite())
            || !(0.0..=0.2).contains(&self.outlier_fraction)
        {
            return Err(Error::InvalidConfig("invalid blob parameters".into()));
        }
        Ok(())
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum());
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Class centroids drawn uniformly on the sphere with pairwise inner product
/// below [`MAX_CENTROID_SIMILARITY`].
pub fn sample_centroids(rng: &mut ChaCha8Rng, num_classes: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        let mut attempts = 0;
        loop {
            if attempts == MAX_CENTROID_ATTEMPTS {
                return Err(Error::CentroidSamplingFailed { class, attempts });
            }
            attempts += 1;
            let c = unit_gaussian(rng, d);
            let separated =
                centroids.iter().all(|o| o.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>() < MAX_CENTROID_SIMILARITY);
            if separated {
                centroids.push(c);
                break;
            }
        }
    }
    Ok(centroids)
}

/// Generates unit-norm samples around random centroids, grouped by class.
pub fn generate_blobs(spec: &BlobSpec) -> Result<(FeatureMatrix, LabelVector)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centroids = sample_centroids(&mut rng, spec.num_classes, spec.d)?;
    let sizes: Vec<usize> = (0..spec.num_classes)
        .map(|_| match spec.samples_per_class {
            ClassSize::Fixed(s) => s,
            ClassSize::Range { min, max } => rng.random_range(min..=max),
        })
        .collect();
    let n: usize = sizes.iter().sum();
    let num_outliers = libm::round(spec.outlier_fraction * n as f64) as usize;
    let mut is_outlier = vec![false; n];
    for i in index::sample(&mut rng, n, num_outliers) {
        is_outlier[i] = true;
    }

    let mut data = Vec::with_capacity(n * spec.d);
    let mut labels = Vec::with_capacity(n);
    let mut sample = vec![0.0f64; spec.d];
    let mut i = 0;
    for (class, (centroid, &size)) in centroids.iter().zip(&sizes).enumerate() {
        for _ in 0..size {
            let std = if is_outlier[i] { spec.intra_class_std * OUTLIER_NOISE_SCALE } else { spec.intra_class_std };
            for (s, &c) in sample.iter_mut().zip(centroid) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *s = c + std * z;
            }
            let norm = libm::sqrt(sample.iter().map(|x| x * x).sum());
            data.extend(sample.iter().map(|&x| (x / norm) as f32));
            labels.push(class as i64);
            i += 1;
        }
    }
    Ok((FeatureMatrix::new(n, spec.d, data)?, LabelVector::new(labels)?))
}
