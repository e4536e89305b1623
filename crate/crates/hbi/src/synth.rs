//! Synthetic clustered datasets with uniform random attributes.

use hbi_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Isotropic Gaussian mixture with unit-variance clusters around centers
/// drawn uniformly from `[-CENTER_SPREAD, CENTER_SPREAD]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    centers: Vec<Vec<f32>>,
}

const CENTER_SPREAD: f32 = 4.0;

impl GaussianMixture {
    pub fn new(dim: usize, clusters: usize, seed: u64) -> Result<Self> {
        if dim == 0 || clusters == 0 {
            return Err(Error::Usage(
                "dimension and cluster count must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = if clusters == 1 {
            vec![vec![0.0; dim]]
        } else {
            (0..clusters)
                .map(|_| {
                    (0..dim)
                        .map(|_| rng.random_range(-CENTER_SPREAD..CENTER_SPREAD))
                        .collect()
                })
                .collect()
        };
        Ok(Self { dim, centers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f32>> {
        let unit = Normal::new(0.0f32, 1.0).expect("unit normal");
        (0..count)
            .map(|_| {
                let c = &self.centers[rng.random_range(0..self.centers.len())];
                c.iter().map(|&x| x + unit.sample(rng)).collect()
            })
            .collect()
    }
}

/// A synthesized dataset together with its raw attributes, in rank order.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// `attributes[i]` is the raw attribute of the point at rank `i + 1`.
    pub attributes: Vec<f64>,
    pub mixture: GaussianMixture,
}

/// `n` mixture points with uniform `[0, 1)` attributes, re-ranked.
pub fn synthesize_dataset(n: usize, dim: usize, clusters: usize, seed: u64) -> Result<Synthetic> {
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    let mixture = GaussianMixture::new(dim, clusters, seed)?;
    let mut point_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let rows = mixture.sample(n, &mut point_rng);
    let mut attr_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let raw: Vec<f64> = (0..n).map(|_| attr_rng.random::<f64>()).collect();
    let label = format!("synthetic n={n} dim={dim} clusters={clusters} seed={seed}");
    let dataset = Dataset::from_attributed_rows(&rows, &raw, label)?;
    let mut attributes = raw;
    attributes.sort_by(f64::total_cmp);
    Ok(Synthetic {
        dataset,
        attributes,
        mixture,
    })
}

/// Query vectors drawn from the same mixture as the dataset.
pub fn synthesize_queries(mixture: &GaussianMixture, count: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517E_C0DE);
    mixture.sample(count, &mut rng)
}

/// Query vectors for a dataset without a known generator: random rows with
/// small Gaussian noise.
pub fn perturbed_rows(dataset: &Dataset, count: usize, noise: f32, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0f32, noise.max(f32::MIN_POSITIVE)).expect("valid normal");
    (0..count)
        .map(|_| {
            let rank = rng.random_range(1..=dataset.len() as u32);
            dataset
                .vector(rank)
                .iter()
                .map(|&x| x + jitter.sample(&mut rng))
                .collect()
        })
        .collect()
}
