//! One-dimensional k-means for turning power traces into device states.

use alloc::vec::Vec;

const MAX_ITERATIONS: usize = 500;
const TOLERANCE_W: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Clusters {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// Midpoints between adjacent centroids; `centroids.len() - 1` entries.
    pub boundaries: Vec<f64>,
    pub iterations: usize,
}

impl Clusters {
    /// Index of the cluster a reading falls in.
    pub fn classify(&self, watts: f64) -> usize {
        self.boundaries.partition_point(|b| *b < watts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("need at least {k} distinct sample values, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("cluster count must be positive")]
    ZeroClusters,
    #[error("samples must be finite")]
    NonFinite,
}

/// Lloyd's iteration on the real line. Initial centers sit at the minimum,
/// the maximum and evenly spaced quantiles between them, so the result does
/// not depend on sample order.
pub fn kmeans_1d(samples: &[f64], k: usize) -> Result<Clusters, ProfileError> {
    if k == 0 {
        return Err(ProfileError::ZeroClusters);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(ProfileError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    if sorted.is_empty() || distinct < k {
        return Err(ProfileError::TooFewDistinct {
            k,
            distinct: if sorted.is_empty() { 0 } else { distinct },
        });
    }
    let n = sorted.len();
    let mut centroids: Vec<f64> = if k == 1 {
        alloc::vec![sorted[n / 2]]
    } else {
        (0..k).map(|j| sorted[j * (n - 1) / (k - 1)]).collect()
    };
    // Quantile picks can coincide on heavily repeated values; spread those
    // over the distinct values instead.
    if centroids.windows(2).any(|w| w[0] == w[1]) {
        let mut uniq = sorted.clone();
        uniq.dedup();
        let u = uniq.len();
        centroids = (0..k)
            .map(|j| uniq[if k == 1 { u / 2 } else { j * (u - 1) / (k - 1) }])
            .collect();
    }

    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = alloc::vec![0.0; k];
        let mut counts = alloc::vec![0usize; k];
        for &x in &sorted {
            let c = nearest(&centroids, x);
            sums[c] += x;
            counts[c] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if counts[j] > 0 {
                let next = sums[j] / counts[j] as f64;
                shift = shift.max((next - centroids[j]).abs());
                centroids[j] = next;
            }
        }
        if shift < TOLERANCE_W {
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    let boundaries = centroids.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    Ok(Clusters {
        centroids,
        boundaries,
        iterations,
    })
}

fn nearest(centroids: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (j, c) in centroids.iter().enumerate().skip(1) {
        if (x - c).abs() < (x - centroids[best]).abs() {
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_clear_groups() {
        let c = kmeans_1d(&[1.0, 2.0, 3.0, 100.0, 101.0, 102.0], 2).unwrap();
        assert_eq!(c.centroids, vec![2.0, 101.0]);
        assert_eq!(c.boundaries, vec![51.5]);
        assert_eq!(c.classify(51.0), 0);
        assert_eq!(c.classify(52.0), 1);
    }

    #[test]
    fn constant_trace() {
        let c = kmeans_1d(&[7.5; 20], 1).unwrap();
        assert_eq!(c.centroids, vec![7.5]);
        assert!(c.boundaries.is_empty());
        assert_eq!(
            kmeans_1d(&[7.5; 20], 2),
            Err(ProfileError::TooFewDistinct { k: 2, distinct: 1 })
        );
    }

    #[test]
    fn bimodal_display_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut trace = Vec::new();
        for _ in 0..4000 {
            trace.push(0.63 + rng.random_range(-0.05..0.05));
        }
        for _ in 0..2500 {
            trace.push(36.36 + rng.random_range(-1.5..1.5));
        }
        let c = kmeans_1d(&trace, 2).unwrap();
        assert!((c.centroids[0] - 0.63).abs() < 0.05 * 0.63);
        assert!((c.centroids[1] - 36.36).abs() < 0.05 * 36.36);

        trace.shuffle(&mut rng);
        assert_eq!(kmeans_1d(&trace, 2).unwrap(), c);
    }

    #[test]
    fn repeated_values_still_get_distinct_seeds() {
        let mut v = vec![0.0; 50];
        v.push(10.0);
        v.push(11.0);
        let c = kmeans_1d(&v, 3).unwrap();
        assert_eq!(c.centroids, vec![0.0, 10.0, 11.0]);
    }
}
