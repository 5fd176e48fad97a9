//! Lloyd's K-means over HSV pixels embedded on the color cone.

use crate::imaging::Hsv;

pub type Feature = [f32; 3];

/// `(s cos h, s sin h, v)`: hue lives on a circle, so the embedding keeps
/// 359 and 1 degrees close.
#[inline]
pub fn embed(c: Hsv) -> Feature {
    let (sin, cos) = c.h.to_radians().sin_cos();
    [c.s * cos, c.s * sin, c.v]
}

#[inline]
pub fn dist2(a: &Feature, b: &Feature) -> f32 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Index of the nearest centroid; the lowest index wins ties.
#[inline]
pub fn nearest(f: &Feature, centroids: &[Feature]) -> usize {
    let mut best = 0;
    let mut best_d = f32::INFINITY;
    for (k, c) in centroids.iter().enumerate() {
        let d = dist2(f, c);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Feature>,
    pub assignment: Vec<u8>,
    /// Centroid updates performed.
    pub iterations: u32,
    /// Sum of squared distances after each update.
    pub objective: Vec<f64>,
}

fn objective(features: &[Feature], assignment: &[u8], centroids: &[Feature]) -> f64 {
    features
        .iter()
        .zip(assignment)
        .map(|(f, &a)| dist2(f, &centroids[a as usize]) as f64)
        .sum()
}

/// Runs at most `max_iters` assignment/update rounds from `init`, stopping
/// early once an assignment pass changes nothing. Empty clusters keep their
/// previous centroid.
pub fn kmeans(features: &[Feature], init: &[Feature], max_iters: u32) -> KMeansResult {
    assert!(!init.is_empty() && init.len() <= u8::MAX as usize);
    let k = init.len();
    let mut centroids = init.to_vec();
    let mut assignment = vec![u8::MAX; features.len()];
    let mut iterations = 0;
    let mut trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for (f, a) in features.iter().zip(assignment.iter_mut()) {
            let n = nearest(f, &centroids) as u8;
            if *a != n {
                *a = n;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![[0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (f, &a) in features.iter().zip(&assignment) {
            let s = &mut sums[a as usize];
            s[0] += f[0] as f64;
            s[1] += f[1] as f64;
            s[2] += f[2] as f64;
            counts[a as usize] += 1;
        }
        for ((c, s), &n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                *c = s.map(|v| (v / n as f64) as f32);
            }
        }
        iterations += 1;
        trace.push(objective(features, &assignment, &centroids));
    }
    KMeansResult {
        centroids,
        assignment,
        iterations,
        objective: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedding_respects_hue_seam() {
        let a = embed(Hsv::new(359.0, 1.0, 1.0));
        let b = embed(Hsv::new(1.0, 1.0, 1.0));
        let c = embed(Hsv::new(20.0, 1.0, 1.0));
        assert!(dist2(&a, &b) < dist2(&b, &c));
    }

    #[test]
    fn separated_blobs_converge_in_one_update() {
        let init = [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
        let features: Vec<Feature> = (0..20)
            .map(|i| if i % 2 == 0 { [0.01, 0.0, 0.0] } else { [0.99, 1.0, 1.0] })
            .collect();
        let r = kmeans(&features, &init, 20);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.assignment.iter().filter(|&&a| a == 1).count(), 10);
    }

    proptest! {
        #[test]
        fn objective_never_increases(seed in any::<u64>(), n in 1usize..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let features: Vec<Feature> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let init: Vec<Feature> = (0..8).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let r = kmeans(&features, &init, 20);
            prop_assert!(r.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + 1e-9));
            prop_assert!(r.iterations <= 20);
            prop_assert_eq!(r.assignment.len(), n);
        }
    }
}
