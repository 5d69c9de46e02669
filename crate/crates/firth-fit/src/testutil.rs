//! Shared generators for unit tests. Compiled only under `cfg(test)`.

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::harness::rng::SeededRng;
use crate::link::LinkKind;

/// Random full-rank binomial instance with n <= 8, p <= 3, counts m <= 4,
/// and ||beta|| <= `beta_scale`.
pub(crate) fn random_instance(
    rng: &mut SeededRng,
    beta_scale: f64,
) -> (Dataset, LinkKind, Array1<f64>) {
    let link = LinkKind::ALL[rng.below(3)];
    let (ds, beta) = random_dataset_and_beta(rng, beta_scale);
    (ds, link, beta)
}

pub(crate) fn random_dataset_and_beta(
    rng: &mut SeededRng,
    beta_scale: f64,
) -> (Dataset, Array1<f64>) {
    loop {
        let p = rng.below(3) + 1;
        let n = p + rng.below(8 - p + 1);
        let n = n.max(p).max(2);
        let mut x = Array2::<f64>::zeros((n, p));
        for i in 0..n {
            for j in 0..p {
                x[[i, j]] = rng.uniform(-2.0, 2.0);
            }
        }
        let mut y = Vec::with_capacity(n);
        let mut m = Vec::with_capacity(n);
        for _ in 0..n {
            let mi = 1 + rng.below(4) as u64;
            m.push(mi);
            y.push(rng.below(mi as usize + 1) as u64);
        }
        let Ok(ds) = Dataset::new(x, y, m) else {
            continue;
        };
        // Well-conditioned designs only: a near-singular X makes the
        // factored determinant (though not the subset expansion) lose
        // digits, which would test conditioning rather than correctness.
        if !ds.full_column_rank() || crate::linalg::pivoted_rank(&ds.x(), 1e-2) != p {
            continue;
        }
        let mut beta = Array1::<f64>::zeros(p);
        for j in 0..p {
            beta[j] = rng.uniform(-1.0, 1.0);
        }
        let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let target = rng.uniform(0.0, beta_scale);
            beta.mapv_inplace(|v| v * target / norm);
        }
        return (ds, beta);
    }
}
