use fx_tails_core::clustering::{agglomerate, max_cluster_cut, Linkage};
use fx_tails_core::ingest::synthetic::{normal_sample, student_t_sample};
use fx_tails_core::returns::{normalize_returns, ReturnSeries};
use fx_tails_core::similarity::{distance_matrix, BinningMode, DEFAULT_BINS};

/// Gaussian, t(3) and t(1.5) returns, normalized.
fn class_sample(class: usize, n: usize, seed: u64) -> Vec<f64> {
    let raw = match class {
        0 => normal_sample(n, seed),
        1 => student_t_sample(3.0, n, seed),
        _ => student_t_sample(1.5, n, seed),
    };
    normalize_returns(&ReturnSeries {
        values: raw,
        horizon: 1,
    })
    .unwrap()
    .values
}

/// Trials (of 20) where the max cut finds exactly three clusters of two or
/// more, each drawn from a single class.
fn recovered(n: usize, mode: BinningMode) -> usize {
    (0..20u64)
        .filter(|trial| {
            let samples: Vec<(String, Vec<f64>)> = (0..9)
                .map(|i| {
                    (
                        format!("K{}_{}", i / 3, i % 3),
                        class_sample(i / 3, n, 1000 * trial + i as u64),
                    )
                })
                .collect();
            let m = distance_matrix(&samples, DEFAULT_BINS, mode).unwrap().matrix;
            let cut = max_cluster_cut(&agglomerate(&m, Linkage::Complete).unwrap());
            let pure = cut
                .clusters
                .iter()
                .filter(|c| c.len() >= 2)
                .all(|c| c.iter().all(|code| code[..2] == c[0][..2]));
            cut.n_nontrivial == 3 && pure
        })
        .count()
}

#[test]
fn long_samples_recover_all_classes() {
    assert!(recovered(20_000, BinningMode::PerPair) >= 19);
}

#[test]
fn panel_length_samples_mostly_recover_classes() {
    let per_pair = recovered(6033, BinningMode::PerPair);
    let global = recovered(6033, BinningMode::Global);
    assert!(per_pair >= 12, "per-pair binning recovered {per_pair}/20");
    assert!(global >= 19, "global binning recovered {global}/20");
}
