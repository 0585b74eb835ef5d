//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use attribkit::{Classifier, Record, Tensor};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Channel-level Shapley values by visiting every subset of the other
/// channels and evaluating the coalition value from scratch each time.
pub fn shapley_by_subsets<C: Classifier>(
    model: &C,
    x: &Record,
    background: &[Tensor],
    class: usize,
) -> Vec<f64> {
    let n = x.n_channels();
    let value = |members: &[usize]| -> f64 {
        let mut total = 0.0;
        for b in background {
            let mut z = b.clone();
            for &c in members {
                z.row_mut(c).copy_from_slice(x.values().row(c));
            }
            total += model.logit(&z, class).unwrap();
        }
        total / background.len() as f64
    };
    let mut phi = vec![0.0; n];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let others: Vec<usize> = (0..n).filter(|&c| c != i).collect();
        for subset in 0..1u32 << others.len() {
            let members: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(k, _)| subset >> k & 1 == 1)
                .map(|(_, &c)| c)
                .collect();
            let s = members.len();
            let weight = factorial(s) * factorial(n - s - 1) / factorial(n);
            let mut with = members.clone();
            with.push(i);
            *phi_i += weight * (value(&with) - value(&members));
        }
    }
    phi
}

/// Ranks by counting: rank = 1 + #smaller + (#equal − 1)/2.
fn count_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let smaller = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Spearman correlation as the Pearson correlation of counted ranks,
/// computed with the textbook covariance formula.
pub fn spearman_by_counting(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (count_ranks(a), count_ranks(b));
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| (x - mean) * (y - mean))
        .sum();
    let va: f64 = ra.iter().map(|x| (x - mean).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mean).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}
