//! Two-sample rank statistics.

use statrs::distribution::{ContinuousCDF, Normal};

/// Combined sample size up to which the exact null distribution is used.
pub const EXACT_THRESHOLD: usize = 12;

/// Result of a two-tailed Mann-Whitney U test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-tailed p-value in (0, 1].
    pub p: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, with the tie group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Two-tailed Mann-Whitney U test with the default exact/approximate cutoff.
///
/// # Panics
/// If either sample is empty.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    mann_whitney_u_with(a, b, EXACT_THRESHOLD)
}

/// As [`mann_whitney_u`], enumerating exactly while `|a| + |b| <= exact_up_to`.
pub fn mann_whitney_u_with(a: &[f64], b: &[f64], exact_up_to: usize) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples must be non-empty");
    let n1 = a.len();
    let n2 = b.len();
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let (p, exact) = if n <= exact_up_to {
        (exact_p(&ranks, n1), true)
    } else {
        (normal_p(u, n1, n2, &ties), false)
    };
    MannWhitney {
        u,
        p: p.clamp(f64::MIN_POSITIVE, 1.0),
        exact,
    }
}

/// Probability, over all equally likely assignments of the pooled ranks to
/// the first sample, of a rank sum at least as far from its mean as observed.
fn exact_p(ranks: &[f64], n1: usize) -> f64 {
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let observed: usize = doubled[..n1].iter().sum();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; n1 + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for k in (1..=n1).rev() {
            for s in (r..=max_sum).rev() {
                let c = counts[k - 1][s - r];
                if c > 0 {
                    counts[k][s] += c;
                }
            }
        }
    }
    let n = ranks.len();
    let centre = (n1 * (n + 1)) as i64; // twice the mean rank sum
    let dev = (observed as i64 - centre).abs();
    let mut extreme = 0u128;
    let mut total = 0u128;
    for (s, &c) in counts[n1].iter().enumerate() {
        total += c;
        if (s as i64 - centre).abs() >= dev {
            extreme += c;
        }
    }
    extreme as f64 / total as f64
}

fn normal_p(u: f64, n1: usize, n2: usize, ties: &[usize]) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let mean = n1f * n2f / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::standard();
    (2.0 * std.sf(z)).min(1.0)
}

/// Median of the finite values; `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.to_vec();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}
