//! Deterministic reductions and small statistical helpers.

use serde::{Deserialize, Serialize};

/// Default number of batches for batch-means error bars.
pub const DEFAULT_BATCHES: usize = 16;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so results are bit-reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean with a standard error and the number of samples behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    /// Rescale both mean and error by a constant factor.
    pub fn scaled(self, c: f64) -> Summary {
        Summary {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            n: self.n,
        }
    }

    /// z-score of the difference with another independent estimate.
    pub fn z_against(&self, other: &Summary) -> f64 {
        z_score(self.mean - other.mean, self.stderr.hypot(other.stderr))
    }
}

/// `diff / se`, with the convention 0/0 = 0 and x/0 = ±inf.
pub fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Contiguous near-equal batch boundaries: `batches` ranges covering `0..n`.
pub fn batch_ranges(n: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let b = batches.clamp(1, n.max(1));
    (0..b).map(|i| (i * n / b)..((i + 1) * n / b)).collect()
}

/// Batch-means estimate: overall mean of `xs` and the standard error from the
/// spread of `batches` contiguous batch means.
pub fn batch_means(xs: &[f64], batches: usize) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { mean: 0.0, stderr: 0.0, n: 0 };
    }
    let m = mean(xs);
    let ranges = batch_ranges(n, batches);
    if ranges.len() < 2 {
        return Summary { mean: m, stderr: 0.0, n };
    }
    let bm: Vec<f64> = ranges.iter().map(|r| mean(&xs[r.clone()])).collect();
    let centre = mean(&bm);
    let dev: Vec<f64> = bm.iter().map(|x| (x - centre) * (x - centre)).collect();
    let k = bm.len() as f64;
    let var_of_mean = pairwise_sum(&dev) / (k * (k - 1.0));
    Summary {
        mean: m,
        stderr: var_of_mean.sqrt(),
        n,
    }
}

/// Jackknife over batches of a statistic of several sample columns.
///
/// `columns[j][i]` is the value of column `j` for sample `i`. The statistic
/// receives the per-column means. Returns (full-sample value, jackknife se).
pub fn batch_jackknife<F>(columns: &[Vec<f64>], batches: usize, stat: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = columns.first().map_or(0, Vec::len);
    let full_means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let full = stat(&full_means);
    let ranges = batch_ranges(n, batches);
    if n == 0 || ranges.len() < 2 {
        return (full, 0.0);
    }
    let sums: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| ranges.iter().map(|r| pairwise_sum(&c[r.clone()])).collect())
        .collect();
    let totals: Vec<f64> = sums.iter().map(|s| pairwise_sum(s)).collect();
    let leave_out: Vec<f64> = ranges
        .iter()
        .enumerate()
        .map(|(b, r)| {
            let m = (n - r.len()) as f64;
            let means: Vec<f64> = totals
                .iter()
                .zip(sums.iter())
                .map(|(t, s)| (t - s[b]) / m)
                .collect();
            stat(&means)
        })
        .collect();
    let k = leave_out.len() as f64;
    let centre = mean(&leave_out);
    let dev: Vec<f64> = leave_out.iter().map(|x| (x - centre) * (x - centre)).collect();
    (full, ((k - 1.0) / k * pairwise_sum(&dev)).sqrt())
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Asymptotic 99% critical value of the two-sample KS distance.
pub fn ks_critical_99(na: usize, nb: usize) -> f64 {
    1.628 * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}
