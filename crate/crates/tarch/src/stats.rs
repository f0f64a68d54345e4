//! Small numeric helpers shared across modules: compensated summation,
//! batch-means standard errors, log-sum-exp, KS distances and a least-squares
//! slope fit.

/// Kahan-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Mean and standard error of the mean for i.i.d.-like samples.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = KahanSum::new();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let mut v = KahanSum::new();
    for &x in xs {
        v.add((x - mean) * (x - mean));
    }
    let var = v.value() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Batch-means standard error for an ergodic average of a dependent sequence.
///
/// Splits `xs` into `batches` contiguous batches (trailing remainder dropped)
/// and returns (mean over used samples, stderr of the batch means).
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    assert!(batches >= 2, "need at least 2 batches");
    let m = xs.len() / batches;
    assert!(m >= 1, "not enough samples for {batches} batches");
    let used = m * batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let mut s = KahanSum::new();
            for &x in &xs[b * m..(b + 1) * m] {
                s.add(x);
            }
            s.value() / m as f64
        })
        .collect();
    let (mean, se) = mean_and_stderr(&means);
    let _ = used;
    (mean, se)
}

/// log(mean(exp(x_i))) computed stably.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut s = KahanSum::new();
    for &x in xs {
        s.add((x - max).exp());
    }
    max + (s.value() / xs.len() as f64).ln()
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// One-sample KS distance against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Least-squares fit y = intercept + slope * x; returns (slope, intercept).
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
