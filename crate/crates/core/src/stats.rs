//! Rank-based tests and effect sizes used to compare systems: Kruskal-Wallis,
//! one- and two-sided Mann-Whitney U, Bonferroni correction, Cohen's d and
//! Kendall's tau-b.

use std::fmt;

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Nonempty list of finite observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample contains non-finite value {v}")));
        }
        Ok(Sample(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Sample::new(v)
    }
}

impl TryFrom<&[f64]> for Sample {
    type Error = Error;

    fn try_from(v: &[f64]) -> Result<Self> {
        Sample::new(v.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    NormalApprox,
    ChiSquareApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    KruskalWallis,
    MannWhitneyU,
    KendallTau,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatResult {
    pub test: TestKind,
    pub statistic: f64,
    pub df: Option<u32>,
    pub p_value: f64,
    pub method: Method,
}

/// `3.97e-3`-style p-value.
pub fn format_p(p: f64) -> String {
    format!("{p:.2e}")
}

impl fmt::Display for StatResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = format_p(self.p_value);
        match self.test {
            TestKind::KruskalWallis => write!(
                f,
                "Chi-Squared({}) = {:.2}, p = {p}",
                self.df.unwrap_or(0),
                self.statistic
            ),
            TestKind::MannWhitneyU => write!(f, "U = {:.1}, p = {p}", self.statistic),
            TestKind::KendallTau => write!(f, "tau = {:.2}, p = {p}", self.statistic),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alternative {
    /// First sample tends to be smaller.
    Less,
    /// First sample tends to be larger.
    Greater,
    TwoSided,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            "two-sided" => Ok(Alternative::TwoSided),
            other => Err(Error::invalid(format!("unknown alternative '{other}'"))),
        }
    }
}

/// Midranks (1-based) of `values` and the sizes of tie groups larger than one.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
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
        // positions i..j share ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Kruskal-Wallis H on midranks with tie correction; p from the chi-square
/// upper tail with `k - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[Sample]) -> Result<StatResult> {
    if groups.len() < 2 {
        return Err(Error::invalid(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.values().iter().copied()).collect();
    let n = all.len() as f64;
    let (ranks, ties) = midranks(&all);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let df = (groups.len() - 1) as u32;
    let correction = 1.0 - tie_sum(&ties) / (n * n * n - n);
    let (h, p) = if correction <= 0.0 {
        // every value tied
        (0.0, 1.0)
    } else {
        let h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
        let h = h.max(0.0);
        let chi = ChiSquared::new(df as f64).expect("df >= 1");
        (h, clamp_p(chi.sf(h)))
    };
    Ok(StatResult {
        test: TestKind::KruskalWallis,
        statistic: h,
        df: Some(df),
        p_value: p,
        method: Method::ChiSquareApprox,
    })
}

/// Sample sizes up to this product (tie-free) get the exact null distribution.
pub const EXACT_MWU_MAX_PRODUCT: usize = 400;

/// Frequencies of `U = 0..=m*n` over all `C(m+n, m)` arrangements of two
/// tie-free samples of sizes `m` and `n`.
pub fn mwu_null_counts(m: usize, n: usize) -> Vec<u128> {
    // table[j] holds the distribution for (i, j) while i advances
    let mut table: Vec<Vec<u128>> = (0..=n).map(|_| vec![1u128]).collect();
    for i in 1..=m {
        let mut next: Vec<Vec<u128>> = Vec::with_capacity(n + 1);
        next.push(vec![1u128]); // (i, 0): U is always 0
        for j in 1..=n {
            // largest value is an x (beats all j ys) or a y
            let mut dist = vec![0u128; i * j + 1];
            for (u, &c) in table[j].iter().enumerate() {
                dist[u + j] += c;
            }
            for (u, &c) in next[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            next.push(dist);
        }
        table = next;
    }
    table.swap_remove(n)
}

/// Mann-Whitney U for `x` against `y`.
///
/// `U` counts pairs with `x > y` (ties count one half). Exact when the
/// samples are tie-free and `n_x * n_y <= 400`; otherwise the normal
/// approximation with tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(x: &Sample, y: &Sample, alternative: Alternative) -> Result<StatResult> {
    let (nx, ny) = (x.len(), y.len());
    let all: Vec<f64> = x.values().iter().chain(y.values()).copied().collect();
    let (ranks, ties) = midranks(&all);
    let rx: f64 = ranks[..nx].iter().sum();
    let u = rx - (nx * (nx + 1)) as f64 / 2.0;

    if ties.is_empty() && nx * ny <= EXACT_MWU_MAX_PRODUCT {
        let counts = mwu_null_counts(nx, ny);
        let total: u128 = counts.iter().sum();
        let k = u.round() as usize;
        let le: u128 = counts[..=k].iter().sum();
        let ge: u128 = counts[k..].iter().sum();
        let p_less = le as f64 / total as f64;
        let p_greater = ge as f64 / total as f64;
        let p = match alternative {
            Alternative::Less => p_less,
            Alternative::Greater => p_greater,
            Alternative::TwoSided => 2.0 * p_less.min(p_greater),
        };
        return Ok(StatResult {
            test: TestKind::MannWhitneyU,
            statistic: u,
            df: None,
            p_value: clamp_p(p),
            method: Method::Exact,
        });
    }

    let n = (nx + ny) as f64;
    let (fx, fy) = (nx as f64, ny as f64);
    let mu = fx * fy / 2.0;
    let var = fx * fy / 12.0 * ((n + 1.0) - tie_sum(&ties) / (n * (n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let sd = var.sqrt();
        let normal = Normal::standard();
        match alternative {
            Alternative::Less => normal.cdf((u - mu + 0.5) / sd),
            Alternative::Greater => normal.sf((u - mu - 0.5) / sd),
            Alternative::TwoSided => {
                let z = ((u - mu).abs() - 0.5).max(0.0) / sd;
                2.0 * normal.sf(z)
            }
        }
    };
    Ok(StatResult {
        test: TestKind::MannWhitneyU,
        statistic: u,
        df: None,
        p_value: clamp_p(p),
        method: Method::NormalApprox,
    })
}

/// Significance level for each of `m` comparisons.
pub fn bonferroni(alpha: f64, m: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1], got {alpha}")));
    }
    if m < 1 {
        return Err(Error::invalid("Bonferroni needs m >= 1"));
    }
    Ok(alpha / m as f64)
}

/// `min(1, m * p)`.
pub fn adjust_p(p: f64, m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("Bonferroni needs m >= 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p-value must be in [0, 1], got {p}")));
    }
    Ok((p * m as f64).min(1.0))
}

/// Standardized mean difference with the pooled standard deviation
/// (`n_x + n_y - 2` denominator).
pub fn cohens_d(x: &Sample, y: &Sample) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid("Cohen's d needs at least 2 values per sample"));
    }
    let ss = |s: &Sample| {
        let m = s.mean();
        s.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let pooled = (ss(x) + ss(y)) / (x.len() + y.len() - 2) as f64;
    if pooled <= 0.0 {
        return Err(Error::invalid("Cohen's d undefined: pooled variance is zero"));
    }
    Ok((x.mean() - y.mean()) / pooled.sqrt())
}

/// Sum of `f(t)` over tie-group sizes of a sorted slice.
fn sorted_ties(sorted: &[f64]) -> Vec<usize> {
    let mut ties = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    ties
}

/// Inversions of `v` (pairs `i < j` with `v[i] > v[j]`) by merge sort; `v`
/// ends up sorted.
fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            inv += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall's tau-b (Knight's O(n log n) algorithm) with the two-sided normal
/// approximation p-value of the tie-corrected concordance statistic.
pub fn kendall_tau(x: &Sample, y: &Sample) -> Result<StatResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::invalid(format!(
            "Kendall's tau needs equal lengths, got {} and {}",
            n,
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("Kendall's tau needs at least 2 pairs"));
    }
    let mut pairs: Vec<(f64, f64)> = x.values().iter().copied().zip(y.values().iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pair_count = |t: usize| (t * (t - 1) / 2) as u64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let x_ties = sorted_ties(&xs);
    let mut joint = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pairs[j] == pairs[i] {
            j += 1;
        }
        joint += pair_count(j - i);
        i = j;
    }
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_inversions(&mut ys, &mut Vec::with_capacity(n));
    let y_ties = sorted_ties(&ys);

    let n0 = pair_count(n);
    let n1: u64 = x_ties.iter().map(|&t| pair_count(t)).sum();
    let n2: u64 = y_ties.iter().map(|&t| pair_count(t)).sum();
    if n1 == n0 || n2 == n0 {
        return Err(Error::invalid("Kendall's tau undefined for a constant sample"));
    }
    // concordant minus discordant
    let s = n0 as f64 - n1 as f64 - n2 as f64 + joint as f64 - 2.0 * swaps as f64;
    let tau = s / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();

    let nf = n as f64;
    let sum_t = |ties: &[usize], f: &dyn Fn(f64) -> f64| ties.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum_t(&x_ties, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum_t(&y_ties, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum_t(&x_ties, &|t| t * (t - 1.0)) * sum_t(&y_ties, &|t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
    let v2 = if n > 2 {
        sum_t(&x_ties, &|t| t * (t - 1.0) * (t - 2.0)) * sum_t(&y_ties, &|t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
    } else {
        0.0
    };
    let var = (v0 - vt - vu) / 18.0 + v1 + v2;
    let p = if var > 0.0 {
        2.0 * Normal::standard().sf(s.abs() / var.sqrt())
    } else {
        1.0
    };
    Ok(StatResult {
        test: TestKind::KendallTau,
        statistic: tau,
        df: None,
        p_value: clamp_p(p),
        method: Method::NormalApprox,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, vec![2]);
    }

    #[test]
    fn kw_no_ties() {
        let r = kruskal_wallis(&[s(&[1., 2., 3.]), s(&[4., 5., 6.]), s(&[7., 8., 9.])]).unwrap();
        assert!((r.statistic - 7.2).abs() < 1e-12);
        assert_eq!(r.df, Some(2));
        // chi-square with 2 df: sf(x) = exp(-x/2)
        assert!((r.p_value - (-3.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kw_all_tied() {
        let r = kruskal_wallis(&[s(&[2., 2.]), s(&[2., 2., 2.])]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(kruskal_wallis(&[s(&[1.0])]).is_err());
    }

    #[test]
    fn kw_report_format() {
        let groups: Vec<Sample> = (0..22).map(|i| s(&[i as f64, i as f64 + 0.5, i as f64 + 0.25])).collect();
        let r = kruskal_wallis(&groups).unwrap();
        let text = r.to_string();
        assert!(text.starts_with("Chi-Squared(21) = "), "{text}");
        assert!(text.contains(", p = "));
    }

    #[test]
    fn mwu_small_exact() {
        let r = mann_whitney_u(&s(&[1., 2.]), &s(&[3., 4.]), Alternative::Less).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, Method::Exact);
        assert!((r.p_value - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mwu_separated_five() {
        let x = s(&[1., 2., 3., 4., 5.]);
        let y = s(&[6., 7., 8., 9., 10.]);
        let r = mann_whitney_u(&x, &y, Alternative::Less).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0 / 252.0).abs() < 1e-15);
        assert_eq!(r.to_string(), "U = 0.0, p = 3.97e-3");
    }

    #[test]
    fn mwu_identical_samples() {
        let x = s(&[1., 2., 3., 4.]);
        let r = mann_whitney_u(&x, &x, Alternative::Less).unwrap();
        assert_eq!(r.statistic, 8.0);
        assert!(r.p_value >= 0.5);
        assert_eq!(r.method, Method::NormalApprox);
    }

    #[test]
    fn null_counts_sum_to_binomial() {
        let c = mwu_null_counts(5, 5);
        assert_eq!(c.iter().sum::<u128>(), 252);
        assert_eq!(c.len(), 26);
        assert_eq!(c[0], 1);
        let c = mwu_null_counts(2, 2);
        assert_eq!(c, vec![1, 1, 2, 1, 1]);
        assert_eq!(mwu_null_counts(3, 0), vec![1]);
    }

    #[test]
    fn bonferroni_levels() {
        assert_eq!(bonferroni(0.05, 4).unwrap(), 0.0125);
        assert_eq!(format_p(bonferroni(0.05, 4).unwrap()), "1.25e-2");
        assert_eq!(bonferroni(0.05, 1).unwrap(), 0.05);
        assert_eq!(adjust_p(0.4, 5).unwrap(), 1.0);
        assert_eq!(adjust_p(0.01, 1).unwrap(), 0.01);
        assert!(bonferroni(0.05, 0).is_err());
        assert!(adjust_p(0.5, 0).is_err());
    }

    #[test]
    fn cohens_d_units() {
        assert_eq!(cohens_d(&s(&[1., 2., 3.]), &s(&[3., 2., 1.])).unwrap(), 0.0);
        // both samples have variance 1 around means 0 and 1
        let d = cohens_d(&s(&[-1., 1.]), &s(&[0., 2.]));
        let expected = -1.0 / 2f64.sqrt();
        assert!((d.unwrap() - expected).abs() < 1e-15);
        let d = cohens_d(&s(&[-1., 0., 1.]), &s(&[0., 1., 2.])).unwrap();
        assert!((d + 1.0).abs() < 1e-15);
        assert!(cohens_d(&s(&[1., 1.]), &s(&[1., 1.])).is_err());
        assert!(cohens_d(&s(&[1.]), &s(&[1., 2.])).is_err());
    }

    #[test]
    fn kendall_monotone() {
        let x = s(&[1., 2., 3., 4., 5.]);
        assert_eq!(kendall_tau(&x, &s(&[2., 4., 8., 16., 32.])).unwrap().statistic, 1.0);
        assert_eq!(kendall_tau(&x, &s(&[5., 4., 3., 2., 1.])).unwrap().statistic, -1.0);
        assert!(kendall_tau(&x, &s(&[1., 2.])).is_err());
        assert!(kendall_tau(&x, &s(&[1., 1., 1., 1., 1.])).is_err());
    }

    #[test]
    fn inversions() {
        let mut v = vec![3.0, 1.0, 2.0, 0.0];
        assert_eq!(count_inversions(&mut v, &mut Vec::new()), 5);
        assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0]);
    }
}
