use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use super::EvalError;

/// Differences closer than this are tied; smaller magnitudes count as zero.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Largest sample size tested by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatTest {
    Wilcoxon,
    Pearson,
    Spearman,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test: StatTest,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// `exact`, `normal` or `t`.
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// 1-based ranks; values within `tol` of the first value of their run share
/// the average rank.
pub fn midranks(values: &[f64], tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] - values[order[i]] <= tol {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Two-sided signed-rank test. Zero differences are dropped; samples of up to
/// twenty use the exact null distribution (midranks included), larger ones a
/// tie-corrected normal approximation.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<StatTestResult, EvalError> {
    let d: Vec<f64> = differences.iter().copied().filter(|x| x.abs() > TIE_TOLERANCE).collect();
    let n = d.len();
    if n == 0 {
        return Err(EvalError::AllZeroDifferences);
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = midranks(&abs, TIE_TOLERANCE);
    let t_plus: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = t_plus.min(total - t_plus);

    if n <= EXACT_MAX_N {
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let observed = (t_plus * 2.0).round() as usize;
        let p_value = exact_two_sided(&doubled, observed);
        return Ok(StatTestResult { test: StatTest::Wilcoxon, statistic, p_value, n, method: "exact".into() });
    }

    let nf = n as f64;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (t_plus - mean) / var.sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(StatTestResult { test: StatTest::Wilcoxon, statistic, p_value, n, method: "normal".into() })
}

/// Counts sign assignments by subset-sum over doubled ranks.
fn exact_two_sided(doubled: &[usize], observed: usize) -> f64 {
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0u64; max + 1];
    ways[0] = 1;
    for &r in doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let lower: u64 = ways[..=observed.min(max)].iter().sum();
    let upper: u64 = ways[observed.min(max + 1)..].iter().sum();
    let count = 2 * lower.min(upper);
    (count as f64 / (1u64 << doubled.len()) as f64).min(1.0)
}

fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Product-moment or rank correlation with a two-sided t-test p-value.
pub fn correlation(xs: &[f64], ys: &[f64], kind: CorrelationKind) -> Result<StatTestResult, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(EvalError::TooFewObservations { needed: 3, got: n });
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(EvalError::ConstantSeries);
    }
    let (r, test) = match kind {
        CorrelationKind::Pearson => (pearson_r(xs, ys), StatTest::Pearson),
        CorrelationKind::Spearman => (pearson_r(&midranks(xs, 0.0), &midranks(ys, 0.0)), StatTest::Spearman),
    };
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(StatTestResult { test, statistic: r, p_value, n, method: "t".into() })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Enumerates all 2^n sign vectors over the observed ranks.
    fn brute_force_p(differences: &[f64]) -> f64 {
        let d: Vec<f64> = differences.iter().copied().filter(|x| x.abs() > TIE_TOLERANCE).collect();
        let ranks = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>(), TIE_TOLERANCE);
        let observed: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
        let n = d.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let t: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if t <= observed + 1e-9 {
                le += 1;
            }
            if t >= observed - 1e-9 {
                ge += 1;
            }
        }
        ((2 * le.min(ge)) as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn six_positive_differences() {
        let d = [0.05, 0.02, 0.07, 0.18, 0.08, 0.14];
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(r.p_value, 0.03125);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, "exact");
        assert!((r.p_value - brute_force_p(&d)).abs() < 1e-15);
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        assert_eq!(wilcoxon_signed_rank(&neg).unwrap().p_value, r.p_value);
    }

    #[test]
    fn all_zero() {
        assert!(matches!(wilcoxon_signed_rank(&[0.0, 0.0, 0.0]), Err(EvalError::AllZeroDifferences)));
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let d: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-4i32..=4)) / 4.0).collect();
            match wilcoxon_signed_rank(&d) {
                Ok(r) => {
                    assert_eq!(r.p_value.to_bits(), brute_force_p(&d).to_bits(), "{d:?}");
                    assert!((0.0..=1.0).contains(&r.p_value));
                }
                Err(EvalError::AllZeroDifferences) => assert!(d.iter().all(|x| *x == 0.0)),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn near_equal_differences_tie() {
        // floating subtraction leaves these a few ulps apart
        let d = [0.91 - 0.82, 0.90 - 0.80, 0.91 - 0.91, 0.92 - 0.77, 0.91 - 0.82, 0.92 - 0.83];
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(r.n, 5);
        assert_eq!(midranks(&[0.09, 0.09 + 1e-12, 0.1], TIE_TOLERANCE), vec![1.5, 1.5, 3.0]);
        assert_eq!(r.p_value, 0.0625);
    }

    #[test]
    fn normal_approximation_for_large_n() {
        let d: Vec<f64> = (1..=30).map(|i| if i % 4 == 0 { -(i as f64) } else { i as f64 }).collect();
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(r.method, "normal");
        // T+ = 465 - (4+8+...+28) = 353; mean 232.5; var 2363.75
        let z: f64 = (353.0 - 232.5) / 2363.75f64.sqrt();
        assert!((r.p_value - erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(r.p_value < 0.05);
    }

    fn formula_pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn correlations() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let r = correlation(&xs, &ys, CorrelationKind::Pearson).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);
        let cubes: Vec<f64> = xs.iter().map(|x: &f64| x.powi(3)).collect();
        assert_eq!(correlation(&xs, &cubes, CorrelationKind::Spearman).unwrap().statistic, 1.0);
        assert!(correlation(&xs, &cubes, CorrelationKind::Pearson).unwrap().statistic < 1.0);
        assert!(matches!(correlation(&xs, &[3.0; 5], CorrelationKind::Spearman), Err(EvalError::ConstantSeries)));
        assert!(matches!(
            correlation(&xs[..2], &ys[..2], CorrelationKind::Pearson),
            Err(EvalError::TooFewObservations { .. })
        ));

        let x = [85.0, 120.0, 300.0, 640.0, 1200.0, 3000.0];
        let y = [3.0, 5.0, 4.0, 9.0, 7.0, 12.0];
        let r = correlation(&x, &y, CorrelationKind::Pearson).unwrap();
        assert!((r.statistic - formula_pearson(&x, &y)).abs() < 1e-12);
        // rank formula without ties: 1 - 6 sum(d^2) / (n (n^2 - 1))
        let rs = correlation(&x, &y, CorrelationKind::Spearman).unwrap();
        let d2 = [0.0, 1.0, 1.0, 1.0, 1.0, 0.0].iter().sum::<f64>();
        assert!((rs.statistic - (1.0 - 6.0 * d2 / (6.0 * 35.0))).abs() < 1e-12);
        assert!(rs.p_value > 0.0 && rs.p_value < 0.05);
    }
}
