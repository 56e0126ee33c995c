use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Area under the ROC curve via the Mann-Whitney statistic.
///
/// Equals P(score_case > score_control) + 0.5 P(tie). Tied scores receive
/// their average rank.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Precondition("NaN score".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Precondition(
            "AUC needs both classes in the labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of the cases keeps average ranks integral.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, doubled average = start + 1 + end
        let doubled_avg = (start + 1 + end) as u64;
        let cases_in_run = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        doubled_rank_sum += doubled_avg * cases_in_run;
        start = end;
    }
    let n1u = n1 as u64;
    // doubled U statistic
    let doubled_u = doubled_rank_sum - n1u * (n1u + 1);
    Ok(doubled_u as f64 / (2.0 * n1 as f64 * n0 as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch two-sample t-test with a two-sided p-value.
///
/// Positive `t` means `a` has the larger mean.
pub fn t_statistic(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Precondition(format!(
            "t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    let diff = ma - mb;
    if se2 == 0.0 {
        return Ok(if diff == 0.0 {
            TTest {
                t: 0.0,
                p: 1.0,
                df: na + nb - 2.0,
            }
        } else {
            TTest {
                t: diff.signum() * f64::INFINITY,
                p: 0.0,
                df: na + nb - 2.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Runtime(format!("t distribution with df {}: {}", df, e)))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_partial_rankings() {
        assert_eq!(auc_roc(&[0.9, 0.8, 0.3, 0.2], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.9, 0.2, 0.8, 0.3], &[1, 0, 0, 1]).unwrap(), 0.75);
        assert_eq!(auc_roc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn auc_requires_both_classes() {
        assert!(auc_roc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(auc_roc(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn identical_samples_give_zero_t() {
        let r = t_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
        let r = t_statistic(&[0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn separated_samples_are_significant() {
        let a = [0.0, 1e-9, -1e-9, 2e-9];
        let b = [1.0, 1.0 + 1e-9, 1.0 - 1e-9, 1.0 + 2e-9];
        let r = t_statistic(&a, &b).unwrap();
        assert!(r.t < 0.0 && r.p < 1e-6, "{:?}", r);
    }

    #[test]
    fn welch_reference_value() {
        // a: mean 3, var 2.5; b: mean 6, var 2. Reference t, p, df from
        // scipy.stats.ttest_ind(equal_var=False).
        let r = t_statistic(&[1.0, 2.0, 3.0, 4.0, 5.0], &[4.0, 5.0, 6.0, 7.0, 8.0, 6.0]).unwrap();
        let se = (2.5_f64 / 5.0 + 2.0 / 6.0).sqrt();
        assert!((r.t - (-3.0 / se)).abs() < 1e-12);
        assert!((r.t - (-3.286335345030997)).abs() < 1e-12);
        assert!((r.df - 8.196721311475407).abs() < 1e-9);
        assert!((r.p - 0.010716376535120998).abs() < 1e-9, "{}", r.p);
    }
}
