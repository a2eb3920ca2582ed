//! Error criteria (MSE, RMSE, MAPE, MAE), the predicted-vs-actual
//! regression diagnostic, and k-fold cross-validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{fit, init_network, predict, NetworkConfig};
use crate::preprocess::{denormalize, NormParams, Sample};

/// The four error criteria over one prediction/actual pair of vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub rmse: f64,
    /// percent
    pub mape: f64,
    pub mae: f64,
    pub count: usize,
}

/// Ordinary least squares of actual on predicted, plus Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
}

fn check_lengths(p: &[f64], a: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() != a.len() {
        return Err(Error::MetricLengthMismatch {
            p: p.len(),
            a: a.len(),
        });
    }
    Ok(())
}

/// Mean squared error: (1/T) * sum (P - A)^2.
pub fn mse(p: &[f64], a: &[f64]) -> Result<f64> {
    check_lengths(p, a)?;
    let sum: f64 = p.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / p.len() as f64)
}

/// Root mean squared error: sqrt(mse).
pub fn rmse(p: &[f64], a: &[f64]) -> Result<f64> {
    mse(p, a).map(f64::sqrt)
}

/// Mean absolute percentage error: (1/T) * sum |(P - A) / A| * 100.
/// Undefined when any actual is zero.
pub fn mape(p: &[f64], a: &[f64]) -> Result<f64> {
    check_lengths(p, a)?;
    let mut sum = 0.0;
    for (i, (x, y)) in p.iter().zip(a).enumerate() {
        if *y == 0.0 {
            return Err(Error::MapeZeroActual(i));
        }
        sum += ((x - y) / y).abs();
    }
    Ok(sum / p.len() as f64 * 100.0)
}

/// Mean absolute error: (1/T) * sum |P - A|.
pub fn mae(p: &[f64], a: &[f64]) -> Result<f64> {
    check_lengths(p, a)?;
    let sum: f64 = p.iter().zip(a).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / p.len() as f64)
}

/// All four criteria at once.
pub fn metrics_report(p: &[f64], a: &[f64]) -> Result<MetricsReport> {
    Ok(MetricsReport {
        mse: mse(p, a)?,
        rmse: rmse(p, a)?,
        mape: mape(p, a)?,
        mae: mae(p, a)?,
        count: p.len(),
    })
}

/// OLS fit of `actuals` on `predictions` with Pearson r.
pub fn fit_regression(predictions: &[f64], actuals: &[f64]) -> Result<RegressionFit> {
    check_lengths(predictions, actuals)?;
    let n = predictions.len() as f64;
    if predictions.len() < 2 {
        return Err(Error::DegenerateRegression);
    }
    let mean_x: f64 = predictions.iter().sum::<f64>() / n;
    let mean_y: f64 = actuals.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in predictions.iter().zip(actuals) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r = if syy == 0.0 {
        // constant actuals: perfectly flat, correlation conventionally 0
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept,
        r,
    })
}

/// Assignment of each sample index to one of `k` contiguous folds.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Contiguous time-ordered folds; the first `n mod k` folds take the
    /// extra sample.
    pub fn contiguous(n: usize, k: usize) -> Result<FoldPlan> {
        if k < 2 || k > n {
            return Err(Error::BadFoldCount { k, n });
        }
        let base = n / k;
        let extra = n % k;
        let mut assignment = Vec::with_capacity(n);
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            assignment.extend(std::iter::repeat(fold).take(size));
        }
        Ok(FoldPlan { k, assignment })
    }

    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub metrics: MetricsReport,
    pub fit: RegressionFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfoldReport {
    pub folds: Vec<FoldResult>,
    pub mean_mse: f64,
    pub mean_rmse: f64,
    pub mean_mape: f64,
    pub mean_mae: f64,
    pub mean_r: f64,
}

/// Cross-validate: train a fresh network per fold on the remaining folds and
/// score it on the held-out one. When `denorm` is given, the metrics are
/// computed on denormalized values (MAPE needs this: the normalized series
/// touches 0 at its minimum). The regression fit always uses the values the
/// metrics use.
pub fn kfold_evaluate(
    samples: &[Sample],
    k: usize,
    cfg: &NetworkConfig,
    denorm: Option<NormParams>,
) -> Result<KfoldReport> {
    let plan = FoldPlan::contiguous(samples.len(), k)?;
    let mut folds = Vec::with_capacity(k);

    for fold in 0..k {
        let held_out = plan.fold_indices(fold);
        let train_samples: Vec<Sample> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| plan.assignment[*i] != fold)
            .map(|(_, s)| s.clone())
            .collect();

        let mut fold_cfg = cfg.clone();
        fold_cfg.seed = cfg.seed.wrapping_add(fold as u64);
        let (mut net, mut state) = init_network(&fold_cfg)?;
        fit(&mut net, &mut state, &train_samples, &fold_cfg)?;

        let mut predictions = Vec::with_capacity(held_out.len());
        let mut actuals = Vec::with_capacity(held_out.len());
        for &i in &held_out {
            predictions.push(predict(&net, &samples[i].lags)?);
            actuals.push(samples[i].target);
        }
        let (p_eval, a_eval) = match denorm {
            Some(params) => (
                denormalize(&predictions, params),
                denormalize(&actuals, params),
            ),
            None => (predictions, actuals),
        };
        folds.push(FoldResult {
            fold,
            metrics: metrics_report(&p_eval, &a_eval)?,
            fit: fit_regression(&p_eval, &a_eval)?,
        });
    }

    let kf = k as f64;
    let mean = |f: &dyn Fn(&FoldResult) -> f64| folds.iter().map(|x| f(x)).sum::<f64>() / kf;
    Ok(KfoldReport {
        mean_mse: mean(&|f| f.metrics.mse),
        mean_rmse: mean(&|f| f.metrics.rmse),
        mean_mape: mean(&|f| f.metrics.mape),
        mean_mae: mean(&|f| f.metrics.mae),
        mean_r: mean(&|f| f.fit.r),
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_direct_sum() {
        let v = mse(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rmse_is_sqrt_of_mse() {
        let v = rmse(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((v - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mape_single_point() {
        assert_eq!(mape(&[110.0], &[100.0]).unwrap(), 10.0);
    }

    #[test]
    fn mape_rejects_zero_actual() {
        assert!(matches!(
            mape(&[1.0, 2.0], &[1.0, 0.0]),
            Err(Error::MapeZeroActual(1))
        ));
    }

    #[test]
    fn mae_direct_sum() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn perfect_predictions_zero_everywhere() {
        let a = [3.0, 7.0, 11.0];
        let m = metrics_report(&a, &a).unwrap();
        assert_eq!((m.mse, m.rmse, m.mape, m.mae), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn metrics_reject_length_mismatch() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn mape_is_not_translation_invariant() {
        let p = [110.0];
        let a = [100.0];
        let shifted_p = [210.0];
        let shifted_a = [200.0];
        let before = mape(&p, &a).unwrap();
        let after = mape(&shifted_p, &shifted_a).unwrap();
        assert!((before - 10.0).abs() < 1e-12);
        assert!((after - 5.0).abs() < 1e-12);
        assert_ne!(before, after);
    }

    #[test]
    fn regression_identity_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let fit = fit_regression(&x, &x).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_exact_affine() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let fit = fit_regression(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_rejects_constant_x() {
        assert!(fit_regression(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn fold_plan_even_split() {
        let plan = FoldPlan::contiguous(200, 5).unwrap();
        for fold in 0..5 {
            assert_eq!(plan.fold_indices(fold).len(), 40);
        }
    }

    #[test]
    fn fold_plan_leave_one_out() {
        let plan = FoldPlan::contiguous(7, 7).unwrap();
        for fold in 0..7 {
            assert_eq!(plan.fold_indices(fold), vec![fold]);
        }
    }

    #[test]
    fn fold_plan_remainder_goes_to_first_folds() {
        let plan = FoldPlan::contiguous(10, 3).unwrap();
        assert_eq!(plan.fold_indices(0).len(), 4);
        assert_eq!(plan.fold_indices(1).len(), 3);
        assert_eq!(plan.fold_indices(2).len(), 3);
    }

    #[test]
    fn fold_plan_rejects_bad_k() {
        assert!(FoldPlan::contiguous(10, 1).is_err());
        assert!(FoldPlan::contiguous(10, 11).is_err());
    }

    proptest! {
        #[test]
        fn metrics_permutation_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, 1.0f64..100.0), 1..40),
            seed in 0u64..1000,
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let mut order: Vec<usize> = (0..p.len()).collect();
            // cheap deterministic shuffle
            for i in (1..order.len()).rev() {
                let j = (seed as usize).wrapping_mul(i + 17) % (i + 1);
                order.swap(i, j);
            }
            let ps: Vec<f64> = order.iter().map(|&i| p[i]).collect();
            let as_: Vec<f64> = order.iter().map(|&i| a[i]).collect();
            prop_assert!((mse(&p, &a).unwrap() - mse(&ps, &as_).unwrap()).abs() < 1e-9);
            prop_assert!((mae(&p, &a).unwrap() - mae(&ps, &as_).unwrap()).abs() < 1e-9);
            prop_assert!((mape(&p, &a).unwrap() - mape(&ps, &as_).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn metrics_scaling_laws(
            pairs in prop::collection::vec((0.5f64..100.0, 0.5f64..100.0), 1..40),
            c in 0.1f64..10.0,
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let pc: Vec<f64> = p.iter().map(|x| c * x).collect();
            let ac: Vec<f64> = a.iter().map(|x| c * x).collect();
            let rel = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-12);
            prop_assert!(rel(mse(&pc, &ac).unwrap(), c * c * mse(&p, &a).unwrap()));
            prop_assert!(rel(mae(&pc, &ac).unwrap(), c * mae(&p, &a).unwrap()));
            prop_assert!(rel(rmse(&pc, &ac).unwrap(), c * rmse(&p, &a).unwrap()));
            prop_assert!(rel(mape(&pc, &ac).unwrap(), mape(&p, &a).unwrap()));
        }

        #[test]
        fn translation_invariance_of_mse_mae(
            pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..40),
            c in -100.0f64..100.0,
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let pc: Vec<f64> = p.iter().map(|x| x + c).collect();
            let ac: Vec<f64> = a.iter().map(|x| x + c).collect();
            prop_assert!((mse(&pc, &ac).unwrap() - mse(&p, &a).unwrap()).abs() < 1e-9);
            prop_assert!((mae(&pc, &ac).unwrap() - mae(&p, &a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn fold_plan_partitions(n in 2usize..300, k in 2usize..50) {
            prop_assume!(k <= n);
            let plan = FoldPlan::contiguous(n, k).unwrap();
            prop_assert_eq!(plan.assignment.len(), n);
            let sizes: Vec<usize> = (0..k).map(|f| plan.fold_indices(f).len()).collect();
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(max - min <= 1);
        }

        #[test]
        fn pearson_r_bounded(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..60),
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(fit) = fit_regression(&p, &a) {
                prop_assert!(fit.r.abs() <= 1.0);
            }
        }
    }
}
