//! Extraction of power-law exponents, crossover scales and data-collapse
//! quality from survival/first-detection series.
//!
//! All fits run on log-log axes over log-uniformly decimated points, with
//! optional block-averaging to tame the small-m oscillations of
//! first-detection series under narrow waiting-time laws.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("fit window must satisfy 0 < m_lo < m_hi, got [{m_lo}, {m_hi}]")]
    BadWindow { m_lo: u64, m_hi: u64 },
    #[error("nonpositive value at m = {m} inside the fit window")]
    NonPositiveValue { m: f64 },
    #[error("only {found} points in the window after decimation, need at least {need}")]
    InsufficientPoints { found: usize, need: usize },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("curves have no overlapping support after rescaling")]
    EmptyOverlap,
}

/// Inclusive fit range in measurement number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub m_lo: u64,
    pub m_hi: u64,
}

impl FitWindow {
    pub fn new(m_lo: u64, m_hi: u64) -> Result<Self, ScalingError> {
        if m_lo == 0 || m_lo >= m_hi {
            return Err(ScalingError::BadWindow { m_lo, m_hi });
        }
        Ok(Self { m_lo, m_hi })
    }

    fn contains(&self, m: f64) -> bool {
        m >= self.m_lo as f64 && m <= self.m_hi as f64
    }
}

/// Which part of the decay a fit describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Early,
    Intermediate,
    Tail,
}

/// Result of one power-law fit `v ~ A m^exponent`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub exponent: f64,
    pub stderr: f64,
    pub ln_intercept: f64,
    pub window: FitWindow,
    /// Root-mean-square residual of ln v around the fit.
    pub residual: f64,
    pub regime: Regime,
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Log-uniform decimation density.
    pub points_per_decade: usize,
    /// Pre-average values over blocks of this width in m (oscillation period).
    pub block_average: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { points_per_decade: 48, block_average: None }
    }
}

/// Window selection, optional block-averaging, positivity check and
/// log-uniform decimation; returns (ln m, ln v) pairs.
fn prepare_log_points(
    series: &[(f64, f64)],
    window: &FitWindow,
    opts: &FitOptions,
) -> Result<Vec<(f64, f64)>, ScalingError> {
    let mut pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(m, v)| window.contains(*m) && v.is_finite())
        .copied()
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(period) = opts.block_average {
        if period > 0.0 {
            let mut blocked = Vec::new();
            let mut i = 0;
            while i < pts.len() {
                let lo = pts[i].0;
                let mut j = i;
                let (mut log_m, mut val, mut count) = (0.0, 0.0, 0.0);
                while j < pts.len() && pts[j].0 < lo + period {
                    log_m += pts[j].0.ln();
                    val += pts[j].1;
                    count += 1.0;
                    j += 1;
                }
                blocked.push(((log_m / count).exp(), val / count));
                i = j;
            }
            pts = blocked;
        }
    }
    for &(m, v) in &pts {
        if v <= 0.0 {
            return Err(ScalingError::NonPositiveValue { m });
        }
    }
    // log-uniform decimation
    let spacing = std::f64::consts::LN_10 / opts.points_per_decade as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &(m, v) in &pts {
        let lm = m.ln();
        if lm >= last + spacing || out.is_empty() {
            out.push((lm, v.ln()));
            last = lm;
        }
    }
    Ok(out)
}

struct Ols {
    slope: f64,
    intercept: f64,
    stderr: f64,
    rms_residual: f64,
    sse: f64,
}

fn ols(points: &[(f64, f64)]) -> Ols {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 =
        points.iter().map(|&(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let variance = if points.len() > 2 { sse / (n - 2.0) } else { 0.0 };
    Ols {
        slope,
        intercept,
        stderr: (variance / sxx).sqrt(),
        rms_residual: (sse / n).sqrt(),
        sse,
    }
}

/// Least-squares power-law exponent of `value` vs `m` over the window.
pub fn fit_power_law(
    series: &[(f64, f64)],
    window: &FitWindow,
    regime: Regime,
    opts: &FitOptions,
) -> Result<ScalingReport, ScalingError> {
    let pts = prepare_log_points(series, window, opts)?;
    if pts.len() < 10 {
        return Err(ScalingError::InsufficientPoints { found: pts.len(), need: 10 });
    }
    let fit = ols(&pts);
    Ok(ScalingReport {
        exponent: fit.slope,
        stderr: fit.stderr,
        ln_intercept: fit.intercept,
        window: *window,
        residual: fit.rms_residual,
        regime,
        points: pts.len(),
    })
}

/// Crossover between two power-law branches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossoverM1 {
    /// Abscissa where the two fitted branches intersect.
    pub m_star: f64,
    pub early: ScalingReport,
    pub late: ScalingReport,
}

/// Locate the crossover between a steeper early power law and a shallower
/// late one (for first-detection series: the -3 to -5/2 bend).
///
/// A two-segment fit is scanned over candidate break points; the crossover is
/// the intersection of the two best-fit lines. Fails as inconclusive when the
/// two segments do not beat a single power law or their slopes are too close
/// to separate.
pub fn detect_crossover_m1(
    series: &[(f64, f64)],
    window: &FitWindow,
    opts: &FitOptions,
) -> Result<CrossoverM1, ScalingError> {
    const MIN_SIDE: usize = 8;
    let pts = prepare_log_points(series, window, opts)?;
    if pts.len() < 2 * MIN_SIDE + 2 {
        return Err(ScalingError::InsufficientPoints { found: pts.len(), need: 2 * MIN_SIDE + 2 });
    }
    let single = ols(&pts);
    let mut best: Option<(f64, Ols, Ols, usize)> = None;
    for brk in MIN_SIDE..pts.len() - MIN_SIDE {
        let left = ols(&pts[..=brk]);
        let right = ols(&pts[brk..]);
        let sse = left.sse + right.sse;
        if best.as_ref().map_or(true, |(b, ..)| sse < *b) {
            best = Some((sse, left, right, brk));
        }
    }
    let (sse_two, left, right, brk) = best.expect("nonempty scan");
    if sse_two > 0.75 * single.sse {
        return Err(ScalingError::Inconclusive(
            "two-segment fit does not improve on a single power law".into(),
        ));
    }
    if left.slope >= right.slope - 0.15 {
        return Err(ScalingError::Inconclusive(format!(
            "branch exponents {:.3} and {:.3} are not separable",
            left.slope, right.slope
        )));
    }
    let ln_m_star = (right.intercept - left.intercept) / (left.slope - right.slope);
    let m_star = ln_m_star.exp();
    if !window.contains(m_star) {
        return Err(ScalingError::Inconclusive(format!(
            "branch intersection m = {m_star:.1} escapes the window"
        )));
    }
    let make_report = |fit: &Ols, pts: &[(f64, f64)], regime: Regime| ScalingReport {
        exponent: fit.slope,
        stderr: fit.stderr,
        ln_intercept: fit.intercept,
        window: *window,
        residual: fit.rms_residual,
        regime,
        points: pts.len(),
    };
    Ok(CrossoverM1 {
        m_star,
        early: make_report(&left, &pts[..=brk], Regime::Early),
        late: make_report(&right, &pts[brk..], Regime::Intermediate),
    })
}

/// Departure of a series from its fitted power law: the first decimated
/// abscissa where the ratio to the fit stays below 1/e for five consecutive
/// decimated points. Scale-free, so multiplying the series by a constant
/// leaves the estimate unchanged.
pub fn m2_departure(
    series: &[(f64, f64)],
    fit_window: &FitWindow,
    opts: &FitOptions,
) -> Result<(f64, ScalingReport), ScalingError> {
    const CONSECUTIVE: usize = 5;
    let report = fit_power_law(series, fit_window, Regime::Intermediate, opts)?;
    let scan_window = FitWindow::new(
        fit_window.m_lo,
        series.iter().map(|&(m, _)| m as u64).max().unwrap_or(fit_window.m_hi) + 1,
    )?;
    let pts = prepare_log_points(series, &scan_window, opts)?;
    let threshold = -1.0; // ln(1/e)
    let mut streak = 0usize;
    let mut first_below = f64::NAN;
    for &(lm, lv) in &pts {
        if lm < (fit_window.m_hi as f64).ln() {
            continue;
        }
        let ln_ratio = lv - (report.ln_intercept + report.exponent * lm);
        if ln_ratio < threshold {
            if streak == 0 {
                first_below = lm.exp();
            }
            streak += 1;
            if streak >= CONSECUTIVE {
                return Ok((first_below, report));
            }
        } else {
            streak = 0;
        }
    }
    Err(ScalingError::Inconclusive(
        "series never departs persistently from the power-law fit (tail not reached)".into(),
    ))
}

/// Exponent delta of `m2 ~ N^delta` from a family of departure estimates.
pub fn fit_delta_exponent(per_n: &[(f64, f64)]) -> Result<(f64, f64), ScalingError> {
    if per_n.len() < 3 {
        return Err(ScalingError::InsufficientPoints { found: per_n.len(), need: 3 });
    }
    let pts: Vec<(f64, f64)> = per_n.iter().map(|&(n, m2)| (n.ln(), m2.ln())).collect();
    let fit = ols(&pts);
    Ok((fit.slope, fit.stderr))
}

/// Collapse quality of a curve family under per-curve abscissa rescaling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseScore {
    /// Mean squared log-deviation across curves on the common rescaled support.
    pub rescaled: f64,
    /// Same statistic without rescaling, for contrast.
    pub unscaled: f64,
}

/// Score how well the curves collapse when each abscissa is multiplied by its
/// scale factor (e.g. `<tau>/N`). Lower is better.
pub fn collapse_score(
    curves: &[Vec<(f64, f64)>],
    scale_factors: &[f64],
) -> Result<CollapseScore, ScalingError> {
    assert_eq!(curves.len(), scale_factors.len(), "one scale factor per curve");
    if curves.len() < 2 {
        return Err(ScalingError::InsufficientPoints { found: curves.len(), need: 2 });
    }
    let rescaled = dispersion(curves, scale_factors)?;
    let unscaled = dispersion(curves, &vec![1.0; curves.len()])?;
    Ok(CollapseScore { rescaled, unscaled })
}

fn dispersion(curves: &[Vec<(f64, f64)>], factors: &[f64]) -> Result<f64, ScalingError> {
    const GRID: usize = 64;
    let logs: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .zip(factors)
        .map(|(curve, &fac)| {
            let mut c: Vec<(f64, f64)> = curve
                .iter()
                .filter(|(_, v)| *v > 0.0)
                .map(|&(m, v)| ((m * fac).ln(), v.ln()))
                .collect();
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            c
        })
        .collect();
    let lo = logs
        .iter()
        .map(|c| c.first().map(|p| p.0).unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = logs
        .iter()
        .map(|c| c.last().map(|p| p.0).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(ScalingError::EmptyOverlap);
    }
    let mut total = 0.0;
    for g in 0..GRID {
        let u = lo + (hi - lo) * (g as f64 + 0.5) / GRID as f64;
        let values: Vec<f64> = logs.iter().map(|c| interp(c, u)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        total +=
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    }
    Ok(total / GRID as f64)
}

/// Linear interpolation on sorted (x, y) pairs, clamped at the ends.
fn interp(points: &[(f64, f64)], x: f64) -> f64 {
    match points.binary_search_by(|p| p.0.total_cmp(&x)) {
        Ok(i) => points[i].1,
        Err(0) => points[0].1,
        Err(i) if i >= points.len() => points[points.len() - 1].1,
        Err(i) => {
            let (x0, y0) = points[i - 1];
            let (x1, y1) = points[i];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// RMS log-amplitude of oscillations around a local trend (centered moving
/// average over `2 * half_width + 1` in-window points).
pub fn oscillation_amplitude(
    series: &[(f64, f64)],
    window: &FitWindow,
    half_width: usize,
) -> Result<f64, ScalingError> {
    let mut pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(m, v)| window.contains(*m) && *v > 0.0)
        .copied()
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 * half_width + 3 {
        return Err(ScalingError::InsufficientPoints {
            found: pts.len(),
            need: 2 * half_width + 3,
        });
    }
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mut total = 0.0;
    for i in 0..y.len() {
        let lo = i.saturating_sub(half_width);
        let hi = (i + half_width + 1).min(y.len());
        let trend = y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        total += (y[i] - trend) * (y[i] - trend);
    }
    Ok((total / y.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_series(amp: f64, exp: f64, m_max: u64) -> Vec<(f64, f64)> {
        (1..=m_max).map(|m| (m as f64, amp * (m as f64).powf(exp))).collect()
    }

    #[test]
    fn pure_power_law_is_fit_exactly() {
        let series = power_series(1.0, -1.5, 2000);
        let window = FitWindow::new(5, 1800).unwrap();
        let report =
            fit_power_law(&series, &window, Regime::Intermediate, &FitOptions::default())
                .unwrap();
        assert!((report.exponent + 1.5).abs() < 1e-12);
        assert!(report.stderr < 1e-12);
        assert!(report.residual < 1e-12);
    }

    #[test]
    fn amplitude_lands_in_the_intercept() {
        let series = power_series(3.0, -2.0, 1000);
        let window = FitWindow::new(2, 900).unwrap();
        let report =
            fit_power_law(&series, &window, Regime::Early, &FitOptions::default()).unwrap();
        assert!((report.exponent + 2.0).abs() < 1e-12);
        assert!((report.ln_intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_are_a_domain_error() {
        let mut series = power_series(1.0, -1.0, 100);
        series[50].1 = 0.0;
        let window = FitWindow::new(1, 100).unwrap();
        let err = fit_power_law(&series, &window, Regime::Early, &FitOptions::default());
        assert!(matches!(err, Err(ScalingError::NonPositiveValue { .. })));
    }

    #[test]
    fn window_validation() {
        assert!(FitWindow::new(0, 10).is_err());
        assert!(FitWindow::new(10, 10).is_err());
        assert!(FitWindow::new(10, 5).is_err());
    }

    fn piecewise(break_at: f64, e1: f64, e2: f64, m_max: u64) -> Vec<(f64, f64)> {
        // continuous at the break
        (1..=m_max)
            .map(|m| {
                let m = m as f64;
                let v = if m < break_at {
                    m.powf(e1)
                } else {
                    break_at.powf(e1 - e2) * m.powf(e2)
                };
                (m, v)
            })
            .collect()
    }

    #[test]
    fn synthetic_crossover_is_recovered() {
        let series = piecewise(75.0, -3.0, -2.5, 3000);
        let window = FitWindow::new(2, 3000).unwrap();
        let cross =
            detect_crossover_m1(&series, &window, &FitOptions::default()).unwrap();
        assert!(
            (cross.m_star - 75.0).abs() < 7.5,
            "estimated {} for a break planted at 75",
            cross.m_star
        );
        assert!((cross.early.exponent + 3.0).abs() < 0.1);
        assert!((cross.late.exponent + 2.5).abs() < 0.1);
    }

    #[test]
    fn crossover_detection_is_scale_equivariant() {
        let series = piecewise(120.0, -3.0, -2.5, 5000);
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(m, v)| (m, 7.0 * v)).collect();
        let window = FitWindow::new(2, 5000).unwrap();
        let a = detect_crossover_m1(&series, &window, &FitOptions::default()).unwrap();
        let b = detect_crossover_m1(&scaled, &window, &FitOptions::default()).unwrap();
        assert!((a.m_star - b.m_star).abs() < 1e-6 * a.m_star);
    }

    #[test]
    fn single_power_law_is_inconclusive_for_crossover() {
        let series = power_series(1.0, -2.7, 3000);
        let window = FitWindow::new(2, 3000).unwrap();
        let err = detect_crossover_m1(&series, &window, &FitOptions::default());
        assert!(matches!(err, Err(ScalingError::Inconclusive(_))), "got {err:?}");
    }

    #[test]
    fn departure_point_and_delta_exponent_are_recovered() {
        let mut per_n = Vec::new();
        for n in [16.0f64, 24.0, 32.0] {
            let m2 = n.powi(3) / 10.0;
            let series: Vec<(f64, f64)> = (1..=(8.0 * m2) as u64)
                .map(|m| {
                    let m = m as f64;
                    (m, m.powf(-1.5) * (-m / m2).exp())
                })
                .collect();
            let window = FitWindow::new(2, (m2 / 20.0) as u64).unwrap();
            let (m2_est, report) =
                m2_departure(&series, &window, &FitOptions::default()).unwrap();
            assert!((report.exponent + 1.5).abs() < 0.06, "exponent {}", report.exponent);
            // ratio e^{-m/m2} < 1/e from m = m2 onward
            assert!((m2_est / m2 - 1.0).abs() < 0.25, "N={n}: {m2_est} vs {m2}");
            per_n.push((n, m2_est));
        }
        let (delta, stderr) = fit_delta_exponent(&per_n).unwrap();
        assert!((delta - 3.0).abs() < 0.1, "delta {delta} +- {stderr}");
    }

    #[test]
    fn departure_scale_equivariance_and_tail_not_reached() {
        let m2 = 500.0;
        let series: Vec<(f64, f64)> = (1..=4000u64)
            .map(|m| (m as f64, (m as f64).powf(-1.5) * (-(m as f64) / m2).exp()))
            .collect();
        let window = FitWindow::new(2, 60).unwrap();
        let (a, _) = m2_departure(&series, &window, &FitOptions::default()).unwrap();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(m, v)| (m, 0.001 * v)).collect();
        let (b, _) = m2_departure(&scaled, &window, &FitOptions::default()).unwrap();
        assert_eq!(a, b);

        let pure = power_series(1.0, -1.5, 4000);
        assert!(matches!(
            m2_departure(&pure, &window, &FitOptions::default()),
            Err(ScalingError::Inconclusive(_))
        ));
    }

    #[test]
    fn identical_curves_collapse_perfectly() {
        let c = power_series(1.0, -1.5, 500);
        let score = collapse_score(&[c.clone(), c], &[1.0, 1.0]).unwrap();
        assert!(score.rescaled < 1e-20);
    }

    #[test]
    fn scaling_family_collapses_only_when_rescaled() {
        // curves sampled from g(m/N) with g(x) = (1 + x)^-2
        let curves: Vec<Vec<(f64, f64)>> = [100.0f64, 200.0]
            .iter()
            .map(|&n| {
                (1..=(40.0 * n) as u64)
                    .map(|m| {
                        let x = m as f64 / n;
                        (m as f64, (1.0 + x).powi(-2))
                    })
                    .collect()
            })
            .collect();
        let score = collapse_score(&curves, &[1.0 / 100.0, 1.0 / 200.0]).unwrap();
        assert!(
            score.rescaled * 10.0 <= score.unscaled,
            "rescaled {} vs unscaled {}",
            score.rescaled,
            score.unscaled
        );
    }

    #[test]
    fn block_averaging_tames_oscillations() {
        // power law times a strong log-oscillation with period 4 in m
        let series: Vec<(f64, f64)> = (1..=4000u64)
            .map(|m| {
                let mf = m as f64;
                let osc = (0.5 * (std::f64::consts::TAU * mf / 4.0).sin()).exp();
                (mf, mf.powf(-2.5) * osc)
            })
            .collect();
        let window = FitWindow::new(8, 4000).unwrap();
        let opts = FitOptions { block_average: Some(4.0), ..Default::default() };
        let report = fit_power_law(&series, &window, Regime::Intermediate, &opts).unwrap();
        assert!(
            (report.exponent + 2.5).abs() <= report.stderr.max(0.03),
            "exponent {} +- {}",
            report.exponent,
            report.stderr
        );
    }

    #[test]
    fn oscillation_amplitude_orders_by_planted_amplitude() {
        let window = FitWindow::new(2, 300).unwrap();
        let make = |amp: f64| -> Vec<(f64, f64)> {
            (1..=300u64)
                .map(|m| {
                    let mf = m as f64;
                    (mf, mf.powf(-2.0) * (amp * (std::f64::consts::TAU * mf / 6.0).sin()).exp())
                })
                .collect()
        };
        let a = oscillation_amplitude(&make(0.8), &window, 4).unwrap();
        let b = oscillation_amplitude(&make(0.3), &window, 4).unwrap();
        let c = oscillation_amplitude(&make(0.05), &window, 4).unwrap();
        assert!(a > b && b > c, "{a} > {b} > {c}");
    }
}
