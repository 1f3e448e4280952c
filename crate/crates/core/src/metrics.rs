//! Objective functions and time-series summaries of run reports.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::{RunReport, StepReport};
use crate::routing::FlowId;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("{0} did not complete")]
    Incomplete(FlowId),
    #[error("report has no flows")]
    NoFlows,
    #[error("need at least 2 sweep points, got {0}")]
    TooFewPoints(usize),
    #[error("bin width must be at least 1")]
    ZeroBin,
    #[error("need at least 2 samples per group for a t-test")]
    TooFewSamples,
}

/// Mean over flows of `load / completion_time`, in data units per step.
pub fn bandwidth(report: &RunReport) -> Result<f64, MetricError> {
    if report.flows.is_empty() {
        return Err(MetricError::NoFlows);
    }
    let mut total = 0.0;
    for f in &report.flows {
        let time = f.completion_time.ok_or(MetricError::Incomplete(f.id))?;
        if time > 0 {
            total += f.load as f64 / time as f64;
        }
    }
    Ok(total / report.flows.len() as f64)
}

/// Like [`bandwidth`], but a flow still open after `steps` counts as
/// `delivered / steps`. Equals [`bandwidth`] when every flow completed.
pub fn partial_bandwidth(report: &RunReport, steps: u64) -> Result<f64, MetricError> {
    if report.flows.is_empty() {
        return Err(MetricError::NoFlows);
    }
    let mut total = 0.0;
    for f in &report.flows {
        match f.completion_time {
            Some(0) => {}
            Some(time) => total += f.load as f64 / time as f64,
            None if steps > 0 => total += f.delivered as f64 / steps as f64,
            None => {}
        }
    }
    Ok(total / report.flows.len() as f64)
}

/// Mean over flows of dropped units as a percentage of the load. Exceeds 100
/// when a flow loses more than it delivers.
pub fn drop_penalty(report: &RunReport) -> f64 {
    mean_over_flows(report, |f| f.dropped as f64 / f.load as f64)
}

/// Mean over flows of queue insertions per unit of load per hop, in percent.
pub fn queue_penalty(report: &RunReport) -> f64 {
    mean_over_flows(report, |f| f.queued_total as f64 / (f.load as f64 * f.path_length as f64))
}

fn mean_over_flows(report: &RunReport, per_flow: impl Fn(&crate::engine::FlowStats) -> f64) -> f64 {
    let flows: Vec<_> = report.flows.iter().filter(|f| f.load > 0).collect();
    if flows.is_empty() {
        return 0.0;
    }
    100.0 * flows.iter().map(|f| per_flow(f)).sum::<f64>() / flows.len() as f64
}

/// One point of a parameter sweep: its parameters and the metrics it scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub ki: f64,
    pub kd: f64,
    pub bandwidth: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// `std / mean`; zero when both are zero.
    pub cv: f64,
}

impl Dispersion {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        let cv = if std == 0.0 { 0.0 } else { std / mean.abs() };
        Self { mean, std, cv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessSummary {
    pub bandwidth: Dispersion,
    pub penalty: Dispersion,
}

/// Spread of performance across a rule's parameter sweep.
pub fn parameter_robustness(points: &[SweepPoint]) -> Result<RobustnessSummary, MetricError> {
    if points.len() < 2 {
        return Err(MetricError::TooFewPoints(points.len()));
    }
    let bw: Vec<f64> = points.iter().map(|p| p.bandwidth).collect();
    let pen: Vec<f64> = points.iter().map(|p| p.penalty).collect();
    Ok(RobustnessSummary { bandwidth: Dispersion::of(&bw), penalty: Dispersion::of(&pen) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Injected,
    Delivered,
    Dropped,
    Queued,
    ActiveFlows,
    SourceWeight,
}

impl Quantity {
    fn read(self, s: &StepReport) -> Option<f64> {
        match self {
            Quantity::Injected => Some(s.injected as f64),
            Quantity::Delivered => Some(s.delivered as f64),
            Quantity::Dropped => Some(s.dropped as f64),
            Quantity::Queued => Some(s.queued as f64),
            Quantity::ActiveFlows => Some(s.active_flows as f64),
            Quantity::SourceWeight => s.mean_source_weight,
        }
    }
}

/// Means of consecutive `bin`-long chunks; the last chunk may be shorter.
pub fn binned_means(values: &[f64], bin: usize) -> Result<Vec<f64>, MetricError> {
    if bin == 0 {
        return Err(MetricError::ZeroBin);
    }
    Ok(values.chunks(bin).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect())
}

/// Per-bin means of one step quantity. Steps where the quantity is undefined
/// (no active flows for [`Quantity::SourceWeight`]) are left out of their bin;
/// a bin with no defined steps is NaN.
pub fn binned_series(report: &RunReport, bin: usize, quantity: Quantity) -> Result<Vec<f64>, MetricError> {
    if bin == 0 {
        return Err(MetricError::ZeroBin);
    }
    Ok(report
        .steps
        .chunks(bin)
        .map(|chunk| {
            let vals: Vec<f64> = chunk.iter().filter_map(|s| quantity.read(s)).collect();
            if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect())
}

/// Per-bin rates for time-resolved plots.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedRates {
    /// First step of each bin.
    pub t: Vec<u64>,
    /// Delivered units per step per active flow.
    pub bandwidth: Vec<f64>,
    /// Dropped units as a percentage of units injected in the bin.
    pub drop_pct: Vec<f64>,
    /// Queue insertions as a percentage of units injected in the bin.
    pub queue_pct: Vec<f64>,
}

pub fn binned_rates(report: &RunReport, bin: usize) -> Result<BinnedRates, MetricError> {
    if bin == 0 {
        return Err(MetricError::ZeroBin);
    }
    let mut out = BinnedRates { t: Vec::new(), bandwidth: Vec::new(), drop_pct: Vec::new(), queue_pct: Vec::new() };
    let ratio = |num: u64, den: u64, scale: f64| if den == 0 { 0.0 } else { scale * num as f64 / den as f64 };
    for chunk in report.steps.chunks(bin) {
        let sum = |f: fn(&StepReport) -> u64| chunk.iter().map(f).sum::<u64>();
        let injected = sum(|s| s.injected);
        out.t.push(chunk[0].t);
        out.bandwidth.push(ratio(sum(|s| s.delivered), sum(|s| s.active_flows as u64), 1.0));
        out.drop_pct.push(ratio(sum(|s| s.dropped), injected, 100.0));
        out.queue_pct.push(ratio(sum(|s| s.queued), injected, 100.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance two-sample t-test.
pub fn two_sample_t_test(a: &[f64], b: &[f64]) -> Result<TTest, MetricError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricError::TooFewSamples);
    }
    let (da, db) = (Dispersion::of(a), Dispersion::of(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (da.std.powi(2) / na, db.std.powi(2) / nb);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        let p = if da.mean == db.mean { 1.0 } else { 0.0 };
        let t = if da.mean == db.mean { 0.0 } else { (da.mean - db.mean).signum() * f64::INFINITY };
        return Ok(TTest { t, df: na + nb - 2.0, p });
    }
    let t = (da.mean - db.mean) / se;
    let df = (va + vb).powi(2) / (va.powi(2) / (na - 1.0) + vb.powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTest { t, df, p })
}
