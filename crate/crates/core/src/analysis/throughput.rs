use std::fmt::Write as _;

use super::AnalysisError;
use crate::model::ApbId;
use crate::sim::Trace;
use crate::Time;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputPoint {
    pub start: Time,
    /// Shorter than the window only for the final, partial window.
    pub len: Time,
    pub items: u64,
    /// Items per second.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSeries {
    pub window: Time,
    pub points: Vec<ThroughputPoint>,
}

impl ThroughputSeries {
    pub fn total_items(&self) -> u64 {
        self.points.iter().map(|p| p.items).sum()
    }

    /// `window_start_ps,items_per_s`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_start_ps,items_per_s\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.start.as_ps(), p.rate);
        }
        out
    }
}

/// Items of `sink` per window over `[0, trace.end]`. Windows tile the span;
/// an item exactly at `end` counts in the last window.
pub fn throughput(trace: &Trace, window: Time, sink: ApbId) -> Result<ThroughputSeries, AnalysisError> {
    if window == Time::ZERO {
        return Err(AnalysisError::ZeroWindow);
    }
    let items = trace
        .items
        .get(sink.index())
        .ok_or(AnalysisError::UnknownSink(sink))?;
    let end = trace.end.as_ps();
    let w = window.as_ps();
    let n = end.div_ceil(w) as usize;
    let mut counts = vec![0u64; n];
    for &(t, _) in items {
        if n == 0 {
            break;
        }
        let i = ((t.as_ps() / w) as usize).min(n - 1);
        counts[i] += 1;
    }
    let points = counts
        .into_iter()
        .enumerate()
        .map(|(i, items)| {
            let start = i as u64 * w;
            let len = w.min(end - start);
            ThroughputPoint {
                start: Time(start),
                len: Time(len),
                items,
                rate: items as f64 / Time(len).as_secs_f64(),
            }
        })
        .collect();
    Ok(ThroughputSeries { window, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_with(items: &[u64], end: u64) -> Trace {
        let mut t = Trace::new(1, 1);
        t.items[0] = items.iter().map(|&x| (Time(x), 0)).collect();
        t.end = Time(end);
        t
    }

    #[test]
    fn empty_trace_gives_zero_rates() {
        let s = throughput(&trace_with(&[], 1000), Time(100), ApbId(0)).unwrap();
        assert_eq!(s.points.len(), 10);
        assert!(s.points.iter().all(|p| p.rate == 0.0));
    }

    #[test]
    fn one_item_per_10ns_is_100m_per_second() {
        let items: Vec<u64> = (0..100).map(|k| k * 10_000).collect();
        let s = throughput(&trace_with(&items, 1_000_000), Time(100_000), ApbId(0)).unwrap();
        for p in &s.points {
            assert_eq!(p.items, 10);
            assert!((p.rate - 1e8).abs() < 1e-3);
        }
    }

    #[test]
    fn partial_last_window_and_item_at_end() {
        let s = throughput(&trace_with(&[0, 149, 250], 250), Time(100), ApbId(0)).unwrap();
        let got: Vec<_> = s.points.iter().map(|p| (p.start.0, p.len.0, p.items)).collect();
        assert_eq!(got, vec![(0, 100, 1), (100, 100, 1), (200, 50, 1)]);
    }

    #[test]
    fn unknown_sink_and_zero_window() {
        let t = trace_with(&[], 10);
        assert_eq!(throughput(&t, Time(1), ApbId(3)), Err(AnalysisError::UnknownSink(ApbId(3))));
        assert_eq!(throughput(&t, Time(0), ApbId(0)), Err(AnalysisError::ZeroWindow));
    }
}
