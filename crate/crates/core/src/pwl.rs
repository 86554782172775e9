//! Piecewise-linear chords of the signed square `g(f) = f|f|`.

use serde::{Deserialize, Serialize};

/// Default number of segments per pipeline.
pub const DEFAULT_SEGMENTS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlSegment {
    pub f_lo: f64,
    pub f_hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl PwlSegment {
    pub fn eval(&self, f: f64) -> f64 {
        self.slope * f + self.intercept
    }

    pub fn width(&self) -> f64 {
        self.f_hi - self.f_lo
    }

    pub fn crosses_zero(&self) -> bool {
        self.f_lo < 0.0 && self.f_hi > 0.0
    }

    /// Largest `|chord - g|` on this segment.
    ///
    /// Away from zero `g` is `±f²` and the chord error peaks at the midpoint
    /// at `width²/4`. On the segment containing zero the error `e = chord - g`
    /// is smooth on each side of the kink, so the maximum sits at `f = 0` or
    /// at a stationary point `f = ±slope/2`.
    pub fn max_error(&self) -> f64 {
        if !self.crosses_zero() {
            let w = self.width();
            return w * w / 4.0;
        }
        let mut candidates = vec![0.0];
        let s = self.slope / 2.0;
        if s > 0.0 && s < self.f_hi {
            candidates.push(s);
        }
        if -s < 0.0 && -s > self.f_lo {
            candidates.push(-s);
        }
        candidates.into_iter().map(|f| (self.eval(f) - signed_square(f)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlSegmentSet {
    pub flow_cap: f64,
    pub segments: Vec<PwlSegment>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PwlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("flow {f} lies outside [-{cap}, {cap}]")]
    Domain { f: f64, cap: f64 },
}

pub fn signed_square(f: f64) -> f64 {
    f * f.abs()
}

/// `k` equal-width chords over `[-flow_cap, flow_cap]`.
pub fn build_segments(flow_cap: f64, k: usize) -> Result<PwlSegmentSet, PwlError> {
    if k < 1 {
        return Err(PwlError::InvalidArgument(format!("segment count must be at least 1, got {k}")));
    }
    if !(flow_cap > 0.0 && flow_cap.is_finite()) {
        return Err(PwlError::InvalidArgument(format!("flow_cap must be positive, got {flow_cap}")));
    }
    // Written so that breakpoint k - i is exactly the negation of breakpoint i.
    let bp = |i: usize| match i {
        0 => -flow_cap,
        i if i == k => flow_cap,
        i => flow_cap * (2.0 * i as f64 - k as f64) / k as f64,
    };
    let segments = (0..k)
        .map(|i| {
            let (a, b) = (bp(i), bp(i + 1));
            let (ga, gb) = (signed_square(a), signed_square(b));
            PwlSegment { f_lo: a, f_hi: b, slope: (gb - ga) / (b - a), intercept: (ga * b - gb * a) / (b - a) }
        })
        .collect();
    Ok(PwlSegmentSet { flow_cap, segments })
}

impl PwlSegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Breakpoints from `-flow_cap` to `flow_cap`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().map(|s| s.f_lo).collect();
        if let Some(last) = self.segments.last() {
            v.push(last.f_hi);
        }
        v
    }

    /// Index of the segment holding `f`; a breakpoint belongs to the segment
    /// on its left.
    pub fn segment_of(&self, f: f64) -> Result<usize, PwlError> {
        if !(f.abs() <= self.flow_cap) {
            return Err(PwlError::Domain { f, cap: self.flow_cap });
        }
        Ok(self.segments.iter().position(|s| f <= s.f_hi).unwrap_or(self.segments.len() - 1))
    }
}

pub fn eval_pwl(set: &PwlSegmentSet, f: f64) -> Result<f64, PwlError> {
    Ok(set.segments[set.segment_of(f)?].eval(f))
}

/// Maximum absolute approximation error over the whole domain.
pub fn approx_error(set: &PwlSegmentSet) -> f64 {
    set.segments.iter().map(PwlSegment::max_error).fold(0.0, f64::max)
}

/// Segment table as CSV (`segment,f_lo,f_hi,slope,intercept,max_error`).
pub fn segments_csv(set: &PwlSegmentSet) -> String {
    use crate::report::fmt_float;
    let rows: Vec<Vec<String>> = set
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                fmt_float(s.f_lo),
                fmt_float(s.f_hi),
                fmt_float(s.slope),
                fmt_float(s.intercept),
                fmt_float(s.max_error()),
            ]
        })
        .collect();
    crate::report::csv(&["segment", "f_lo", "f_hi", "slope", "intercept", "max_error"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_is_odd_chord() {
        let s = build_segments(10.0, 1).unwrap();
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].slope, 10.0);
        assert_eq!(s.segments[0].intercept, 0.0);
    }

    #[test]
    fn three_segments_on_nine() {
        let s = build_segments(9.0, 3).unwrap();
        assert_eq!(s.breakpoints(), vec![-9.0, -3.0, 3.0, 9.0]);
        assert_eq!((s.segments[1].slope, s.segments[1].intercept), (3.0, 0.0));
        assert_eq!((s.segments[0].slope, s.segments[0].intercept), (12.0, 27.0));
        assert_eq!((s.segments[2].slope, s.segments[2].intercept), (12.0, -27.0));
        assert_eq!(eval_pwl(&s, 6.0).unwrap(), 45.0);
        assert_eq!(approx_error(&s), 9.0);
        assert_eq!(s.segments[1].max_error(), 2.25);
    }

    #[test]
    fn two_segments_share_a_chord() {
        let s = build_segments(10.0, 2).unwrap();
        for seg in &s.segments {
            assert_eq!((seg.slope, seg.intercept), (10.0, 0.0));
        }
        assert_eq!(approx_error(&s), 25.0);
    }

    #[test]
    fn endpoints_and_domain() {
        let s = build_segments(7.5, 4).unwrap();
        assert_eq!(eval_pwl(&s, 0.0).unwrap(), 0.0);
        assert_eq!(eval_pwl(&s, 7.5).unwrap(), 56.25);
        assert_eq!(eval_pwl(&s, -7.5).unwrap(), -56.25);
        assert!(matches!(eval_pwl(&s, 7.6), Err(PwlError::Domain { .. })));
        assert!(matches!(build_segments(1.0, 0), Err(PwlError::InvalidArgument(_))));
        assert!(matches!(build_segments(0.0, 3), Err(PwlError::InvalidArgument(_))));
    }

    #[test]
    fn breakpoint_ties_go_left() {
        let s = build_segments(9.0, 3).unwrap();
        assert_eq!(s.segment_of(-3.0).unwrap(), 0);
        assert_eq!(s.segment_of(3.0).unwrap(), 1);
        assert_eq!(s.segment_of(-9.0).unwrap(), 0);
    }
}
