use crate::error::{Error, Result};

/// One piece of a [`GradientSchedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    /// Gradient slope, rad/s per metre.
    pub eta: f64,
    pub control_on: bool,
    /// Multiplies the configured control Rabi frequency.
    pub control_scale: f64,
}

impl Segment {
    pub fn new(t_start: f64, t_end: f64, eta: f64, control_on: bool) -> Self {
        Self {
            t_start,
            t_end,
            eta,
            control_on,
            control_scale: 1.0,
        }
    }

    /// Effective control amplitude factor (zero when the control is off).
    pub fn control(&self) -> f64 {
        if self.control_on {
            self.control_scale
        } else {
            0.0
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Piecewise-constant gradient and control timeline covering `[0, t_final]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSchedule {
    segments: Vec<Segment>,
}

impl GradientSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if segments.is_empty() {
            return bad("schedule has no segments".into());
        }
        if segments[0].t_start != 0.0 {
            return bad(format!(
                "schedule must start at t = 0, starts at {}",
                segments[0].t_start
            ));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.t_end > s.t_start) || !s.t_end.is_finite() {
                return bad(format!("segment {i} has non-positive duration"));
            }
            if !s.eta.is_finite() || !(s.control_scale >= 0.0) || !s.control_scale.is_finite() {
                return bad(format!("segment {i} has invalid gradient or control scale"));
            }
            if i > 0 && s.t_start != segments[i - 1].t_end {
                return bad(format!(
                    "segment {i} does not start where segment {} ends",
                    i - 1
                ));
            }
        }
        Ok(Self { segments })
    }

    /// Write with `eta` until `t_flip`, then recall with `-eta` until `t_final`,
    /// control on throughout.
    pub fn standard_echo(eta: f64, t_flip: f64, t_final: f64) -> Result<Self> {
        Self::new(vec![
            Segment::new(0.0, t_flip, eta, true),
            Segment::new(t_flip, t_final, -eta, true),
        ])
    }

    /// Standard echo with the control switched off for the recall.
    pub fn dark_recall(eta: f64, t_flip: f64, t_final: f64) -> Result<Self> {
        Self::new(vec![
            Segment::new(0.0, t_flip, eta, true),
            Segment::new(t_flip, t_final, -eta, false),
        ])
    }

    /// Write until `t_write`, hold with the control off until `t_flip`, then
    /// recall with the flipped gradient.
    pub fn with_storage(eta: f64, t_write: f64, t_flip: f64, t_final: f64) -> Result<Self> {
        Self::new(vec![
            Segment::new(0.0, t_write, eta, true),
            Segment::new(t_write, t_flip, eta, false),
            Segment::new(t_flip, t_final, -eta, true),
        ])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn t_final(&self) -> f64 {
        self.segments.last().map(|s| s.t_end).unwrap_or(0.0)
    }

    /// Segment active at `t` (the later one at a boundary).
    pub fn segment_at(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .rev()
            .find(|s| s.t_start <= t)
            .unwrap_or(&self.segments[0])
    }

    /// Times at which the gradient changes sign.
    pub fn flips(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut last = 0.0;
        for s in &self.segments {
            if s.eta != 0.0 {
                if last != 0.0 && s.eta.signum() != f64::signum(last) {
                    out.push(s.t_start);
                }
                last = s.eta;
            }
        }
        out
    }

    /// First sign flip, the start of the recall window.
    pub fn flip_time(&self) -> Option<f64> {
        self.flips().first().copied()
    }

    /// The same timeline with every gradient negated.
    pub fn mirrored(&self) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { eta: -s.eta, ..*s })
                .collect(),
        }
    }

    /// All segment boundaries including 0 and `t_final`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        v.extend(self.segments.iter().map(|s| s.t_end));
        v
    }
}
