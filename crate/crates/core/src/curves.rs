//! Min-plus curve primitives.
//!
//! Traffic is constrained by *arrival curves* (an upper envelope on the
//! cumulative bits a flow may inject over any window) and schedulers are
//! described by *service curves* (a lower envelope on the cumulative service
//! a backlogged flow receives). Everything here works in bits and seconds,
//! double precision. All curve values are immutable and all operations are
//! pure functions.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
    #[error("server saturated: the service curve never reaches the arrival curve within the search window")]
    Saturated,
    #[error("unstable system: arrival rate {rho_bps} b/s is not below the service rate {rate_bps} b/s")]
    Unstable { rho_bps: f64, rate_bps: f64 },
}

/// Affine traffic envelope `b(t) = sigma + rho * t`: at most `sigma` bits in a
/// burst plus a sustained rate of `rho` bits per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineArrivalCurve {
    /// Burst allowance in bits.
    pub sigma_bits: f64,
    /// Long-term rate in bits per second.
    pub rho_bps: f64,
}

impl AffineArrivalCurve {
    pub fn new(sigma_bits: f64, rho_bps: f64) -> Result<Self, CurveError> {
        if !sigma_bits.is_finite() || sigma_bits < 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "burst must be finite and nonnegative, got {sigma_bits}"
            )));
        }
        if !rho_bps.is_finite() || rho_bps < 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "rate must be finite and nonnegative, got {rho_bps}"
            )));
        }
        Ok(Self { sigma_bits, rho_bps })
    }

    /// Evaluates `sigma + rho * t`.
    pub fn eval(&self, t_s: f64) -> Result<f64, CurveError> {
        if t_s < 0.0 {
            return Err(CurveError::NegativeTime(t_s));
        }
        Ok(self.sigma_bits + self.rho_bps * t_s)
    }
}

/// A source emitting one frame of `frame_len_bits` every `period_s` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicSource {
    pub frame_len_bits: f64,
    pub period_s: f64,
}

impl PeriodicSource {
    pub fn new(frame_len_bits: f64, period_s: f64) -> Result<Self, CurveError> {
        if !frame_len_bits.is_finite() || frame_len_bits < 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "frame length must be finite and nonnegative, got {frame_len_bits}"
            )));
        }
        if !period_s.is_finite() || period_s <= 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "period must be finite and positive, got {period_s}"
            )));
        }
        Ok(Self { frame_len_bits, period_s })
    }

    /// Tightest affine envelope of the periodic emission: the burst is one
    /// frame and the rate is one frame per period.
    pub fn affine(&self) -> AffineArrivalCurve {
        AffineArrivalCurve {
            sigma_bits: self.frame_len_bits,
            rho_bps: self.frame_len_bits / self.period_s,
        }
    }
}

/// Rate-latency service curve `R * (t - T)+`: nothing for `T` seconds, then
/// service at rate `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLatencyCurve {
    pub rate_bps: f64,
    pub latency_s: f64,
}

impl RateLatencyCurve {
    pub fn new(rate_bps: f64, latency_s: f64) -> Result<Self, CurveError> {
        if !rate_bps.is_finite() || rate_bps <= 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "rate must be finite and positive, got {rate_bps}"
            )));
        }
        if !latency_s.is_finite() || latency_s < 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "latency must be finite and nonnegative, got {latency_s}"
            )));
        }
        Ok(Self { rate_bps, latency_s })
    }

    pub fn eval(&self, t_s: f64) -> Result<f64, CurveError> {
        if t_s < 0.0 {
            return Err(CurveError::NegativeTime(t_s));
        }
        Ok(self.rate_bps * (t_s - self.latency_s).max(0.0))
    }
}

/// Periodic vacation/forwarding service shape of a WRR visit cycle: the flow
/// waits at most `vacation_s` per cycle and is then forwarded at full link
/// capacity for `forwarding_s`.
///
/// The cumulative guarantee is
/// `max(C*(t - tau_v*ceil(t/(tau_v+tau_f)))+, C*tau_f*floor(t/(tau_v+tau_f)))`
/// which alternates plateaus (vacations) and capacity-rate ramps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrrServicePattern {
    pub vacation_s: f64,
    pub forwarding_s: f64,
    pub capacity_bps: f64,
}

impl WrrServicePattern {
    pub fn new(vacation_s: f64, forwarding_s: f64, capacity_bps: f64) -> Result<Self, CurveError> {
        if !vacation_s.is_finite() || vacation_s < 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "vacation period must be finite and nonnegative, got {vacation_s}"
            )));
        }
        if !forwarding_s.is_finite() || forwarding_s <= 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "forwarding period must be finite and positive, got {forwarding_s}"
            )));
        }
        if !capacity_bps.is_finite() || capacity_bps <= 0.0 {
            return Err(CurveError::InvalidParameter(format!(
                "capacity must be finite and positive, got {capacity_bps}"
            )));
        }
        Ok(Self { vacation_s, forwarding_s, capacity_bps })
    }

    pub fn cycle_s(&self) -> f64 {
        self.vacation_s + self.forwarding_s
    }

    pub fn eval(&self, t_s: f64) -> Result<f64, CurveError> {
        if t_s < 0.0 {
            return Err(CurveError::NegativeTime(t_s));
        }
        let cycle = self.cycle_s();
        let ramp = self.capacity_bps * (t_s - self.vacation_s * (t_s / cycle).ceil()).max(0.0);
        let stair = self.capacity_bps * self.forwarding_s * (t_s / cycle).floor();
        Ok(ramp.max(stair))
    }

    /// The rate-latency curve that lower-bounds this pattern everywhere:
    /// latency one vacation, rate equal to the per-cycle service share.
    pub fn rate_latency_envelope(&self) -> RateLatencyCurve {
        RateLatencyCurve {
            rate_bps: self.capacity_bps * self.forwarding_s / self.cycle_s(),
            latency_s: self.vacation_s,
        }
    }
}

/// One point of a numerically evaluated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t_s: f64,
    pub bits: f64,
}

/// Common evaluation interface for the curve families above.
///
/// `bits_at` assumes `t_s >= 0`; the inherent `eval` methods perform the
/// domain check for callers holding concrete types.
pub trait Curve {
    fn bits_at(&self, t_s: f64) -> f64;

    /// Slope of the curve as t grows without bound.
    fn long_run_rate_bps(&self) -> f64;

    /// Slope of the steepest segment.
    fn peak_rate_bps(&self) -> f64;

    /// Characteristic durations, used to pick sampling resolutions.
    fn time_scales_s(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Curve for AffineArrivalCurve {
    fn bits_at(&self, t_s: f64) -> f64 {
        self.sigma_bits + self.rho_bps * t_s
    }
    fn long_run_rate_bps(&self) -> f64 {
        self.rho_bps
    }
    fn peak_rate_bps(&self) -> f64 {
        self.rho_bps
    }
    fn time_scales_s(&self) -> Vec<f64> {
        if self.sigma_bits > 0.0 && self.rho_bps > 0.0 {
            vec![self.sigma_bits / self.rho_bps]
        } else {
            Vec::new()
        }
    }
}

impl Curve for RateLatencyCurve {
    fn bits_at(&self, t_s: f64) -> f64 {
        self.rate_bps * (t_s - self.latency_s).max(0.0)
    }
    fn long_run_rate_bps(&self) -> f64 {
        self.rate_bps
    }
    fn peak_rate_bps(&self) -> f64 {
        self.rate_bps
    }
    fn time_scales_s(&self) -> Vec<f64> {
        if self.latency_s > 0.0 {
            vec![self.latency_s]
        } else {
            Vec::new()
        }
    }
}

impl Curve for WrrServicePattern {
    fn bits_at(&self, t_s: f64) -> f64 {
        let cycle = self.cycle_s();
        let ramp = self.capacity_bps * (t_s - self.vacation_s * (t_s / cycle).ceil()).max(0.0);
        let stair = self.capacity_bps * self.forwarding_s * (t_s / cycle).floor();
        ramp.max(stair)
    }
    fn long_run_rate_bps(&self) -> f64 {
        self.capacity_bps * self.forwarding_s / self.cycle_s()
    }
    fn peak_rate_bps(&self) -> f64 {
        self.capacity_bps
    }
    fn time_scales_s(&self) -> Vec<f64> {
        let mut scales = vec![self.forwarding_s];
        if self.vacation_s > 0.0 {
            scales.push(self.vacation_s);
        }
        scales
    }
}

/// Controls the discretization of [`horizontal_deviation`]. Unset fields fall
/// back to defaults derived from the curve pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeviationOptions {
    /// Sampling step along the arrival time axis.
    pub step_s: Option<f64>,
    /// Largest arrival time examined.
    pub horizon_s: Option<f64>,
    /// Largest per-point delay searched before declaring saturation.
    pub search_window_s: Option<f64>,
}

/// Worst-case queuing delay as the horizontal deviation between an arrival
/// curve and a service curve: the supremum over t of the smallest `d >= 0`
/// with `alpha(t) <= beta(t + d)`.
///
/// The supremum is taken over the grid `{0, step, 2*step, ..., horizon}` and
/// each per-point delay is bracketed by doubling and then bisected, so the
/// result converges to the true deviation as the step shrinks. If the service
/// curve cannot reach the arrival curve within the search window the server
/// does not have enough resources and the call fails with
/// [`CurveError::Saturated`].
pub fn horizontal_deviation(
    alpha: &dyn Curve,
    beta: &dyn Curve,
    opts: DeviationOptions,
) -> Result<f64, CurveError> {
    if alpha.long_run_rate_bps() > beta.long_run_rate_bps() {
        return Err(CurveError::Saturated);
    }

    // Characteristic cycle used to derive the default resolution bounds.
    let cycle = positive_min_max(&beta.time_scales_s())
        .or_else(|| positive_min_max(&alpha.time_scales_s()))
        .map(|(_, max)| max)
        .unwrap_or(1e-3);

    let step = match opts.step_s {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(CurveError::InvalidParameter(format!(
                "step must be positive, got {s}"
            )))
        }
        None => {
            let mut candidates = beta.time_scales_s();
            let burst = alpha.bits_at(0.0);
            if burst > 0.0 && beta.peak_rate_bps() > 0.0 {
                candidates.push(burst / beta.peak_rate_bps());
            }
            match positive_min_max(&candidates) {
                Some((min, _)) => min / 100.0,
                None => cycle / 100.0,
            }
        }
    };

    let window = match opts.search_window_s {
        Some(w) if w > 0.0 => w,
        _ => 1e4 * cycle,
    };

    let horizon = match opts.horizon_s {
        Some(h) if h >= 0.0 => h,
        _ => {
            // Walk forward until the service curve has caught up with the
            // arrival curve (the backlog is gone), then keep ten more cycles.
            let cap = 1e4 * cycle;
            let mut t = cycle;
            while beta.bits_at(t) < alpha.bits_at(t) && t < cap {
                t += cycle;
            }
            (t + 10.0 * cycle).min(cap)
        }
    };

    let mut worst = 0.0f64;
    let steps = (horizon / step).floor() as u64;
    for i in 0..=steps {
        let t = i as f64 * step;
        let d = delay_at(alpha.bits_at(t), beta, t, step, window)?;
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Smallest `d >= 0` with `target <= beta(t + d)`, or `Saturated` if no such
/// delay exists within `window`.
fn delay_at(
    target: f64,
    beta: &dyn Curve,
    t: f64,
    step: f64,
    window: f64,
) -> Result<f64, CurveError> {
    if beta.bits_at(t) >= target {
        return Ok(0.0);
    }
    let mut hi = step;
    while beta.bits_at(t + hi) < target {
        hi *= 2.0;
        if hi > window {
            return Err(CurveError::Saturated);
        }
    }
    let mut lo = hi / 2.0;
    // beta is nondecreasing, so bisection converges to the crossing point.
    for _ in 0..64 {
        if hi - lo <= step * 1e-6 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if beta.bits_at(t + mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn positive_min_max(values: &[f64]) -> Option<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for &v in values {
        if v > 0.0 && v.is_finite() {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if max > 0.0 {
        Some((min, max))
    } else {
        None
    }
}

/// Departure envelope of an affine flow crossing a rate-latency server: the
/// deconvolution `alpha / beta` keeps the rate and inflates the burst by the
/// bits that can pile up during the latency, `sigma' = sigma + rho * T`.
pub fn deconvolve_affine_rate_latency(
    alpha: &AffineArrivalCurve,
    beta: &RateLatencyCurve,
) -> Result<AffineArrivalCurve, CurveError> {
    if alpha.rho_bps >= beta.rate_bps {
        return Err(CurveError::Unstable {
            rho_bps: alpha.rho_bps,
            rate_bps: beta.rate_bps,
        });
    }
    Ok(AffineArrivalCurve {
        sigma_bits: alpha.sigma_bits + alpha.rho_bps * beta.latency_s,
        rho_bps: alpha.rho_bps,
    })
}

/// Evaluates a curve on a regular grid. Handy for plotting and for tests.
pub fn sample_curve(curve: &dyn Curve, horizon_s: f64, step_s: f64) -> Result<Vec<CurveSample>, CurveError> {
    if step_s <= 0.0 {
        return Err(CurveError::InvalidParameter(format!(
            "step must be positive, got {step_s}"
        )));
    }
    if horizon_s < 0.0 {
        return Err(CurveError::NegativeTime(horizon_s));
    }
    let steps = (horizon_s / step_s).floor() as u64;
    let mut out = Vec::with_capacity(steps as usize + 1);
    for i in 0..=steps {
        let t_s = i as f64 * step_s;
        out.push(CurveSample { t_s, bits: curve.bits_at(t_s) });
    }
    Ok(out)
}
