//! Closed-form worst-case analysis of one two-queue WRR output port.
//!
//! The port serves a control queue (up to `w1` frames per visit) and a
//! background queue (up to `w2` frames per visit) in a fixed cycle. Two
//! regimes bound the control delay: a *burst phase* while the initial burst
//! drains at full per-cycle quota, and a *mean phase* once arrivals settle to
//! the sustained rate. The overall per-hop bound is the larger of the two.

use thiserror::Error;

use crate::curves::{AffineArrivalCurve, RateLatencyCurve, WrrServicePattern};

/// Guard against weights whose cycle barely keeps up with arrivals; treated
/// as saturation so bounds stay meaningful.
const SATURATION_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("saturated: burst never drains (per-cycle control service {service_bits:.3} bits does not exceed per-cycle vacation arrivals {arrival_bits:.3} bits)")]
    Saturated { service_bits: f64, arrival_bits: f64 },
    #[error("unstable: arrival rate {rho_bps} b/s is not below the service rate {rate_bps} b/s")]
    Unstable { rho_bps: f64, rate_bps: f64 },
    #[error("mean phase undefined: arrival rate is zero, the burst phase governs")]
    MeanPhaseUndefined,
    #[error("no feasible control weight at or below the cap of {cap}")]
    WeightCapExceeded { cap: u32 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// Static configuration of one WRR output port.
#[derive(Debug, Clone, PartialEq)]
pub struct PortConfig {
    /// Link capacity in bits per second.
    pub capacity_bps: f64,
    /// Frames forwarded per visit of the control queue.
    pub w1: u32,
    /// Frames forwarded per visit of the background queue.
    pub w2: u32,
    /// Largest background frame in bits.
    pub max_bg_frame_bits: f64,
}

impl PortConfig {
    pub fn new(capacity_bps: f64, w1: u32, w2: u32, max_bg_frame_bits: f64) -> Result<Self, AnalysisError> {
        if !capacity_bps.is_finite() || capacity_bps <= 0.0 {
            return Err(AnalysisError::Invalid(format!(
                "capacity must be positive, got {capacity_bps}"
            )));
        }
        if w1 == 0 || w2 == 0 {
            return Err(AnalysisError::Invalid(
                "weights count frames per cycle and must be at least 1".into(),
            ));
        }
        if !max_bg_frame_bits.is_finite() || max_bg_frame_bits <= 0.0 {
            return Err(AnalysisError::Invalid(format!(
                "background frame length must be positive, got {max_bg_frame_bits}"
            )));
        }
        Ok(Self { capacity_bps, w1, w2, max_bg_frame_bits })
    }

    /// Service time of one maximum-length background frame.
    pub fn tau_bar_s(&self) -> f64 {
        self.max_bg_frame_bits / self.capacity_bps
    }
}

/// The control flow as seen at one port: its constant frame length and its
/// arrival envelope at this hop.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFlowAtPort {
    pub frame_len_bits: f64,
    pub arrival: AffineArrivalCurve,
}

impl ControlFlowAtPort {
    pub fn new(frame_len_bits: f64, arrival: AffineArrivalCurve) -> Result<Self, AnalysisError> {
        if !frame_len_bits.is_finite() || frame_len_bits <= 0.0 {
            return Err(AnalysisError::Invalid(format!(
                "frame length must be positive, got {frame_len_bits}"
            )));
        }
        if arrival.sigma_bits < frame_len_bits {
            return Err(AnalysisError::Invalid(format!(
                "burst {} bits is smaller than one frame of {} bits",
                arrival.sigma_bits, frame_len_bits
            )));
        }
        Ok(Self { frame_len_bits, arrival })
    }

    /// Service time of one control frame at the given capacity.
    pub fn tau_s(&self, capacity_bps: f64) -> f64 {
        self.frame_len_bits / capacity_bps
    }
}

/// Burst-phase shape: worst vacation, full forwarding quota, and the number
/// of cycles until the queue catches up with the arrivals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstPhase {
    pub vacation_s: f64,
    pub forwarding_s: f64,
    /// Cycles needed to forward the burst.
    pub cycles: u32,
    /// Time at which the service curve reaches the arrival curve.
    pub drain_time_s: f64,
}

/// Mean-phase shape: vacations stretch to the largest whole number that fits
/// between control arrivals, forwarding shrinks to what those arrivals need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhase {
    pub vacation_s: f64,
    pub forwarding_s: f64,
}

/// Mean-phase delay bounds. The refined bound charges one vacation plus one
/// frame transmission; the raw horizontal deviation of the mean-phase curve
/// charges the whole vacation and is kept for reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDelayBound {
    pub refined_s: f64,
    pub pessimistic_s: Option<f64>,
}

/// All per-hop delay bounds for one port and one control arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopDelayBound {
    pub burst_s: f64,
    pub mean_s: f64,
    pub pessimistic_mean_s: Option<f64>,
    /// `max(burst_s, mean_s)`, the bound used downstream.
    pub overall_s: f64,
}

/// Which affine envelope constrains the flow after the port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepartureMode {
    /// Tighter of the per-cycle quota burst and the deconvolution burst:
    /// `sigma' = min(w1 * L, sigma + rho * w2 * tau_bar)`.
    EnvelopeMin,
    /// Per-cycle quota burst alone: `sigma' = w1 * L`.
    QuotaBurst,
}

/// Transmission time of one frame: `len / capacity`.
pub fn frame_service_time(len_bits: f64, capacity_bps: f64) -> Result<f64, AnalysisError> {
    if !capacity_bps.is_finite() || capacity_bps <= 0.0 {
        return Err(AnalysisError::Invalid(format!(
            "capacity must be positive, got {capacity_bps}"
        )));
    }
    if !len_bits.is_finite() || len_bits < 0.0 {
        return Err(AnalysisError::Invalid(format!(
            "frame length must be nonnegative, got {len_bits}"
        )));
    }
    Ok(len_bits / capacity_bps)
}

/// Burst-phase parameters: vacation `w2 * tau_bar`, forwarding `w1 * tau`,
/// and the cycle count `ceil(sigma / (C*w1*tau - rho*w2*tau_bar))`.
pub fn burst_phase(port: &PortConfig, flow: &ControlFlowAtPort) -> Result<BurstPhase, AnalysisError> {
    let tau = flow.tau_s(port.capacity_bps);
    let tau_bar = port.tau_bar_s();
    let vacation_s = port.w2 as f64 * tau_bar;
    let forwarding_s = port.w1 as f64 * tau;

    let service_bits = port.capacity_bps * forwarding_s;
    let arrival_bits = flow.arrival.rho_bps * vacation_s;
    if service_bits <= arrival_bits * (1.0 + SATURATION_MARGIN) {
        return Err(AnalysisError::Saturated { service_bits, arrival_bits });
    }

    let cycles = ceil_count(flow.arrival.sigma_bits / (service_bits - arrival_bits));
    Ok(BurstPhase {
        vacation_s,
        forwarding_s,
        cycles,
        drain_time_s: cycles as f64 * (vacation_s + forwarding_s),
    })
}

/// Burst cycle count with the conservative per-cycle balance that also
/// subtracts the control bits arriving while the quota is being served.
/// Disagrees with [`burst_phase`] only near the drain boundary; the analysis
/// surfaces a warning when it does.
pub fn conservative_burst_cycles(
    port: &PortConfig,
    flow: &ControlFlowAtPort,
) -> Result<u32, AnalysisError> {
    let tau = flow.tau_s(port.capacity_bps);
    let tau_bar = port.tau_bar_s();
    let cycle_arrivals = flow.arrival.rho_bps * (port.w1 as f64 * tau + port.w2 as f64 * tau_bar);
    let service_bits = port.w1 as f64 * flow.frame_len_bits;
    if service_bits <= cycle_arrivals * (1.0 + SATURATION_MARGIN) {
        return Err(AnalysisError::Saturated {
            service_bits,
            arrival_bits: cycle_arrivals,
        });
    }
    Ok(ceil_count(flow.arrival.sigma_bits / (service_bits - cycle_arrivals)))
}

/// Smallest control weight whose single cycle absorbs the whole burst plus
/// the traffic arriving during that cycle:
/// `w1 >= (sigma + rho * w2 * tau_bar) / (L - rho * tau)`.
///
/// One cycle is the binding case of the burst-drain requirement
/// `k*w1*L >= sigma + rho*k*(w2*tau_bar + w1*tau)`: the per-cycle deficit
/// shrinks as k grows, and the weight returned here always makes the cycle
/// count of [`burst_phase`] collapse to one, so the pair is self-consistent.
pub fn min_weight_burst(
    capacity_bps: f64,
    w2: u32,
    max_bg_frame_bits: f64,
    flow: &ControlFlowAtPort,
    cap: u32,
) -> Result<u32, AnalysisError> {
    if cap == 0 {
        return Err(AnalysisError::Invalid("weight cap must be at least 1".into()));
    }
    let tau = flow.frame_len_bits / capacity_bps;
    let tau_bar = max_bg_frame_bits / capacity_bps;
    let net_per_frame = flow.frame_len_bits - flow.arrival.rho_bps * tau;
    if net_per_frame <= 0.0 {
        return Err(AnalysisError::Unstable {
            rho_bps: flow.arrival.rho_bps,
            rate_bps: capacity_bps,
        });
    }
    let bound = (flow.arrival.sigma_bits + flow.arrival.rho_bps * w2 as f64 * tau_bar) / net_per_frame;
    let w1 = ceil_count(bound);
    if w1 > cap {
        return Err(AnalysisError::WeightCapExceeded { cap });
    }
    debug_assert!({
        let port = PortConfig::new(capacity_bps, w1, w2, max_bg_frame_bits).unwrap();
        burst_phase(&port, flow).map(|b| b.cycles == 1).unwrap_or(false)
    });
    Ok(w1)
}

/// Mean-phase parameters: the vacation is the largest whole number of
/// background rounds fitting in one control interarrival,
/// `floor((L/rho - tau) / (w2*tau_bar)) * w2*tau_bar`, and the forwarding
/// period is the time to drain what arrived during it,
/// `rho * tau_v / (C - rho)`.
pub fn mean_phase(port: &PortConfig, flow: &ControlFlowAtPort) -> Result<MeanPhase, AnalysisError> {
    let rho = flow.arrival.rho_bps;
    if rho <= 0.0 {
        return Err(AnalysisError::MeanPhaseUndefined);
    }
    if rho >= port.capacity_bps {
        return Err(AnalysisError::Unstable { rho_bps: rho, rate_bps: port.capacity_bps });
    }
    let tau = flow.tau_s(port.capacity_bps);
    let round = port.w2 as f64 * port.tau_bar_s();
    let interarrival = flow.frame_len_bits / rho;
    let vacation_s = ((interarrival - tau) / round).floor().max(0.0) * round;
    let forwarding_s = rho * vacation_s / (port.capacity_bps - rho);
    Ok(MeanPhase { vacation_s, forwarding_s })
}

/// Smallest control weight able to carry the mean-phase forwarding load:
/// `w1 * L / C >= tau_f`, i.e. `w1 >= C*rho*tau_v / (L*(C - rho))`.
pub fn min_weight_mean(
    capacity_bps: f64,
    w2: u32,
    max_bg_frame_bits: f64,
    flow: &ControlFlowAtPort,
) -> Result<u32, AnalysisError> {
    let rho = flow.arrival.rho_bps;
    if rho <= 0.0 {
        // Vanishing sustained traffic needs a single slot.
        return Ok(1);
    }
    if rho >= capacity_bps {
        return Err(AnalysisError::Unstable { rho_bps: rho, rate_bps: capacity_bps });
    }
    let port = PortConfig::new(capacity_bps, 1, w2, max_bg_frame_bits)?;
    let phase = mean_phase(&port, flow)?;
    Ok(ceil_count(capacity_bps * phase.forwarding_s / flow.frame_len_bits))
}

/// Delay bound of an affine arrival against a rate-latency service:
/// `(T - tau_i) + (sigma + rho * tau_i) / R`. With `tau_i = 0` this is the
/// familiar `T + sigma / R`.
pub fn delay_bound_rate_latency(
    sigma_bits: f64,
    rho_bps: f64,
    rate_bps: f64,
    latency_s: f64,
    tau_i_s: f64,
) -> Result<f64, AnalysisError> {
    if rho_bps >= rate_bps {
        return Err(AnalysisError::Unstable { rho_bps, rate_bps });
    }
    if tau_i_s < 0.0 {
        return Err(AnalysisError::Invalid(format!(
            "offset must be nonnegative, got {tau_i_s}"
        )));
    }
    Ok((latency_s - tau_i_s) + (sigma_bits + rho_bps * tau_i_s) / rate_bps)
}

/// Burst-phase delay bound: one full vacation plus the burst transmission
/// stretched by the cycle overhead,
/// `w2*tau_bar + (sigma/C) * (w1*L + w2*Lbar) / (w1*L)`.
pub fn delay_bound_burst(port: &PortConfig, flow: &ControlFlowAtPort) -> Result<f64, AnalysisError> {
    burst_phase(port, flow)?;
    let quota_bits = port.w1 as f64 * flow.frame_len_bits;
    let cycle_bits = quota_bits + port.w2 as f64 * port.max_bg_frame_bits;
    Ok(port.w2 as f64 * port.tau_bar_s()
        + flow.arrival.sigma_bits / port.capacity_bps * cycle_bits / quota_bits)
}

/// Mean-phase delay bounds; the pessimistic variant is undefined when the
/// sustained rate is zero.
pub fn delay_bound_mean(port: &PortConfig, flow: &ControlFlowAtPort) -> MeanDelayBound {
    let refined_s = port.w2 as f64 * port.tau_bar_s() + flow.tau_s(port.capacity_bps);
    let pessimistic_s = mean_phase(port, flow).ok().map(|p| p.vacation_s);
    MeanDelayBound { refined_s, pessimistic_s }
}

/// Overall per-hop bound: the larger of the burst-phase and mean-phase
/// bounds, with all intermediate values reported.
pub fn delay_bound_overall(
    port: &PortConfig,
    flow: &ControlFlowAtPort,
) -> Result<HopDelayBound, AnalysisError> {
    let burst_s = delay_bound_burst(port, flow)?;
    let mean = delay_bound_mean(port, flow);
    Ok(HopDelayBound {
        burst_s,
        mean_s: mean.refined_s,
        pessimistic_mean_s: mean.pessimistic_s,
        overall_s: burst_s.max(mean.refined_s),
    })
}

/// Arrival envelope of the control flow after the port.
pub fn departure_curve(
    port: &PortConfig,
    flow: &ControlFlowAtPort,
    mode: DepartureMode,
) -> Result<AffineArrivalCurve, AnalysisError> {
    burst_phase(port, flow)?;
    let quota_bits = port.w1 as f64 * flow.frame_len_bits;
    let deconvolved = flow.arrival.sigma_bits
        + flow.arrival.rho_bps * port.w2 as f64 * port.tau_bar_s();
    let sigma_bits = match mode {
        DepartureMode::EnvelopeMin => quota_bits.min(deconvolved),
        DepartureMode::QuotaBurst => quota_bits,
    };
    Ok(AffineArrivalCurve { sigma_bits, rho_bps: flow.arrival.rho_bps })
}

/// Burst-phase service pattern of the port, for numeric cross checks.
pub fn burst_service_pattern(
    port: &PortConfig,
    flow: &ControlFlowAtPort,
) -> Result<WrrServicePattern, AnalysisError> {
    let phase = burst_phase(port, flow)?;
    WrrServicePattern::new(phase.vacation_s, phase.forwarding_s, port.capacity_bps)
        .map_err(|e| AnalysisError::Invalid(e.to_string()))
}

/// Rate-latency envelope of the burst-phase service:
/// rate `w1*L / (w1*tau + w2*tau_bar)`, latency `w2*tau_bar`.
pub fn burst_rate_latency(
    port: &PortConfig,
    flow: &ControlFlowAtPort,
) -> Result<RateLatencyCurve, AnalysisError> {
    Ok(burst_service_pattern(port, flow)?.rate_latency_envelope())
}

/// Ceiling to a count of at least one, with a small relative guard so values
/// computed a hair above an integer do not round up spuriously.
fn ceil_count(x: f64) -> u32 {
    if x.is_nan() || x <= 1.0 {
        return 1;
    }
    (x - 1e-9).ceil() as u32
}
