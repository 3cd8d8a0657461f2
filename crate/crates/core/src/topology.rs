//! Network model: stations, switches, links, flows, and the propagation of
//! arrival envelopes along multi-hop paths.
//!
//! Paths are declared, not routed. Each hop of a path is one WRR output port
//! traversal; ingress links from stations are full duplex with a single
//! source and never contend.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::analysis::{
    delay_bound_overall, departure_curve, AnalysisError, ControlFlowAtPort, DepartureMode,
    HopDelayBound, PortConfig,
};
use crate::curves::{AffineArrivalCurve, PeriodicSource};

/// One WRR output port, addressed as `<switch>.<number>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId {
    pub switch: String,
    pub number: u32,
}

impl PortId {
    pub fn new(switch: impl Into<String>, number: u32) -> Self {
        Self { switch: switch.into(), number }
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.switch, self.number)
    }
}

/// A link endpoint: either a station or a specific switch port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Station(String),
    SwitchPort(PortId),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Station(name) => write!(f, "{name}"),
            Endpoint::SwitchPort(port) => write!(f, "{port}"),
        }
    }
}

/// Full-duplex link between two endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub a: Endpoint,
    pub b: Endpoint,
    pub capacity_bps: f64,
}

/// The static network: links plus the WRR configuration of every declared
/// port. Port capacities come from the attached link.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    pub links: Vec<Link>,
    pub ports: BTreeMap<PortId, PortConfig>,
    /// Ports declared without any attached link; kept so validation can name
    /// them instead of failing construction.
    pub unbound_ports: Vec<PortId>,
}

impl Topology {
    pub fn port(&self, id: &PortId) -> Option<&PortConfig> {
        self.ports.get(id)
    }

    /// Endpoints that appear on links without a port suffix.
    pub fn stations(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .links
            .iter()
            .flat_map(|l| [&l.a, &l.b])
            .filter_map(|e| match e {
                Endpoint::Station(name) => Some(name.as_str()),
                Endpoint::SwitchPort(_) => None,
            })
            .collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    /// Capacity of the link attached to the given port, if any.
    pub fn link_capacity(&self, id: &PortId) -> Option<f64> {
        self.links
            .iter()
            .find(|l| {
                matches!(&l.a, Endpoint::SwitchPort(p) if p == id)
                    || matches!(&l.b, Endpoint::SwitchPort(p) if p == id)
            })
            .map(|l| l.capacity_bps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowClass {
    /// Deadline-constrained traffic: highest priority queue.
    Control { source: PeriodicSource, deadline_s: f64 },
    /// Everything else, modeled only by the per-port maximum frame length
    /// and weight; saturating in the simulator.
    Background,
}

/// A named flow and the ordered output ports it traverses.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub class: FlowClass,
    pub path: Vec<PortId>,
}

impl FlowSpec {
    pub fn is_control(&self) -> bool {
        matches!(self.class, FlowClass::Control { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCode {
    PathUnknownPort,
    FlowOverload,
    PortNoLink,
    BadDeadline,
    EmptyPath,
    UnknownEndpoint,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCode::PathUnknownPort => "E_PATH_UNKNOWN_PORT",
            DiagnosticCode::FlowOverload => "E_FLOW_OVERLOAD",
            DiagnosticCode::PortNoLink => "E_PORT_NO_LINK",
            DiagnosticCode::BadDeadline => "E_BAD_DEADLINE",
            DiagnosticCode::EmptyPath => "E_EMPTY_PATH",
            DiagnosticCode::UnknownEndpoint => "E_UNKNOWN_ENDPOINT",
        };
        f.write_str(s)
    }
}

/// One validation finding with a stable code and a human-readable message.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Checks every topology and flow invariant; an empty result means the
/// configuration is analyzable.
pub fn validate_topology(topology: &Topology, flows: &[FlowSpec]) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for port in &topology.unbound_ports {
        out.push(Diagnostic {
            code: DiagnosticCode::PortNoLink,
            message: format!("port {port} is configured but no link attaches to it"),
        });
    }

    let stations = topology.stations();
    for flow in flows {
        if flow.path.is_empty() {
            out.push(Diagnostic {
                code: DiagnosticCode::EmptyPath,
                message: format!("flow {} declares an empty path", flow.name),
            });
        }
        for endpoint in [&flow.src, &flow.dst] {
            if !stations.contains(&endpoint.as_str()) {
                out.push(Diagnostic {
                    code: DiagnosticCode::UnknownEndpoint,
                    message: format!(
                        "flow {} references endpoint {endpoint} which appears on no link",
                        flow.name
                    ),
                });
            }
        }
        for hop in &flow.path {
            if topology.port(hop).is_none() {
                out.push(Diagnostic {
                    code: DiagnosticCode::PathUnknownPort,
                    message: format!("flow {} traverses unknown port {hop}", flow.name),
                });
            }
        }
        if let FlowClass::Control { source, deadline_s } = &flow.class {
            if *deadline_s <= 0.0 {
                out.push(Diagnostic {
                    code: DiagnosticCode::BadDeadline,
                    message: format!(
                        "flow {} needs a positive deadline, got {deadline_s}",
                        flow.name
                    ),
                });
            }
            if let Some(first) = flow.path.first() {
                if let Some(port) = topology.port(first) {
                    let rho = source.frame_len_bits / source.period_s;
                    if rho >= port.capacity_bps {
                        out.push(Diagnostic {
                            code: DiagnosticCode::FlowOverload,
                            message: format!(
                                "flow {} offers {rho} b/s to port {first} of capacity {} b/s",
                                flow.name, port.capacity_bps
                            ),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Analysis of one hop of a control path.
#[derive(Debug, Clone, PartialEq)]
pub struct HopReport {
    pub port: PortId,
    pub w1: u32,
    pub w2: u32,
    /// Envelope of the flow entering this hop.
    pub arrival: AffineArrivalCurve,
    pub bound: HopDelayBound,
    /// Envelope of the flow leaving this hop; the next hop's arrival.
    pub departure: AffineArrivalCurve,
    /// Long-run bandwidth the port leaves to background traffic.
    pub bg_bandwidth_bps: f64,
}

/// End-to-end analysis of one control flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub flow: String,
    pub hops: Vec<HopReport>,
    /// Sum of the per-hop overall bounds.
    pub end_to_end_s: f64,
    pub deadline_s: f64,
    pub deadline_met: bool,
    /// Smallest background bandwidth along the path.
    pub min_bg_bandwidth_bps: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("flow {flow} traverses unknown port {port}")]
    UnknownPort { flow: String, port: PortId },
    #[error("flow {flow} is not a control flow")]
    NotControl { flow: String },
    #[error("analysis failed at port {port}: {source}")]
    HopFailed {
        port: PortId,
        #[source]
        source: AnalysisError,
    },
}

/// Share of a saturated WRR cycle left to the background queue:
/// `C * w2*tau_bar / (w1*tau + w2*tau_bar)`.
pub fn background_bandwidth(port: &PortConfig, control_frame_len_bits: f64) -> f64 {
    let tau = control_frame_len_bits / port.capacity_bps;
    let tau_bar = port.tau_bar_s();
    let bg = port.w2 as f64 * tau_bar;
    let cycle = port.w1 as f64 * tau + bg;
    port.capacity_bps * bg / cycle
}

/// Walks a control flow along its path: the first hop sees the affine
/// envelope of the periodic source, every later hop sees the departure
/// envelope of the hop before it. The end-to-end bound is the sum of the
/// per-hop overall bounds.
pub fn propagate_analysis(
    topology: &Topology,
    flow: &FlowSpec,
    mode: DepartureMode,
) -> Result<PathReport, TopologyError> {
    let (source, deadline_s) = match &flow.class {
        FlowClass::Control { source, deadline_s } => (source, *deadline_s),
        FlowClass::Background => {
            return Err(TopologyError::NotControl { flow: flow.name.clone() })
        }
    };

    let mut arrival = source.affine();
    let mut hops = Vec::with_capacity(flow.path.len());
    let mut end_to_end_s = 0.0;
    let mut min_bg = f64::INFINITY;

    for hop in &flow.path {
        let port = topology.port(hop).ok_or_else(|| TopologyError::UnknownPort {
            flow: flow.name.clone(),
            port: hop.clone(),
        })?;
        let at_port = ControlFlowAtPort::new(source.frame_len_bits, arrival)
            .map_err(|source| TopologyError::HopFailed { port: hop.clone(), source })?;
        if at_port.arrival.rho_bps >= port.capacity_bps {
            return Err(TopologyError::HopFailed {
                port: hop.clone(),
                source: AnalysisError::Unstable {
                    rho_bps: at_port.arrival.rho_bps,
                    rate_bps: port.capacity_bps,
                },
            });
        }
        let bound = delay_bound_overall(port, &at_port)
            .map_err(|source| TopologyError::HopFailed { port: hop.clone(), source })?;
        let departure = departure_curve(port, &at_port, mode)
            .map_err(|source| TopologyError::HopFailed { port: hop.clone(), source })?;
        let bg = background_bandwidth(port, source.frame_len_bits);

        end_to_end_s += bound.overall_s;
        min_bg = min_bg.min(bg);
        hops.push(HopReport {
            port: hop.clone(),
            w1: port.w1,
            w2: port.w2,
            arrival,
            bound,
            departure,
            bg_bandwidth_bps: bg,
        });
        arrival = departure;
    }

    Ok(PathReport {
        flow: flow.name.clone(),
        hops,
        end_to_end_s,
        deadline_s,
        deadline_met: end_to_end_s <= deadline_s,
        min_bg_bandwidth_bps: min_bg,
    })
}

/// Builds the reference two-switch network used across the test suite: one
/// control flow from station1 to station4 over two WRR ports, plus two
/// background flows saturating those ports.
pub fn two_switch_case_study(w1_a: u32, w2_a: u32, w1_b: u32, w2_b: u32) -> (Topology, Vec<FlowSpec>) {
    let capacity = 1e7;
    let trunk = PortId::new("sw1", 3);
    let egress = PortId::new("sw2", 3);
    let spur = PortId::new("sw2", 2);

    let links = vec![
        Link {
            name: "l1".into(),
            a: Endpoint::Station("station1".into()),
            b: Endpoint::SwitchPort(PortId::new("sw1", 1)),
            capacity_bps: capacity,
        },
        Link {
            name: "l2".into(),
            a: Endpoint::Station("station2".into()),
            b: Endpoint::SwitchPort(PortId::new("sw1", 2)),
            capacity_bps: capacity,
        },
        Link {
            name: "trunk".into(),
            a: Endpoint::SwitchPort(trunk.clone()),
            b: Endpoint::SwitchPort(PortId::new("sw2", 1)),
            capacity_bps: capacity,
        },
        Link {
            name: "l3".into(),
            a: Endpoint::Station("station3".into()),
            b: Endpoint::SwitchPort(spur.clone()),
            capacity_bps: capacity,
        },
        Link {
            name: "l4".into(),
            a: Endpoint::SwitchPort(egress.clone()),
            b: Endpoint::Station("station4".into()),
            capacity_bps: capacity,
        },
    ];

    let bg_frame_bits = 1526.0 * 8.0;
    let mut ports = BTreeMap::new();
    ports.insert(trunk.clone(), PortConfig::new(capacity, w1_a, w2_a, bg_frame_bits).unwrap());
    ports.insert(egress.clone(), PortConfig::new(capacity, w1_b, w2_b, bg_frame_bits).unwrap());
    ports.insert(spur.clone(), PortConfig::new(capacity, 1, 1, bg_frame_bits).unwrap());

    let topology = Topology { links, ports, unbound_ports: Vec::new() };

    let flows = vec![
        FlowSpec {
            name: "control".into(),
            src: "station1".into(),
            dst: "station4".into(),
            class: FlowClass::Control {
                source: PeriodicSource::new(72.0 * 8.0, 5e-3).unwrap(),
                deadline_s: 5e-3,
            },
            path: vec![trunk, egress.clone()],
        },
        FlowSpec {
            name: "bg1".into(),
            src: "station2".into(),
            dst: "station3".into(),
            class: FlowClass::Background,
            path: vec![PortId::new("sw1", 3), spur],
        },
        FlowSpec {
            name: "bg2".into(),
            src: "station3".into(),
            dst: "station4".into(),
            class: FlowClass::Background,
            path: vec![egress],
        },
    ];

    (topology, flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn case_study_validates_clean() {
        let (t, flows) = two_switch_case_study(2, 1, 9, 2);
        assert_eq!(validate_topology(&t, &flows), Vec::new());
    }

    #[test]
    fn unknown_port_is_diagnosed() {
        let (t, mut flows) = two_switch_case_study(2, 1, 9, 2);
        flows[0].path.push(PortId::new("sw9", 1));
        let diags = validate_topology(&t, &flows);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::PathUnknownPort));
    }

    #[test]
    fn overload_is_diagnosed() {
        let (t, mut flows) = two_switch_case_study(2, 1, 9, 2);
        if let FlowClass::Control { source, .. } = &mut flows[0].class {
            *source = PeriodicSource::new(2e6, 0.1).unwrap(); // 20 Mb/s into 10 Mb/s
        }
        let diags = validate_topology(&t, &flows);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::FlowOverload));
    }

    #[test]
    fn unbound_port_is_diagnosed() {
        let (mut t, flows) = two_switch_case_study(2, 1, 9, 2);
        t.unbound_ports.push(PortId::new("sw1", 9));
        let diags = validate_topology(&t, &flows);
        assert!(diags.iter().any(|d| d.code == DiagnosticCode::PortNoLink));
    }

    #[test]
    fn propagation_reproduces_case_study() {
        let (t, flows) = two_switch_case_study(2, 1, 9, 2);
        let report = propagate_analysis(&t, &flows[0], DepartureMode::QuotaBurst).unwrap();
        assert_eq!(report.hops.len(), 2);
        assert!(close(report.hops[0].bound.overall_s, 1888.8e-6, 1e-10));
        assert!(close(report.hops[1].bound.overall_s, 3099.4e-6, 1e-6));
        assert!(close(report.end_to_end_s, 4988.2e-6, 1e-6));
        assert!(report.deadline_met);
        // The second hop sees the quota burst of the first.
        assert_eq!(report.hops[1].arrival.sigma_bits, 1152.0);
        // Path additivity.
        let sum: f64 = report.hops.iter().map(|h| h.bound.overall_s).sum();
        assert_eq!(report.end_to_end_s, sum);
    }

    #[test]
    fn single_hop_path_degenerates() {
        let (t, mut flows) = two_switch_case_study(2, 1, 9, 2);
        flows[0].path.truncate(1);
        let report = propagate_analysis(&t, &flows[0], DepartureMode::QuotaBurst).unwrap();
        assert!(close(report.end_to_end_s, 1888.8e-6, 1e-10));
    }

    #[test]
    fn underweighted_second_hop_misses_deadline() {
        let (t, flows) = two_switch_case_study(2, 1, 1, 1);
        let report = propagate_analysis(&t, &flows[0], DepartureMode::QuotaBurst).unwrap();
        // sigma = 1152 at hop 2 with (1,1): 1220.8 + 115.2*(576+12208)/576 us
        assert!(close(report.hops[1].bound.overall_s, 3777.6e-6, 1e-9));
        assert!(!report.deadline_met);
    }

    #[test]
    fn background_bandwidth_matches_published_shares() {
        let p1 = PortConfig::new(1e7, 2, 1, 12_208.0).unwrap();
        let bw1 = background_bandwidth(&p1, 576.0);
        assert!(close(bw1, 9.138e6, 1e3), "got {bw1}");

        let p2 = PortConfig::new(1e7, 9, 2, 12_208.0).unwrap();
        let bw2 = background_bandwidth(&p2, 576.0);
        assert!(close(bw2, 8.249e6, 1e3), "got {bw2}");
    }

    #[test]
    fn cycle_shares_sum_to_capacity() {
        let p = PortConfig::new(1e7, 3, 2, 12_208.0).unwrap();
        let tau = 576.0 / p.capacity_bps;
        let cycle = p.w1 as f64 * tau + p.w2 as f64 * p.tau_bar_s();
        let control = p.capacity_bps * p.w1 as f64 * tau / cycle;
        assert!(close(control + background_bandwidth(&p, 576.0), p.capacity_bps, 1e-6));
    }

    #[test]
    fn symmetric_cycle_splits_evenly() {
        // w1 * tau == w2 * tau_bar when the control frame is Lbar/2 with w1=2.
        let p = PortConfig::new(1e7, 2, 1, 12_208.0).unwrap();
        let bw = background_bandwidth(&p, 6104.0);
        assert!(close(bw, 5e6, 1e-6));
    }

    #[test]
    fn min_departure_mode_keeps_bursts_small() {
        let (t, flows) = two_switch_case_study(2, 1, 9, 2);
        let report = propagate_analysis(&t, &flows[0], DepartureMode::EnvelopeMin).unwrap();
        for hop in &report.hops {
            let port = t.port(&hop.port).unwrap();
            let cap = hop.arrival.sigma_bits
                + hop.arrival.rho_bps * port.w2 as f64 * port.tau_bar_s();
            assert!(hop.departure.sigma_bits <= cap + 1e-9);
        }
        assert!(close(report.hops[1].arrival.sigma_bits, 716.63616, 1e-9));
    }
}
