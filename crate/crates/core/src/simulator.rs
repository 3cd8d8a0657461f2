//! Discrete-event simulation of WRR output ports, used as an empirical
//! oracle: observed worst-case control delays must stay below the analytical
//! bounds.
//!
//! The scheduler visits the control queue and then the background queue in a
//! fixed cycle, forwarding at most `w1` (respectively `w2`) frames per visit,
//! skipping an empty queue immediately, and never preempting a transmission.
//! Control sources emit one frame per period starting at a seeded phase;
//! background sources keep their first-hop queue permanently backlogged with
//! maximum-length frames. Per-hop delay is measured store-and-forward style,
//! from full arrival at the output queue to the last transmitted bit.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::topology::{FlowClass, FlowSpec, PortId, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("saturated queue at port {port}: more than {cap} frames backlogged")]
    Saturated { port: PortId, cap: usize },
    #[error("E_NO_SAMPLES: flow {flow} completed no frames")]
    NoSamples { flow: String },
    #[error("unknown flow {flow}")]
    UnknownFlow { flow: String },
    #[error("invalid simulation input: {0}")]
    Invalid(String),
}

/// Whether a frame arriving while its queue is being visited may still use
/// the remaining quota of that visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitGating {
    /// It may: the quota counts frames, not queue occupancy at visit start.
    Open,
    /// It may not: only frames present when the visit began are eligible.
    Closed,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub duration_s: f64,
    pub seed: u64,
    pub visit_gating: VisitGating,
    /// Abort with a saturation error once any queue holds this many frames.
    pub queue_cap_frames: usize,
    /// Keep one record per frame per hop (needed for trace export).
    pub record_trace: bool,
    /// Fixed emission phases per control flow, overriding the seeded draw.
    pub phase_overrides: BTreeMap<String, f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            seed: 0,
            visit_gating: VisitGating::Open,
            queue_cap_frames: 100_000,
            record_trace: false,
            phase_overrides: BTreeMap::new(),
        }
    }
}

/// One completed hop traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct HopRecord {
    pub frame_id: u64,
    pub flow: String,
    /// 1-based hop index along the flow's path.
    pub hop: usize,
    pub arrival_s: f64,
    pub depart_s: f64,
}

impl HopRecord {
    pub fn delay_s(&self) -> f64 {
        self.depart_s - self.arrival_s
    }
}

/// Delay statistics of one flow at one hop.
#[derive(Debug, Clone, PartialEq)]
pub struct HopSamples {
    pub port: PortId,
    pub count: u64,
    pub max_delay_s: f64,
}

/// Delay statistics of one flow over its whole path.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub hops: Vec<HopSamples>,
    pub end_to_end_count: u64,
    pub end_to_end_max_s: f64,
}

/// Bits transmitted per queue at one port.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PortThroughput {
    pub control_bits: f64,
    pub background_bits: f64,
}

/// Everything measured by one simulation run. Identical inputs produce an
/// identical trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub duration_s: f64,
    pub seed: u64,
    pub flows: BTreeMap<String, FlowTrace>,
    pub ports: BTreeMap<PortId, PortThroughput>,
    pub records: Vec<HopRecord>,
}

/// Per-hop and end-to-end maxima for one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMaxima {
    pub per_hop: Vec<(PortId, f64)>,
    pub end_to_end_s: f64,
}

/// Largest observed delays of a flow, per hop and end to end.
pub fn max_observed_delay(trace: &SimTrace, flow: &str) -> Result<FlowMaxima, SimError> {
    let stats = trace
        .flows
        .get(flow)
        .ok_or_else(|| SimError::UnknownFlow { flow: flow.into() })?;
    if stats.end_to_end_count == 0 {
        return Err(SimError::NoSamples { flow: flow.into() });
    }
    Ok(FlowMaxima {
        per_hop: stats.hops.iter().map(|h| (h.port.clone(), h.max_delay_s)).collect(),
        end_to_end_s: stats.end_to_end_max_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EvKind {
    Arrival = 0,
    TxDone = 1,
}

#[derive(Debug)]
struct Frame {
    id: u64,
    flow_idx: usize,
    /// 0-based hop position along the flow's path.
    hop: usize,
    /// Index of the frame within its flow's emission sequence.
    emission: u64,
    len_bits: f64,
    created_s: f64,
    hop_arrival_s: f64,
}

#[derive(Debug)]
struct Event {
    time_s: f64,
    kind: EvKind,
    frame_id: u64,
    seq: u64,
    port_idx: usize,
    frame: Option<Frame>,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_s
            .total_cmp(&other.time_s)
            .then_with(|| self.kind.cmp(&other.kind))
            .then_with(|| self.frame_id.cmp(&other.frame_id))
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

const CONTROL_QUEUE: usize = 0;
const BACKGROUND_QUEUE: usize = 1;

struct PortRt {
    id: PortId,
    capacity_bps: f64,
    quota: [u32; 2],
    queues: [VecDeque<Frame>; 2],
    visit_queue: usize,
    visit_served: u32,
    /// Eligible frames remaining in the current visit under closed gating.
    visit_gate: usize,
    parked: bool,
    in_flight: Option<Frame>,
    throughput: PortThroughput,
}

struct FlowRt {
    spec: FlowSpec,
    /// Port index per hop.
    hops: Vec<usize>,
    queue: usize,
    phase_s: f64,
}

struct Sim<'a> {
    opts: &'a SimOptions,
    ports: Vec<PortRt>,
    flows: Vec<FlowRt>,
    events: BinaryHeap<Reverse<Event>>,
    next_frame_id: u64,
    next_seq: u64,
    stats: Vec<FlowStatsRt>,
    records: Vec<HopRecord>,
}

struct FlowStatsRt {
    hops: Vec<(u64, f64)>,
    e2e: (u64, f64),
}

/// Runs one deterministic simulation of the given topology and flows.
pub fn run_simulation(
    topology: &Topology,
    flows: &[FlowSpec],
    opts: &SimOptions,
) -> Result<SimTrace, SimError> {
    if !opts.duration_s.is_finite() || opts.duration_s <= 0.0 {
        return Err(SimError::Invalid(format!(
            "duration must be positive, got {}",
            opts.duration_s
        )));
    }
    if opts.queue_cap_frames == 0 {
        return Err(SimError::Invalid("queue cap must be at least 1".into()));
    }

    let mut port_index = BTreeMap::new();
    let mut ports = Vec::new();
    for (id, cfg) in &topology.ports {
        port_index.insert(id.clone(), ports.len());
        ports.push(PortRt {
            id: id.clone(),
            capacity_bps: cfg.capacity_bps,
            quota: [cfg.w1, cfg.w2],
            queues: [VecDeque::new(), VecDeque::new()],
            visit_queue: CONTROL_QUEUE,
            visit_served: 0,
            visit_gate: 0,
            parked: true,
            in_flight: None,
            throughput: PortThroughput::default(),
        });
    }

    // Phases are the only randomness; draw them in declaration order so a
    // seed pins the whole run.
    let mut rng = Pcg64::seed_from_u64(opts.seed);
    let mut flow_rts = Vec::with_capacity(flows.len());
    for spec in flows {
        let hops = spec
            .path
            .iter()
            .map(|id| {
                port_index.get(id).copied().ok_or_else(|| SimError::Invalid(format!(
                    "flow {} traverses unknown port {id}",
                    spec.name
                )))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if hops.is_empty() {
            return Err(SimError::Invalid(format!("flow {} has an empty path", spec.name)));
        }
        let (queue, phase_s) = match &spec.class {
            FlowClass::Control { source, .. } => {
                let draw: f64 = rng.random();
                let phase = opts
                    .phase_overrides
                    .get(&spec.name)
                    .copied()
                    .unwrap_or(draw * source.period_s);
                (CONTROL_QUEUE, phase)
            }
            FlowClass::Background => (BACKGROUND_QUEUE, 0.0),
        };
        flow_rts.push(FlowRt { spec: spec.clone(), hops, queue, phase_s });
    }

    let stats = flow_rts
        .iter()
        .map(|f| FlowStatsRt { hops: vec![(0, 0.0); f.hops.len()], e2e: (0, 0.0) })
        .collect();

    let mut sim = Sim {
        opts,
        ports,
        flows: flow_rts,
        events: BinaryHeap::new(),
        next_frame_id: 0,
        next_seq: 0,
        stats,
        records: Vec::new(),
    };

    // Initial arrivals: the first control frame of each flow at its phase,
    // one background frame per background flow at time zero.
    for i in 0..sim.flows.len() {
        match sim.flows[i].spec.class.clone() {
            FlowClass::Control { source, .. } => {
                let t = sim.flows[i].phase_s;
                if t <= opts.duration_s {
                    let frame = sim.new_frame(i, 0, source.frame_len_bits, t);
                    sim.push_arrival(t, 0, frame);
                }
            }
            FlowClass::Background => {
                let len = topology
                    .ports
                    .get(&sim.flows[i].spec.path[0])
                    .map(|c| c.max_bg_frame_bits)
                    .unwrap_or(1526.0 * 8.0);
                let frame = sim.new_frame(i, 0, len, 0.0);
                sim.push_arrival(0.0, 0, frame);
            }
        }
    }

    sim.run()?;

    let mut flows_out = BTreeMap::new();
    for (i, f) in sim.flows.iter().enumerate() {
        let hops = f
            .hops
            .iter()
            .zip(&sim.stats[i].hops)
            .map(|(&pi, &(count, max))| HopSamples {
                port: sim.ports[pi].id.clone(),
                count,
                max_delay_s: max,
            })
            .collect();
        flows_out.insert(
            f.spec.name.clone(),
            FlowTrace {
                hops,
                end_to_end_count: sim.stats[i].e2e.0,
                end_to_end_max_s: sim.stats[i].e2e.1,
            },
        );
    }
    let ports_out = sim
        .ports
        .iter()
        .map(|p| (p.id.clone(), p.throughput))
        .collect();

    Ok(SimTrace {
        duration_s: opts.duration_s,
        seed: opts.seed,
        flows: flows_out,
        ports: ports_out,
        records: sim.records,
    })
}

impl<'a> Sim<'a> {
    fn new_frame(&mut self, flow_idx: usize, emission: u64, len_bits: f64, created_s: f64) -> Frame {
        self.next_frame_id += 1;
        Frame {
            id: self.next_frame_id,
            flow_idx,
            hop: 0,
            emission,
            len_bits,
            created_s,
            hop_arrival_s: created_s,
        }
    }

    fn push_arrival(&mut self, t: f64, hop: usize, mut frame: Frame) {
        frame.hop = hop;
        self.next_seq += 1;
        self.events.push(Reverse(Event {
            time_s: t,
            kind: EvKind::Arrival,
            frame_id: frame.id,
            seq: self.next_seq,
            port_idx: self.flows[frame.flow_idx].hops[hop],
            frame: Some(frame),
        }));
    }

    fn push_tx_done(&mut self, t: f64, port_idx: usize, frame_id: u64) {
        self.next_seq += 1;
        self.events.push(Reverse(Event {
            time_s: t,
            kind: EvKind::TxDone,
            frame_id,
            seq: self.next_seq,
            port_idx,
            frame: None,
        }));
    }

    fn run(&mut self) -> Result<(), SimError> {
        while let Some(Reverse(ev)) = self.events.pop() {
            if ev.time_s > self.opts.duration_s {
                break;
            }
            match ev.kind {
                EvKind::Arrival => {
                    let mut frame = ev.frame.expect("arrival carries its frame");
                    frame.hop_arrival_s = ev.time_s;

                    // A control frame reaching its first queue schedules the
                    // next emission of its flow.
                    if frame.hop == 0 {
                        if let FlowClass::Control { source, .. } =
                            self.flows[frame.flow_idx].spec.class.clone()
                        {
                            let flow_idx = frame.flow_idx;
                            let n = frame.emission + 1;
                            let t_next = self.flows[flow_idx].phase_s + n as f64 * source.period_s;
                            if t_next <= self.opts.duration_s {
                                let next = self.new_frame(flow_idx, n, source.frame_len_bits, t_next);
                                self.push_arrival(t_next, 0, next);
                            }
                        }
                    }

                    let queue = self.flows[frame.flow_idx].queue;
                    self.enqueue(ev.port_idx, queue, frame)?;
                    self.dispatch(ev.port_idx, ev.time_s)?;
                }
                EvKind::TxDone => {
                    let port = &mut self.ports[ev.port_idx];
                    let frame = port.in_flight.take().expect("completion without transmission");
                    match self.flows[frame.flow_idx].queue {
                        CONTROL_QUEUE => port.throughput.control_bits += frame.len_bits,
                        _ => port.throughput.background_bits += frame.len_bits,
                    }
                    self.account(&frame, ev.time_s);

                    let next_hop = frame.hop + 1;
                    if next_hop < self.flows[frame.flow_idx].hops.len() {
                        self.push_arrival(ev.time_s, next_hop, frame);
                    }
                    self.dispatch(ev.port_idx, ev.time_s)?;
                }
            }
        }
        Ok(())
    }

    fn enqueue(&mut self, port_idx: usize, queue: usize, frame: Frame) -> Result<(), SimError> {
        let cap = self.opts.queue_cap_frames;
        let port = &mut self.ports[port_idx];
        if port.queues[queue].len() >= cap {
            return Err(SimError::Saturated { port: port.id.clone(), cap });
        }
        port.queues[queue].push_back(frame);
        Ok(())
    }

    /// Starts the next transmission if the port is free, advancing the visit
    /// cycle as quotas run out or queues empty.
    fn dispatch(&mut self, port_idx: usize, now: f64) -> Result<(), SimError> {
        if self.ports[port_idx].in_flight.is_some() {
            return Ok(());
        }
        loop {
            let port = &mut self.ports[port_idx];
            if port.queues[CONTROL_QUEUE].is_empty() && port.queues[BACKGROUND_QUEUE].is_empty() {
                port.parked = true;
                return Ok(());
            }
            if port.parked {
                // The cycle restarts when traffic returns to an idle port.
                port.parked = false;
                port.visit_queue = CONTROL_QUEUE;
                port.visit_served = 0;
                port.visit_gate = port.queues[CONTROL_QUEUE].len();
            }
            let q = port.visit_queue;
            let gated_empty = match self.opts.visit_gating {
                VisitGating::Open => port.queues[q].is_empty(),
                VisitGating::Closed => port.visit_gate == 0 || port.queues[q].is_empty(),
            };
            if port.visit_served < port.quota[q] && !gated_empty {
                let frame = port.queues[q].pop_front().expect("queue checked nonempty");
                port.visit_served += 1;
                port.visit_gate = port.visit_gate.saturating_sub(1);
                let done = now + frame.len_bits / port.capacity_bps;
                let frame_id = frame.id;
                let flow_idx = frame.flow_idx;
                let hop = frame.hop;
                port.in_flight = Some(frame);
                self.push_tx_done(done, port_idx, frame_id);
                // A background flow keeps its first-hop queue backlogged:
                // starting a transmission immediately reveals the next frame.
                if hop == 0 && !self.flows[flow_idx].spec.is_control() {
                    let len = self.ports[port_idx].in_flight.as_ref().unwrap().len_bits;
                    let refill = self.new_frame(flow_idx, 0, len, now);
                    self.enqueue(port_idx, BACKGROUND_QUEUE, refill)?;
                }
                return Ok(());
            }
            // Quota exhausted or nothing eligible: move to the next queue
            // immediately; quotas do not carry over between visits.
            port.visit_queue = (q + 1) % 2;
            port.visit_served = 0;
            port.visit_gate = port.queues[port.visit_queue].len();
        }
    }

    fn account(&mut self, frame: &Frame, done_s: f64) {
        let delay = done_s - frame.hop_arrival_s;
        let stats = &mut self.stats[frame.flow_idx];
        let hop_stats = &mut stats.hops[frame.hop];
        hop_stats.0 += 1;
        if delay > hop_stats.1 {
            hop_stats.1 = delay;
        }
        if frame.hop + 1 == self.flows[frame.flow_idx].hops.len() {
            let e2e = done_s - frame.created_s;
            stats.e2e.0 += 1;
            if e2e > stats.e2e.1 {
                stats.e2e.1 = e2e;
            }
        }
        if self.opts.record_trace {
            self.records.push(HopRecord {
                frame_id: frame.id,
                flow: self.flows[frame.flow_idx].spec.name.clone(),
                hop: frame.hop + 1,
                arrival_s: frame.hop_arrival_s,
                depart_s: done_s,
            });
        }
    }
}
