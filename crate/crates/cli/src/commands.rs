//! Command implementations, kept free of process concerns so integration
//! tests can drive them directly. Each command returns its exit code, its
//! stdout payload, and any warnings for stderr.
//!
//! Exit codes: 0 success; 1 a deadline or feasibility failure; 2 a
//! configuration or flag error; 3 an observed simulation delay above its
//! analytical bound; 4 simulated queue saturation.

use std::collections::BTreeMap;

use wrrcalc_core::analysis::{
    burst_phase, conservative_burst_cycles, ControlFlowAtPort, DepartureMode, PortConfig,
};
use wrrcalc_core::optimizer::{optimize, OptimizeError, OptimizeMode, OptimizerSettings};
use wrrcalc_core::simulator::{run_simulation, HopRecord, SimError, SimOptions, VisitGating};
use wrrcalc_core::topology::{
    background_bandwidth, propagate_analysis, validate_topology, PathReport, PortId,
};

use crate::config::ConfigDocument;
use crate::report::{self, Format, SimRow};

pub const EXIT_OK: u8 = 0;
pub const EXIT_UNMET: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BOUND_EXCEEDED: u8 = 3;
pub const EXIT_SATURATED: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub exit_code: u8,
    pub stdout: String,
    pub warnings: Vec<String>,
    /// Per-frame trace in CSV form when the caller asked for one.
    pub trace_csv: Option<String>,
}

impl CommandOutput {
    fn ok(stdout: String) -> Self {
        Self { exit_code: EXIT_OK, stdout, warnings: Vec::new(), trace_csv: None }
    }

    fn failed(exit_code: u8, message: String) -> Self {
        Self { exit_code, stdout: message, warnings: Vec::new(), trace_csv: None }
    }
}

fn config_summary(doc: &ConfigDocument) -> String {
    format!(
        "{} links, {} ports, {} flows",
        doc.topology.links.len(),
        doc.topology.ports.len(),
        doc.flows.len()
    )
}

/// Runs the invariant checks and renders the diagnostics.
pub fn cmd_validate(doc: &ConfigDocument, format: Format) -> CommandOutput {
    let diags = validate_topology(&doc.topology, &doc.flows);
    let stdout = match format {
        Format::Csv => report::validate_csv(&diags),
        Format::Table => report::validate_table(&diags, &config_summary(doc)),
    };
    CommandOutput {
        exit_code: if diags.is_empty() { EXIT_OK } else { EXIT_CONFIG },
        stdout,
        warnings: Vec::new(),
        trace_csv: None,
    }
}

fn validated(doc: &ConfigDocument, format: Format) -> Result<(), CommandOutput> {
    let diags = validate_topology(&doc.topology, &doc.flows);
    if diags.is_empty() {
        return Ok(());
    }
    let stdout = match format {
        Format::Csv => report::validate_csv(&diags),
        Format::Table => report::validate_table(&diags, ""),
    };
    Err(CommandOutput::failed(EXIT_CONFIG, stdout))
}

/// Per-hop bounds, departure envelopes, background bandwidths, and the
/// end-to-end verdict for every control flow.
pub fn cmd_analyze(
    doc: &ConfigDocument,
    departure: DepartureMode,
    strict: bool,
    format: Format,
) -> CommandOutput {
    if let Err(out) = validated(doc, format) {
        return out;
    }

    let mut reports = Vec::new();
    for flow in doc.flows.iter().filter(|f| f.is_control()) {
        match propagate_analysis(&doc.topology, flow, departure) {
            Ok(report) => reports.push(report),
            Err(e) => {
                return CommandOutput::failed(EXIT_UNMET, format!("analysis failed: {e}\n"));
            }
        }
    }

    let mut warnings = Vec::new();
    if strict {
        warnings = cycle_count_warnings(doc, &reports);
    }

    let all_met = reports.iter().all(|r| r.deadline_met);
    let stdout = match format {
        Format::Csv => report::analyze_csv(&reports),
        Format::Table => {
            if reports.is_empty() {
                "no control flows declared\n".to_string()
            } else {
                report::analyze_table(&reports)
            }
        }
    };
    CommandOutput {
        exit_code: if all_met { EXIT_OK } else { EXIT_UNMET },
        stdout,
        warnings,
        trace_csv: None,
    }
}

/// Flags hops where the verbatim burst cycle count disagrees with the
/// conservative per-cycle balance.
fn cycle_count_warnings(doc: &ConfigDocument, reports: &[PathReport]) -> Vec<String> {
    let mut warnings = Vec::new();
    for report in reports {
        for hop in &report.hops {
            let Some(port) = doc.topology.port(&hop.port) else { continue };
            let Some(flow) = doc.flows.iter().find(|f| f.name == report.flow) else { continue };
            let frame_len = match &flow.class {
                wrrcalc_core::topology::FlowClass::Control { source, .. } => source.frame_len_bits,
                _ => continue,
            };
            let Ok(at_port) = ControlFlowAtPort::new(frame_len, hop.arrival) else { continue };
            if let (Ok(verbatim), Ok(conservative)) = (
                burst_phase(port, &at_port),
                conservative_burst_cycles(port, &at_port),
            ) {
                if verbatim.cycles != conservative {
                    warnings.push(format!(
                        "flow {} at {}: burst cycle count {} vs {} under the conservative per-cycle balance",
                        report.flow, hop.port, verbatim.cycles, conservative
                    ));
                }
            }
        }
    }
    warnings
}

#[derive(Debug, Clone)]
pub struct OptimizeArgs {
    pub mode: OptimizeMode,
    pub departure: DepartureMode,
    pub w2_pinned: Option<Vec<u32>>,
    pub w2_max: u32,
    pub w1_cap: u32,
}

/// Determines weights for the single control flow of the configuration.
pub fn cmd_optimize(doc: &ConfigDocument, args: &OptimizeArgs, format: Format) -> CommandOutput {
    if let Err(out) = validated(doc, format) {
        return out;
    }
    let control: Vec<_> = doc.flows.iter().filter(|f| f.is_control()).collect();
    let flow = match control.as_slice() {
        [one] => *one,
        [] => return CommandOutput::failed(EXIT_CONFIG, "no control flow to optimize\n".into()),
        _ => {
            return CommandOutput::failed(
                EXIT_CONFIG,
                "weight optimization expects exactly one control flow\n".into(),
            )
        }
    };
    if args.w2_max == 0 || args.w1_cap == 0 {
        return CommandOutput::failed(EXIT_CONFIG, "weight caps must be at least 1\n".into());
    }

    let settings = OptimizerSettings {
        mode: args.mode,
        w2_candidates: 1..=args.w2_max,
        w1_cap: args.w1_cap,
        departure: args.departure,
        w2_pinned: args.w2_pinned.clone(),
    };
    match optimize(&doc.topology, flow, &settings) {
        Ok(plan) => {
            let frame_len = match &flow.class {
                wrrcalc_core::topology::FlowClass::Control { source, .. } => source.frame_len_bits,
                _ => unreachable!("filtered to control flows"),
            };
            // Background bandwidth per hop under the planned weights, in
            // path order.
            let per_port_bg: Vec<(PortId, f64)> = flow
                .path
                .iter()
                .map(|id| {
                    let (w1, w2) = plan.assignments[id];
                    let base = doc.topology.port(id).expect("validated path port");
                    let cfg =
                        PortConfig::new(base.capacity_bps, w1, w2, base.max_bg_frame_bits)
                            .expect("plan weights are valid");
                    (id.clone(), background_bandwidth(&cfg, frame_len))
                })
                .collect();
            let stdout = match format {
                Format::Csv => report::optimize_csv(&plan, &per_port_bg),
                Format::Table => report::optimize_table(&plan, &per_port_bg),
            };
            CommandOutput::ok(stdout)
        }
        Err(e @ OptimizeError::Infeasible { .. }) => {
            CommandOutput::failed(EXIT_UNMET, format!("{e}\n"))
        }
        Err(e) => CommandOutput::failed(EXIT_CONFIG, format!("{e}\n")),
    }
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub duration_s: f64,
    pub seeds: u32,
    pub base_seed: u64,
    pub queue_cap_frames: usize,
    pub gating: VisitGating,
    pub departure: DepartureMode,
    pub want_trace: bool,
    /// Fixed emission phases per control flow, overriding the seeded draw.
    /// Not exposed as a flag; used to pin alignment scenarios in tests.
    pub phase_overrides: BTreeMap<String, f64>,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        Self {
            duration_s: 1.0,
            seeds: 1,
            base_seed: 0,
            queue_cap_frames: 100_000,
            gating: VisitGating::Open,
            departure: DepartureMode::QuotaBurst,
            want_trace: false,
            phase_overrides: BTreeMap::new(),
        }
    }
}

/// Simulates the configuration over a battery of seeds and compares the
/// worst observed control delays against the analytical bounds.
pub fn cmd_simulate(doc: &ConfigDocument, args: &SimulateArgs, format: Format) -> CommandOutput {
    if !args.duration_s.is_finite() || args.duration_s <= 0.0 {
        return CommandOutput::failed(
            EXIT_CONFIG,
            format!("duration must be positive, got {}\n", args.duration_s),
        );
    }
    if args.seeds == 0 {
        return CommandOutput::failed(EXIT_CONFIG, "at least one seed is required\n".into());
    }
    if let Err(out) = validated(doc, format) {
        return out;
    }

    // Analytical bounds, where the configuration admits them; a saturated
    // configuration is still simulated so the queue growth shows up.
    let mut bounds: BTreeMap<String, PathReport> = BTreeMap::new();
    for flow in doc.flows.iter().filter(|f| f.is_control()) {
        if let Ok(report) = propagate_analysis(&doc.topology, flow, args.departure) {
            bounds.insert(flow.name.clone(), report);
        }
    }

    // (count, max) per control flow: one slot per hop plus end-to-end.
    let mut observed: BTreeMap<String, Vec<(u64, f64)>> = doc
        .flows
        .iter()
        .filter(|f| f.is_control())
        .map(|f| (f.name.clone(), vec![(0u64, 0.0f64); f.path.len() + 1]))
        .collect();
    let mut trace_records: Option<Vec<HopRecord>> = None;

    for i in 0..args.seeds {
        let opts = SimOptions {
            duration_s: args.duration_s,
            seed: args.base_seed + i as u64,
            visit_gating: args.gating,
            queue_cap_frames: args.queue_cap_frames,
            record_trace: args.want_trace && i == 0,
            phase_overrides: args.phase_overrides.clone(),
        };
        let trace = match run_simulation(&doc.topology, &doc.flows, &opts) {
            Ok(t) => t,
            Err(e @ SimError::Saturated { .. }) => {
                return CommandOutput::failed(EXIT_SATURATED, format!("{e}\n"));
            }
            Err(e) => return CommandOutput::failed(EXIT_CONFIG, format!("{e}\n")),
        };
        for (name, slots) in observed.iter_mut() {
            let Some(stats) = trace.flows.get(name) else { continue };
            for (h, hop) in stats.hops.iter().enumerate() {
                slots[h].0 += hop.count;
                slots[h].1 = slots[h].1.max(hop.max_delay_s);
            }
            let last = slots.len() - 1;
            slots[last].0 += stats.end_to_end_count;
            slots[last].1 = slots[last].1.max(stats.end_to_end_max_s);
        }
        if args.want_trace && i == 0 {
            trace_records = Some(trace.records);
        }
    }

    let mut rows = Vec::new();
    for flow in doc.flows.iter().filter(|f| f.is_control()) {
        let slots = &observed[&flow.name];
        let report = bounds.get(&flow.name);
        for (h, hop) in flow.path.iter().enumerate() {
            rows.push(SimRow {
                flow: flow.name.clone(),
                hop: (h + 1).to_string(),
                port: Some(hop.clone()),
                frames: slots[h].0,
                max_observed_s: slots[h].1,
                bound_s: report.map(|r| r.hops[h].bound.overall_s),
            });
        }
        rows.push(SimRow {
            flow: flow.name.clone(),
            hop: "e2e".into(),
            port: None,
            frames: slots[flow.path.len()].0,
            max_observed_s: slots[flow.path.len()].1,
            bound_s: report.map(|r| r.end_to_end_s),
        });
    }

    let sound = rows.iter().all(|r| r.within().unwrap_or(true));
    let stdout = match format {
        Format::Csv => report::simulate_csv(&rows),
        Format::Table => report::simulate_table(&rows, args.seeds, args.duration_s),
    };
    CommandOutput {
        exit_code: if sound { EXIT_OK } else { EXIT_BOUND_EXCEEDED },
        stdout,
        warnings: Vec::new(),
        trace_csv: trace_records.map(|r| report::trace_csv(&r)),
    }
}
