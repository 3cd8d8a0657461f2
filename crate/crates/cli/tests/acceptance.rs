//! Acceptance suite: one test per release criterion, each at its stated
//! tolerance, printing a PASS line when it holds. Run with
//! `cargo test -p wrrcalc-cli --test acceptance`.

use std::collections::BTreeMap;
use std::process::Command;

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use wrrcalc_cli::commands::{cmd_optimize, cmd_simulate, OptimizeArgs, SimulateArgs};
use wrrcalc_cli::config::{parse_config, ConfigDocument};
use wrrcalc_cli::report::Format;
use wrrcalc_core::analysis::{
    burst_phase, burst_rate_latency, delay_bound_burst, delay_bound_overall,
    delay_bound_rate_latency, min_weight_burst, ControlFlowAtPort, DepartureMode, PortConfig,
};
use wrrcalc_core::curves::{
    horizontal_deviation, AffineArrivalCurve, DeviationOptions, PeriodicSource,
};
use wrrcalc_core::optimizer::OptimizeMode;
use wrrcalc_core::simulator::{max_observed_delay, run_simulation, SimOptions};
use wrrcalc_core::topology::{
    propagate_analysis, Endpoint, FlowClass, FlowSpec, Link, PortId, Topology,
};

const CAPACITY: f64 = 1e7;
const FRAME_BITS: f64 = 576.0;
const BG_FRAME_BITS: f64 = 12_208.0;
const RATE_BPS: f64 = 115_200.0;

fn config_path() -> String {
    format!("{}/../../configs/case_study.cfg", env!("CARGO_MANIFEST_DIR"))
}

fn reference_doc() -> ConfigDocument {
    let text = std::fs::read_to_string(config_path()).expect("reference configuration");
    parse_config(&text).expect("reference configuration parses")
}

fn switch1_port() -> PortConfig {
    PortConfig::new(CAPACITY, 2, 1, BG_FRAME_BITS).unwrap()
}

fn switch1_flow() -> ControlFlowAtPort {
    ControlFlowAtPort::new(FRAME_BITS, AffineArrivalCurve::new(FRAME_BITS, RATE_BPS).unwrap())
        .unwrap()
}

#[test]
fn criterion_01_switch1_delay_bound() {
    let bound = delay_bound_overall(&switch1_port(), &switch1_flow()).unwrap();
    assert!(
        (bound.overall_s - 1888.8e-6).abs() <= 0.1e-6,
        "switch-1 bound {} s",
        bound.overall_s
    );
    println!("[acceptance] criterion 1 PASS - switch-1 bound {:.1} us (within 0.1 us of 1888.8)", bound.overall_s * 1e6);
}

#[test]
fn criterion_02_switch2_delay_bound() {
    // Arrival at the second switch under the quota-burst departure: w1*L of
    // the first switch, 1152 bits.
    let port = PortConfig::new(CAPACITY, 9, 2, BG_FRAME_BITS).unwrap();
    let flow = ControlFlowAtPort::new(
        FRAME_BITS,
        AffineArrivalCurve::new(1152.0, RATE_BPS).unwrap(),
    )
    .unwrap();
    let bound = delay_bound_overall(&port, &flow).unwrap();
    assert!(
        (bound.overall_s - 3099.4e-6).abs() <= 1e-6,
        "switch-2 bound {} s",
        bound.overall_s
    );
    println!("[acceptance] criterion 2 PASS - switch-2 bound {:.1} us (within 1 us of 3099.4)", bound.overall_s * 1e6);
}

#[test]
fn criterion_03_end_to_end_meets_deadline() {
    let doc = reference_doc();
    let control = doc.flows.iter().find(|f| f.is_control()).unwrap();
    let report = propagate_analysis(&doc.topology, control, DepartureMode::QuotaBurst).unwrap();
    assert!(
        (report.end_to_end_s - 4988.2e-6).abs() <= 1e-6,
        "end-to-end {} s",
        report.end_to_end_s
    );
    assert!(report.deadline_met, "deadline of 5 ms must hold");
    println!("[acceptance] criterion 3 PASS - end-to-end {:.1} us < 5000 us", report.end_to_end_s * 1e6);
}

#[test]
fn criterion_04_background_bandwidths() {
    let doc = reference_doc();
    let control = doc.flows.iter().find(|f| f.is_control()).unwrap();
    let report = propagate_analysis(&doc.topology, control, DepartureMode::QuotaBurst).unwrap();
    let bw1 = report.hops[0].bg_bandwidth_bps;
    let bw2 = report.hops[1].bg_bandwidth_bps;
    assert!((bw1 - 9.138e6).abs() <= 0.001e6, "switch-1 background {bw1} b/s");
    assert!((bw2 - 8.249e6).abs() <= 0.001e6, "switch-2 background {bw2} b/s");
    assert!((report.min_bg_bandwidth_bps - 8.249e6).abs() <= 0.001e6);
    println!(
        "[acceptance] criterion 4 PASS - background {:.3} / {:.3} Mb/s, path minimum {:.3}",
        bw1 / 1e6,
        bw2 / 1e6,
        report.min_bg_bandwidth_bps / 1e6
    );
}

#[test]
fn criterion_05_weight_reproduction() {
    let doc = reference_doc();
    let args = OptimizeArgs {
        mode: OptimizeMode::Iterative,
        departure: DepartureMode::QuotaBurst,
        w2_pinned: Some(vec![1, 2]),
        w2_max: 8,
        w1_cap: 64,
    };
    let out = cmd_optimize(&doc, &args, Format::Csv);
    assert_eq!(out.exit_code, 0, "optimize failed: {}", out.stdout);
    let rows: Vec<Vec<&str>> = out
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..4], &["sw1", "3", "2", "1"]);
    assert_eq!(&rows[1][..4], &["sw2", "3", "9", "2"]);
    println!("[acceptance] criterion 5 PASS - plan (w1=2,w2=1),(w1=9,w2=2) reproduced");
}

#[test]
fn criterion_06_closed_form_vs_numeric_oracle() {
    let mut rng = Pcg64::seed_from_u64(6);
    for case in 0..1000 {
        let capacity = 1e6 + rng.random::<f64>() * 9.9e7;
        let w1 = 1 + (rng.random::<f64>() * 16.0) as u32;
        let w2 = 1 + (rng.random::<f64>() * 16.0) as u32;
        let len = 512.0 + rng.random::<f64>() * 11_824.0;
        let bg_len = 512.0 + rng.random::<f64>() * 11_824.0;
        let sigma = len * (1.0 + rng.random::<f64>() * 3.0);
        let port = PortConfig::new(capacity, w1, w2, bg_len).unwrap();
        let share =
            w1 as f64 * len / (w1 as f64 * len / capacity + w2 as f64 * port.tau_bar_s());
        let rho = share * (0.05 + rng.random::<f64>() * 0.75);
        let flow =
            ControlFlowAtPort::new(len, AffineArrivalCurve::new(sigma, rho).unwrap()).unwrap();

        let closed = delay_bound_burst(&port, &flow).unwrap();

        // Route one: the same bound through the generic rate-latency form.
        let env = burst_rate_latency(&port, &flow).unwrap();
        let via_form =
            delay_bound_rate_latency(sigma, rho, env.rate_bps, env.latency_s, 0.0).unwrap();
        assert!(
            (closed - via_form).abs() <= 1e-12 * closed.abs(),
            "case {case}: closed {closed} vs rate-latency form {via_form}"
        );

        // Route two: the generic sampled horizontal deviation.
        let step = closed / 64.0;
        let numeric = horizontal_deviation(
            &flow.arrival,
            &env,
            DeviationOptions {
                step_s: Some(step),
                horizon_s: Some(4.0 * closed),
                search_window_s: Some(1e4 * closed),
            },
        )
        .unwrap();
        assert!(
            (numeric - closed).abs() <= 2.0 * step,
            "case {case}: numeric {numeric} vs closed {closed}"
        );
    }
    println!("[acceptance] criterion 6 PASS - 1000 random ports: closed form matches both oracles");
}

#[test]
fn criterion_07_simulation_soundness() {
    let doc = reference_doc();
    let control = doc.flows.iter().find(|f| f.is_control()).unwrap();
    let bounds = propagate_analysis(&doc.topology, control, DepartureMode::QuotaBurst).unwrap();

    for seed in 0..20u64 {
        let opts = SimOptions { duration_s: 10.0, seed, ..Default::default() };
        let trace = run_simulation(&doc.topology, &doc.flows, &opts).unwrap();
        let worst = max_observed_delay(&trace, &control.name).unwrap();
        for (hop, (port, observed)) in worst.per_hop.iter().enumerate() {
            let bound = bounds.hops[hop].bound.overall_s;
            assert!(
                *observed <= bound,
                "seed {seed}: hop {port} observed {observed} above bound {bound}"
            );
        }
        assert!(
            worst.end_to_end_s <= bounds.end_to_end_s,
            "seed {seed}: end-to-end {} above {}",
            worst.end_to_end_s,
            bounds.end_to_end_s
        );
    }

    // Adversarial alignment: two control flows released together on a (1,1)
    // port with saturated background traffic force the second frame to sit
    // out a full maximum-length background frame.
    let (topology, flows) = contended_port_rig(1, 1, &["control", "control2"], 5e-3);
    let opts = SimOptions {
        duration_s: 1.0,
        phase_overrides: flows
            .iter()
            .filter(|f| f.is_control())
            .map(|f| (f.name.clone(), 0.0))
            .collect(),
        ..Default::default()
    };
    let trace = run_simulation(&topology, &flows, &opts).unwrap();
    let worst = max_observed_delay(&trace, "control2").unwrap();
    assert!(
        worst.per_hop[0].1 >= 1220.8e-6,
        "vacation term not observed: {}",
        worst.per_hop[0].1
    );
    println!("[acceptance] criterion 7 PASS - 20 seeds x 10 s sound; adversarial hop delay {:.1} us >= 1220.8 us", worst.per_hop[0].1 * 1e6);
}

#[test]
fn criterion_08_feasibility_fixed_point() {
    let phase = burst_phase(&switch1_port(), &switch1_flow()).unwrap();
    assert_eq!(phase.cycles, 1, "burst drains in one cycle");

    let flow = switch1_flow();
    let w1 = min_weight_burst(CAPACITY, 1, BG_FRAME_BITS, &flow, 64).unwrap();
    assert_eq!(w1, 2);

    // Decrementing to w1 = 1 violates the drain requirement at the fixed
    // point's cycle count: (sigma + rho*k*w2*tau_bar) / (k*(L - rho*tau)).
    let k = phase.cycles as f64;
    let tau = FRAME_BITS / CAPACITY;
    let tau_bar = BG_FRAME_BITS / CAPACITY;
    let required = (FRAME_BITS + RATE_BPS * k * tau_bar) / (k * (FRAME_BITS - RATE_BPS * tau));
    assert!(required > 1.0 && required <= 2.0, "requirement {required}");
    println!(
        "[acceptance] criterion 8 PASS - k=1, min w1=2, and w1=1 < {:.4} violates the drain requirement",
        required
    );
}

#[test]
fn criterion_09_simulated_background_throughput() {
    // Oversubscribed control (0.6 ms period against an 862 kb/s share) plus
    // saturating background keeps both queues backlogged at a (2,1) port.
    let (topology, flows) = contended_port_rig(2, 1, &["control"], 0.6e-3);
    let duration = 2.0; // about 1497 cycles of 1336 us
    let opts = SimOptions {
        duration_s: duration,
        phase_overrides: [("control".to_string(), 0.0)].into(),
        ..Default::default()
    };
    let trace = run_simulation(&topology, &flows, &opts).unwrap();
    let throughput = trace.ports[&PortId::new("sw", 1)].background_bits / duration;
    assert!(
        (throughput - 9.138e6).abs() <= 0.01 * 9.138e6,
        "background throughput {throughput} b/s"
    );
    println!(
        "[acceptance] criterion 9 PASS - background throughput {:.3} Mb/s within 1% of 9.138",
        throughput / 1e6
    );
}

#[test]
fn criterion_10_byte_identical_machine_output() {
    let binary = env!("CARGO_BIN_EXE_wrrcalc");
    let analyze = |_: u32| {
        let out = Command::new(binary)
            .args(["analyze", "--config", &config_path(), "--format", "csv"])
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(analyze(0), analyze(1), "analyze output must be byte identical");

    let simulate = |_: u32| {
        let out = Command::new(binary)
            .args([
                "simulate",
                "--config",
                &config_path(),
                "--format",
                "csv",
                "--duration",
                "1",
                "--seeds",
                "3",
                "--seed",
                "7",
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(simulate(0), simulate(1), "simulate output must be byte identical");
    println!("[acceptance] criterion 10 PASS - analyze and simulate outputs byte identical across runs");
}

/// Exit code 3 fires when an observation beats a bound. Two control flows
/// sharing one queue violate the single-control-flow model, so the third
/// aligned frame waits beyond its per-flow bound; the command must flag it.
#[test]
fn simulate_flags_bound_violation_when_model_assumptions_break() {
    let (topology, flows) =
        contended_port_rig(1, 1, &["control", "control2", "control3"], 5e-3);
    let doc = ConfigDocument { topology, flows };
    let args = SimulateArgs {
        duration_s: 1.0,
        phase_overrides: doc
            .flows
            .iter()
            .filter(|f| f.is_control())
            .map(|f| (f.name.clone(), 0.0))
            .collect(),
        ..Default::default()
    };
    let out = cmd_simulate(&doc, &args, Format::Csv);
    assert_eq!(out.exit_code, 3, "expected a flagged bound violation: {}", out.stdout);
    println!("[acceptance] exit-code check PASS - shared-queue scenario flagged with exit 3");
}

/// One switch, one contended WRR output port toward a sink station, the
/// named control flows plus one saturating background flow.
fn contended_port_rig(
    w1: u32,
    w2: u32,
    control_names: &[&str],
    period_s: f64,
) -> (Topology, Vec<FlowSpec>) {
    let out = PortId::new("sw", 1);
    let links = vec![
        Link {
            name: "in1".into(),
            a: Endpoint::Station("src1".into()),
            b: Endpoint::SwitchPort(PortId::new("sw", 2)),
            capacity_bps: CAPACITY,
        },
        Link {
            name: "in2".into(),
            a: Endpoint::Station("src2".into()),
            b: Endpoint::SwitchPort(PortId::new("sw", 3)),
            capacity_bps: CAPACITY,
        },
        Link {
            name: "out".into(),
            a: Endpoint::SwitchPort(out.clone()),
            b: Endpoint::Station("sink".into()),
            capacity_bps: CAPACITY,
        },
    ];
    let mut ports = BTreeMap::new();
    ports.insert(out.clone(), PortConfig::new(CAPACITY, w1, w2, BG_FRAME_BITS).unwrap());
    let topology = Topology { links, ports, unbound_ports: Vec::new() };

    let mut flows: Vec<FlowSpec> = control_names
        .iter()
        .map(|name| FlowSpec {
            name: (*name).into(),
            src: "src1".into(),
            dst: "sink".into(),
            class: FlowClass::Control {
                source: PeriodicSource::new(FRAME_BITS, period_s).unwrap(),
                deadline_s: 1.0,
            },
            path: vec![out.clone()],
        })
        .collect();
    flows.push(FlowSpec {
        name: "bg".into(),
        src: "src2".into(),
        dst: "sink".into(),
        class: FlowClass::Background,
        path: vec![out],
    });
    (topology, flows)
}
