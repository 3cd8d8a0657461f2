//! Report rendering. Two targets: a human table and a machine CSV with a
//! stable header, UTF-8, LF line endings. Delays print as microseconds with
//! one decimal, bandwidths as Mb/s with three decimals; formatting uses the
//! standard round-half-even float printing so repeated runs are byte
//! identical.

use std::fmt::Write as _;

use wrrcalc_core::optimizer::WeightPlan;
use wrrcalc_core::simulator::HopRecord;
use wrrcalc_core::topology::{Diagnostic, PathReport, PortId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

pub fn us(seconds: f64) -> String {
    format!("{:.1}", seconds * 1e6)
}

pub fn mbps(bps: f64) -> String {
    format!("{:.3}", bps / 1e6)
}

pub fn bits(b: f64) -> String {
    format!("{b:.3}")
}

pub const ANALYZE_CSV_HEADER: &str = "flow,hop,switch,port,w1,w2,arrival_sigma_bits,arrival_rho_bps,burst_us,mean_us,pessimistic_mean_us,overall_us,departure_sigma_bits,departure_rho_bps,bg_mbps,end_to_end_us,deadline_us,deadline_met";

pub fn analyze_csv(reports: &[PathReport]) -> String {
    let mut out = String::from(ANALYZE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        for (i, hop) in r.hops.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.flow,
                i + 1,
                hop.port.switch,
                hop.port.number,
                hop.w1,
                hop.w2,
                bits(hop.arrival.sigma_bits),
                bits(hop.arrival.rho_bps),
                us(hop.bound.burst_s),
                us(hop.bound.mean_s),
                hop.bound.pessimistic_mean_s.map(us).unwrap_or_default(),
                us(hop.bound.overall_s),
                bits(hop.departure.sigma_bits),
                bits(hop.departure.rho_bps),
                mbps(hop.bg_bandwidth_bps),
                us(r.end_to_end_s),
                us(r.deadline_s),
                r.deadline_met,
            );
        }
    }
    out
}

pub fn analyze_table(reports: &[PathReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let verdict = if r.deadline_met { "OK" } else { "DEADLINE VIOLATED" };
        let _ = writeln!(
            out,
            "flow {}: end-to-end {} us, deadline {} us -> {verdict}",
            r.flow,
            us(r.end_to_end_s),
            us(r.deadline_s),
        );
        let _ = writeln!(
            out,
            "  {:>3}  {:<10} {:>3} {:>3} {:>14} {:>11} {:>10} {:>12} {:>14} {:>9}",
            "hop", "port", "w1", "w2", "arrival(bits)", "burst(us)", "mean(us)", "overall(us)", "depart(bits)", "bg(Mb/s)"
        );
        for (i, hop) in r.hops.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {:>3}  {:<10} {:>3} {:>3} {:>14} {:>11} {:>10} {:>12} {:>14} {:>9}",
                i + 1,
                hop.port.to_string(),
                hop.w1,
                hop.w2,
                bits(hop.arrival.sigma_bits),
                us(hop.bound.burst_s),
                us(hop.bound.mean_s),
                us(hop.bound.overall_s),
                bits(hop.departure.sigma_bits),
                mbps(hop.bg_bandwidth_bps),
            );
        }
        let _ = writeln!(
            out,
            "  background bandwidth along the path: {} Mb/s",
            mbps(r.min_bg_bandwidth_bps)
        );
    }
    out
}

pub const OPTIMIZE_CSV_HEADER: &str =
    "switch,port,w1,w2,bg_mbps,end_to_end_us,min_bg_mbps,feasible";

pub fn optimize_csv(plan: &WeightPlan, per_port_bg: &[(PortId, f64)]) -> String {
    let mut out = String::from(OPTIMIZE_CSV_HEADER);
    out.push('\n');
    for (port, bg) in per_port_bg {
        let (w1, w2) = plan.assignments[port];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            port.switch,
            port.number,
            w1,
            w2,
            mbps(*bg),
            us(plan.end_to_end_s),
            mbps(plan.min_bg_bandwidth_bps),
            plan.feasible,
        );
    }
    out
}

pub fn optimize_table(plan: &WeightPlan, per_port_bg: &[(PortId, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "weight plan ({}):", if plan.feasible { "feasible" } else { "infeasible" });
    for (port, bg) in per_port_bg {
        let (w1, w2) = plan.assignments[port];
        let _ = writeln!(out, "  {:<10} w1={:<3} w2={:<3} background {} Mb/s", port.to_string(), w1, w2, mbps(*bg));
    }
    let _ = writeln!(
        out,
        "  end-to-end bound {} us, background bandwidth along the path {} Mb/s",
        us(plan.end_to_end_s),
        mbps(plan.min_bg_bandwidth_bps)
    );
    out
}

/// One simulate comparison row: a hop of a control flow, or its end-to-end
/// line with `hop` = "e2e".
pub struct SimRow {
    pub flow: String,
    pub hop: String,
    pub port: Option<PortId>,
    pub frames: u64,
    pub max_observed_s: f64,
    pub bound_s: Option<f64>,
}

impl SimRow {
    pub fn within(&self) -> Option<bool> {
        self.bound_s.map(|b| self.max_observed_s <= b)
    }
}

pub const SIMULATE_CSV_HEADER: &str =
    "flow,hop,switch,port,frames,max_observed_us,bound_us,within_bound";

pub fn simulate_csv(rows: &[SimRow]) -> String {
    let mut out = String::from(SIMULATE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (switch, port) = match &r.port {
            Some(p) => (p.switch.clone(), p.number.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.flow,
            r.hop,
            switch,
            port,
            r.frames,
            us(r.max_observed_s),
            r.bound_s.map(us).unwrap_or_default(),
            r.within().map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

pub fn simulate_table(rows: &[SimRow], seeds: u32, duration_s: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "simulation: {seeds} seed(s) x {duration_s} s");
    let _ = writeln!(
        out,
        "  {:<10} {:<5} {:<10} {:>8} {:>16} {:>10} {:>7}",
        "flow", "hop", "port", "frames", "max observed(us)", "bound(us)", "within"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "  {:<10} {:<5} {:<10} {:>8} {:>16} {:>10} {:>7}",
            r.flow,
            r.hop,
            r.port.as_ref().map(|p| p.to_string()).unwrap_or_default(),
            r.frames,
            us(r.max_observed_s),
            r.bound_s.map(us).unwrap_or_default(),
            r.within().map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

pub const VALIDATE_CSV_HEADER: &str = "code,message";

pub fn validate_csv(diags: &[Diagnostic]) -> String {
    let mut out = String::from(VALIDATE_CSV_HEADER);
    out.push('\n');
    for d in diags {
        let _ = writeln!(out, "{},{}", d.code, d.message.replace(',', ";"));
    }
    out
}

pub fn validate_table(diags: &[Diagnostic], summary: &str) -> String {
    if diags.is_empty() {
        format!("configuration OK ({summary})\n")
    } else {
        let mut out = String::new();
        for d in diags {
            let _ = writeln!(out, "{d}");
        }
        out
    }
}

/// Per-frame trace export: decimal seconds with nine fractional digits.
pub const TRACE_CSV_HEADER: &str = "frame_id,flow,hop,arrival_s,depart_s,delay_s";

pub fn trace_csv(records: &[HopRecord]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{:.9},{:.9},{:.9}",
            r.frame_id,
            r.flow,
            r.hop,
            r.arrival_s,
            r.depart_s,
            r.delay_s(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_formatting_matches_report_precision() {
        assert_eq!(us(1888.8e-6), "1888.8");
        assert_eq!(us(4988.177e-6), "4988.2");
        assert_eq!(mbps(9_137_724.55), "9.138");
        assert_eq!(mbps(8_248_648.65), "8.249");
        assert_eq!(bits(716.63616), "716.636");
    }
}
