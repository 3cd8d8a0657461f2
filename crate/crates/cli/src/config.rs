//! Line-oriented configuration parser.
//!
//! The format is one stanza per line, `#` starts a comment, fields are
//! whitespace separated and carry `key=value` pairs:
//!
//! ```text
//! link  <name>          a=<endpoint> b=<endpoint> capacity_bps=<int>
//! port  <switch>.<int>  w1=<int> w2=<int> max_bg_frame_bytes=<int>
//! flow  <name>          class=control src=<station> dst=<station>
//!                       frame_bytes=<int> period_s=<float> deadline_s=<float>
//!                       path=<sw.port,sw.port,...>
//! flow  <name>          class=background src=<station> dst=<station> path=<...>
//! ```
//!
//! An endpoint is a station name or `<switch>.<port>`. Frame lengths are
//! bytes on the wire format and bits internally. Weights are integer frame
//! counts; fractional values are rejected here, not later.

use std::collections::BTreeMap;
use std::fmt;

use wrrcalc_core::analysis::PortConfig;
use wrrcalc_core::curves::PeriodicSource;
use wrrcalc_core::topology::{Endpoint, FlowClass, FlowSpec, Link, PortId, Topology};

/// Parsed configuration: the network plus every declared flow.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub topology: Topology,
    pub flows: Vec<FlowSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based line number; 0 for whole-file errors.
    pub line: usize,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.code, self.message)
        } else {
            write!(f, "{}: {}", self.code, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, code: &'static str, message: impl Into<String>) -> ParseError {
    ParseError { line, code, message: message.into() }
}

struct RawPort {
    line: usize,
    id: PortId,
    w1: u32,
    w2: u32,
    max_bg_frame_bits: f64,
}

pub fn parse_config(text: &str) -> Result<ConfigDocument, ParseError> {
    let mut links: Vec<Link> = Vec::new();
    let mut raw_ports: Vec<RawPort> = Vec::new();
    let mut flows: Vec<FlowSpec> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let kind = tokens.next().expect("nonempty line has a first token");
        let name = tokens
            .next()
            .ok_or_else(|| err(line_no, "E_SYNTAX", format!("{kind} stanza needs a name")))?;
        check_name(line_no, name)?;
        let fields = parse_fields(line_no, tokens)?;

        match kind {
            "link" => {
                if links.iter().any(|l| l.name == name) {
                    return Err(err(line_no, "E_DUPLICATE_LINK", format!("link {name} already declared")));
                }
                let mut fields = fields;
                let a = parse_endpoint(line_no, &take(&mut fields, line_no, "a")?)?;
                let b = parse_endpoint(line_no, &take(&mut fields, line_no, "b")?)?;
                let capacity_bps = parse_u64(line_no, "capacity_bps", &take(&mut fields, line_no, "capacity_bps")?)? as f64;
                if capacity_bps <= 0.0 {
                    return Err(err(line_no, "E_BAD_VALUE", "capacity_bps must be positive"));
                }
                reject_unknown(line_no, &fields)?;
                links.push(Link { name: name.to_string(), a, b, capacity_bps });
            }
            "port" => {
                let id = parse_port_id(line_no, name)?;
                if raw_ports.iter().any(|p| p.id == id) {
                    return Err(err(line_no, "E_DUPLICATE_PORT", format!("port {id} already declared")));
                }
                let mut fields = fields;
                let w1 = parse_weight(line_no, "w1", &take(&mut fields, line_no, "w1")?)?;
                let w2 = parse_weight(line_no, "w2", &take(&mut fields, line_no, "w2")?)?;
                let bytes = parse_u64(line_no, "max_bg_frame_bytes", &take(&mut fields, line_no, "max_bg_frame_bytes")?)?;
                if bytes == 0 {
                    return Err(err(line_no, "E_BAD_VALUE", "max_bg_frame_bytes must be positive"));
                }
                reject_unknown(line_no, &fields)?;
                raw_ports.push(RawPort { line: line_no, id, w1, w2, max_bg_frame_bits: bytes as f64 * 8.0 });
            }
            "flow" => {
                if flows.iter().any(|f| f.name == name) {
                    return Err(err(line_no, "E_DUPLICATE_FLOW", format!("flow {name} already declared")));
                }
                let mut fields = fields;
                let class = take(&mut fields, line_no, "class")?;
                let src = take(&mut fields, line_no, "src")?;
                let dst = take(&mut fields, line_no, "dst")?;
                let path = parse_path(line_no, &take(&mut fields, line_no, "path")?)?;
                let class = match class.as_str() {
                    "control" => {
                        let frame_bytes = parse_u64(line_no, "frame_bytes", &take(&mut fields, line_no, "frame_bytes")?)?;
                        let period_s = parse_f64(line_no, "period_s", &take(&mut fields, line_no, "period_s")?)?;
                        let deadline_s = parse_f64(line_no, "deadline_s", &take(&mut fields, line_no, "deadline_s")?)?;
                        if frame_bytes == 0 {
                            return Err(err(line_no, "E_BAD_VALUE", "frame_bytes must be positive"));
                        }
                        let source = PeriodicSource::new(frame_bytes as f64 * 8.0, period_s)
                            .map_err(|e| err(line_no, "E_BAD_VALUE", e.to_string()))?;
                        FlowClass::Control { source, deadline_s }
                    }
                    "background" => FlowClass::Background,
                    other => {
                        return Err(err(line_no, "E_BAD_VALUE", format!("unknown flow class {other}")))
                    }
                };
                reject_unknown(line_no, &fields)?;
                flows.push(FlowSpec {
                    name: name.to_string(),
                    src,
                    dst,
                    class,
                    path,
                });
            }
            other => {
                return Err(err(line_no, "E_UNKNOWN_STANZA", format!("unknown stanza kind {other}")))
            }
        }
    }

    if links.is_empty() && raw_ports.is_empty() && flows.is_empty() {
        return Err(err(0, "E_EMPTY_CONFIG", "configuration declares nothing"));
    }

    // Resolve port capacities from the attached links; ports without a link
    // are kept aside so validation can report them by name.
    let mut ports = BTreeMap::new();
    let mut unbound_ports = Vec::new();
    let probe = Topology { links: links.clone(), ports: BTreeMap::new(), unbound_ports: Vec::new() };
    for raw in raw_ports {
        match probe.link_capacity(&raw.id) {
            Some(capacity) => {
                let cfg = PortConfig::new(capacity, raw.w1, raw.w2, raw.max_bg_frame_bits)
                    .map_err(|e| err(raw.line, "E_BAD_VALUE", e.to_string()))?;
                ports.insert(raw.id, cfg);
            }
            None => unbound_ports.push(raw.id),
        }
    }

    Ok(ConfigDocument {
        topology: Topology { links, ports, unbound_ports },
        flows,
    })
}

/// Writes a document back in the wire format; `parse(render(doc)) == doc`.
pub fn render_config(doc: &ConfigDocument) -> String {
    let mut out = String::new();
    for link in &doc.topology.links {
        out.push_str(&format!(
            "link {} a={} b={} capacity_bps={}\n",
            link.name, link.a, link.b, link.capacity_bps as u64
        ));
    }
    for (id, cfg) in &doc.topology.ports {
        out.push_str(&format!(
            "port {} w1={} w2={} max_bg_frame_bytes={}\n",
            id,
            cfg.w1,
            cfg.w2,
            (cfg.max_bg_frame_bits / 8.0) as u64
        ));
    }
    for flow in &doc.flows {
        let path: Vec<String> = flow.path.iter().map(|p| p.to_string()).collect();
        match &flow.class {
            FlowClass::Control { source, deadline_s } => out.push_str(&format!(
                "flow {} class=control src={} dst={} frame_bytes={} period_s={} deadline_s={} path={}\n",
                flow.name,
                flow.src,
                flow.dst,
                (source.frame_len_bits / 8.0) as u64,
                source.period_s,
                deadline_s,
                path.join(",")
            )),
            FlowClass::Background => out.push_str(&format!(
                "flow {} class=background src={} dst={} path={}\n",
                flow.name,
                flow.src,
                flow.dst,
                path.join(",")
            )),
        }
    }
    out
}

fn check_name(line: usize, name: &str) -> Result<(), ParseError> {
    if name.contains(',') || name.contains('=') {
        return Err(err(line, "E_BAD_NAME", format!("name {name} may not contain ',' or '='")));
    }
    Ok(())
}

fn parse_fields<'a>(
    line: usize,
    tokens: impl Iterator<Item = &'a str>,
) -> Result<BTreeMap<String, String>, ParseError> {
    let mut fields = BTreeMap::new();
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| err(line, "E_SYNTAX", format!("expected key=value, got {token}")))?;
        if fields.insert(key.to_string(), value.to_string()).is_some() {
            return Err(err(line, "E_SYNTAX", format!("duplicate key {key}")));
        }
    }
    Ok(fields)
}

fn take(fields: &mut BTreeMap<String, String>, line: usize, key: &str) -> Result<String, ParseError> {
    fields
        .remove(key)
        .ok_or_else(|| err(line, "E_MISSING_KEY", format!("missing required key {key}")))
}

fn reject_unknown(line: usize, fields: &BTreeMap<String, String>) -> Result<(), ParseError> {
    if let Some(key) = fields.keys().next() {
        return Err(err(line, "E_UNKNOWN_KEY", format!("unknown key {key}")));
    }
    Ok(())
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64, ParseError> {
    value
        .parse::<u64>()
        .map_err(|_| err(line, "E_BAD_VALUE", format!("{key} must be a nonnegative integer, got {value}")))
}

fn parse_weight(line: usize, key: &str, value: &str) -> Result<u32, ParseError> {
    let w = value.parse::<u32>().map_err(|_| {
        err(line, "E_BAD_VALUE", format!("{key} counts frames per cycle and must be a positive integer, got {value}"))
    })?;
    if w == 0 {
        return Err(err(line, "E_BAD_VALUE", format!("{key} must be at least 1")));
    }
    Ok(w)
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ParseError> {
    let v = value
        .parse::<f64>()
        .map_err(|_| err(line, "E_BAD_VALUE", format!("{key} must be a number, got {value}")))?;
    if !v.is_finite() || v <= 0.0 {
        return Err(err(line, "E_BAD_VALUE", format!("{key} must be positive, got {value}")));
    }
    Ok(v)
}

fn parse_port_id(line: usize, token: &str) -> Result<PortId, ParseError> {
    match token.rsplit_once('.') {
        Some((switch, number)) if !switch.is_empty() => {
            let number = number.parse::<u32>().map_err(|_| {
                err(line, "E_BAD_VALUE", format!("port number in {token} must be an integer"))
            })?;
            Ok(PortId::new(switch, number))
        }
        _ => Err(err(line, "E_BAD_VALUE", format!("expected <switch>.<port>, got {token}"))),
    }
}

fn parse_endpoint(line: usize, token: &str) -> Result<Endpoint, ParseError> {
    check_name(line, token)?;
    match token.rsplit_once('.') {
        Some((switch, number)) if !switch.is_empty() => match number.parse::<u32>() {
            Ok(number) => Ok(Endpoint::SwitchPort(PortId::new(switch, number))),
            Err(_) => Ok(Endpoint::Station(token.to_string())),
        },
        _ => Ok(Endpoint::Station(token.to_string())),
    }
}

fn parse_path(line: usize, value: &str) -> Result<Vec<PortId>, ParseError> {
    if value.is_empty() {
        return Err(err(line, "E_BAD_VALUE", "path must name at least one port"));
    }
    value.split(',').map(|hop| parse_port_id(line, hop)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE_STUDY: &str = "\
# Two switches, one control flow, two background flows.
link l1    a=station1 b=sw1.1 capacity_bps=10000000
link l2    a=station2 b=sw1.2 capacity_bps=10000000
link trunk a=sw1.3    b=sw2.1 capacity_bps=10000000
link l3    a=station3 b=sw2.2 capacity_bps=10000000
link l4    a=sw2.3    b=station4 capacity_bps=10000000
port sw1.3 w1=2 w2=1 max_bg_frame_bytes=1526
port sw2.3 w1=9 w2=2 max_bg_frame_bytes=1526
port sw2.2 w1=1 w2=1 max_bg_frame_bytes=1526
flow control class=control src=station1 dst=station4 frame_bytes=72 period_s=0.005 deadline_s=0.005 path=sw1.3,sw2.3
flow bg1 class=background src=station2 dst=station3 path=sw1.3,sw2.2
flow bg2 class=background src=station3 dst=station4 path=sw2.3
";

    #[test]
    fn parses_the_reference_network() {
        let doc = parse_config(CASE_STUDY).unwrap();
        assert_eq!(doc.topology.links.len(), 5);
        assert_eq!(doc.topology.ports.len(), 3);
        assert_eq!(doc.flows.len(), 3);

        let trunk = doc.topology.port(&PortId::new("sw1", 3)).unwrap();
        assert_eq!((trunk.w1, trunk.w2), (2, 1));
        assert_eq!(trunk.capacity_bps, 1e7);
        assert_eq!(trunk.max_bg_frame_bits, 12_208.0);

        match &doc.flows[0].class {
            FlowClass::Control { source, deadline_s } => {
                assert_eq!(source.frame_len_bits, 576.0);
                assert_eq!(source.period_s, 0.005);
                assert_eq!(*deadline_s, 0.005);
            }
            FlowClass::Background => panic!("control flow expected"),
        }
        assert_eq!(doc.flows[0].path, vec![PortId::new("sw1", 3), PortId::new("sw2", 3)]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let e = parse_config("# only a comment\n\n").unwrap_err();
        assert_eq!(e.code, "E_EMPTY_CONFIG");
    }

    #[test]
    fn duplicate_port_is_an_error() {
        let text = "\
link l a=s1 b=sw.1 capacity_bps=1000000
port sw.1 w1=1 w2=1 max_bg_frame_bytes=1526
port sw.1 w1=2 w2=1 max_bg_frame_bytes=1526
";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.code, "E_DUPLICATE_PORT");
        assert_eq!(e.line, 3);
    }

    #[test]
    fn unknown_key_points_at_its_line() {
        let text = "\
link l a=s1 b=sw.1 capacity_bps=1000000
port sw.1 w1=1 w2=1 max_bg_frame_bytes=1526 color=red
";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.code, "E_UNKNOWN_KEY");
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("line 2"));
    }

    #[test]
    fn fractional_weights_are_rejected() {
        let text = "\
link l a=s1 b=sw.1 capacity_bps=1000000
port sw.1 w1=1.5 w2=1 max_bg_frame_bytes=1526
";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.code, "E_BAD_VALUE");
    }

    #[test]
    fn port_without_link_is_kept_for_validation() {
        let text = "\
link l a=s1 b=sw.1 capacity_bps=1000000
port sw.9 w1=1 w2=1 max_bg_frame_bytes=1526
";
        let doc = parse_config(text).unwrap();
        assert_eq!(doc.topology.unbound_ports, vec![PortId::new("sw", 9)]);
    }

    #[test]
    fn round_trips_losslessly() {
        let doc = parse_config(CASE_STUDY).unwrap();
        let rendered = render_config(&doc);
        let reparsed = parse_config(&rendered).unwrap();
        assert_eq!(doc, reparsed);
    }
}
