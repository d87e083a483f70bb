//! MATPOWER case parsing into a validated per-unit network model.
//!
//! Supports the subset of the format used by the PGLib-OPF distribution:
//! `mpc.baseMVA`, `mpc.bus`, `mpc.gen`, `mpc.branch`, `mpc.gencost` with
//! polynomial costs of degree <= 2. All quantities are converted to per-unit
//! on `base_mva`; cost coefficients are rescaled so the objective stays in
//! $/h when power is in per-unit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed case: {0}")]
    Malformed(String),
    #[error("unsupported cost model: {0}")]
    UnsupportedCost(String),
    #[error("baseMVA must be positive, got {0}")]
    ZeroBase(f64),
}

/// Electrical bus. `id` is the original MATPOWER label; the dense index of a
/// bus is its position in `Network::buses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub vmin: f64,
    pub vmax: f64,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
}

/// Generator with quadratic cost c2*p^2 + c1*p + c0 ($/h, p in p.u.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// Bus label (not dense index); resolve via [`Network::bus_index`].
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

/// Transmission line or transformer (pi model with tap and phase shift).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Endpoint bus labels.
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_charge: f64,
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
    /// Apparent-power limit in p.u.; always positive after parsing (see
    /// `limit_substituted`).
    pub rate_a: f64,
    /// True when the case had no limit (rateA = 0) and a surrogate limit of
    /// 2*sum|S^d| + 1 p.u. was substituted.
    pub limit_substituted: bool,
}

/// Per-unit network model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
}

impl Network {
    /// Dense index of a bus label, if the bus exists.
    pub fn bus_index(&self, label: usize) -> Option<usize> {
        self.index_map().get(&label).copied()
    }

    fn index_map(&self) -> BTreeMap<usize, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect()
    }

    /// Sum of constant cost terms, added to reported objectives.
    pub fn c0_sum(&self) -> f64 {
        self.generators.iter().map(|g| g.c0).sum()
    }

    /// Total apparent-power demand, sum over buses of |pd + j qd| (p.u.).
    pub fn total_demand(&self) -> f64 {
        self.buses
            .iter()
            .map(|b| (b.pd * b.pd + b.qd * b.qd).sqrt())
            .sum()
    }

    /// Serialize to the documented JSON network dump.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("network serialization cannot fail")
    }

    /// Read back a JSON network dump produced by [`Network::to_json`].
    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        serde_json::from_value(value.clone())
    }
}

/// A validation finding: a diagnosed irregularity that does not prevent
/// parsing but may affect model quality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    UndefinedBus,
    IsolatedBus,
    LimitSubstituted,
    DegenerateVoltageBand,
    NoGenerator,
}

/// Parse MATPOWER case text into a per-unit [`Network`].
pub fn parse_matpower(text: &str, name: &str) -> Result<Network, NetError> {
    let raw = RawCase::scan(text)?;
    let base = raw.base_mva.ok_or(NetError::Malformed("missing mpc.baseMVA".into()))?;
    if base <= 0.0 {
        return Err(NetError::ZeroBase(base));
    }

    let mut buses = Vec::with_capacity(raw.bus.len());
    for row in &raw.bus {
        if row.len() < 13 {
            return Err(NetError::Malformed(format!(
                "bus row has {} columns, need 13: {:?}",
                row.len(),
                row
            )));
        }
        buses.push(Bus {
            id: row[0] as usize,
            pd: row[2] / base,
            qd: row[3] / base,
            gs: row[4] / base,
            bs: row[5] / base,
            vmax: row[11],
            vmin: row[12],
        });
    }

    if raw.gencost.len() < raw.gen.len() {
        return Err(NetError::Malformed(format!(
            "{} gencost rows for {} generators",
            raw.gencost.len(),
            raw.gen.len()
        )));
    }
    let mut generators = Vec::new();
    for (gi, row) in raw.gen.iter().enumerate() {
        if row.len() < 10 {
            return Err(NetError::Malformed(format!(
                "gen row has {} columns, need 10: {:?}",
                row.len(),
                row
            )));
        }
        if row[7] <= 0.0 {
            continue; // out of service
        }
        let cost = &raw.gencost[gi];
        if cost.len() < 4 {
            return Err(NetError::Malformed(format!(
                "gencost row has {} columns, need at least 4",
                cost.len()
            )));
        }
        let model = cost[0] as i64;
        if model != 2 {
            return Err(NetError::UnsupportedCost(format!(
                "cost model {model} (piecewise-linear or unknown); only polynomial model 2 is supported"
            )));
        }
        let ncoef = cost[3] as usize;
        if cost.len() < 4 + ncoef {
            return Err(NetError::Malformed(format!(
                "gencost row declares {ncoef} coefficients but has {}",
                cost.len() - 4
            )));
        }
        let coef = &cost[4..4 + ncoef]; // highest degree first
        if ncoef > 3 && coef[..ncoef - 3].iter().any(|&c| c != 0.0) {
            return Err(NetError::UnsupportedCost(format!(
                "polynomial cost of degree {} exceeds quadratic",
                ncoef - 1
            )));
        }
        let tail = &coef[ncoef.saturating_sub(3)..];
        let (c2, c1, c0) = match tail.len() {
            3 => (tail[0], tail[1], tail[2]),
            2 => (0.0, tail[0], tail[1]),
            1 => (0.0, 0.0, tail[0]),
            _ => (0.0, 0.0, 0.0),
        };
        generators.push(Generator {
            bus: row[0] as usize,
            qmax: row[3] / base,
            qmin: row[4] / base,
            pmax: row[8] / base,
            pmin: row[9] / base,
            c2: c2 * base * base,
            c1: c1 * base,
            c0,
        });
    }

    let total_sd: f64 = buses
        .iter()
        .map(|b| (b.pd * b.pd + b.qd * b.qd).sqrt())
        .sum();
    let substitute_limit = 2.0 * total_sd + 1.0;

    let mut branches = Vec::new();
    for row in &raw.branch {
        if row.len() < 13 {
            return Err(NetError::Malformed(format!(
                "branch row has {} columns, need 13: {:?}",
                row.len(),
                row
            )));
        }
        if row[10] <= 0.0 {
            continue; // out of service
        }
        let rate = row[5] / base;
        let (rate_a, limit_substituted) = if rate > 0.0 {
            (rate, false)
        } else {
            (substitute_limit, true)
        };
        branches.push(Branch {
            from: row[0] as usize,
            to: row[1] as usize,
            r: row[2],
            x: row[3],
            b_charge: row[4],
            tap: if row[8] == 0.0 { 1.0 } else { row[8] },
            shift: row[9].to_radians(),
            rate_a,
            limit_substituted,
        });
    }

    Ok(Network {
        name: name.to_string(),
        base_mva: base,
        buses,
        generators,
        branches,
    })
}

/// Diagnose a parsed network. Returns an empty list on a well-posed case.
pub fn validate(network: &Network) -> Vec<Finding> {
    let mut findings = Vec::new();
    let index = network.index_map();

    for (gi, g) in network.generators.iter().enumerate() {
        if !index.contains_key(&g.bus) {
            findings.push(Finding {
                kind: FindingKind::UndefinedBus,
                message: format!("generator {gi} references undefined bus {}", g.bus),
            });
        }
    }
    let mut touched = vec![false; network.buses.len()];
    for (li, br) in network.branches.iter().enumerate() {
        for label in [br.from, br.to] {
            match index.get(&label) {
                Some(&i) => touched[i] = true,
                None => findings.push(Finding {
                    kind: FindingKind::UndefinedBus,
                    message: format!("branch {li} references undefined bus {label}"),
                }),
            }
        }
        if br.limit_substituted {
            findings.push(Finding {
                kind: FindingKind::LimitSubstituted,
                message: format!(
                    "branch {li} ({}-{}) had no thermal limit; substituted {:.4} p.u.",
                    br.from, br.to, br.rate_a
                ),
            });
        }
    }
    if network.buses.len() > 1 {
        for (i, b) in network.buses.iter().enumerate() {
            if !touched[i] {
                findings.push(Finding {
                    kind: FindingKind::IsolatedBus,
                    message: format!("bus {} is not connected to any branch", b.id),
                });
            }
        }
    }
    for b in &network.buses {
        if b.vmin >= b.vmax {
            findings.push(Finding {
                kind: FindingKind::DegenerateVoltageBand,
                message: format!("bus {}: vmin {} >= vmax {}", b.id, b.vmin, b.vmax),
            });
        }
    }
    if network.generators.is_empty() {
        findings.push(Finding {
            kind: FindingKind::NoGenerator,
            message: "network has no in-service generator".into(),
        });
    }
    findings
}

/// Raw matrices scanned out of the `.m` text.
struct RawCase {
    base_mva: Option<f64>,
    bus: Vec<Vec<f64>>,
    gen: Vec<Vec<f64>>,
    branch: Vec<Vec<f64>>,
    gencost: Vec<Vec<f64>>,
}

impl RawCase {
    fn scan(text: &str) -> Result<RawCase, NetError> {
        let mut raw = RawCase {
            base_mva: None,
            bus: Vec::new(),
            gen: Vec::new(),
            branch: Vec::new(),
            gencost: Vec::new(),
        };
        let mut section: Option<(String, String)> = None; // (key, buffer)
        for line in text.lines() {
            let line = match line.find('%') {
                Some(p) => &line[..p],
                None => line,
            };
            if let Some((key, buf)) = section.as_mut() {
                match line.find(']') {
                    Some(p) => {
                        buf.push_str(&line[..p]);
                        let key = key.clone();
                        let body = buf.clone();
                        section = None;
                        raw.store(&key, &body)?;
                    }
                    None => {
                        buf.push_str(line);
                        buf.push('\n');
                    }
                }
                continue;
            }
            let trimmed = line.trim_start();
            if !trimmed.starts_with("mpc.") {
                continue;
            }
            let Some(eq) = trimmed.find('=') else { continue };
            let key = trimmed[..eq].trim().to_string();
            let rhs = trimmed[eq + 1..].trim();
            match key.as_str() {
                "mpc.baseMVA" => {
                    let v = rhs.trim_end_matches(';').trim();
                    raw.base_mva = Some(v.parse::<f64>().map_err(|_| {
                        NetError::Malformed(format!("cannot parse baseMVA from '{v}'"))
                    })?);
                }
                "mpc.bus" | "mpc.gen" | "mpc.branch" | "mpc.gencost" => {
                    let Some(open) = rhs.find('[') else {
                        return Err(NetError::Malformed(format!("{key}: expected '['")));
                    };
                    let body_start = &rhs[open + 1..];
                    match body_start.find(']') {
                        Some(p) => raw.store(&key, &body_start[..p])?,
                        None => {
                            let mut buf = String::from(body_start);
                            buf.push('\n');
                            section = Some((key, buf));
                        }
                    }
                }
                _ => {}
            }
        }
        if section.is_some() {
            return Err(NetError::Malformed("unterminated matrix section".into()));
        }
        Ok(raw)
    }

    fn store(&mut self, key: &str, body: &str) -> Result<(), NetError> {
        let mut rows = Vec::new();
        for chunk in body.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for tok in chunk.split_whitespace() {
                let v = tok.parse::<f64>().map_err(|_| {
                    NetError::Malformed(format!("{key}: cannot parse '{tok}' in row '{chunk}'"))
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        match key {
            "mpc.bus" => self.bus = rows,
            "mpc.gen" => self.gen = rows,
            "mpc.branch" => self.branch = rows,
            "mpc.gencost" => self.gencost = rows,
            _ => unreachable!("unknown matrix key {key}"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata;

    #[test]
    fn parse_two_bus_fixture() {
        let net = parse_matpower(testdata::TWO_BUS, "two_bus").unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.branches.len(), 1);
        assert_eq!(net.generators.len(), 1);
        assert_eq!(net.base_mva, 100.0);
        // per-unit conversion of the 80 MW / 20 MVAr load at bus 2
        assert_eq!(net.buses[1].pd, 0.8);
        assert_eq!(net.buses[1].qd, 0.2);
        assert!(validate(&net).is_empty());
    }

    #[test]
    fn parse_case3() {
        let text = testdata::read_case("pglib_opf_case3_lmbd.m");
        let net = parse_matpower(&text, "case3").unwrap();
        assert_eq!(net.buses.len(), 3);
        assert_eq!(net.branches.len(), 3);
        assert_eq!(net.generators.len(), 3);
        // gencost row 1: c2 = 0.11 $/MW^2h -> 0.11 * 100^2 per-unit
        assert_eq!(net.generators[0].c2, 0.11 * 1e4);
        assert_eq!(net.generators[0].c1, 5.0 * 1e2);
        assert_eq!(net.branches[1].rate_a, 0.5);
    }

    #[test]
    fn piecewise_cost_rejected() {
        let text = testdata::TWO_BUS.replace("2\t 0.0\t 0.0\t 3", "1\t 0.0\t 0.0\t 3");
        let err = parse_matpower(&text, "bad").unwrap_err();
        assert!(matches!(err, NetError::UnsupportedCost(_)), "{err}");
    }

    #[test]
    fn cubic_cost_rejected() {
        let text = testdata::TWO_BUS.replace(
            "2\t 0.0\t 0.0\t 3\t   0.050000\t  10.000000\t   0.000000;",
            "2\t 0.0\t 0.0\t 4\t   1.0\t 0.050000\t  10.000000\t   0.000000;",
        );
        let err = parse_matpower(&text, "bad").unwrap_err();
        assert!(matches!(err, NetError::UnsupportedCost(_)), "{err}");
    }

    #[test]
    fn zero_base_rejected() {
        let text = testdata::TWO_BUS.replace("mpc.baseMVA = 100.0;", "mpc.baseMVA = 0.0;");
        assert!(matches!(
            parse_matpower(&text, "bad").unwrap_err(),
            NetError::ZeroBase(_)
        ));
    }

    #[test]
    fn malformed_row_rejected() {
        let text = testdata::TWO_BUS.replace("0.04", "zz");
        assert!(matches!(
            parse_matpower(&text, "bad").unwrap_err(),
            NetError::Malformed(_)
        ));
    }

    #[test]
    fn out_of_service_dropped() {
        // switch the branch status column (11th) off
        let text = testdata::TWO_BUS.replace(
            "120.0\t 120.0\t 120.0\t 0.0\t 0.0\t 1",
            "120.0\t 120.0\t 120.0\t 0.0\t 0.0\t 0",
        );
        let net = parse_matpower(&text, "t").unwrap();
        assert_eq!(net.branches.len(), 0);
    }

    #[test]
    fn undefined_bus_is_a_finding() {
        let text = testdata::TWO_BUS.replace(
            "1\t 2\t 0.04\t 0.20",
            "1\t 9\t 0.04\t 0.20",
        );
        let net = parse_matpower(&text, "t").unwrap();
        let findings = validate(&net);
        assert!(findings
            .iter()
            .any(|f| f.kind == FindingKind::UndefinedBus));
    }

    #[test]
    fn zero_rate_substituted_and_flagged() {
        let text = testdata::TWO_BUS.replace(
            "0.02\t 120.0\t 120.0\t 120.0",
            "0.02\t 0.0\t 120.0\t 120.0",
        );
        let net = parse_matpower(&text, "t").unwrap();
        // 2 * sum |S^d| + 1 with the only load 0.8 + j0.2
        let expect = 2.0 * (0.8f64.powi(2) + 0.2f64.powi(2)).sqrt() + 1.0;
        assert!((net.branches[0].rate_a - expect).abs() < 1e-12);
        assert!(net.branches[0].limit_substituted);
        let findings = validate(&net);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, FindingKind::LimitSubstituted);
    }

    #[test]
    fn per_unit_cost_consistency() {
        // c2 p^2 + c1 p + c0 at p = pmax (p.u.) must equal the original $/h
        // polynomial at pmax * base (MW)
        let text = testdata::read_case("pglib_opf_case3_lmbd.m");
        let net = parse_matpower(&text, "case3").unwrap();
        let raw = [(0.11, 5.0, 0.0), (0.085, 1.2, 0.0), (0.0, 0.0, 0.0)];
        for (g, (rc2, rc1, rc0)) in net.generators.iter().zip(raw) {
            let p_mw = g.pmax * net.base_mva;
            let orig = rc2 * p_mw * p_mw + rc1 * p_mw + rc0;
            let pu = g.c2 * g.pmax * g.pmax + g.c1 * g.pmax + g.c0;
            if orig != 0.0 {
                assert!(((pu - orig) / orig).abs() < 1e-9);
            } else {
                assert_eq!(pu, 0.0);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let text = testdata::read_case("pglib_opf_case3_lmbd.m");
        let net = parse_matpower(&text, "case3").unwrap();
        let back = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(net, back);
    }
}
