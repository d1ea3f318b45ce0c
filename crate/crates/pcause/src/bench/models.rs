//! Built-in causal graphs: the two demonstration graphs used across the
//! test suite and the three synthetic observability models backing the
//! benchmark narratives.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeKind};
use crate::table::JointTable;

/// The three bundled observability models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelId {
    M1,
    M2,
    M3,
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelId::M1),
            "m2" => Ok(ModelId::M2),
            "m3" => Ok(ModelId::M3),
            other => Err(Error::BadModel(format!("unknown model `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelId::M1 => write!(f, "M1"),
            ModelId::M2 => write!(f, "M2"),
            ModelId::M3 => write!(f, "M3"),
        }
    }
}

/// Returns one of the bundled observability models.
pub fn model(id: ModelId) -> CausalGraph {
    match id {
        ModelId::M1 => m1(),
        ModelId::M2 => m2(),
        ModelId::M3 => m3(),
    }
}

/// Model 1: a five-stage deployment chain, confounded by unobserved heavy
/// traffic pushing on both memory pressure and crashes.
fn m1() -> CausalGraph {
    CausalGraph::new(
        [
            ("NewDeploy", NodeKind::Endogenous),
            ("MemoryLeak", NodeKind::Endogenous),
            ("MemUsageHigh", NodeKind::Endogenous),
            ("ServiceCrash", NodeKind::Endogenous),
            ("OutageIncident", NodeKind::Endogenous),
            ("HeavyTraffic", NodeKind::Exogenous),
        ],
        &[
            ("NewDeploy", "MemoryLeak"),
            ("MemoryLeak", "MemUsageHigh"),
            ("MemUsageHigh", "ServiceCrash"),
            ("ServiceCrash", "OutageIncident"),
            ("HeavyTraffic", "MemUsageHigh"),
            ("HeavyTraffic", "ServiceCrash"),
        ],
    )
    .expect("static model")
}

/// Model 2: two microservices behind a database, traffic confounding the
/// latency of both services.
fn m2() -> CausalGraph {
    CausalGraph::new(
        [
            ("DB_Change", NodeKind::Endogenous),
            ("DB_Latency", NodeKind::Endogenous),
            ("MS-B_Latency", NodeKind::Endogenous),
            ("MS-A_Latency", NodeKind::Endogenous),
            ("MS-A_Threads", NodeKind::Endogenous),
            ("MS-A_Crash", NodeKind::Endogenous),
            ("MS-B_Error", NodeKind::Endogenous),
            ("MS-A_Error", NodeKind::Endogenous),
            ("OutageIncident", NodeKind::Endogenous),
            ("HeavyTraffic", NodeKind::Exogenous),
        ],
        &[
            ("DB_Change", "DB_Latency"),
            ("DB_Latency", "MS-B_Latency"),
            ("MS-B_Latency", "MS-A_Latency"),
            ("MS-B_Latency", "MS-B_Error"),
            ("MS-A_Latency", "MS-A_Threads"),
            ("MS-A_Threads", "MS-A_Crash"),
            ("MS-A_Crash", "OutageIncident"),
            ("MS-B_Error", "MS-A_Error"),
            ("MS-A_Error", "OutageIncident"),
            ("HeavyTraffic", "MS-B_Latency"),
            ("HeavyTraffic", "MS-A_Latency"),
        ],
    )
    .expect("static model")
}

/// Model 3: a web shop topology whose customer database latency is not
/// monitored, confounding authentication and product lookups.
fn m3() -> CausalGraph {
    CausalGraph::new(
        [
            ("ProductDB", NodeKind::Endogenous),
            ("OrderDB", NodeKind::Endogenous),
            ("ShippingCostService", NodeKind::Endogenous),
            ("CachingService", NodeKind::Endogenous),
            ("AuthService", NodeKind::Endogenous),
            ("ProductService", NodeKind::Endogenous),
            ("OrderService", NodeKind::Endogenous),
            ("API", NodeKind::Endogenous),
            ("www", NodeKind::Endogenous),
            ("Website", NodeKind::Endogenous),
            ("CustomerDB", NodeKind::Exogenous),
        ],
        &[
            ("ProductDB", "CachingService"),
            ("CachingService", "ProductService"),
            ("ShippingCostService", "ProductService"),
            ("ProductService", "API"),
            ("AuthService", "API"),
            ("OrderService", "API"),
            ("API", "www"),
            ("AuthService", "www"),
            ("www", "Website"),
            ("OrderDB", "OrderService"),
            ("CustomerDB", "AuthService"),
            ("CustomerDB", "ProductService"),
        ],
    )
    .expect("static model")
}

/// The three-variable chain X -> Z -> Y with X and Y confounded: the
/// classic smoking / tar / cancer layout.
pub fn smoking_graph() -> CausalGraph {
    CausalGraph::new(
        [
            ("X", NodeKind::Endogenous),
            ("Z", NodeKind::Endogenous),
            ("Y", NodeKind::Endogenous),
            ("U1", NodeKind::Exogenous),
            ("U2", NodeKind::Exogenous),
        ],
        &[
            ("X", "Z"),
            ("Z", "Y"),
            ("U1", "X"),
            ("U1", "Y"),
            ("U2", "Z"),
        ],
    )
    .expect("static model")
}

/// The seven-node worked-example graph: the smoking chain extended with an
/// observed side chain T -> S -> Z and two pruned appendages R, W.
///
/// S is declared before X so Z's parent configurations enumerate as (S, X).
pub fn example3_graph() -> CausalGraph {
    CausalGraph::new(
        [
            ("T", NodeKind::Endogenous),
            ("S", NodeKind::Endogenous),
            ("X", NodeKind::Endogenous),
            ("Z", NodeKind::Endogenous),
            ("Y", NodeKind::Endogenous),
            ("R", NodeKind::Endogenous),
            ("W", NodeKind::Endogenous),
            ("U1", NodeKind::Exogenous),
            ("U2", NodeKind::Exogenous),
            ("U3", NodeKind::Exogenous),
            ("U4", NodeKind::Exogenous),
            ("U5", NodeKind::Exogenous),
            ("U6", NodeKind::Exogenous),
        ],
        &[
            ("X", "Z"),
            ("Z", "Y"),
            ("Y", "W"),
            ("X", "R"),
            ("S", "Z"),
            ("T", "S"),
            ("U1", "X"),
            ("U1", "Y"),
            ("U2", "Z"),
            ("U3", "R"),
            ("U4", "W"),
            ("U5", "S"),
            ("U6", "T"),
        ],
    )
    .expect("static model")
}

/// The published 16-entry input distribution for the worked example.
///
/// Two entries of the printed vector carry an extra trailing digit that
/// makes it sum to 1.63; with 0.03 and 0.04 in those slots it sums to
/// exactly 1. The assignment order is (S, X, Y, Z) with S as the most
/// significant bit: under that reading the marginals come out clean
/// (P(S=1) = 1/4, P(X=1) = 1/2) and the optimizer reproduces the published
/// intervals to ten decimal places.
pub fn example3_distribution() -> JointTable {
    JointTable::new(
        vec!["S".into(), "X".into(), "Y".into(), "Z".into()],
        vec![
            0.30375, 0.0075, 0.03375, 0.03, 0.12, 0.0225, 0.03, 0.2025, 0.0675, 0.01, 0.0075,
            0.04, 0.01, 0.01125, 0.0025, 0.10125,
        ],
    )
    .expect("static distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind;

    #[test]
    fn deployment_chain_shape() {
        let g = model(ModelId::M1);
        g.validate().unwrap();
        assert_eq!(g.endogenous().count(), 5);
        assert_eq!(g.declared_exogenous().count(), 1);
        // Four chain edges plus the two confounding edges.
        let edges: usize = (0..g.len()).map(|v| g.parents_of(v).len()).sum();
        assert_eq!(edges, 6);
        let ht = g.node(&"HeavyTraffic".into()).unwrap();
        assert_eq!(g.kind(ht), NodeKind::Exogenous);
        let targets: Vec<&str> = g
            .children_of(ht)
            .iter()
            .map(|&c| g.name(c).as_str())
            .collect();
        assert_eq!(targets, ["MemUsageHigh", "ServiceCrash"]);
    }

    #[test]
    fn microservice_pair_shape() {
        let g = model(ModelId::M2);
        g.validate().unwrap();
        assert_eq!(g.endogenous().count(), 9);
        let oi = g.node(&"OutageIncident".into()).unwrap();
        let parents: Vec<&str> = g
            .parents_of(oi)
            .iter()
            .map(|&p| g.name(p).as_str())
            .collect();
        assert_eq!(parents, ["MS-A_Crash", "MS-A_Error"]);
        let ht = g.node(&"HeavyTraffic".into()).unwrap();
        let targets: Vec<&str> = g
            .children_of(ht)
            .iter()
            .map(|&c| g.name(c).as_str())
            .collect();
        assert_eq!(targets, ["MS-B_Latency", "MS-A_Latency"]);
    }

    #[test]
    fn web_shop_shape() {
        let g = model(ModelId::M3);
        g.validate().unwrap();
        assert_eq!(g.endogenous().count(), 10);
        // Website is the sink.
        let web = g.node(&"Website".into()).unwrap();
        assert!(g.children_of(web).is_empty());
        // The customer database is latent with no parents of its own.
        let cdb = g.node(&"CustomerDB".into()).unwrap();
        assert_eq!(g.kind(cdb), NodeKind::Exogenous);
        assert!(g.parents_of(cdb).is_empty());
        let confounded: Vec<&str> = g
            .children_of(cdb)
            .iter()
            .map(|&c| g.name(c).as_str())
            .collect();
        assert_eq!(confounded, ["AuthService", "ProductService"]);
    }

    #[test]
    fn embedded_distribution_is_normalized() {
        let t = example3_distribution();
        let total: f64 = t.cells().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((t.probability(&[("S".into(), true)]).unwrap() - 0.25).abs() < 1e-12);
        assert!((t.probability(&[("X".into(), true)]).unwrap() - 0.5).abs() < 1e-12);
    }
}
