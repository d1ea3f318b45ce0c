//! The five causation metrics behind one strategy interface.
//!
//! Every metric is a way of turning (graph, cause, effect) into a
//! counterfactual query graph; the rest of the pipeline (reduce, program,
//! optimize) is shared. Strategies are registered by name and selected at
//! runtime from configuration or the command line.

use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::cfgraph::{
    build_interventional_graph, build_pn_ps_graph, build_pns_graph, CfGraph, ReductionReport,
};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, VariableId};
use crate::program::Program;
use crate::solve::{optimize, BoundInterval, SolveOptions};
use crate::table::JointTable;

/// Closed enumeration of the supported probability-of-causation metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    /// Probability of necessity: would the effect vanish without the cause?
    Pn,
    /// Probability of sufficiency: would the cause have produced the effect?
    Ps,
    /// Probability of necessity and sufficiency.
    Pns,
    /// Weak (interventional) necessity: P(y absent | do(cause absent)).
    WPn,
    /// Weak (interventional) sufficiency: P(y present | do(cause present)).
    WPs,
}

impl MetricKind {
    pub fn strategy(self) -> &'static dyn CausationMetric {
        match self {
            MetricKind::Pn => &Necessity,
            MetricKind::Ps => &Sufficiency,
            MetricKind::Pns => &NecessityAndSufficiency,
            MetricKind::WPn => &WeakNecessity,
            MetricKind::WPs => &WeakSufficiency,
        }
    }

    pub fn all() -> [MetricKind; 5] {
        [
            MetricKind::Pn,
            MetricKind::Ps,
            MetricKind::Pns,
            MetricKind::WPn,
            MetricKind::WPs,
        ]
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        lookup(s)
            .map(|m| m.kind())
            .ok_or_else(|| Error::BadVariable(format!("unknown metric `{s}`")))
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.strategy().name())
    }
}

/// One causation metric: how to pose the counterfactual query.
pub trait CausationMetric: Send + Sync {
    /// Canonical display name.
    fn name(&self) -> &'static str;
    /// Accepted spellings for lookup, lowercase.
    fn aliases(&self) -> &'static [&'static str];
    fn kind(&self) -> MetricKind;
    /// Builds the counterfactual graph posing this metric's query for
    /// `cause` and `effect`.
    fn build_graph(&self, g: &CausalGraph, cause: &VariableId, effect: &VariableId)
        -> Result<CfGraph>;
}

pub struct Necessity;

impl CausationMetric for Necessity {
    fn name(&self) -> &'static str {
        "PN"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["pn", "necessity"]
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Pn
    }

    fn build_graph(&self, g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
        build_pn_ps_graph(g, x, false, y)
    }
}

pub struct Sufficiency;

impl CausationMetric for Sufficiency {
    fn name(&self) -> &'static str {
        "PS"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["ps", "sufficiency"]
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Ps
    }

    fn build_graph(&self, g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
        build_pn_ps_graph(g, x, true, y)
    }
}

pub struct NecessityAndSufficiency;

impl CausationMetric for NecessityAndSufficiency {
    fn name(&self) -> &'static str {
        "PNS"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["pns", "necessity-and-sufficiency"]
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Pns
    }

    fn build_graph(&self, g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
        build_pns_graph(g, x, y)
    }
}

pub struct WeakNecessity;

impl CausationMetric for WeakNecessity {
    fn name(&self) -> &'static str {
        "wPN"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["wpn", "w-pn", "weak-pn", "weak-necessity"]
    }

    fn kind(&self) -> MetricKind {
        MetricKind::WPn
    }

    fn build_graph(&self, g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
        build_interventional_graph(g, x, false, y)
    }
}

pub struct WeakSufficiency;

impl CausationMetric for WeakSufficiency {
    fn name(&self) -> &'static str {
        "wPS"
    }

    fn aliases(&self) -> &'static [&'static str] {
        &["wps", "w-ps", "weak-ps", "weak-sufficiency"]
    }

    fn kind(&self) -> MetricKind {
        MetricKind::WPs
    }

    fn build_graph(&self, g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
        build_interventional_graph(g, x, true, y)
    }
}

/// Every registered metric strategy.
pub fn registry() -> &'static [&'static dyn CausationMetric] {
    &[
        &Necessity,
        &Sufficiency,
        &NecessityAndSufficiency,
        &WeakNecessity,
        &WeakSufficiency,
    ]
}

/// Finds a strategy by name or alias, case-insensitively.
pub fn lookup(name: &str) -> Option<&'static dyn CausationMetric> {
    let needle = name.to_ascii_lowercase();
    registry().iter().copied().find(|m| {
        m.name().to_ascii_lowercase() == needle || m.aliases().contains(&needle.as_str())
    })
}

/// Interval-to-scalar strategies for ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalarization {
    Minimum,
    Maximum,
    Midpoint,
    /// Alias of `Midpoint`: no distribution over the interval is defined,
    /// so the mean of an interval is its midpoint.
    Mean,
}

impl FromStr for Scalarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimum" => Ok(Scalarization::Minimum),
            "max" | "maximum" => Ok(Scalarization::Maximum),
            "mid" | "midpoint" => Ok(Scalarization::Midpoint),
            "mean" => Ok(Scalarization::Mean),
            other => Err(Error::BadVariable(format!(
                "unknown scalarization `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Scalarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scalarization::Minimum => "minimum",
            Scalarization::Maximum => "maximum",
            Scalarization::Midpoint => "midpoint",
            Scalarization::Mean => "mean",
        };
        f.write_str(s)
    }
}

/// Reduces an interval to one scalar.
pub fn scalarize(lower: f64, upper: f64, s: Scalarization) -> f64 {
    match s {
        Scalarization::Minimum => lower,
        Scalarization::Maximum => upper,
        Scalarization::Midpoint | Scalarization::Mean => 0.5 * (lower + upper),
    }
}

/// Pipeline options for [`bounds`].
#[derive(Debug, Clone, Copy)]
pub struct BoundsOptions {
    pub use_reduction: bool,
    pub solve: SolveOptions,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            use_reduction: true,
            solve: SolveOptions::default(),
        }
    }
}

/// Everything one metric evaluation produced.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub metric: MetricKind,
    pub cause: VariableId,
    pub effect: VariableId,
    pub interval: BoundInterval,
    pub reduction: ReductionReport,
    pub degree: usize,
    pub polytope_dims: Vec<(VariableId, u64)>,
    pub denominator: f64,
    pub query_desc: String,
    pub elapsed: Duration,
}

/// End-to-end bound computation: build the metric's counterfactual graph,
/// optionally reduce it, translate to a program and optimize.
pub fn bounds(
    g: &CausalGraph,
    dist: &JointTable,
    metric: MetricKind,
    cause: &VariableId,
    effect: &VariableId,
    opts: &BoundsOptions,
) -> Result<MetricReport> {
    let start = Instant::now();
    let cf = metric.strategy().build_graph(g, cause, effect)?;
    let (cf, reduction) = if opts.use_reduction {
        cf.reduce_to_fixpoint(dist)?
    } else {
        (cf, ReductionReport::default())
    };
    let prog = Program::build(&cf, dist)?;
    let interval = optimize(&prog, &opts.solve)?;
    Ok(MetricReport {
        metric,
        cause: cause.clone(),
        effect: effect.clone(),
        interval,
        reduction,
        degree: prog.degree(),
        polytope_dims: prog
            .polytopes
            .iter()
            .map(|p| (p.exogenous().clone(), p.dimension()))
            .collect(),
        denominator: prog.denominator,
        query_desc: prog.query_desc.clone(),
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::models::{example3_distribution, example3_graph};
    use crate::graph::NodeKind;

    #[test]
    fn registry_covers_all_kinds_and_aliases() {
        assert_eq!(registry().len(), 5);
        for kind in MetricKind::all() {
            let s = kind.strategy();
            assert_eq!(s.kind(), kind);
            assert_eq!(lookup(s.name()).unwrap().kind(), kind);
            for alias in s.aliases() {
                assert_eq!(lookup(alias).unwrap().kind(), kind);
            }
        }
        assert_eq!("w-PN".parse::<MetricKind>().unwrap(), MetricKind::WPn);
        assert!("nope".parse::<MetricKind>().is_err());
    }

    #[test]
    fn necessity_bounds_on_worked_example() {
        let g = example3_graph();
        let dist = example3_distribution();
        let r = bounds(
            &g,
            &dist,
            MetricKind::Pn,
            &"X".into(),
            &"Y".into(),
            &BoundsOptions::default(),
        )
        .unwrap();
        // Conditional interval; its numerator is the published [0.175, 0.245].
        assert!((r.interval.lower * r.denominator - 0.175).abs() < 1e-9);
        assert!((r.interval.upper * r.denominator - 0.245).abs() < 1e-9);
        assert_eq!(r.degree, 2);
        assert_eq!(r.reduction.separator, ["S"]);
        assert!(r.elapsed.as_secs() < 5);
    }

    #[test]
    fn joint_bounds_on_worked_example() {
        let g = example3_graph();
        let dist = example3_distribution();
        let r = bounds(
            &g,
            &dist,
            MetricKind::Pns,
            &"X".into(),
            &"Y".into(),
            &BoundsOptions::default(),
        )
        .unwrap();
        assert!((r.interval.lower - 0.35).abs() < 1e-9);
        assert!((r.interval.upper - 0.49).abs() < 1e-9);
    }

    #[test]
    fn deterministic_chain_has_full_necessity() {
        // Y copies X and X is fair: necessity, sufficiency and their joint
        // are all exactly one.
        let g = CausalGraph::new(
            [("X", NodeKind::Endogenous), ("Y", NodeKind::Endogenous)],
            &[("X", "Y")],
        )
        .unwrap();
        let dist = JointTable::new(
            vec!["X".into(), "Y".into()],
            vec![0.4, 0.0, 0.0, 0.6],
        )
        .unwrap();
        for kind in MetricKind::all() {
            let r = bounds(
                &g,
                &dist,
                kind,
                &"X".into(),
                &"Y".into(),
                &BoundsOptions::default(),
            )
            .unwrap();
            assert!(
                (r.interval.lower - 1.0).abs() < 1e-9 && (r.interval.upper - 1.0).abs() < 1e-9,
                "{kind}: [{}, {}]",
                r.interval.lower,
                r.interval.upper
            );
        }
    }

    #[test]
    fn weak_metrics_point_identified_without_confounding() {
        // Noisy two-stage chain, no latent confounding between X and Y.
        let g = CausalGraph::new(
            [
                ("X", NodeKind::Endogenous),
                ("Z", NodeKind::Endogenous),
                ("Y", NodeKind::Endogenous),
            ],
            &[("X", "Z"), ("Z", "Y")],
        )
        .unwrap();
        // A joint with full support over (X, Z, Y).
        let cells = vec![0.12, 0.06, 0.10, 0.08, 0.05, 0.09, 0.20, 0.30];
        let dist = JointTable::new(vec!["X".into(), "Z".into(), "Y".into()], cells).unwrap();
        for kind in [MetricKind::WPn, MetricKind::WPs] {
            let r = bounds(
                &g,
                &dist,
                kind,
                &"X".into(),
                &"Y".into(),
                &BoundsOptions::default(),
            )
            .unwrap();
            assert!(
                (r.interval.upper - r.interval.lower).abs() < 1e-8,
                "{kind} not point identified: [{}, {}]",
                r.interval.lower,
                r.interval.upper
            );
        }
    }

    #[test]
    fn reduction_toggle_changes_nothing_on_small_chain() {
        let g = CausalGraph::new(
            [
                ("A", NodeKind::Endogenous),
                ("B", NodeKind::Endogenous),
                ("C", NodeKind::Endogenous),
            ],
            &[("A", "B"), ("B", "C")],
        )
        .unwrap();
        let cells = vec![0.15, 0.05, 0.1, 0.1, 0.05, 0.15, 0.1, 0.3];
        let dist = JointTable::new(vec!["A".into(), "B".into(), "C".into()], cells).unwrap();
        for kind in MetricKind::all() {
            let on = bounds(
                &g,
                &dist,
                kind,
                &"B".into(),
                &"C".into(),
                &BoundsOptions::default(),
            )
            .unwrap();
            let off = bounds(
                &g,
                &dist,
                kind,
                &"B".into(),
                &"C".into(),
                &BoundsOptions {
                    use_reduction: false,
                    ..BoundsOptions::default()
                },
            )
            .unwrap();
            assert!(
                (on.interval.lower - off.interval.lower).abs() < 1e-6,
                "{kind} lower: {} vs {}",
                on.interval.lower,
                off.interval.lower
            );
            assert!((on.interval.upper - off.interval.upper).abs() < 1e-6);
        }
    }

    #[test]
    fn scalarization_rules() {
        assert_eq!(scalarize(0.175, 0.245, Scalarization::Minimum), 0.175);
        assert!((scalarize(0.2, 0.4, Scalarization::Midpoint) - 0.3).abs() < 1e-12);
        assert!((scalarize(0.2, 0.4, Scalarization::Mean) - 0.3).abs() < 1e-12);
        assert_eq!(scalarize(0.7, 0.7, Scalarization::Maximum), 0.7);
        assert!("min".parse::<Scalarization>().is_ok());
        assert_eq!(
            "mean".parse::<Scalarization>().unwrap(),
            Scalarization::Mean
        );
    }

    #[test]
    fn descendant_check_propagates() {
        let g = example3_graph();
        let dist = example3_distribution();
        let err = bounds(
            &g,
            &dist,
            MetricKind::Pn,
            &"Y".into(),
            &"X".into(),
            &BoundsOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TargetNotDescendant { .. }));
    }
}
