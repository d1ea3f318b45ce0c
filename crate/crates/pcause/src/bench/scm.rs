//! Fully specified structural causal models: deterministic mechanisms plus
//! priors over the exogenous variables. These are the ground-truth models
//! behind the benchmark suite — they can be simulated, marginalized
//! exactly, and queried for true counterfactual probabilities by
//! exhaustive enumeration over the exogenous states.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::CanonicalSpace;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeKind, VariableId};
use crate::metrics::MetricKind;
use crate::table::{Dataset, JointTable};

/// Distribution over one exogenous variable's raw states.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub probs: Vec<f64>,
}

impl Prior {
    pub fn cardinality(&self) -> usize {
        self.probs.len()
    }
}

/// Deterministic mechanism: one output per configuration of all parents
/// (mixed radix, first parent most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    /// Parent node indices in declaration order.
    pub parents: Vec<usize>,
    /// Cardinality per parent (2 for endogenous, prior size for exogenous).
    pub cards: Vec<usize>,
    pub outputs: Vec<bool>,
}

impl Mechanism {
    fn config_of(&self, value_of: impl Fn(usize) -> usize) -> usize {
        let mut cfg = 0usize;
        for (&p, &card) in self.parents.iter().zip(&self.cards) {
            cfg = cfg * card + value_of(p);
        }
        cfg
    }
}

/// A complete synthetic model.
#[derive(Debug, Clone, PartialEq)]
pub struct FullScm {
    graph: CausalGraph,
    /// Prior per exogenous node index.
    priors: BTreeMap<usize, Prior>,
    /// Mechanism per endogenous node index.
    mechanisms: BTreeMap<usize, Mechanism>,
}

impl FullScm {
    pub fn new(
        graph: CausalGraph,
        priors: BTreeMap<usize, Prior>,
        mechanisms: BTreeMap<usize, Mechanism>,
    ) -> Result<FullScm> {
        let scm = FullScm {
            graph,
            priors,
            mechanisms,
        };
        scm.validate()?;
        Ok(scm)
    }

    /// Builds a model whose exogenous variables are canonical: each prior
    /// ranges over the mechanism tuples of its component and the member
    /// mechanisms follow from decoding the state.
    pub fn from_canonical(
        graph: &CausalGraph,
        canonical_priors: &BTreeMap<VariableId, Vec<f64>>,
    ) -> Result<FullScm> {
        let g = graph.completed();
        g.validate()?;
        let mut priors = BTreeMap::new();
        let mut mechanisms = BTreeMap::new();
        for comp in g.c_components() {
            let exo = comp.exogenous.expect("completed graph");
            let space = CanonicalSpace::new(&g, &comp);
            let prior = canonical_priors
                .get(g.name(exo))
                .ok_or_else(|| Error::BadModel(format!("missing prior for {}", g.name(exo))))?;
            if prior.len() as u64 != space.cardinality() {
                return Err(Error::BadModel(format!(
                    "prior for {} has {} states, canonical cardinality is {}",
                    g.name(exo),
                    prior.len(),
                    space.cardinality()
                )));
            }
            priors.insert(exo, Prior {
                probs: prior.clone(),
            });
            for &m in &comp.members {
                let endo_parents = g.endo_parents(m);
                // Parents in declaration order with the exogenous appended
                // as the least significant digit.
                let mut parents = endo_parents.clone();
                parents.push(exo);
                let mut cards = vec![2usize; endo_parents.len()];
                cards.push(space.cardinality() as usize);
                let np = endo_parents.len();
                let mut outputs = Vec::with_capacity(1 << np);
                for cfg in 0..(1usize << np) * space.cardinality() as usize {
                    let u = (cfg % space.cardinality() as usize) as u64;
                    let endo_cfg = cfg / space.cardinality() as usize;
                    let table = space.decode(u, g.name(m))?;
                    outputs.push(table.outputs[endo_cfg]);
                }
                mechanisms.insert(m, Mechanism {
                    parents,
                    cards,
                    outputs,
                });
            }
        }
        FullScm::new(g, priors, mechanisms)
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        for u in self.graph.exogenous() {
            let prior = self
                .priors
                .get(&u)
                .ok_or_else(|| Error::BadModel(format!("missing prior for {}", self.graph.name(u))))?;
            if prior.probs.len() < 2 {
                return Err(Error::BadModel(format!(
                    "prior for {} needs at least two states",
                    self.graph.name(u)
                )));
            }
            if prior.probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::BadModel(format!(
                    "negative prior entry for {}",
                    self.graph.name(u)
                )));
            }
            let total: f64 = prior.probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::BadModel(format!(
                    "prior for {} sums to {total}",
                    self.graph.name(u)
                )));
            }
        }
        for v in self.graph.endogenous() {
            let mech = self.mechanisms.get(&v).ok_or_else(|| {
                Error::BadModel(format!("missing mechanism for {}", self.graph.name(v)))
            })?;
            let mut declared = self.graph.parents_of(v).to_vec();
            declared.sort_unstable();
            let mut given = mech.parents.clone();
            given.sort_unstable();
            if declared != given {
                return Err(Error::BadModel(format!(
                    "mechanism parents of {} do not match the graph",
                    self.graph.name(v)
                )));
            }
            let expected: usize = mech.cards.iter().product();
            for (&p, &card) in mech.parents.iter().zip(&mech.cards) {
                let want = match self.graph.kind(p) {
                    NodeKind::Endogenous => 2,
                    NodeKind::Exogenous => self.priors[&p].cardinality(),
                };
                if card != want {
                    return Err(Error::BadModel(format!(
                        "mechanism of {} declares cardinality {card} for parent {}, expected {want}",
                        self.graph.name(v),
                        self.graph.name(p)
                    )));
                }
            }
            if mech.outputs.len() != expected {
                return Err(Error::BadModel(format!(
                    "mechanism of {} has {} outputs, expected {expected}",
                    self.graph.name(v),
                    mech.outputs.len()
                )));
            }
        }
        Ok(())
    }

    /// Exogenous node indices in a fixed order.
    fn exo_nodes(&self) -> Vec<usize> {
        self.graph.exogenous().collect()
    }

    /// Propagates mechanisms for fixed exogenous values; `intervene` pins
    /// one endogenous node. Returns endogenous values by node index.
    fn propagate(
        &self,
        exo_values: &BTreeMap<usize, usize>,
        intervene: Option<(usize, bool)>,
    ) -> BTreeMap<usize, usize> {
        let mut values: BTreeMap<usize, usize> = exo_values.clone();
        for v in self.graph.topo_order() {
            if self.graph.kind(v) != NodeKind::Endogenous {
                continue;
            }
            if let Some((iv, val)) = intervene {
                if iv == v {
                    values.insert(v, val as usize);
                    continue;
                }
            }
            let mech = &self.mechanisms[&v];
            let cfg = mech.config_of(|p| values[&p]);
            values.insert(v, mech.outputs[cfg] as usize);
        }
        values
    }

    /// Iterates every joint exogenous configuration with its weight.
    fn exo_support(&self) -> Vec<(BTreeMap<usize, usize>, f64)> {
        let exos = self.exo_nodes();
        let mut acc: Vec<(BTreeMap<usize, usize>, f64)> = vec![(BTreeMap::new(), 1.0)];
        for &u in &exos {
            let prior = &self.priors[&u];
            let mut next = Vec::with_capacity(acc.len() * prior.probs.len());
            for (assign, w) in &acc {
                for (state, p) in prior.probs.iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    let mut a = assign.clone();
                    a.insert(u, state);
                    next.push((a, w * p));
                }
            }
            acc = next;
        }
        acc
    }

    /// Endogenous variables in declaration order: the dataset column and
    /// joint table order.
    pub fn endogenous_order(&self) -> Vec<VariableId> {
        self.graph
            .endogenous()
            .map(|v| self.graph.name(v).clone())
            .collect()
    }

    /// Draws `n` i.i.d. samples of the endogenous variables.
    pub fn simulate(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exos = self.exo_nodes();
        let endo: Vec<usize> = self.graph.endogenous().collect();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut exo_values = BTreeMap::new();
            for &u in &exos {
                let prior = &self.priors[&u];
                let roll: f64 = rng.random();
                let mut acc = 0.0;
                let mut state = prior.probs.len() - 1;
                for (i, p) in prior.probs.iter().enumerate() {
                    acc += p;
                    if roll < acc {
                        state = i;
                        break;
                    }
                }
                exo_values.insert(u, state);
            }
            let values = self.propagate(&exo_values, None);
            rows.push(endo.iter().map(|v| values[v] == 1).collect());
        }
        Dataset {
            columns: self.endogenous_order(),
            rows,
        }
    }

    /// Exact joint over the endogenous variables by summing over the
    /// exogenous states.
    pub fn exact_joint(&self) -> Result<JointTable> {
        let endo: Vec<usize> = self.graph.endogenous().collect();
        let mut cells = vec![0.0; 1 << endo.len()];
        for (exo_values, w) in self.exo_support() {
            let values = self.propagate(&exo_values, None);
            let mut idx = 0usize;
            for &v in &endo {
                idx = (idx << 1) | values[&v];
            }
            cells[idx] += w;
        }
        JointTable::new(self.endogenous_order(), cells)
    }

    /// True value of a causation metric by exhaustive enumeration.
    pub fn ground_truth_metric(
        &self,
        metric: MetricKind,
        x: &VariableId,
        y: &VariableId,
    ) -> Result<f64> {
        let xi = self.graph.endogenous_node(x)?;
        let yi = self.graph.endogenous_node(y)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (exo_values, w) in self.exo_support() {
            let factual = self.propagate(&exo_values, None);
            let y_if = |val: bool| -> bool {
                self.propagate(&exo_values, Some((xi, val)))[&yi] == 1
            };
            let (fx, fy) = (factual[&xi] == 1, factual[&yi] == 1);
            match metric {
                MetricKind::Pn => {
                    if fx && fy {
                        den += w;
                        if !y_if(false) {
                            num += w;
                        }
                    }
                }
                MetricKind::Ps => {
                    if !fx && !fy {
                        den += w;
                        if y_if(true) {
                            num += w;
                        }
                    }
                }
                MetricKind::Pns => {
                    den = 1.0;
                    if y_if(true) && !y_if(false) {
                        num += w;
                    }
                }
                MetricKind::WPn => {
                    den = 1.0;
                    if !y_if(false) {
                        num += w;
                    }
                }
                MetricKind::WPs => {
                    den = 1.0;
                    if y_if(true) {
                        num += w;
                    }
                }
            }
        }
        if den <= 0.0 {
            return Err(Error::ZeroConditioningEvent(format!(
                "factual evidence for {metric} of {x} on {y}"
            )));
        }
        Ok(num / den)
    }

    /// The canonical-state distribution the true model induces for one
    /// component: maps every raw exogenous state to the canonical index of
    /// the member mechanisms it selects.
    pub fn true_canonical_distribution(&self, exo: &VariableId) -> Result<Vec<f64>> {
        let g = &self.graph;
        let u = g
            .node(exo)
            .filter(|&u| g.kind(u) == NodeKind::Exogenous)
            .ok_or_else(|| Error::BadVariable(exo.to_string()))?;
        let comp = g
            .c_components()
            .into_iter()
            .find(|c| c.exogenous == Some(u))
            .ok_or_else(|| Error::BadVariable(exo.to_string()))?;
        let space = CanonicalSpace::new(g, &comp);
        let mut q = vec![0.0; space.cardinality() as usize];
        let prior = &self.priors[&u];
        for (state, w) in prior.probs.iter().enumerate() {
            // Mechanism index per member under this raw state.
            let mechs: Vec<u64> = space
                .members()
                .iter()
                .map(|ml| {
                    let v = g.node(&ml.variable).expect("member");
                    let mech = &self.mechanisms[&v];
                    let mut idx = 0u64;
                    for cfg in 0..ml.config_count {
                        // Parent assignment for this configuration.
                        let out = {
                            let bit_of = |p: usize| -> usize {
                                let pos = ml
                                    .parents
                                    .iter()
                                    .position(|q| g.node(q) == Some(p))
                                    .expect("endo parent");
                                ((cfg >> (ml.parents.len() - 1 - pos)) & 1) as usize
                            };
                            let full_cfg = mech.config_of(|p| {
                                if p == u {
                                    state
                                } else {
                                    bit_of(p)
                                }
                            });
                            mech.outputs[full_cfg]
                        };
                        idx = (idx << 1) | out as u64;
                    }
                    idx
                })
                .collect();
            q[space.encode(&mechs) as usize] += w;
        }
        Ok(q)
    }
}

impl FullScm {
    pub fn prior_of(&self, u: usize) -> &Prior {
        &self.priors[&u]
    }

    pub fn mechanism_of(&self, v: usize) -> &Mechanism {
        &self.mechanisms[&v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::generator::{random_scm, GeneratorCaps};
    use crate::bench::models::smoking_graph;
    use crate::metrics::{bounds, BoundsOptions};
    use crate::program::Program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_node_copy_scm() -> FullScm {
        // X ~ Bernoulli(0.3), Y := X.
        let g = CausalGraph::new(
            [
                ("X", NodeKind::Endogenous),
                ("Y", NodeKind::Endogenous),
                ("NX", NodeKind::Exogenous),
            ],
            &[("X", "Y"), ("NX", "X")],
        )
        .unwrap();
        let x = g.node(&"X".into()).unwrap();
        let y = g.node(&"Y".into()).unwrap();
        let nx = g.node(&"NX".into()).unwrap();
        let mut priors = BTreeMap::new();
        priors.insert(nx, Prior { probs: vec![0.7, 0.3] });
        let mut mechs = BTreeMap::new();
        mechs.insert(
            x,
            Mechanism {
                parents: vec![nx],
                cards: vec![2],
                outputs: vec![false, true],
            },
        );
        mechs.insert(
            y,
            Mechanism {
                parents: vec![x],
                cards: vec![2],
                outputs: vec![false, true],
            },
        );
        FullScm::new(g, priors, mechs).unwrap()
    }

    #[test]
    fn point_mass_priors_give_constant_rows() {
        let g = CausalGraph::new(
            [("A", NodeKind::Endogenous), ("N", NodeKind::Exogenous)],
            &[("N", "A")],
        )
        .unwrap();
        let n = g.node(&"N".into()).unwrap();
        let a = g.node(&"A".into()).unwrap();
        let scm = FullScm::new(
            g,
            BTreeMap::from([(n, Prior { probs: vec![0.0, 1.0] })]),
            BTreeMap::from([(
                a,
                Mechanism {
                    parents: vec![n],
                    cards: vec![2],
                    outputs: vec![false, true],
                },
            )]),
        )
        .unwrap();
        let data = scm.simulate(50, 3);
        assert!(data.rows.iter().all(|r| r == &vec![true]));
        let joint = scm.exact_joint().unwrap();
        assert_eq!(joint.cells(), &[0.0, 1.0]);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let scm = two_node_copy_scm();
        let a = scm.simulate(200, 9);
        let b = scm.simulate(200, 9);
        assert_eq!(a, b);
        let c = scm.simulate(200, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn frequencies_converge_to_exact_joint() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let (scm, _, _) = random_scm(&mut rng, &GeneratorCaps::default());
        let exact = scm.exact_joint().unwrap();
        let n = 60_000;
        let table = JointTable::from_dataset(&scm.simulate(n, 77), 0.0).unwrap();
        let tv: f64 = exact
            .cells()
            .iter()
            .zip(table.cells())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn exact_joint_satisfies_component_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let (scm, _, _) = random_scm(&mut rng, &GeneratorCaps::default());
            let joint = scm.exact_joint().unwrap();
            let g = scm.graph();
            let comps = g.c_components();
            let endo: Vec<usize> = g.endogenous().collect();
            for assign in 0..(1usize << endo.len()) {
                let value_of = |v: usize| -> bool {
                    let pos = endo.iter().position(|&e| e == v).expect("endo");
                    (assign >> (endo.len() - 1 - pos)) & 1 == 1
                };
                let event: Vec<(VariableId, bool)> = endo
                    .iter()
                    .map(|&v| (g.name(v).clone(), value_of(v)))
                    .collect();
                let lhs = joint.probability(&event).unwrap();
                let mut rhs = 1.0;
                let mut defined = true;
                for comp in &comps {
                    for &m in &comp.members {
                        let given: Vec<(VariableId, bool)> = g
                            .component_predecessors(m, comp)
                            .into_iter()
                            .map(|w| (g.name(w).clone(), value_of(w)))
                            .collect();
                        match joint.conditional(&[(g.name(m).clone(), value_of(m))], &given) {
                            Ok(c) => rhs *= c,
                            Err(_) => {
                                defined = false;
                            }
                        }
                    }
                }
                if defined {
                    assert!(
                        (lhs - rhs).abs() < 1e-9,
                        "factorization off: {lhs} vs {rhs}"
                    );
                } else {
                    assert!(lhs < 1e-12, "undefined conditional on positive mass");
                }
            }
        }
    }

    #[test]
    fn copying_chain_has_unit_ground_truths() {
        let scm = two_node_copy_scm();
        for kind in MetricKind::all() {
            let v = scm.ground_truth_metric(kind, &"X".into(), &"Y".into()).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{kind}: {v}");
        }
    }

    #[test]
    fn joint_counterfactual_factorizes_when_effect_ignores_cause() {
        // Y has X as a parent but its mechanism ignores it.
        let g = CausalGraph::new(
            [
                ("X", NodeKind::Endogenous),
                ("Y", NodeKind::Endogenous),
                ("NX", NodeKind::Exogenous),
                ("NY", NodeKind::Exogenous),
            ],
            &[("X", "Y"), ("NX", "X"), ("NY", "Y")],
        )
        .unwrap();
        let x = g.node(&"X".into()).unwrap();
        let y = g.node(&"Y".into()).unwrap();
        let nx = g.node(&"NX".into()).unwrap();
        let ny = g.node(&"NY".into()).unwrap();
        let scm = FullScm::new(
            g,
            BTreeMap::from([
                (nx, Prior { probs: vec![0.4, 0.6] }),
                (ny, Prior { probs: vec![0.25, 0.75] }),
            ]),
            BTreeMap::from([
                (
                    x,
                    Mechanism {
                        parents: vec![nx],
                        cards: vec![2],
                        outputs: vec![false, true],
                    },
                ),
                (
                    y,
                    Mechanism {
                        parents: vec![x, ny],
                        cards: vec![2, 2],
                        // Output depends only on NY.
                        outputs: vec![false, true, false, true],
                    },
                ),
            ]),
        )
        .unwrap();
        let pns = scm.ground_truth_metric(MetricKind::Pns, &"X".into(), &"Y".into()).unwrap();
        let wps = scm.ground_truth_metric(MetricKind::WPs, &"X".into(), &"Y".into()).unwrap();
        let wpn = scm.ground_truth_metric(MetricKind::WPn, &"X".into(), &"Y".into()).unwrap();
        // Y_{X=1} and Y_{X=0} coincide here, so their "joint" degenerates.
        assert!((pns - 0.0).abs() < 1e-12);
        assert!((wps - 0.75).abs() < 1e-12);
        assert!((wpn - 0.25).abs() < 1e-12);
    }

    #[test]
    fn true_canonical_distribution_satisfies_program_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10 {
            let (scm, x, y) = random_scm(&mut rng, &GeneratorCaps::default());
            let dist = scm.exact_joint().unwrap();
            let cf = crate::cfgraph::build_pns_graph(scm.graph(), &x, &y).unwrap();
            let prog = Program::build(&cf, &dist).unwrap();
            // Plug the true canonical distributions into every row.
            let qs: Vec<Vec<f64>> = prog
                .polytopes
                .iter()
                .map(|p| scm.true_canonical_distribution(p.exogenous()).unwrap())
                .collect();
            for (poly, q) in prog.polytopes.iter().zip(&qs) {
                for (coeffs, rhs) in poly.dense_rows() {
                    let lhs: f64 = coeffs.iter().zip(q).map(|(c, v)| c * v).sum();
                    assert!(
                        (lhs - rhs).abs() < 1e-9,
                        "true q violates a constraint: {lhs} vs {rhs}"
                    );
                }
            }
            // And the objective at the true q equals the true numerator.
            let truth = scm.ground_truth_metric(MetricKind::Pns, &x, &y).unwrap();
            let value = prog.evaluate_numerator(&qs);
            assert!(
                (value - truth).abs() < 1e-9,
                "objective at true q: {value} vs {truth}"
            );
        }
    }

    #[test]
    fn bounds_contain_ground_truth_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(31337);
        for case in 0..12 {
            let (scm, x, y) = random_scm(&mut rng, &GeneratorCaps::default());
            let dist = scm.exact_joint().unwrap();
            for kind in MetricKind::all() {
                let truth = match scm.ground_truth_metric(kind, &x, &y) {
                    Ok(t) => t,
                    Err(_) => continue,
                };
                let r = bounds(scm.graph(), &dist, kind, &x, &y, &BoundsOptions::default())
                    .unwrap();
                assert!(
                    truth >= r.interval.lower - 1e-7 && truth <= r.interval.upper + 1e-7,
                    "case {case} {kind}: truth {truth} outside [{}, {}]",
                    r.interval.lower,
                    r.interval.upper
                );
            }
        }
    }

    #[test]
    fn reduction_preserves_bounds_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let caps = GeneratorCaps {
            max_component_dim: 16,
            max_total_dim: 1024,
            ..GeneratorCaps::default()
        };
        for case in 0..10 {
            let (scm, x, y) = random_scm(&mut rng, &caps);
            let dist = scm.exact_joint().unwrap();
            for kind in [MetricKind::Pn, MetricKind::Ps, MetricKind::Pns] {
                let on = match bounds(scm.graph(), &dist, kind, &x, &y, &BoundsOptions::default())
                {
                    Ok(r) => r,
                    Err(_) => continue,
                };
                let off = bounds(
                    scm.graph(),
                    &dist,
                    kind,
                    &x,
                    &y,
                    &BoundsOptions {
                        use_reduction: false,
                        ..BoundsOptions::default()
                    },
                )
                .unwrap();
                assert!(
                    (on.interval.lower - off.interval.lower).abs() < 1e-6
                        && (on.interval.upper - off.interval.upper).abs() < 1e-6,
                    "case {case} {kind}: [{}, {}] vs [{}, {}] ({})",
                    on.interval.lower,
                    on.interval.upper,
                    off.interval.lower,
                    off.interval.upper,
                    on.reduction.summary(),
                );
            }
        }
    }

    #[test]
    fn smoking_model_weak_sufficiency_is_identified() {
        // Front-door shaped model: the weak metrics are point identified
        // even though X and Y share a latent.
        let g = smoking_graph();
        let mut priors = BTreeMap::new();
        priors.insert(
            VariableId::new("U1"),
            vec![0.1, 0.15, 0.05, 0.2, 0.08, 0.12, 0.14, 0.16],
        );
        priors.insert(VariableId::new("U2"), vec![0.3, 0.25, 0.25, 0.2]);
        let scm = FullScm::from_canonical(&g, &priors).unwrap();
        let dist = scm.exact_joint().unwrap();
        for kind in [MetricKind::WPn, MetricKind::WPs] {
            let r = bounds(&g, &dist, kind, &"X".into(), &"Y".into(), &BoundsOptions::default())
                .unwrap();
            let truth = scm.ground_truth_metric(kind, &"X".into(), &"Y".into()).unwrap();
            assert!(
                r.interval.upper - r.interval.lower < 1e-8,
                "{kind}: [{}, {}]",
                r.interval.lower,
                r.interval.upper
            );
            assert!((truth - r.interval.lower).abs() < 1e-7);
        }
    }
}
