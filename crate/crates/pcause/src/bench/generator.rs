//! Seeded random quasi-Markovian models for the soundness and containment
//! test suites. Sizes are capped so that exhaustive ground-truth
//! enumeration and whole-polytope vertex enumeration both stay cheap.

use std::collections::BTreeMap;

use rand::Rng;

use crate::canonical::CanonicalSpace;
use crate::graph::{CausalGraph, NodeKind, VariableId};

use super::scm::FullScm;

#[derive(Debug, Clone, Copy)]
pub struct GeneratorCaps {
    pub max_endogenous: usize,
    /// Confounder latents shared by two nodes (every node also has its own
    /// implicit noise).
    pub max_confounders: usize,
    pub max_endo_parents: usize,
    /// Largest admissible canonical cardinality per component.
    pub max_component_dim: u64,
    /// Largest admissible product of component cardinalities.
    pub max_total_dim: u64,
    pub edge_prob: f64,
}

impl Default for GeneratorCaps {
    fn default() -> Self {
        GeneratorCaps {
            max_endogenous: 6,
            max_confounders: 3,
            max_endo_parents: 2,
            max_component_dim: 32,
            max_total_dim: 65_536,
            edge_prob: 0.45,
        }
    }
}

/// Draws a random fully specified model together with a (cause, effect)
/// pair where the effect strictly descends from the cause. Retries until
/// the caps hold; the returned model has interior canonical priors, so its
/// observational joint has full support.
pub fn random_scm(rng: &mut impl Rng, caps: &GeneratorCaps) -> (FullScm, VariableId, VariableId) {
    loop {
        if let Some(out) = try_generate(rng, caps) {
            return out;
        }
    }
}

fn try_generate(
    rng: &mut impl Rng,
    caps: &GeneratorCaps,
) -> Option<(FullScm, VariableId, VariableId)> {
    let n = rng.random_range(2..=caps.max_endogenous);
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();

    // Random edges respecting a topological order and the parent cap.
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut indeg = vec![0usize; n];
    for j in 1..n {
        for i in 0..j {
            if indeg[j] < caps.max_endo_parents && rng.random_bool(caps.edge_prob) {
                edges.push((names[i].clone(), names[j].clone()));
                indeg[j] += 1;
            }
        }
    }

    // Confounders: latents covering two endogenous nodes each. Nodes not
    // covered keep their own implicit noise.
    let mut nodes: Vec<(String, NodeKind)> = names
        .iter()
        .map(|s| (s.clone(), NodeKind::Endogenous))
        .collect();
    let mut taken = vec![false; n];
    let n_conf = rng.random_range(0..=caps.max_confounders.min(n / 2));
    for c in 0..n_conf {
        let free: Vec<usize> = (0..n).filter(|&v| !taken[v]).collect();
        if free.len() < 2 {
            break;
        }
        let a = free[rng.random_range(0..free.len())];
        let b = loop {
            let b = free[rng.random_range(0..free.len())];
            if b != a {
                break b;
            }
        };
        taken[a] = true;
        taken[b] = true;
        let latent = format!("H{c}");
        nodes.push((latent.clone(), NodeKind::Exogenous));
        edges.push((latent.clone(), names[a].clone()));
        edges.push((latent, names[b].clone()));
    }

    let edge_refs: Vec<(&str, &str)> =
        edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let graph = CausalGraph::new(nodes.iter().map(|(s, k)| (s.as_str(), *k)), &edge_refs).ok()?;
    graph.validate().ok()?;
    let completed = graph.completed();

    // Enforce the dimension caps.
    let mut total: u64 = 1;
    let comps = completed.c_components();
    for comp in &comps {
        let dim = CanonicalSpace::new(&completed, comp).cardinality();
        if dim > caps.max_component_dim {
            return None;
        }
        total = total.checked_mul(dim)?;
        if total > caps.max_total_dim {
            return None;
        }
    }

    // Interior canonical priors.
    let mut priors: BTreeMap<VariableId, Vec<f64>> = BTreeMap::new();
    for comp in &comps {
        let exo = comp.exogenous.expect("completed");
        let dim = CanonicalSpace::new(&completed, comp).cardinality() as usize;
        let mut p: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = p.iter().sum();
        for x in p.iter_mut() {
            *x /= total;
        }
        priors.insert(completed.name(exo).clone(), p);
    }
    let scm = FullScm::from_canonical(&completed, &priors).ok()?;

    // A query pair with a strict descendant.
    let endo: Vec<usize> = completed.endogenous().collect();
    let mut pairs = Vec::new();
    for &x in &endo {
        for &y in &endo {
            if x != y && completed.descendant_closure([x]).contains(&y) {
                pairs.push((x, y));
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }
    let (x, y) = pairs[rng.random_range(0..pairs.len())];
    Some((scm, completed.name(x).clone(), completed.name(y).clone()))
}
