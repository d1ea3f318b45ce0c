//! Causal graph representation: endogenous/exogenous nodes, validation of
//! the quasi-Markovian assumptions, confounded components and the
//! topological machinery used by the factorization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Name of a variable. Unique within a graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(String);

impl VariableId {
    pub fn new(name: impl Into<String>) -> Self {
        VariableId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VariableId {
    fn from(s: &str) -> Self {
        VariableId(s.to_string())
    }
}

impl From<String> for VariableId {
    fn from(s: String) -> Self {
        VariableId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Endogenous,
    Exogenous,
}

/// A confounded component: a maximal set of endogenous nodes connected
/// through shared exogenous parents. In a quasi-Markovian graph each
/// component has at most one exogenous node; components made of nodes
/// without any declared exogenous parent report `None` until the graph is
/// completed with implicit noise variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Endogenous member indices, sorted by node name.
    pub members: Vec<usize>,
    /// The unique exogenous node of the component, when one exists.
    pub exogenous: Option<usize>,
}

/// Directed acyclic graph over endogenous and exogenous variables.
///
/// Node declaration order is preserved: it fixes the order of mechanism
/// parent configurations and therefore the canonical encoding of latent
/// states, so two graphs with the same edges but different declaration
/// orders are not interchangeable.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    names: Vec<VariableId>,
    kinds: Vec<NodeKind>,
    /// Marks exogenous noise nodes added by [`CausalGraph::completed`].
    implicit: Vec<bool>,
    index: BTreeMap<VariableId, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalGraph {
    /// Builds a graph from node declarations and edges. Rejects duplicate
    /// names, unknown edge endpoints and self loops; the acyclicity and
    /// quasi-Markovian checks live in [`CausalGraph::validate`].
    pub fn new<N, S>(nodes: N, edges: &[(S, S)]) -> Result<Self>
    where
        N: IntoIterator<Item = (S, NodeKind)>,
        S: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        let mut index = BTreeMap::new();
        for (name, kind) in nodes {
            let id = VariableId::new(name.as_ref());
            if index.insert(id.clone(), names.len()).is_some() {
                return Err(Error::DuplicateNode(id.0));
            }
            names.push(id);
            kinds.push(kind);
        }
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (from, to) in edges {
            let f = *index
                .get(&VariableId::new(from.as_ref()))
                .ok_or_else(|| Error::UnknownNode(from.as_ref().to_string()))?;
            let t = *index
                .get(&VariableId::new(to.as_ref()))
                .ok_or_else(|| Error::UnknownNode(to.as_ref().to_string()))?;
            if f == t {
                return Err(Error::SelfLoop(names[f].0.clone()));
            }
            if !parents[t].contains(&f) {
                parents[t].push(f);
                children[f].push(t);
            }
        }
        // Parent lists ordered by declaration index: this is the parent
        // configuration order used by mechanism tables.
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        Ok(CausalGraph {
            implicit: vec![false; n],
            names,
            kinds,
            index,
            parents,
            children,
        })
    }

    /// Checks the structural assumptions: acyclicity, exogenous nodes are
    /// roots, and every endogenous node has at most one exogenous parent.
    pub fn validate(&self) -> Result<()> {
        for v in 0..self.len() {
            match self.kinds[v] {
                NodeKind::Exogenous => {
                    if !self.parents[v].is_empty() {
                        return Err(Error::ExogenousHasParent(self.names[v].0.clone()));
                    }
                }
                NodeKind::Endogenous => {
                    let exo_parents = self.parents[v]
                        .iter()
                        .filter(|&&p| self.kinds[p] == NodeKind::Exogenous)
                        .count();
                    if exo_parents > 1 {
                        return Err(Error::MultipleExogenousParents(self.names[v].0.clone()));
                    }
                }
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(Error::CycleDetected(
                cycle.into_iter().map(|i| self.names[i].0.clone()).collect(),
            ));
        }
        Ok(())
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // Iterative DFS with a gray/black coloring; returns one cycle.
        let n = self.len();
        let mut color = vec![0u8; n]; // 0 white, 1 gray, 2 black
        let mut stack_trace: Vec<usize> = Vec::new();
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            stack_trace.push(start);
            while let Some(&mut (v, ref mut ci)) = stack.last_mut() {
                if *ci < self.children[v].len() {
                    let c = self.children[v][*ci];
                    *ci += 1;
                    match color[c] {
                        0 => {
                            color[c] = 1;
                            stack_trace.push(c);
                            stack.push((c, 0));
                        }
                        1 => {
                            let pos = stack_trace.iter().position(|&x| x == c).unwrap();
                            let mut cycle = stack_trace[pos..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack_trace.pop();
                    stack.pop();
                }
            }
        }
        None
    }

    /// Returns a copy of the graph where every endogenous node without an
    /// exogenous parent gains a fresh implicit noise parent. Mechanisms of
    /// such nodes would otherwise be deterministic-but-unknown; giving them
    /// a dedicated latent keeps every confounded component associated with
    /// exactly one exogenous variable. Idempotent.
    pub fn completed(&self) -> CausalGraph {
        let mut g = self.clone();
        for v in 0..self.len() {
            if self.kinds[v] != NodeKind::Endogenous || self.exogenous_parent(v).is_some() {
                continue;
            }
            let mut name = format!("u_{}", self.names[v].0);
            while g.index.contains_key(&VariableId::new(&name)) {
                name.push('_');
            }
            let u = g.names.len();
            let id = VariableId::new(&name);
            g.index.insert(id.clone(), u);
            g.names.push(id);
            g.kinds.push(NodeKind::Exogenous);
            g.implicit.push(true);
            g.parents.push(Vec::new());
            g.children.push(vec![v]);
            g.parents[v].push(u);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &VariableId {
        &self.names[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    /// True for noise nodes materialized by [`CausalGraph::completed`].
    pub fn is_implicit(&self, i: usize) -> bool {
        self.implicit[i]
    }

    pub fn node(&self, name: &VariableId) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn endogenous_node(&self, name: &VariableId) -> Result<usize> {
        match self.node(name) {
            Some(i) if self.kinds[i] == NodeKind::Endogenous => Ok(i),
            _ => Err(Error::BadVariable(name.0.clone())),
        }
    }

    pub fn parents_of(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children_of(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Endogenous parents in declaration order.
    pub fn endo_parents(&self, i: usize) -> Vec<usize> {
        self.parents[i]
            .iter()
            .copied()
            .filter(|&p| self.kinds[p] == NodeKind::Endogenous)
            .collect()
    }

    pub fn exogenous_parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
            .iter()
            .copied()
            .find(|&p| self.kinds[p] == NodeKind::Exogenous)
    }

    pub fn endogenous(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == NodeKind::Endogenous)
    }

    pub fn exogenous(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == NodeKind::Exogenous)
    }

    /// Exogenous nodes that were declared by the user (not implicit noise).
    pub fn declared_exogenous(&self) -> impl Iterator<Item = usize> + '_ {
        self.exogenous().filter(|&i| !self.implicit[i])
    }

    /// Ancestor closure of `seeds`, including the seeds themselves.
    pub fn ancestor_closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        self.closure(seeds, |v| &self.parents[v])
    }

    /// Descendant closure of `seeds`, including the seeds themselves.
    pub fn descendant_closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        self.closure(seeds, |v| &self.children[v])
    }

    fn closure<'a, F>(&'a self, seeds: impl IntoIterator<Item = usize>, next: F) -> BTreeSet<usize>
    where
        F: Fn(usize) -> &'a [usize],
    {
        let mut seen: BTreeSet<usize> = seeds.into_iter().collect();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &w in next(v) {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// One fixed topological order over all nodes (Kahn's algorithm with a
    /// lexicographic-by-name frontier). Every "topologically smaller"
    /// comparison in the crate refers to this order.
    pub fn topo_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut ready: BTreeSet<(&VariableId, usize)> = (0..n)
            .filter(|&v| indeg[v] == 0)
            .map(|v| (&self.names[v], v))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&(name, v)) = ready.iter().next() {
            ready.remove(&(name, v));
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((&self.names[c], c));
                }
            }
        }
        debug_assert_eq!(order.len(), n, "topo_order requires an acyclic graph");
        order
    }

    /// Positions of each node in [`CausalGraph::topo_order`].
    pub fn topo_rank(&self) -> Vec<usize> {
        let order = self.topo_order();
        let mut rank = vec![0usize; self.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        rank
    }

    /// Confounded components: connected components of the subgraph keeping
    /// only edges with an exogenous endpoint, restricted to endogenous
    /// nodes. Components are returned sorted by their smallest member name.
    pub fn c_components(&self) -> Vec<Component> {
        let n = self.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0usize;
        for v in 0..n {
            if comp[v] != usize::MAX {
                continue;
            }
            // Flood fill across exogenous-incident edges.
            let mut stack = vec![v];
            comp[v] = next;
            while let Some(w) = stack.pop() {
                let mut touch = |t: usize, stack: &mut Vec<usize>| {
                    if comp[t] == usize::MAX {
                        comp[t] = next;
                        stack.push(t);
                    }
                };
                if self.kinds[w] == NodeKind::Exogenous {
                    for &c in &self.children[w] {
                        touch(c, &mut stack);
                    }
                } else if let Some(u) = self.exogenous_parent(w) {
                    touch(u, &mut stack);
                }
            }
            next += 1;
        }
        let mut groups: BTreeMap<usize, Component> = BTreeMap::new();
        for (v, &group) in comp.iter().enumerate() {
            let entry = groups.entry(group).or_insert(Component {
                members: Vec::new(),
                exogenous: None,
            });
            match self.kinds[v] {
                NodeKind::Endogenous => entry.members.push(v),
                NodeKind::Exogenous => entry.exogenous = Some(v),
            }
        }
        let mut out: Vec<Component> = groups
            .into_values()
            .filter(|c| !c.members.is_empty())
            .collect();
        for c in &mut out {
            c.members.sort_by(|&a, &b| self.names[a].cmp(&self.names[b]));
        }
        out.sort_by(|a, b| self.names[a.members[0]].cmp(&self.names[b.members[0]]));
        out
    }

    /// The endogenous variables topologically smaller than `v` within the
    /// union of `component`'s members and their endogenous parents. These
    /// are the conditioning scopes of the component factorization.
    pub fn component_predecessors(&self, v: usize, component: &Component) -> BTreeSet<usize> {
        let rank = self.topo_rank();
        self.component_scope(component)
            .into_iter()
            .filter(|&w| w != v && rank[w] < rank[v])
            .collect()
    }

    /// Members of a component together with their endogenous parents.
    pub fn component_scope(&self, component: &Component) -> BTreeSet<usize> {
        let mut scope: BTreeSet<usize> = component.members.iter().copied().collect();
        for &m in &component.members {
            scope.extend(self.endo_parents(m));
        }
        scope
    }

    /// Render a set of node indices as sorted names, for error messages and
    /// reports.
    pub fn names_of(&self, set: impl IntoIterator<Item = usize>) -> Vec<String> {
        let mut v: Vec<String> = set.into_iter().map(|i| self.names[i].0.clone()).collect();
        v.sort();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoking_graph() -> CausalGraph {
        // X -> Z -> Y with U1 confounding {X, Y} and U2 -> Z.
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
        .unwrap()
    }

    fn service_chain_graph() -> CausalGraph {
        // Seven endogenous nodes, six exogenous; S is declared before X so
        // Z's parent configurations enumerate as (S, X).
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
        .unwrap()
    }

    fn names(g: &CausalGraph, set: &[usize]) -> Vec<String> {
        g.names_of(set.iter().copied())
    }

    #[test]
    fn smoking_graph_is_valid() {
        smoking_graph().validate().unwrap();
    }

    #[test]
    fn added_back_edge_is_a_cycle() {
        let g = CausalGraph::new(
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
                ("Y", "X"),
                ("U1", "X"),
                ("U1", "Y"),
                ("U2", "Z"),
            ],
        )
        .unwrap();
        match g.validate() {
            Err(Error::CycleDetected(cycle)) => {
                assert!(cycle.len() >= 4);
                assert_eq!(cycle.first(), cycle.last());
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn two_exogenous_parents_rejected() {
        let g = CausalGraph::new(
            [
                ("Z", NodeKind::Endogenous),
                ("U1", NodeKind::Exogenous),
                ("U2", NodeKind::Exogenous),
            ],
            &[("U1", "Z"), ("U2", "Z")],
        )
        .unwrap();
        assert_eq!(
            g.validate(),
            Err(Error::MultipleExogenousParents("Z".into()))
        );
    }

    #[test]
    fn exogenous_with_parent_rejected() {
        let g = CausalGraph::new(
            [("X", NodeKind::Endogenous), ("U", NodeKind::Exogenous)],
            &[("X", "U")],
        )
        .unwrap();
        assert_eq!(g.validate(), Err(Error::ExogenousHasParent("U".into())));
    }

    #[test]
    fn smoking_graph_components() {
        let g = smoking_graph();
        let comps = g.c_components();
        assert_eq!(comps.len(), 2);
        assert_eq!(names(&g, &comps[0].members), ["X", "Y"]);
        assert_eq!(g.name(comps[0].exogenous.unwrap()).as_str(), "U1");
        assert_eq!(names(&g, &comps[1].members), ["Z"]);
        assert_eq!(g.name(comps[1].exogenous.unwrap()).as_str(), "U2");
    }

    #[test]
    fn service_chain_components() {
        let g = service_chain_graph();
        let comps = g.c_components();
        let got: Vec<(Vec<String>, String)> = comps
            .iter()
            .map(|c| {
                (
                    names(&g, &c.members),
                    g.name(c.exogenous.unwrap()).to_string(),
                )
            })
            .collect();
        assert_eq!(
            got,
            vec![
                (vec!["R".into()], "U3".into()),
                (vec!["S".into()], "U5".into()),
                (vec!["T".into()], "U6".into()),
                (vec!["W".into()], "U4".into()),
                (vec!["X".into(), "Y".into()], "U1".into()),
                (vec!["Z".into()], "U2".into()),
            ]
        );
    }

    #[test]
    fn singleton_components_when_each_node_has_own_noise() {
        let g = CausalGraph::new(
            [
                ("A", NodeKind::Endogenous),
                ("B", NodeKind::Endogenous),
                ("UA", NodeKind::Exogenous),
                ("UB", NodeKind::Exogenous),
            ],
            &[("A", "B"), ("UA", "A"), ("UB", "B")],
        )
        .unwrap();
        let comps = g.c_components();
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.members.len() == 1));
    }

    #[test]
    fn component_partition_covers_endogenous_exactly_once() {
        let g = service_chain_graph();
        let comps = g.c_components();
        let mut seen = BTreeSet::new();
        for c in &comps {
            for &m in &c.members {
                assert!(seen.insert(m), "member listed twice");
            }
        }
        assert_eq!(seen, g.endogenous().collect::<BTreeSet<_>>());
    }

    #[test]
    fn predecessors_in_smoking_graph() {
        let g = smoking_graph();
        let comps = g.c_components();
        let xy = &comps[0];
        let y = g.node(&"Y".into()).unwrap();
        let x = g.node(&"X".into()).unwrap();
        assert_eq!(names(&g, &Vec::from_iter(g.component_predecessors(y, xy))), ["X", "Z"]);
        assert!(g.component_predecessors(x, xy).is_empty());
    }

    #[test]
    fn predecessors_in_service_chain() {
        let g = service_chain_graph();
        let comps = g.c_components();
        let z_comp = comps.iter().find(|c| names(&g, &c.members) == ["Z"]).unwrap();
        let z = g.node(&"Z".into()).unwrap();
        assert_eq!(
            names(&g, &Vec::from_iter(g.component_predecessors(z, z_comp))),
            ["S", "X"]
        );
    }

    #[test]
    fn completion_adds_noise_parents_once() {
        let g = CausalGraph::new(
            [
                ("A", NodeKind::Endogenous),
                ("B", NodeKind::Endogenous),
                ("C", NodeKind::Endogenous),
                ("H", NodeKind::Exogenous),
            ],
            &[("A", "B"), ("B", "C"), ("H", "B")],
        )
        .unwrap();
        let c = g.completed();
        assert_eq!(c.exogenous().count(), 3);
        assert_eq!(c.declared_exogenous().count(), 1);
        for v in c.endogenous() {
            assert!(c.exogenous_parent(v).is_some());
        }
        assert_eq!(c.completed(), c);
        // Every component now has an exogenous label.
        assert!(c.c_components().iter().all(|comp| comp.exogenous.is_some()));
    }

    #[test]
    fn implicit_noise_names_avoid_collisions() {
        let g = CausalGraph::new(
            [
                ("A", NodeKind::Endogenous),
                ("u_A", NodeKind::Endogenous),
            ],
            &[("A", "u_A")],
        )
        .unwrap();
        let c = g.completed();
        assert_eq!(c.exogenous().count(), 2);
        assert!(c.node(&"u_A_".into()).is_some());
    }
}
