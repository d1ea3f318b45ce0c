//! Multi-world counterfactual graphs.
//!
//! A counterfactual graph holds the factual variables together with one
//! copy of the endogenous variables per intervention, all sharing the same
//! exogenous parents. Copies are created only for descendants of the
//! intervened variable: every other node would have identical mechanisms
//! and inputs in both worlds, so a single shared node stands for all of its
//! copies. Nodes that are not ancestors of the query or the conditioning
//! evidence are dropped, and a d-separation based reduction can replace
//! whole ancestries by observed marginals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::dsep::{d_separated, DirectedView};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeKind, VariableId};
use crate::table::JointTable;

/// Which world a node belongs to. `Shared` nodes stand for identical copies
/// across every world and keep their factual label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WorldTag {
    Shared,
    Factual,
    Do(u8),
}

/// One intervention world: `var` is held at `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldSpec {
    pub var: VariableId,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfNodeKind {
    /// Copy of an endogenous base variable in some world.
    Endogenous {
        world: WorldTag,
        /// Intervened nodes are held at this constant and have no parents.
        intervened: Option<bool>,
        /// Index into `CfGraph::fixed_groups` once a reduction pinned this
        /// node's marginal.
        fixed_group: Option<usize>,
    },
    /// A surviving exogenous variable (never copied).
    Exogenous,
    /// Latent bookkeeping node that keeps the members of a jointly
    /// distributed fixed-root group dependent under d-separation.
    GroupAnchor { group: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfNode {
    /// Base-graph node this copy refers to; `usize::MAX` for group anchors.
    pub base: usize,
    pub kind: CfNodeKind,
}

/// A set of former separator nodes turned into roots, jointly distributed
/// according to an observed marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedGroup {
    /// Member node indices, in the marginal's variable order.
    pub members: Vec<usize>,
    pub marginal: JointTable,
}

/// What one reduction pass did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReductionReport {
    pub removed_exogenous: Vec<String>,
    pub removed_endogenous: Vec<String>,
    /// Base names of the separator set whose marginal was installed.
    pub separator: Vec<String>,
    pub fixed_marginals_installed: Vec<String>,
}

impl ReductionReport {
    pub fn is_empty(&self) -> bool {
        self.separator.is_empty()
    }

    pub fn merge(&mut self, other: ReductionReport) {
        self.removed_exogenous.extend(other.removed_exogenous);
        self.removed_endogenous.extend(other.removed_endogenous);
        self.separator.extend(other.separator);
        self.fixed_marginals_installed
            .extend(other.fixed_marginals_installed);
    }

    pub fn summary(&self) -> String {
        if self.is_empty() {
            return "no reduction".to_string();
        }
        format!(
            "separator [{}]; removed exogenous [{}]; removed endogenous [{}]",
            self.separator.join(","),
            self.removed_exogenous.join(","),
            self.removed_endogenous.join(",")
        )
    }
}

/// Multi-world counterfactual graph with its query and evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct CfGraph {
    base: CausalGraph,
    worlds: Vec<WorldSpec>,
    nodes: Vec<CfNode>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    query: Vec<(usize, bool)>,
    conditioning: Vec<(usize, bool)>,
    fixed_groups: Vec<FixedGroup>,
}

impl DirectedView for CfGraph {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
}

/// Scratch structure used while assembling a graph.
struct Builder {
    base: CausalGraph,
    worlds: Vec<WorldSpec>,
    nodes: Vec<CfNode>,
    parents: Vec<Vec<usize>>,
    /// (base index, layer) -> node. Layer 0 is the factual/shared layer,
    /// 1 + w the intervention worlds.
    slot: BTreeMap<(usize, usize), usize>,
}

impl Builder {
    fn new(base: CausalGraph, worlds: Vec<WorldSpec>) -> Self {
        Builder {
            base,
            worlds,
            nodes: Vec::new(),
            parents: Vec::new(),
            slot: BTreeMap::new(),
        }
    }

    fn push(&mut self, base: usize, layer: usize, kind: CfNodeKind) -> usize {
        let id = self.nodes.len();
        self.nodes.push(CfNode { base, kind });
        self.parents.push(Vec::new());
        self.slot.insert((base, layer), id);
        id
    }

    /// Node standing for `base` as seen from `layer` (falls back to the
    /// shared/factual layer when no copy exists).
    fn resolve(&self, base: usize, layer: usize) -> usize {
        *self
            .slot
            .get(&(base, layer))
            .unwrap_or_else(|| &self.slot[&(base, 0)])
    }

    /// Adds edges: each non-intervened endogenous copy takes its base
    /// parents resolved within its own layer.
    fn wire(&mut self) {
        let slots: Vec<((usize, usize), usize)> =
            self.slot.iter().map(|(&k, &v)| (k, v)).collect();
        for ((base, layer), id) in slots {
            match self.nodes[id].kind {
                CfNodeKind::Endogenous { intervened, .. } => {
                    if intervened.is_some() {
                        continue;
                    }
                    for &p in self.base.parents_of(base).to_vec().iter() {
                        let pid = match self.base.kind(p) {
                            NodeKind::Endogenous => self.resolve(p, layer),
                            NodeKind::Exogenous => self.resolve(p, 0),
                        };
                        self.parents[id].push(pid);
                    }
                }
                CfNodeKind::Exogenous | CfNodeKind::GroupAnchor { .. } => {}
            }
        }
    }

    fn finish(self, query: Vec<(usize, bool)>, conditioning: Vec<(usize, bool)>) -> CfGraph {
        // Keep only ancestors of the query and the conditioning evidence.
        let anchors: Vec<usize> = query
            .iter()
            .chain(conditioning.iter())
            .map(|&(n, _)| n)
            .collect();
        let mut keep: BTreeSet<usize> = anchors.iter().copied().collect();
        let mut stack: Vec<usize> = keep.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if keep.insert(p) {
                    stack.push(p);
                }
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::with_capacity(keep.len());
        let mut parents = Vec::with_capacity(keep.len());
        for &old in &keep {
            remap[old] = nodes.len();
            nodes.push(self.nodes[old].clone());
            parents.push(Vec::new());
        }
        for &old in &keep {
            parents[remap[old]] = self.parents[old]
                .iter()
                .filter(|&&p| remap[p] != usize::MAX)
                .map(|&p| remap[p])
                .collect();
        }
        let mut children = vec![Vec::new(); nodes.len()];
        for (v, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(v);
            }
        }
        for list in children.iter_mut() {
            list.sort_unstable();
        }
        CfGraph {
            base: self.base,
            worlds: self.worlds,
            nodes,
            parents,
            children,
            query: query.into_iter().map(|(n, v)| (remap[n], v)).collect(),
            conditioning: conditioning
                .into_iter()
                .map(|(n, v)| (remap[n], v))
                .collect(),
            fixed_groups: Vec::new(),
        }
    }
}

fn check_pair(g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<(usize, usize)> {
    let xi = g.endogenous_node(x)?;
    let yi = g.endogenous_node(y)?;
    let desc = g.descendant_closure([xi]);
    if xi == yi || !desc.contains(&yi) {
        return Err(Error::TargetNotDescendant {
            cause: x.to_string(),
            effect: y.to_string(),
        });
    }
    Ok((xi, yi))
}

/// Builds the two-world graph for a counterfactual query with factual
/// evidence: a factual world plus `do(x = x_val)`, querying
/// `y_{x=x_val} = x_val` conditional on `x = 1-x_val, y = 1-x_val`.
///
/// Necessity uses `x_val = false`, sufficiency `x_val = true`.
pub fn build_pn_ps_graph(
    g: &CausalGraph,
    x: &VariableId,
    x_val: bool,
    y: &VariableId,
) -> Result<CfGraph> {
    g.validate()?;
    let g = g.completed();
    let (xi, yi) = check_pair(&g, x, y)?;
    let desc = g.descendant_closure([xi]);

    let mut b = Builder::new(
        g.clone(),
        vec![WorldSpec {
            var: g.name(xi).clone(),
            value: x_val,
        }],
    );
    for v in g.endogenous() {
        let world = if desc.contains(&v) {
            WorldTag::Factual
        } else {
            WorldTag::Shared
        };
        b.push(
            v,
            0,
            CfNodeKind::Endogenous {
                world,
                intervened: None,
                fixed_group: None,
            },
        );
    }
    for v in g.endogenous().collect::<Vec<_>>() {
        if desc.contains(&v) {
            b.push(
                v,
                1,
                CfNodeKind::Endogenous {
                    world: WorldTag::Do(0),
                    intervened: (v == xi).then_some(x_val),
                    fixed_group: None,
                },
            );
        }
    }
    for u in g.exogenous().collect::<Vec<_>>() {
        b.push(u, 0, CfNodeKind::Exogenous);
    }
    b.wire();

    let query = vec![(b.resolve(yi, 1), x_val)];
    let conditioning = vec![(b.resolve(xi, 0), !x_val), (b.resolve(yi, 0), !x_val)];
    Ok(b.finish(query, conditioning))
}

/// Builds the two-intervention graph for the joint counterfactual
/// `y_{x=1} = 1, y_{x=0} = 0`. No factual world, no conditioning.
pub fn build_pns_graph(g: &CausalGraph, x: &VariableId, y: &VariableId) -> Result<CfGraph> {
    g.validate()?;
    let g = g.completed();
    let (xi, yi) = check_pair(&g, x, y)?;
    let desc = g.descendant_closure([xi]);

    let mut b = Builder::new(
        g.clone(),
        vec![
            WorldSpec {
                var: g.name(xi).clone(),
                value: true,
            },
            WorldSpec {
                var: g.name(xi).clone(),
                value: false,
            },
        ],
    );
    for v in g.endogenous() {
        if !desc.contains(&v) {
            b.push(
                v,
                0,
                CfNodeKind::Endogenous {
                    world: WorldTag::Shared,
                    intervened: None,
                    fixed_group: None,
                },
            );
        }
    }
    for w in 0..2usize {
        for v in g.endogenous().collect::<Vec<_>>() {
            if desc.contains(&v) {
                b.push(
                    v,
                    1 + w,
                    CfNodeKind::Endogenous {
                        world: WorldTag::Do(w as u8),
                        intervened: (v == xi).then_some(w == 0),
                        fixed_group: None,
                    },
                );
            }
        }
    }
    for u in g.exogenous().collect::<Vec<_>>() {
        b.push(u, 0, CfNodeKind::Exogenous);
    }
    b.wire();

    let query = vec![(b.resolve(yi, 1), true), (b.resolve(yi, 2), false)];
    Ok(b.finish(query, Vec::new()))
}

/// Builds the single-world graph of `do(x = x_val)` with query `y = x_val`,
/// used by the weak (interventional) metrics.
pub fn build_interventional_graph(
    g: &CausalGraph,
    x: &VariableId,
    x_val: bool,
    y: &VariableId,
) -> Result<CfGraph> {
    g.validate()?;
    let g = g.completed();
    let (xi, yi) = check_pair(&g, x, y)?;
    let desc = g.descendant_closure([xi]);

    let mut b = Builder::new(
        g.clone(),
        vec![WorldSpec {
            var: g.name(xi).clone(),
            value: x_val,
        }],
    );
    for v in g.endogenous() {
        if !desc.contains(&v) {
            b.push(
                v,
                0,
                CfNodeKind::Endogenous {
                    world: WorldTag::Shared,
                    intervened: None,
                    fixed_group: None,
                },
            );
        }
    }
    for v in g.endogenous().collect::<Vec<_>>() {
        if desc.contains(&v) {
            b.push(
                v,
                1,
                CfNodeKind::Endogenous {
                    world: WorldTag::Do(0),
                    intervened: (v == xi).then_some(x_val),
                    fixed_group: None,
                },
            );
        }
    }
    for u in g.exogenous().collect::<Vec<_>>() {
        b.push(u, 0, CfNodeKind::Exogenous);
    }
    b.wire();

    let query = vec![(b.resolve(yi, 1), x_val)];
    Ok(b.finish(query, Vec::new()))
}

impl CfGraph {
    pub fn base(&self) -> &CausalGraph {
        &self.base
    }

    pub fn worlds(&self) -> &[WorldSpec] {
        &self.worlds
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_at(&self, i: usize) -> &CfNode {
        &self.nodes[i]
    }

    pub fn query(&self) -> &[(usize, bool)] {
        &self.query
    }

    pub fn conditioning(&self) -> &[(usize, bool)] {
        &self.conditioning
    }

    pub fn fixed_groups(&self) -> &[FixedGroup] {
        &self.fixed_groups
    }

    /// Surviving exogenous nodes as base-graph indices, sorted by name.
    pub fn surviving_exogenous(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, CfNodeKind::Exogenous))
            .map(|n| n.base)
            .collect();
        out.sort_by(|&a, &b| self.base.name(a).cmp(self.base.name(b)));
        out
    }

    /// Display name of a node: the base name, decorated with its
    /// intervention world when it is a world-specific copy.
    pub fn node_name(&self, i: usize) -> String {
        let n = &self.nodes[i];
        match &n.kind {
            CfNodeKind::GroupAnchor { group } => format!("<group{group}>"),
            CfNodeKind::Exogenous => self.base.name(n.base).to_string(),
            CfNodeKind::Endogenous { world, .. } => match world {
                WorldTag::Shared | WorldTag::Factual => self.base.name(n.base).to_string(),
                WorldTag::Do(w) => {
                    let spec = &self.worlds[*w as usize];
                    format!(
                        "{}@{}={}",
                        self.base.name(n.base),
                        spec.var,
                        spec.value as u8
                    )
                }
            },
        }
    }

    /// Node index by display name, for tests and tooling.
    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| self.node_name(i) == name)
    }

    /// Node index of `base` as seen from intervention world `w`
    /// (`None` = factual).
    pub fn resolve(&self, base: usize, w: Option<u8>) -> Option<usize> {
        let mut shared = None;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.base != base || n.base == usize::MAX {
                continue;
            }
            match &n.kind {
                CfNodeKind::Endogenous { world, .. } => match (world, w) {
                    (WorldTag::Do(a), Some(b)) if *a == b => return Some(i),
                    (WorldTag::Factual, None) => return Some(i),
                    (WorldTag::Shared, _) => shared = Some(i),
                    _ => {}
                },
                CfNodeKind::Exogenous => return Some(i),
                CfNodeKind::GroupAnchor { .. } => {}
            }
        }
        shared
    }

    /// Endogenous parents of node `i` in base declaration order, resolved
    /// within `i`'s world: exactly the inputs of its mechanism.
    pub fn mechanism_parents(&self, i: usize) -> Vec<usize> {
        let n = &self.nodes[i];
        let world = match &n.kind {
            CfNodeKind::Endogenous { world, .. } => *world,
            _ => return Vec::new(),
        };
        let w = match world {
            WorldTag::Do(w) => Some(w),
            _ => None,
        };
        self.base
            .endo_parents(n.base)
            .into_iter()
            .map(|p| self.resolve(p, w).expect("parent materialized"))
            .collect()
    }

    /// One topological order of the node indices.
    pub fn topo_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut order: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut qi = 0;
        while qi < order.len() {
            let v = order[qi];
            qi += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    order.push(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n);
        order
    }

    /// Applies one reduction pass: finds a separator set of pre-treatment
    /// endogenous nodes, removes all of their strict ancestors and pins the
    /// separator's joint marginal from the input distribution. Returns the
    /// unchanged graph with an empty report when no valid separator exists.
    pub fn reduce(&self, dist: &JointTable) -> Result<(CfGraph, ReductionReport)> {
        // Anchor set: query, conditioning and intervened nodes. Separator
        // candidates must be pre-treatment, hence no descendant of any
        // anchor.
        let mut anchors: BTreeSet<usize> = self
            .query
            .iter()
            .chain(self.conditioning.iter())
            .map(|&(n, _)| n)
            .collect();
        for (i, n) in self.nodes.iter().enumerate() {
            if let CfNodeKind::Endogenous {
                intervened: Some(_),
                ..
            } = n.kind
            {
                anchors.insert(i);
            }
        }
        let anchor_desc = self.descendants(&anchors);

        let mut candidates: BTreeSet<usize> = (0..self.nodes.len())
            .filter(|&i| {
                matches!(
                    self.nodes[i].kind,
                    CfNodeKind::Endogenous {
                        fixed_group: None,
                        intervened: None,
                        ..
                    }
                ) && !anchor_desc.contains(&i)
                    && !self.parents[i].is_empty()
            })
            .collect();
        // Candidates lying on another candidate's ancestry are better
        // removed than pinned, so only the most downstream ones stay.
        let in_candidate_ancestry: BTreeSet<usize> = candidates
            .iter()
            .flat_map(|&z| {
                let mut a = self.ancestors(&BTreeSet::from([z]));
                a.remove(&z);
                a
            })
            .collect();
        candidates.retain(|z| !in_candidate_ancestry.contains(z));

        let targets: BTreeSet<usize> = self.query.iter().map(|&(n, _)| n).collect();
        let cond: BTreeSet<usize> = self.conditioning.iter().map(|&(n, _)| n).collect();

        let mut sep = candidates;
        loop {
            if sep.is_empty() {
                return Ok((self.clone(), ReductionReport::default()));
            }
            let mut upstream = self.ancestors(&sep);
            upstream.retain(|v| !sep.contains(v));
            if upstream.is_empty() {
                return Ok((self.clone(), ReductionReport::default()));
            }
            let observed: BTreeSet<usize> = sep.union(&cond).copied().collect();
            // The surgery cuts the removed set loose and pins the
            // separator's marginal, so it is only valid when removed nodes
            // influence nothing outside the removed set and the separator:
            // a removed node with a surviving child would lose part of its
            // mechanism's reach.
            let escapes = |w: usize| -> bool {
                self.children[w]
                    .iter()
                    .any(|c| !upstream.contains(c) && !sep.contains(c))
            };
            let leaking: Vec<usize> = upstream.iter().copied().filter(|&w| escapes(w)).collect();
            if leaking.is_empty() && d_separated(self, &upstream, &targets, &observed) {
                return self.apply_reduction(&sep, &upstream, dist);
            }
            // Drop members whose own ancestry leaks past the separator or
            // blocks the separation.
            let mut bad = Vec::new();
            for &z in &sep {
                let mut anc = self.ancestors(&BTreeSet::from([z]));
                anc.remove(&z);
                if anc.iter().any(|w| leaking.contains(w)) {
                    bad.push(z);
                    continue;
                }
                anc.retain(|v| !sep.contains(v));
                if !d_separated(self, &anc, &targets, &observed) {
                    bad.push(z);
                }
            }
            if bad.is_empty() {
                return Ok((self.clone(), ReductionReport::default()));
            }
            for z in bad {
                sep.remove(&z);
            }
        }
    }

    /// Runs [`CfGraph::reduce`] until it reports no further change.
    pub fn reduce_to_fixpoint(&self, dist: &JointTable) -> Result<(CfGraph, ReductionReport)> {
        let mut graph = self.clone();
        let mut total = ReductionReport::default();
        loop {
            let (next, report) = graph.reduce(dist)?;
            if report.is_empty() {
                return Ok((graph, total));
            }
            total.merge(report);
            graph = next;
        }
    }

    fn apply_reduction(
        &self,
        sep: &BTreeSet<usize>,
        upstream: &BTreeSet<usize>,
        dist: &JointTable,
    ) -> Result<(CfGraph, ReductionReport)> {
        debug_assert!(self
            .query
            .iter()
            .chain(self.conditioning.iter())
            .all(|(n, _)| !upstream.contains(n) && !sep.contains(n)));

        let mut g = self.clone();
        // Joint marginal over the separator's base variables, ordered by
        // name for a stable layout.
        let mut members: Vec<usize> = sep.iter().copied().collect();
        members.sort_by(|&a, &b| {
            self.base
                .name(self.nodes[a].base)
                .cmp(self.base.name(self.nodes[b].base))
        });
        let vars: Vec<VariableId> = members
            .iter()
            .map(|&m| self.base.name(self.nodes[m].base).clone())
            .collect();
        let marginal = dist.marginal(&vars)?;
        let group_id = g.fixed_groups.len();
        for &m in &members {
            for &p in &g.parents[m].clone() {
                g.children[p].retain(|&c| c != m);
            }
            g.parents[m].clear();
            if let CfNodeKind::Endogenous { fixed_group, .. } = &mut g.nodes[m].kind {
                *fixed_group = Some(group_id);
            }
        }
        g.fixed_groups.push(FixedGroup {
            members: members.clone(),
            marginal,
        });
        if members.len() > 1 {
            let anchor = g.nodes.len();
            g.nodes.push(CfNode {
                base: usize::MAX,
                kind: CfNodeKind::GroupAnchor { group: group_id },
            });
            g.parents.push(Vec::new());
            g.children.push(Vec::new());
            for &m in &members {
                g.parents[m].push(anchor);
                g.children[anchor].push(m);
            }
        }

        let mut report = ReductionReport {
            separator: vars.iter().map(|v| v.to_string()).collect(),
            fixed_marginals_installed: vars.iter().map(|v| v.to_string()).collect(),
            ..Default::default()
        };
        for &v in upstream {
            match &self.nodes[v].kind {
                CfNodeKind::Exogenous => report
                    .removed_exogenous
                    .push(self.base.name(self.nodes[v].base).to_string()),
                CfNodeKind::Endogenous { .. } => {
                    report.removed_endogenous.push(self.node_name(v))
                }
                CfNodeKind::GroupAnchor { .. } => {}
            }
        }
        report.removed_exogenous.sort();
        report.removed_endogenous.sort();

        let g = g.drop_nodes(upstream)?;
        Ok((g, report))
    }

    /// Rebuilds the graph without `drop` nodes, fixing every index table.
    fn drop_nodes(&self, drop: &BTreeSet<usize>) -> Result<CfGraph> {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !drop.contains(&i) {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, ps) in self.parents.iter().enumerate() {
            if remap[i] == usize::MAX {
                continue;
            }
            for &p in ps {
                if remap[p] != usize::MAX {
                    parents[remap[i]].push(remap[p]);
                    children[remap[p]].push(remap[i]);
                }
            }
        }
        for list in children.iter_mut() {
            list.sort_unstable();
        }

        // Rebuild fixed groups, marginalizing out removed members and
        // dropping empty groups.
        let mut fixed_groups = Vec::new();
        let mut group_remap = vec![None; self.fixed_groups.len()];
        for (gi, fg) in self.fixed_groups.iter().enumerate() {
            let keep: Vec<usize> = fg
                .members
                .iter()
                .copied()
                .filter(|m| remap[*m] != usize::MAX)
                .collect();
            if keep.is_empty() {
                continue;
            }
            let marginal = if keep.len() == fg.members.len() {
                fg.marginal.clone()
            } else {
                let vars: Vec<VariableId> = keep
                    .iter()
                    .map(|&m| self.base.name(self.nodes[m].base).clone())
                    .collect();
                fg.marginal.marginal(&vars)?
            };
            group_remap[gi] = Some(fixed_groups.len());
            fixed_groups.push(FixedGroup {
                members: keep.iter().map(|&m| remap[m]).collect(),
                marginal,
            });
        }
        for n in nodes.iter_mut() {
            match &mut n.kind {
                CfNodeKind::Endogenous {
                    fixed_group: Some(g),
                    ..
                } => *g = group_remap[*g].expect("group with surviving member"),
                CfNodeKind::GroupAnchor { group } => {
                    *group = group_remap[*group].expect("anchor of surviving group")
                }
                _ => {}
            }
        }

        Ok(CfGraph {
            base: self.base.clone(),
            worlds: self.worlds.clone(),
            nodes,
            parents,
            children,
            query: self.query.iter().map(|&(n, v)| (remap[n], v)).collect(),
            conditioning: self
                .conditioning
                .iter()
                .map(|&(n, v)| (remap[n], v))
                .collect(),
            fixed_groups,
        })
    }

    pub fn ancestors(&self, seeds: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = seeds.clone();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    pub fn descendants(&self, seeds: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = seeds.clone();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// Stable text export: one node per line with world tag, one edge per
    /// line, then the query, conditioning and fixed-marginal sections.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| self.node_name(i));
        for &i in &order {
            let n = &self.nodes[i];
            let tag = match &n.kind {
                CfNodeKind::Exogenous => "exogenous".to_string(),
                CfNodeKind::GroupAnchor { .. } => "group-anchor".to_string(),
                CfNodeKind::Endogenous {
                    world,
                    intervened,
                    fixed_group,
                } => {
                    let mut t = match world {
                        WorldTag::Shared => "shared".to_string(),
                        WorldTag::Factual => "factual".to_string(),
                        WorldTag::Do(w) => {
                            let spec = &self.worlds[*w as usize];
                            format!("do({}={})", spec.var, spec.value as u8)
                        }
                    };
                    if let Some(v) = intervened {
                        let _ = write!(t, " intervened={}", *v as u8);
                    }
                    if fixed_group.is_some() {
                        t.push_str(" fixed");
                    }
                    t
                }
            };
            let _ = writeln!(out, "node {} {}", self.node_name(i), tag);
        }
        let mut edges: Vec<(String, String)> = Vec::new();
        for (v, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                edges.push((self.node_name(p), self.node_name(v)));
            }
        }
        edges.sort();
        for (p, c) in edges {
            let _ = writeln!(out, "edge {p} {c}");
        }
        for (n, v) in &self.query {
            let _ = writeln!(out, "query {} {}", self.node_name(*n), *v as u8);
        }
        for (n, v) in &self.conditioning {
            let _ = writeln!(out, "given {} {}", self.node_name(*n), *v as u8);
        }
        for fg in &self.fixed_groups {
            let names: Vec<String> = fg.members.iter().map(|&m| self.node_name(m)).collect();
            let cells: Vec<String> = fg.marginal.cells().iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "fixed [{}] [{}]", names.join(","), cells.join(","));
        }
        out
    }
}
