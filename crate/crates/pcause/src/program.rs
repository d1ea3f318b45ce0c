//! Translation of a counterfactual graph plus an input distribution into a
//! multilinear program: per-exogenous linear constraint polytopes and an
//! objective polynomial with a constant denominator.
//!
//! Constraints come from the component factorization of the factual
//! distribution: for a component C with exogenous U, every joint
//! configuration of C and its endogenous parents pins the mass of the
//! canonical states consistent with it to a product of observed
//! conditionals. The objective enumerates, world by world, the response
//! bits the query actually reads, so its terms are patterns over canonical
//! response bits rather than fully expanded states; expanding a pattern
//! recovers the familiar sum over canonical state indices.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::canonical::CanonicalSpace;
use crate::cfgraph::{CfGraph, CfNodeKind};
use crate::error::{Error, Result};
use crate::graph::VariableId;
use crate::table::{format_event, JointTable};

/// Requirements on a canonical distribution: every listed response bit must
/// take the paired value. Sorted by bit index, no duplicates.
pub type Pattern = Vec<(u32, bool)>;

/// One equality row: the total mass of states matching `fixes` equals
/// `rhs`. Rows sharing a `family` come from the same configuration of the
/// component's outside parents and partition the component's mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub fixes: Pattern,
    pub rhs: f64,
    pub family: u32,
}

/// The linear constraint system of one exogenous variable, over its
/// canonical state space. Normalization and nonnegativity are implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub space: CanonicalSpace,
    pub rows: Vec<ConstraintRow>,
}

impl Polytope {
    pub fn exogenous(&self) -> &VariableId {
        &self.space.exogenous
    }

    pub fn dimension(&self) -> u64 {
        self.space.cardinality()
    }

    /// Dense coefficient form of the rows, for the plain vertex solver.
    pub fn dense_rows(&self) -> Vec<(Vec<f64>, f64)> {
        let dim = self.space.cardinality() as usize;
        self.rows
            .iter()
            .map(|row| {
                let mut coeffs = vec![0.0; dim];
                for u in self.space.states_matching(&row.fixes) {
                    coeffs[u as usize] = 1.0;
                }
                (coeffs, row.rhs)
            })
            .collect()
    }

    /// Mass a distribution over canonical states assigns to a pattern.
    pub fn pattern_mass(&self, q: &[f64], pattern: &Pattern) -> f64 {
        self.space
            .states_matching(pattern)
            .map(|u| q[u as usize])
            .sum()
    }
}

/// One monomial of the objective: `coeff` times, for every referenced
/// polytope, the probability that its canonical distribution satisfies the
/// pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    /// (polytope index, pattern), sorted by polytope index. A polytope a
    /// term does not reference contributes a factor of one.
    pub factors: Vec<(usize, Pattern)>,
}

/// A complete bound-computation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub polytopes: Vec<Polytope>,
    pub terms: Vec<Term>,
    /// Probability of the conditioning event; 1 for unconditional queries.
    pub denominator: f64,
    /// Human-readable description of numerator and conditioning.
    pub query_desc: String,
}

impl Program {
    /// Builds constraints, objective and denominator for a (possibly
    /// reduced) counterfactual graph.
    pub fn build(cg: &CfGraph, dist: &JointTable) -> Result<Program> {
        let polytopes = build_constraints(cg, dist)?;
        let terms = build_objective(cg, &polytopes)?;
        let denominator = build_denominator(cg, dist)?;
        let query_desc = describe_query(cg);
        Ok(Program {
            polytopes,
            terms,
            denominator,
            query_desc,
        })
    }

    /// Degree of the objective polynomial: the largest number of distinct
    /// polytopes referenced by one term.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.factors.len()).max().unwrap_or(0)
    }

    /// Evaluates the raw numerator at one distribution per polytope.
    pub fn evaluate_numerator(&self, qs: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.factors
                        .iter()
                        .map(|(p, pat)| self.polytopes[*p].pattern_mass(&qs[*p], pat))
                        .product::<f64>()
            })
            .sum()
    }

    /// Expands pattern terms into fully indexed canonical-state monomials:
    /// coefficient times one state index per referenced polytope. Only
    /// sensible for small spaces.
    pub fn expanded_terms(&self) -> Vec<(f64, Vec<(usize, u64)>)> {
        let mut acc: BTreeMap<Vec<(usize, u64)>, f64> = BTreeMap::new();
        for term in &self.terms {
            let mut combos: Vec<Vec<(usize, u64)>> = vec![Vec::new()];
            for (p, pat) in &term.factors {
                let states: Vec<u64> = self.polytopes[*p].space.states_matching(pat).collect();
                let mut next = Vec::with_capacity(combos.len() * states.len());
                for c in &combos {
                    for &u in &states {
                        let mut c = c.clone();
                        c.push((*p, u));
                        next.push(c);
                    }
                }
                combos = next;
            }
            for c in combos {
                *acc.entry(c).or_insert(0.0) += term.coeff;
            }
        }
        acc.into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(k, c)| (c, k))
            .collect()
    }

    /// Stable text export: one polytope block per exogenous variable with
    /// rows as consistent-state index lists, then the objective terms.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "program query {} denominator {}",
            self.query_desc, self.denominator
        );
        for p in &self.polytopes {
            let _ = writeln!(
                out,
                "polytope {} dimension {} rows {}",
                p.exogenous(),
                p.dimension(),
                p.rows.len()
            );
            for row in &p.rows {
                let states: Vec<String> = p
                    .space
                    .states_matching(&row.fixes)
                    .map(|u| u.to_string())
                    .collect();
                let _ = writeln!(
                    out,
                    "  row family={} states=[{}] rhs={}",
                    row.family,
                    states.join(","),
                    row.rhs
                );
            }
        }
        let _ = writeln!(out, "objective terms {}", self.terms.len());
        for t in &self.terms {
            let factors: Vec<String> = t
                .factors
                .iter()
                .map(|(p, pat)| {
                    let bits: Vec<String> = pat
                        .iter()
                        .map(|(b, v)| format!("{b}={}", *v as u8))
                        .collect();
                    format!("{}{{{}}}", self.polytopes[*p].exogenous(), bits.join(","))
                })
                .collect();
            let _ = writeln!(out, "  term {} {}", t.coeff, factors.join(" "));
        }
        if self
            .polytopes
            .iter()
            .map(|p| p.dimension())
            .product::<u64>()
            <= 4096
        {
            let _ = writeln!(out, "objective expanded");
            for (c, mono) in self.expanded_terms() {
                let parts: Vec<String> = mono
                    .iter()
                    .map(|(p, u)| format!("{}={u}", self.polytopes[*p].exogenous()))
                    .collect();
                let _ = writeln!(out, "  {c} [{}]", parts.join(" "));
            }
        }
        out
    }
}

/// Builds one polytope per surviving exogenous variable.
///
/// Component structure and conditioning scopes come from the base graph, so
/// constraints stay valid even when some member copies were pruned from the
/// counterfactual graph. Fixed-root groups contribute no polytope.
pub fn build_constraints(cg: &CfGraph, dist: &JointTable) -> Result<Vec<Polytope>> {
    let base = cg.base();
    let surviving = cg.surviving_exogenous();
    let mut polytopes = Vec::new();
    for comp in base.c_components() {
        let Some(exo) = comp.exogenous else {
            continue;
        };
        if !surviving.contains(&exo) {
            continue;
        }
        let space = CanonicalSpace::new(base, &comp);
        let rank = base.topo_rank();
        let mut scope: Vec<usize> = base.component_scope(&comp).into_iter().collect();
        scope.sort_by_key(|&v| rank[v]);
        let outside: Vec<usize> = scope
            .iter()
            .copied()
            .filter(|v| !comp.members.contains(v))
            .collect();

        let mut rows = Vec::new();
        for assign in 0..(1u64 << scope.len()) {
            let value_of = |v: usize| -> bool {
                let pos = scope.iter().position(|&s| s == v).expect("in scope");
                (assign >> (scope.len() - 1 - pos)) & 1 == 1
            };
            // Family: configuration of the outside parents only.
            let mut family = 0u32;
            for &o in &outside {
                family = (family << 1) | value_of(o) as u32;
            }

            let mut fixes: Pattern = Vec::new();
            let mut rhs = 1.0;
            for &m in &comp.members {
                let layout = space.member(base.name(m)).expect("member in space");
                let mut cfg = 0u32;
                for p in &layout.parents {
                    let pi = base.node(p).expect("parent declared");
                    cfg = (cfg << 1) | value_of(pi) as u32;
                }
                let bit = space.bit_index(base.name(m), cfg)?;
                fixes.push((bit, value_of(m)));

                let event = [(base.name(m).clone(), value_of(m))];
                let given: Vec<(VariableId, bool)> = base
                    .component_predecessors(m, &comp)
                    .into_iter()
                    .map(|w| (base.name(w).clone(), value_of(w)))
                    .collect();
                rhs *= dist.conditional(&event, &given)?;
            }
            fixes.sort_unstable();
            rows.push(ConstraintRow { fixes, rhs, family });
        }
        polytopes.push(Polytope { space, rows });
    }
    Ok(polytopes)
}

/// Enumerates the response patterns that satisfy the query and the
/// conditioning, producing the objective terms.
pub fn build_objective(cg: &CfGraph, polytopes: &[Polytope]) -> Result<Vec<Term>> {
    let base = cg.base();
    // Map base endogenous index -> polytope index.
    let mut poly_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (pi, p) in polytopes.iter().enumerate() {
        for m in p.space.members() {
            let b = base.node(&m.variable).expect("member declared");
            poly_of.insert(b, pi);
        }
    }

    // Required values from query and conditioning.
    let mut required: BTreeMap<usize, bool> = BTreeMap::new();
    for &(n, v) in cg.query().iter().chain(cg.conditioning()) {
        if let Some(&prev) = required.get(&n) {
            if prev != v {
                return Ok(Vec::new());
            }
        }
        required.insert(n, v);
    }

    let topo = cg.topo_order();
    let mut values: Vec<Option<bool>> = vec![None; cg.node_count()];
    // Intervened nodes are constants.
    for (i, slot) in values.iter_mut().enumerate() {
        if let CfNodeKind::Endogenous {
            intervened: Some(v),
            ..
        } = cg.node_at(i).kind
        {
            if required.get(&i).is_some_and(|&r| r != v) {
                return Ok(Vec::new());
            }
            *slot = Some(v);
        }
    }

    // Joint assignments of all fixed-root groups, with their weights.
    let groups = cg.fixed_groups();
    let mut group_assignments: Vec<(Vec<(usize, bool)>, f64)> = vec![(Vec::new(), 1.0)];
    for fg in groups {
        let k = fg.members.len();
        let mut next = Vec::new();
        for cell in 0..(1usize << k) {
            let weight = fg.marginal.cells()[cell];
            if weight == 0.0 {
                continue;
            }
            let assignment: Vec<(usize, bool)> = fg
                .members
                .iter()
                .enumerate()
                .map(|(j, &m)| (m, (cell >> (k - 1 - j)) & 1 == 1))
                .collect();
            for (prev, w) in &group_assignments {
                let mut combined = prev.clone();
                combined.extend(assignment.iter().copied());
                next.push((combined, w * weight));
            }
        }
        group_assignments = next;
    }

    struct Ctx<'a> {
        cg: &'a CfGraph,
        polytopes: &'a [Polytope],
        poly_of: &'a BTreeMap<usize, usize>,
        required: &'a BTreeMap<usize, bool>,
        topo: &'a [usize],
        values: Vec<Option<bool>>,
        patterns: Vec<BTreeMap<u32, bool>>,
        weight: f64,
        acc: BTreeMap<Vec<(usize, Pattern)>, f64>,
    }

    impl Ctx<'_> {
        fn run(&mut self, pos: usize) -> Result<()> {
            let Some(&node) = self.topo.get(pos) else {
                let factors: Vec<(usize, Pattern)> = self
                    .patterns
                    .iter()
                    .enumerate()
                    .filter(|(_, pat)| !pat.is_empty())
                    .map(|(pi, pat)| (pi, pat.iter().map(|(&b, &v)| (b, v)).collect()))
                    .collect();
                *self.acc.entry(factors).or_insert(0.0) += self.weight;
                return Ok(());
            };
            let info = self.cg.node_at(node);
            if !matches!(info.kind, CfNodeKind::Endogenous { .. }) || self.values[node].is_some()
            {
                return self.run(pos + 1);
            }
            let pi = *self.poly_of.get(&info.base).expect("surviving component");
            let member = self.cg.base().name(info.base).clone();
            let parents = self.cg.mechanism_parents(node);
            let mut cfg = 0u32;
            for &p in &parents {
                cfg = (cfg << 1) | self.values[p].expect("parents set in topo order") as u32;
            }
            let bit = self.polytopes[pi].space.bit_index(&member, cfg)?;

            if let Some(&v) = self.patterns[pi].get(&bit) {
                // Another copy already chose this response bit.
                if self.required.get(&node).is_some_and(|&r| r != v) {
                    return Ok(());
                }
                self.values[node] = Some(v);
                self.run(pos + 1)?;
                self.values[node] = None;
                return Ok(());
            }
            for v in [false, true] {
                if self.required.get(&node).is_some_and(|&r| r != v) {
                    continue;
                }
                self.patterns[pi].insert(bit, v);
                self.values[node] = Some(v);
                self.run(pos + 1)?;
                self.values[node] = None;
                self.patterns[pi].remove(&bit);
            }
            Ok(())
        }
    }

    let mut acc: BTreeMap<Vec<(usize, Pattern)>, f64> = BTreeMap::new();
    for (assignment, weight) in group_assignments {
        let mut vals = values.clone();
        let mut consistent = true;
        for &(node, v) in &assignment {
            if required.get(&node).is_some_and(|&r| r != v) {
                consistent = false;
                break;
            }
            vals[node] = Some(v);
        }
        if !consistent {
            continue;
        }
        let mut ctx = Ctx {
            cg,
            polytopes,
            poly_of: &poly_of,
            required: &required,
            topo: &topo,
            values: vals,
            patterns: vec![BTreeMap::new(); polytopes.len()],
            weight,
            acc: std::mem::take(&mut acc),
        };
        ctx.run(0)?;
        acc = ctx.acc;
    }

    Ok(acc
        .into_iter()
        .filter(|(_, coeff)| *coeff != 0.0)
        .map(|(factors, coeff)| Term { coeff, factors })
        .collect())
}

/// Probability of the conditioning event under the input distribution;
/// one when the query is unconditional.
pub fn build_denominator(cg: &CfGraph, dist: &JointTable) -> Result<f64> {
    if cg.conditioning().is_empty() {
        return Ok(1.0);
    }
    let event: Vec<(VariableId, bool)> = cg
        .conditioning()
        .iter()
        .map(|&(n, v)| (cg.base().name(cg.node_at(n).base).clone(), v))
        .collect();
    let p = dist.probability(&event)?;
    if p <= 0.0 {
        return Err(Error::ZeroConditioningEvent(format_event(&event)));
    }
    Ok(p)
}

fn describe_query(cg: &CfGraph) -> String {
    let q: Vec<String> = cg
        .query()
        .iter()
        .map(|&(n, v)| format!("{}={}", cg.node_name(n), v as u8))
        .collect();
    let mut s = format!("P({}", q.join(","));
    if !cg.conditioning().is_empty() {
        let c: Vec<String> = cg
            .conditioning()
            .iter()
            .map(|&(n, v)| format!("{}={}", cg.node_name(n), v as u8))
            .collect();
        let _ = write!(s, " | {}", c.join(","));
    }
    s.push(')');
    s
}
