//! Decomposition of canonical polytopes into independent low-dimensional
//! factors.
//!
//! Over one polytope, both the constraint rows and the objective patterns
//! touch small sets of response bits. Bits never referenced together are
//! independent coordinates: any combination of feasible group joints
//! extends to a feasible joint over all bits (couple the groups
//! independently), and every projection of a feasible joint is feasible
//! for its group, because each row constrains bits of a single group. The
//! optimization may therefore treat each group as its own polytope.
//!
//! A group that is still too large for basis enumeration is split on a bit
//! fixed by every one of its rows: conditioning on that bit decomposes the
//! joint into one independent block per value, whose masses the row
//! families pin. Splitting recurses until every piece is enumerable.

use std::collections::{BTreeMap, BTreeSet};

use super::linalg::{binomial, independent_rows};
use super::vertex::{enumerate, EnumOptions};
use crate::error::{Error, Result};
use crate::program::{Pattern, Polytope, Program};

/// Mass-consistency tolerance for block splits.
const MASS_TOL: f64 = 1e-6;

/// One axis of the factored optimization: a joint conditional distribution
/// over a few response bits of one polytope.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub poly: usize,
    /// Bits of this leaf, ascending; local states index them MSB-first.
    pub bits: Vec<u32>,
    /// Vertex distributions over the 2^bits local states.
    pub vertices: Vec<Vec<f64>>,
    /// Split decisions this leaf lives under.
    pub path: Pattern,
}

impl Leaf {
    pub fn local_state(&self, full_bit_value: impl Fn(u32) -> bool) -> usize {
        let mut s = 0usize;
        for &b in &self.bits {
            s = (s << 1) | full_bit_value(b) as usize;
        }
        s
    }

    /// Local states consistent with a local pattern.
    pub fn states_matching(&self, pat: &Pattern) -> Vec<usize> {
        let k = self.bits.len();
        let mut mask = 0usize;
        let mut want = 0usize;
        for &(bit, val) in pat {
            let pos = self.bits.iter().position(|&b| b == bit).expect("leaf bit");
            let m = 1usize << (k - 1 - pos);
            mask |= m;
            if val {
                want |= m;
            }
        }
        (0..(1usize << k)).filter(|s| s & mask == want).collect()
    }
}

/// Internal tree describing how one polytope was cut apart.
#[derive(Debug, Clone)]
pub enum Outcome {
    Leaf(usize),
    Split {
        bit: u32,
        /// Conditional mass of each value given the path so far.
        mass: [f64; 2],
        /// One subtree per value; zero-mass blocks have none.
        children: [Option<Vec<Outcome>>; 2],
    },
}

struct Row {
    fixes: Pattern,
    rhs: f64,
    family: u32,
}

pub struct Decomposition {
    /// Per polytope, the top-level outcomes.
    pub trees: Vec<Vec<Outcome>>,
    pub leaves: Vec<Leaf>,
}

/// Cuts every polytope of the program into leaves. `naive` keeps each
/// polytope whole as a single leaf over all of its bits.
pub fn decompose(prog: &Program, naive: bool, opts: &EnumOptions) -> Result<Decomposition> {
    let mut leaves = Vec::new();
    let mut trees = Vec::new();
    for (pi, poly) in prog.polytopes.iter().enumerate() {
        // Bit sets touched by objective terms of this polytope.
        let term_edges: Vec<Vec<u32>> = prog
            .terms
            .iter()
            .flat_map(|t| t.factors.iter())
            .filter(|(p, _)| *p == pi)
            .map(|(_, pat)| pat.iter().map(|&(b, _)| b).collect())
            .collect();
        let rows: Vec<Row> = poly
            .rows
            .iter()
            .map(|r| Row {
                fixes: r.fixes.clone(),
                rhs: r.rhs,
                family: r.family,
            })
            .collect();
        let all_bits: Vec<u32> = (0..poly.space.bit_count()).collect();
        let tree = if naive {
            vec![make_leaf(
                pi,
                all_bits,
                &rows,
                Pattern::new(),
                1.0,
                poly,
                &mut leaves,
                opts,
            )?]
        } else {
            subdivide(
                pi,
                all_bits,
                rows,
                &term_edges,
                Pattern::new(),
                1.0,
                poly,
                &mut leaves,
                opts,
            )?
        };
        trees.push(tree);
    }
    Ok(Decomposition { trees, leaves })
}

/// Splits a subproblem's bits into co-occurrence groups, then builds a leaf
/// or a block split per group.
#[allow(clippy::too_many_arguments)]
fn subdivide(
    pi: usize,
    bits: Vec<u32>,
    rows: Vec<Row>,
    term_edges: &[Vec<u32>],
    path: Pattern,
    mass: f64,
    poly: &Polytope,
    leaves: &mut Vec<Leaf>,
    opts: &EnumOptions,
) -> Result<Vec<Outcome>> {
    // Union-find over the subproblem's bits.
    let mut parent: BTreeMap<u32, u32> = bits.iter().map(|&b| (b, b)).collect();
    fn find(parent: &mut BTreeMap<u32, u32>, mut x: u32) -> u32 {
        while parent[&x] != x {
            let up = parent[&parent[&x]];
            parent.insert(x, up);
            x = up;
        }
        x
    }
    let union = |parent: &mut BTreeMap<u32, u32>, a: u32, b: u32| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    };
    let bit_set: BTreeSet<u32> = bits.iter().copied().collect();
    for row in &rows {
        let rb: Vec<u32> = row
            .fixes
            .iter()
            .map(|&(b, _)| b)
            .filter(|b| bit_set.contains(b))
            .collect();
        for w in rb.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    for edge in term_edges {
        let eb: Vec<u32> = edge
            .iter()
            .copied()
            .filter(|b| bit_set.contains(b))
            .collect();
        for w in eb.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &b in &bits {
        groups.entry(find(&mut parent, b)).or_default().push(b);
    }

    let mut outcomes = Vec::new();
    for (_, gbits) in groups {
        let gset: BTreeSet<u32> = gbits.iter().copied().collect();
        let grows: Vec<Row> = rows
            .iter()
            .filter(|r| r.fixes.iter().any(|(b, _)| gset.contains(b)))
            .map(|r| Row {
                fixes: r
                    .fixes
                    .iter()
                    .copied()
                    .filter(|(b, _)| gset.contains(b))
                    .collect(),
                rhs: r.rhs,
                family: r.family,
            })
            .collect();
        outcomes.push(build_group(
            pi, gbits, grows, term_edges, &path, mass, poly, leaves, opts,
        )?);
    }
    Ok(outcomes)
}

/// Builds one outcome for a connected group: a leaf when basis enumeration
/// is affordable, otherwise a block split on a bit every row fixes.
#[allow(clippy::too_many_arguments)]
fn build_group(
    pi: usize,
    bits: Vec<u32>,
    rows: Vec<Row>,
    term_edges: &[Vec<u32>],
    path: &Pattern,
    mass: f64,
    poly: &Polytope,
    leaves: &mut Vec<Leaf>,
    opts: &EnumOptions,
) -> Result<Outcome> {
    let dim = 1u64 << bits.len();
    if dim <= 64 {
        let est = estimate_bases(&bits, &rows, mass, opts);
        if est <= opts.basis_budget {
            return make_leaf(pi, bits, &rows, path.clone(), mass, poly, leaves, opts);
        }
    }
    // Split bit: fixed by every row of the group.
    let split = bits.iter().copied().find(|&b| {
        !rows.is_empty()
            && rows
                .iter()
                .all(|r| r.fixes.iter().any(|&(rb, _)| rb == b))
    });
    let Some(bit) = split else {
        return Err(Error::DegreeTooHigh {
            needed: binomial(dim, (rows.len() + 1).min(dim as usize) as u64),
            budget: opts.basis_budget,
        });
    };

    // Block masses from complete row families; every family must agree.
    let mut family_mass: BTreeMap<u32, [f64; 2]> = BTreeMap::new();
    for r in &rows {
        let v = r.fixes.iter().find(|&&(b, _)| b == bit).expect("fixes bit").1;
        let e = family_mass.entry(r.family).or_insert([0.0, 0.0]);
        e[v as usize] += r.rhs;
    }
    let mut masses = [0.0f64; 2];
    let mut first = true;
    for (_, fm) in family_mass {
        if first {
            masses = fm;
            first = false;
        } else if (fm[0] - masses[0]).abs() > MASS_TOL || (fm[1] - masses[1]).abs() > MASS_TOL {
            return Err(Error::InfeasiblePolytope(poly.exogenous().to_string()));
        }
    }
    if (masses[0] + masses[1] - mass).abs() > MASS_TOL.max(mass * 1e-9) {
        return Err(Error::InfeasiblePolytope(poly.exogenous().to_string()));
    }

    let rest: Vec<u32> = bits.iter().copied().filter(|&b| b != bit).collect();
    let mut children: [Option<Vec<Outcome>>; 2] = [None, None];
    for v in [false, true] {
        if masses[v as usize] <= 0.0 {
            continue;
        }
        let sub_rows: Vec<Row> = rows
            .iter()
            .filter(|r| r.fixes.iter().any(|&(b, val)| b == bit && val == v))
            .map(|r| Row {
                fixes: r
                    .fixes
                    .iter()
                    .copied()
                    .filter(|&(b, _)| b != bit)
                    .collect(),
                rhs: r.rhs,
                family: r.family,
            })
            .collect();
        let mut sub_path = path.clone();
        sub_path.push((bit, v));
        sub_path.sort_unstable();
        children[v as usize] = Some(subdivide(
            pi,
            rest.clone(),
            sub_rows,
            term_edges,
            sub_path,
            masses[v as usize],
            poly,
            leaves,
            opts,
        )?);
    }
    // Conditional masses given the path.
    let cond = if mass > 0.0 {
        [masses[0] / mass, masses[1] / mass]
    } else {
        [0.0, 0.0]
    };
    Ok(Outcome::Split {
        bit,
        mass: cond,
        children,
    })
}

fn estimate_bases(bits: &[u32], rows: &[Row], mass: f64, opts: &EnumOptions) -> u64 {
    let dim = 1usize << bits.len();
    let dense = dense_rows(bits, rows, mass);
    let a: Vec<Vec<f64>> = dense.iter().map(|(r, _)| r.clone()).collect();
    let mut b: Vec<f64> = dense.iter().map(|(_, v)| *v).collect();
    let mut a = a;
    a.push(vec![1.0; dim]);
    b.push(1.0);
    let (kept, _) = independent_rows(&a, &b, opts.pivot_tol);
    binomial(dim as u64, kept.len() as u64)
}

fn dense_rows(bits: &[u32], rows: &[Row], mass: f64) -> Vec<(Vec<f64>, f64)> {
    let k = bits.len();
    let dim = 1usize << k;
    rows.iter()
        .map(|r| {
            let mut coeffs = vec![0.0; dim];
            let mut mask = 0usize;
            let mut want = 0usize;
            for &(bit, val) in &r.fixes {
                let pos = bits.iter().position(|&b| b == bit).expect("bit in leaf");
                let m = 1usize << (k - 1 - pos);
                mask |= m;
                if val {
                    want |= m;
                }
            }
            for (s, c) in coeffs.iter_mut().enumerate() {
                if s & mask == want {
                    *c = 1.0;
                }
            }
            (coeffs, if mass > 0.0 { r.rhs / mass } else { 0.0 })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn make_leaf(
    pi: usize,
    bits: Vec<u32>,
    rows: &[Row],
    path: Pattern,
    mass: f64,
    poly: &Polytope,
    leaves: &mut Vec<Leaf>,
    opts: &EnumOptions,
) -> Result<Outcome> {
    let dim = 1usize << bits.len();
    let vertices = if rows.is_empty() {
        // Unconstrained bits: the full simplex over their joint states.
        (0..dim)
            .map(|s| {
                let mut q = vec![0.0; dim];
                q[s] = 1.0;
                q
            })
            .collect()
    } else {
        let dense = dense_rows(&bits, rows, mass);
        enumerate(&dense, dim, poly.exogenous().as_str(), opts)?
    };
    let id = leaves.len();
    leaves.push(Leaf {
        poly: pi,
        bits,
        vertices,
        path,
    });
    Ok(Outcome::Leaf(id))
}

/// Resolves one (polytope, pattern) factor into alternatives of
/// (multiplier, leaf factors): one alternative per combination of split
/// blocks compatible with the pattern.
pub fn resolve_factor(
    tree: &[Outcome],
    leaves: &[Leaf],
    pattern: &Pattern,
) -> Vec<(f64, Vec<(usize, Pattern)>)> {
    let mut alts: Vec<(f64, Vec<(usize, Pattern)>)> = vec![(1.0, Vec::new())];
    for outcome in tree {
        let branch = resolve_outcome(outcome, leaves, pattern);
        let mut next = Vec::with_capacity(alts.len() * branch.len());
        for (m, fs) in &alts {
            for (bm, bfs) in &branch {
                let mut fs = fs.clone();
                fs.extend(bfs.iter().cloned());
                next.push((m * bm, fs));
            }
        }
        alts = next;
        if alts.is_empty() {
            break;
        }
    }
    alts
}

fn resolve_outcome(
    outcome: &Outcome,
    leaves: &[Leaf],
    pattern: &Pattern,
) -> Vec<(f64, Vec<(usize, Pattern)>)> {
    match outcome {
        Outcome::Leaf(id) => {
            let leaf = &leaves[*id];
            let local: Pattern = pattern
                .iter()
                .copied()
                .filter(|(b, _)| leaf.bits.contains(b))
                .collect();
            if local.is_empty() {
                vec![(1.0, Vec::new())]
            } else {
                vec![(1.0, vec![(*id, local)])]
            }
        }
        Outcome::Split {
            bit,
            mass,
            children,
        } => {
            let want = pattern.iter().find(|&&(b, _)| b == *bit).map(|&(_, v)| v);
            let mut alts = Vec::new();
            for v in [false, true] {
                if want.is_some_and(|w| w != v) {
                    continue;
                }
                let m = mass[v as usize];
                if m <= 0.0 {
                    continue;
                }
                let Some(sub) = &children[v as usize] else {
                    continue;
                };
                for (bm, bfs) in resolve_factor(sub, leaves, pattern) {
                    alts.push((m * bm, bfs));
                }
            }
            alts
        }
    }
}

/// Probability of full state `u` under chosen leaf vertices: the product
/// of conditional leaf masses along the tree, halved once per bit that no
/// group covers.
pub fn state_mass(
    tree: &[Outcome],
    leaves: &[Leaf],
    poly: &Polytope,
    choice: &dyn Fn(usize) -> usize,
    u: u64,
) -> f64 {
    fn covered(tree: &[Outcome], leaves: &[Leaf], acc: &mut BTreeSet<u32>) {
        for o in tree {
            match o {
                Outcome::Leaf(id) => acc.extend(leaves[*id].bits.iter().copied()),
                Outcome::Split { bit, children, .. } => {
                    acc.insert(*bit);
                    for c in children.iter().flatten() {
                        covered(c, leaves, acc);
                    }
                }
            }
        }
    }
    let mut cov = BTreeSet::new();
    covered(tree, leaves, &mut cov);
    let missing = poly.space.bit_count() as usize - cov.len();

    fn eval(
        tree: &[Outcome],
        leaves: &[Leaf],
        poly: &Polytope,
        choice: &dyn Fn(usize) -> usize,
        u: u64,
    ) -> f64 {
        let mut p = 1.0;
        for o in tree {
            match o {
                Outcome::Leaf(id) => {
                    let leaf = &leaves[*id];
                    let s = leaf.local_state(|b| poly.space.state_bit(u, b));
                    p *= leaf.vertices[choice(*id)][s];
                }
                Outcome::Split {
                    bit,
                    mass,
                    children,
                } => {
                    let v = poly.space.state_bit(u, *bit);
                    p *= mass[v as usize];
                    match &children[v as usize] {
                        Some(sub) => p *= eval(sub, leaves, poly, choice, u),
                        None => return 0.0,
                    }
                }
            }
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }
    eval(tree, leaves, poly, choice, u) * 0.5f64.powi(missing as i32)
}
