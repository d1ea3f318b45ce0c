//! Exact global optimization of the multilinear objective over a product
//! of constraint polytopes.
//!
//! A multilinear function over a product of polytopes attains its extrema
//! at combinations of vertices of the factors, so the optimizer enumerates
//! vertices per factor and scans the product. Factors are the leaves of
//! the decomposition in [`factor`]; the `Naive` solver keeps every
//! polytope whole, which matches the textbook procedure and serves as the
//! internal cross-check of the decomposition.

mod factor;
mod linalg;
mod vertex;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::VariableId;
use crate::program::{Pattern, Polytope, Program};
use factor::{resolve_factor, state_mass, Decomposition};
use vertex::EnumOptions;

/// Which evaluation strategy `optimize` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Decompose polytopes into independent low-dimensional factors.
    Factored,
    /// Enumerate vertices of each polytope as a whole.
    Naive,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub solver: SolverKind,
    /// Cap on the number of vertex combinations scanned.
    pub eval_budget: u64,
    /// Cap on the number of basis subsets per vertex enumeration.
    pub basis_budget: u64,
    pub feas_tol: f64,
    pub pivot_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: SolverKind::Factored,
            eval_budget: 100_000_000,
            basis_budget: 4_000_000,
            feas_tol: 1e-8,
            pivot_tol: 1e-10,
        }
    }
}

impl SolveOptions {
    fn enum_opts(&self) -> EnumOptions {
        EnumOptions {
            basis_budget: self.basis_budget,
            feas_tol: self.feas_tol,
            pivot_tol: self.pivot_tol,
        }
    }
}

/// All vertices of one polytope.
#[derive(Debug, Clone)]
pub struct VertexSet {
    pub exogenous: VariableId,
    pub vertices: Vec<Vec<f64>>,
}

/// Enumerates every vertex of a constraint polytope (normalization and
/// nonnegativity included implicitly).
pub fn enumerate_vertices(poly: &Polytope, opts: &SolveOptions) -> Result<VertexSet> {
    let vertices = vertex::enumerate(
        &poly.dense_rows(),
        poly.dimension() as usize,
        poly.exogenous().as_str(),
        &opts.enum_opts(),
    )?;
    Ok(VertexSet {
        exogenous: poly.exogenous().clone(),
        vertices,
    })
}

/// Tight lower and upper value of a program, with witnesses.
#[derive(Debug, Clone)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    /// One canonical-state distribution per polytope attaining `lower`.
    pub argmin: Vec<Vec<f64>>,
    /// One canonical-state distribution per polytope attaining `upper`.
    pub argmax: Vec<Vec<f64>>,
    /// Vertex combinations evaluated.
    pub evaluations: u64,
    /// Per polytope, the size of its vertex product.
    pub vertex_counts: Vec<(VariableId, u64)>,
}

/// A term after factor resolution: coefficient times leaf-pattern masses.
#[derive(Debug, Clone)]
struct ResolvedTerm {
    coeff: f64,
    /// (axis, pattern id), sorted by axis in scan order.
    factors: Vec<(usize, usize)>,
}

struct Scan {
    /// Leaf ids in scan order.
    axes: Vec<usize>,
    counts: Vec<usize>,
    /// mass[axis][pattern id][vertex] = mass the vertex gives the pattern.
    mass: Vec<Vec<Vec<f64>>>,
    terms: Vec<ResolvedTerm>,
    /// Per axis, the (term, factor position) pairs it touches.
    touch: Vec<Vec<(usize, usize)>>,
    /// suffix_min[t][i] = product over factors i.. of the smallest mass any
    /// vertex assigns; one extra trailing 1. Same for `suffix_max` with the
    /// largest mass. These give exact optimistic completions for pruning,
    /// since coefficients and masses are nonnegative.
    suffix_min: Vec<Vec<f64>>,
    suffix_max: Vec<Vec<f64>>,
}

fn build_scan(prog: &Program, deco: &Decomposition) -> Result<Scan> {
    // Resolve program terms against the decomposition trees.
    let mut merged: BTreeMap<Vec<(usize, Pattern)>, f64> = BTreeMap::new();
    for term in &prog.terms {
        let mut alts: Vec<(f64, Vec<(usize, Pattern)>)> = vec![(term.coeff, Vec::new())];
        for (pi, pattern) in &term.factors {
            let options = resolve_factor(&deco.trees[*pi], &deco.leaves, pattern);
            let mut next = Vec::with_capacity(alts.len() * options.len().max(1));
            for (c, fs) in &alts {
                for (m, extra) in &options {
                    let mut fs = fs.clone();
                    fs.extend(extra.iter().cloned());
                    next.push((c * m, fs));
                }
            }
            alts = next;
            if alts.is_empty() {
                break;
            }
        }
        for (c, mut fs) in alts {
            if c == 0.0 {
                continue;
            }
            fs.sort();
            *merged.entry(fs).or_insert(0.0) += c;
        }
    }

    // Intern per-leaf patterns and precompute masses.
    let mut pattern_ids: Vec<BTreeMap<Pattern, usize>> = vec![BTreeMap::new(); deco.leaves.len()];
    let mut terms = Vec::new();
    for (fs, coeff) in merged {
        if coeff == 0.0 {
            continue;
        }
        let mut factors = Vec::with_capacity(fs.len());
        for (leaf, pat) in fs {
            let next_id = pattern_ids[leaf].len();
            let id = *pattern_ids[leaf].entry(pat).or_insert(next_id);
            factors.push((leaf, id));
        }
        terms.push(ResolvedTerm { coeff, factors });
    }
    let mut mass: Vec<Vec<Vec<f64>>> = Vec::with_capacity(deco.leaves.len());
    for (leaf, pats) in deco.leaves.iter().zip(&pattern_ids) {
        let mut by_id: Vec<(&Pattern, usize)> = pats.iter().map(|(p, &i)| (p, i)).collect();
        by_id.sort_by_key(|&(_, i)| i);
        let table: Vec<Vec<f64>> = by_id
            .iter()
            .map(|(pat, _)| {
                let states = leaf.states_matching(pat);
                leaf.vertices
                    .iter()
                    .map(|v| states.iter().map(|&s| v[s]).sum())
                    .collect()
            })
            .collect();
        mass.push(table);
    }

    // Axes: referenced leaves, cheap ones first.
    let mut referenced: Vec<usize> = terms
        .iter()
        .flat_map(|t| t.factors.iter().map(|&(l, _)| l))
        .collect();
    referenced.sort_unstable();
    referenced.dedup();
    let mut axes = referenced;
    axes.sort_by_key(|&l| (deco.leaves[l].vertices.len(), l));
    let counts: Vec<usize> = axes.iter().map(|&l| deco.leaves[l].vertices.len()).collect();

    // Rewrite term factors as (axis, pattern id), ordered by scan axis.
    let axis_of: BTreeMap<usize, usize> =
        axes.iter().enumerate().map(|(a, &l)| (l, a)).collect();
    let mass_by_axis: Vec<Vec<Vec<f64>>> = axes.iter().map(|&l| mass[l].clone()).collect();
    let mut touch: Vec<Vec<(usize, usize)>> = vec![Vec::new(); axes.len()];
    let mut suffix_min = Vec::with_capacity(terms.len());
    let mut suffix_max = Vec::with_capacity(terms.len());
    for (ti, t) in terms.iter_mut().enumerate() {
        for f in t.factors.iter_mut() {
            *f = (axis_of[&f.0], f.1);
        }
        t.factors.sort_unstable();
        for (pos, &(axis, _)) in t.factors.iter().enumerate() {
            touch[axis].push((ti, pos));
        }
        let k = t.factors.len();
        let mut smin = vec![1.0; k + 1];
        let mut smax = vec![1.0; k + 1];
        for i in (0..k).rev() {
            let (axis, pat) = t.factors[i];
            let col = &mass_by_axis[axis][pat];
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            smin[i] = smin[i + 1] * lo.max(0.0);
            smax[i] = smax[i + 1] * hi.max(0.0);
        }
        suffix_min.push(smin);
        suffix_max.push(smax);
    }
    Ok(Scan {
        axes,
        counts,
        mass: mass_by_axis,
        terms,
        touch,
        suffix_min,
        suffix_max,
    })
}

/// Candidate optimum: value plus the vertex index tuple that attains it,
/// compared value first and ties broken by the lexicographically smaller
/// tuple so that parallel and sequential scans agree exactly.
#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    value: f64,
    tuple: Vec<u32>,
}

fn better(a: &Candidate, b: &Candidate, maximize: bool) -> bool {
    // True when a beats b.
    if a.value != b.value {
        return if maximize {
            a.value > b.value
        } else {
            a.value < b.value
        };
    }
    a.tuple < b.tuple
}

/// Shared work meter: counts vertex applications across workers and trips
/// once the budget is exhausted.
struct Meter {
    counter: std::sync::atomic::AtomicU64,
    budget: u64,
}

impl Meter {
    fn new(budget: u64) -> Meter {
        Meter {
            counter: std::sync::atomic::AtomicU64::new(0),
            budget,
        }
    }

    fn charge(&self, amount: u64) -> Result<()> {
        let total = self
            .counter
            .fetch_add(amount, std::sync::atomic::Ordering::Relaxed)
            + amount;
        if total > self.budget {
            return Err(Error::DegreeTooHigh {
                needed: total,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

struct ScanState {
    cur: Vec<f64>,
    tuple: Vec<u32>,
    best_min: Candidate,
    best_max: Candidate,
    /// Vertex applications since the last flush to the shared meter.
    pending: u64,
}

/// Depth-first scan over the vertex product with branch-and-bound:
/// `opt_min`/`opt_max` carry exact optimistic completions of every term
/// (coefficients and masses are nonnegative), so a subtree is skipped when
/// it cannot strictly improve either incumbent.
fn scan_range(scan: &Scan, first: Option<u32>, meter: &Meter) -> Result<(Candidate, Candidate)> {
    let n_axes = scan.axes.len();
    let mut state = ScanState {
        cur: scan.terms.iter().map(|t| t.coeff).collect(),
        tuple: vec![0u32; n_axes],
        best_min: Candidate {
            value: f64::INFINITY,
            tuple: Vec::new(),
        },
        best_max: Candidate {
            value: f64::NEG_INFINITY,
            tuple: Vec::new(),
        },
        pending: 0,
    };
    let opt_min: f64 = scan
        .terms
        .iter()
        .enumerate()
        .map(|(t, term)| term.coeff * scan.suffix_min[t][0])
        .sum();
    let opt_max: f64 = scan
        .terms
        .iter()
        .enumerate()
        .map(|(t, term)| term.coeff * scan.suffix_max[t][0])
        .sum();

    fn rec(
        scan: &Scan,
        axis: usize,
        opt_min: f64,
        opt_max: f64,
        state: &mut ScanState,
        meter: &Meter,
        pinned_first: Option<u32>,
    ) -> Result<()> {
        if axis == scan.axes.len() {
            let value: f64 = state.cur.iter().sum();
            let cand = Candidate {
                value,
                tuple: state.tuple.clone(),
            };
            if better(&cand, &state.best_min, false) {
                state.best_min = cand.clone();
            }
            if better(&cand, &state.best_max, true) {
                state.best_max = cand;
            }
            return Ok(());
        }
        let range: Vec<u32> = if axis == 0 {
            match pinned_first {
                Some(v) => vec![v],
                None => (0..scan.counts[0] as u32).collect(),
            }
        } else {
            (0..scan.counts[axis] as u32).collect()
        };
        for v in range {
            state.pending += 1;
            if state.pending >= 4096 {
                meter.charge(state.pending)?;
                state.pending = 0;
            }
            state.tuple[axis] = v;
            let mut saved: Vec<(usize, f64)> = Vec::with_capacity(scan.touch[axis].len());
            let mut sub_min = opt_min;
            let mut sub_max = opt_max;
            for &(ti, pos) in &scan.touch[axis] {
                let (_, pid) = scan.terms[ti].factors[pos];
                let old = state.cur[ti];
                let new = old * scan.mass[axis][pid][v as usize];
                sub_min += new * scan.suffix_min[ti][pos + 1] - old * scan.suffix_min[ti][pos];
                sub_max += new * scan.suffix_max[ti][pos + 1] - old * scan.suffix_max[ti][pos];
                saved.push((ti, old));
                state.cur[ti] = new;
            }
            let improvable = sub_min < state.best_min.value || sub_max > state.best_max.value;
            if improvable {
                rec(scan, axis + 1, sub_min, sub_max, state, meter, pinned_first)?;
            }
            for &(ti, old) in saved.iter().rev() {
                state.cur[ti] = old;
            }
        }
        state.tuple[axis] = 0;
        Ok(())
    }

    rec(scan, 0, opt_min, opt_max, &mut state, meter, first)?;
    meter.charge(state.pending)?;
    Ok((state.best_min, state.best_max))
}

fn run_scan(scan: &Scan, meter: &Meter) -> Result<(Candidate, Candidate)> {
    if scan.axes.is_empty() || scan.counts[0] < 2 || rayon::current_num_threads() < 2 {
        return scan_range(scan, None, meter);
    }
    (0..scan.counts[0] as u32)
        .into_par_iter()
        .map(|v| scan_range(scan, Some(v), meter))
        .try_reduce(
            || {
                (
                    Candidate {
                        value: f64::INFINITY,
                        tuple: Vec::new(),
                    },
                    Candidate {
                        value: f64::NEG_INFINITY,
                        tuple: Vec::new(),
                    },
                )
            },
            |(amin, amax), (bmin, bmax)| {
                Ok((
                    if better(&bmin, &amin, false) { bmin } else { amin },
                    if better(&bmax, &amax, true) { bmax } else { amax },
                ))
            },
        )
}

/// Exact minimum and maximum of the program's objective over its feasible
/// set, divided by the denominator.
pub fn optimize(prog: &Program, opts: &SolveOptions) -> Result<BoundInterval> {
    let deco = factor::decompose(prog, opts.solver == SolverKind::Naive, &opts.enum_opts())?;
    let scan = build_scan(prog, &deco)?;

    let combos: u128 = scan.counts.iter().map(|&c| c as u128).product();
    let meter = Meter::new(opts.eval_budget);
    let (best_min, best_max) = run_scan(&scan, &meter)?;
    let assemble = |cand: &Candidate| -> Vec<Vec<f64>> {
        let choice_of = |leaf: usize| -> usize {
            scan.axes
                .iter()
                .position(|&l| l == leaf)
                .map(|a| cand.tuple[a] as usize)
                .unwrap_or(0)
        };
        prog.polytopes
            .iter()
            .enumerate()
            .map(|(pi, poly)| {
                (0..poly.dimension())
                    .map(|u| state_mass(&deco.trees[pi], &deco.leaves, poly, &choice_of, u))
                    .collect()
            })
            .collect()
    };
    let argmin = assemble(&best_min);
    let argmax = assemble(&best_max);

    let vertex_counts: Vec<(VariableId, u64)> = prog
        .polytopes
        .iter()
        .enumerate()
        .map(|(pi, poly)| {
            let count: u128 = deco
                .leaves
                .iter()
                .filter(|l| l.poly == pi)
                .map(|l| l.vertices.len() as u128)
                .product();
            (
                poly.exogenous().clone(),
                count.min(u64::MAX as u128) as u64,
            )
        })
        .collect();

    Ok(BoundInterval {
        lower: (best_min.value / prog.denominator).clamp(0.0, 1.0),
        upper: (best_max.value / prog.denominator).clamp(0.0, 1.0),
        argmin,
        argmax,
        evaluations: combos.min(u64::MAX as u128) as u64,
        vertex_counts,
    })
}

/// Inner approximation by sampling random feasible points: every sampled
/// point is a convex combination of vertices per factor, so the observed
/// interval is always contained in the exact one.
pub fn sample_oracle(
    prog: &Program,
    n: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<BoundInterval> {
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let deco = factor::decompose(prog, opts.solver == SolverKind::Naive, &opts.enum_opts())?;
    let scan = build_scan(prog, &deco)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best_min: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut best_max: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..n {
        // One random point per axis: exponential weights over vertices.
        let mixtures: Vec<Vec<f64>> = scan
            .axes
            .iter()
            .map(|&l| {
                let k = deco.leaves[l].vertices.len();
                let mut w: Vec<f64> = (0..k)
                    .map(|_| {
                        let e: f64 = -((1.0 - rng.random::<f64>()).ln());
                        e.max(1e-12)
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                for x in w.iter_mut() {
                    *x /= total;
                }
                w
            })
            .collect();
        // Pattern mass under a mixture = weighted vertex masses.
        let value: f64 = scan
            .terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.factors
                        .iter()
                        .map(|&(axis, pid)| {
                            scan.mass[axis][pid]
                                .iter()
                                .zip(&mixtures[axis])
                                .map(|(m, w)| m * w)
                                .sum::<f64>()
                        })
                        .product::<f64>()
            })
            .sum();
        if best_min.as_ref().is_none_or(|(v, _)| value < *v) {
            best_min = Some((value, mixtures.clone()));
        }
        if best_max.as_ref().is_none_or(|(v, _)| value > *v) {
            best_max = Some((value, mixtures));
        }
    }

    let assemble = |mixtures: &[Vec<f64>]| -> Vec<Vec<f64>> {
        // Blend leaf vertices into leaf distributions, then assemble.
        let blended: Vec<Vec<f64>> = deco
            .leaves
            .iter()
            .enumerate()
            .map(|(l, leaf)| {
                let dim = 1usize << leaf.bits.len();
                match scan.axes.iter().position(|&a| a == l) {
                    Some(axis) => {
                        let mut d = vec![0.0; dim];
                        for (w, v) in mixtures[axis].iter().zip(&leaf.vertices) {
                            for (slot, x) in d.iter_mut().zip(v) {
                                *slot += w * x;
                            }
                        }
                        d
                    }
                    None => leaf.vertices[0].clone(),
                }
            })
            .collect();
        prog.polytopes
            .iter()
            .enumerate()
            .map(|(pi, poly)| {
                // Reuse the tree walk with single-"vertex" leaves.
                let leaves_view: Vec<factor::Leaf> = deco
                    .leaves
                    .iter()
                    .enumerate()
                    .map(|(l, leaf)| factor::Leaf {
                        poly: leaf.poly,
                        bits: leaf.bits.clone(),
                        vertices: vec![blended[l].clone()],
                        path: leaf.path.clone(),
                    })
                    .collect();
                (0..poly.dimension())
                    .map(|u| state_mass(&deco.trees[pi], &leaves_view, poly, &|_| 0, u))
                    .collect()
            })
            .collect()
    };

    let (lo, lo_mix) = best_min.expect("n >= 1");
    let (hi, hi_mix) = best_max.expect("n >= 1");
    let vertex_counts: Vec<(VariableId, u64)> = prog
        .polytopes
        .iter()
        .enumerate()
        .map(|(pi, poly)| {
            let count: u128 = deco
                .leaves
                .iter()
                .filter(|l| l.poly == pi)
                .map(|l| l.vertices.len() as u128)
                .product();
            (
                poly.exogenous().clone(),
                count.min(u64::MAX as u128) as u64,
            )
        })
        .collect();
    Ok(BoundInterval {
        lower: (lo / prog.denominator).clamp(0.0, 1.0),
        upper: (hi / prog.denominator).clamp(0.0, 1.0),
        argmin: assemble(&lo_mix),
        argmax: assemble(&hi_mix),
        evaluations: n as u64,
        vertex_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::models::{example3_distribution, example3_graph};
    use crate::cfgraph::{build_pn_ps_graph, build_pns_graph};
    use crate::graph::{CausalGraph, NodeKind};
    use crate::program::ConstraintRow;

    fn tiny_polytope(rows: Vec<ConstraintRow>) -> Polytope {
        let g = CausalGraph::new(
            [("A", NodeKind::Endogenous), ("U", NodeKind::Exogenous)],
            &[("U", "A")],
        )
        .unwrap();
        let comps = g.c_components();
        let space = crate::canonical::CanonicalSpace::new(&g, &comps[0]);
        Polytope { space, rows }
    }

    fn example3_program(pns: bool, x_val: bool, reduce: bool) -> Program {
        let g = example3_graph();
        let dist = example3_distribution();
        let cf = if pns {
            build_pns_graph(&g, &"X".into(), &"Y".into()).unwrap()
        } else {
            build_pn_ps_graph(&g, &"X".into(), x_val, &"Y".into()).unwrap()
        };
        let cf = if reduce {
            cf.reduce_to_fixpoint(&dist).unwrap().0
        } else {
            cf
        };
        Program::build(&cf, &dist).unwrap()
    }

    #[test]
    fn bare_simplex_has_unit_vertices() {
        let p = tiny_polytope(vec![]);
        let vs = enumerate_vertices(&p, &SolveOptions::default()).unwrap();
        let mut got = vs.vertices.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn pinned_simplex_is_a_point() {
        let p = tiny_polytope(vec![ConstraintRow {
            fixes: vec![(0, false)],
            rhs: 0.3,
            family: 0,
        }]);
        let vs = enumerate_vertices(&p, &SolveOptions::default()).unwrap();
        assert_eq!(vs.vertices.len(), 1);
        assert!((vs.vertices[0][0] - 0.3).abs() < 1e-9);
        assert!((vs.vertices[0][1] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows_are_reported() {
        let p = tiny_polytope(vec![
            ConstraintRow {
                fixes: vec![(0, false)],
                rhs: 0.3,
                family: 0,
            },
            ConstraintRow {
                fixes: vec![(0, false)],
                rhs: 0.6,
                family: 1,
            },
        ]);
        let err = enumerate_vertices(&p, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePolytope(_)));
    }

    #[test]
    fn example3_vertices_satisfy_all_rows() {
        let prog = example3_program(false, false, true);
        for poly in &prog.polytopes {
            let vs = enumerate_vertices(poly, &SolveOptions::default()).unwrap();
            assert!(!vs.vertices.is_empty());
            for v in &vs.vertices {
                for (coeffs, rhs) in poly.dense_rows() {
                    let lhs: f64 = coeffs.iter().zip(v).map(|(c, q)| c * q).sum();
                    assert!((lhs - rhs).abs() < 1e-8);
                }
                let total: f64 = v.iter().sum();
                assert!((total - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn example3_necessity_interval_matches_published_numbers() {
        // The published interval is for the joint-probability numerator of
        // the necessity query; the conditional interval divides it by the
        // factual evidence probability.
        let prog = example3_program(false, false, true);
        let bounds = optimize(&prog, &SolveOptions::default()).unwrap();
        let num_lo = bounds.lower * prog.denominator;
        let num_hi = bounds.upper * prog.denominator;
        assert!((num_lo - 0.175).abs() < 1e-9, "numerator lower = {num_lo}");
        assert!((num_hi - 0.245).abs() < 1e-9, "numerator upper = {num_hi}");
        assert!((prog.denominator - 0.33625).abs() < 1e-12);
        assert!((bounds.lower - 0.175 / 0.33625).abs() < 1e-9);
        assert!((bounds.upper - 0.245 / 0.33625).abs() < 1e-9);
    }

    #[test]
    fn example3_joint_interval_matches_published_numbers() {
        let prog = example3_program(true, false, true);
        let bounds = optimize(&prog, &SolveOptions::default()).unwrap();
        assert!(
            (bounds.lower - 0.35).abs() < 1e-6,
            "lower = {}",
            bounds.lower
        );
        assert!(
            (bounds.upper - 0.49).abs() < 1e-6,
            "upper = {}",
            bounds.upper
        );
    }

    #[test]
    fn naive_and_factored_agree_on_example3() {
        for (pns, x_val) in [(false, false), (false, true), (true, false)] {
            let prog = example3_program(pns, x_val, true);
            let f = optimize(&prog, &SolveOptions::default()).unwrap();
            let n = optimize(
                &prog,
                &SolveOptions {
                    solver: SolverKind::Naive,
                    ..SolveOptions::default()
                },
            )
            .unwrap();
            assert!((f.lower - n.lower).abs() < 1e-9, "{} vs {}", f.lower, n.lower);
            assert!((f.upper - n.upper).abs() < 1e-9, "{} vs {}", f.upper, n.upper);
        }
    }

    #[test]
    fn witnesses_reproduce_bounds() {
        for pns in [false, true] {
            let prog = example3_program(pns, false, true);
            let bounds = optimize(&prog, &SolveOptions::default()).unwrap();
            let lo = prog.evaluate_numerator(&bounds.argmin) / prog.denominator;
            let hi = prog.evaluate_numerator(&bounds.argmax) / prog.denominator;
            assert!((lo - bounds.lower).abs() < 1e-12, "{lo} vs {}", bounds.lower);
            assert!((hi - bounds.upper).abs() < 1e-12, "{hi} vs {}", bounds.upper);
            // Witnesses are genuine distributions satisfying the rows.
            for (poly, q) in prog.polytopes.iter().zip(&bounds.argmin) {
                let total: f64 = q.iter().sum();
                assert!((total - 1.0).abs() < 1e-8);
                assert!(q.iter().all(|&x| x >= -1e-10));
                for (coeffs, rhs) in poly.dense_rows() {
                    let lhs: f64 = coeffs.iter().zip(q).map(|(c, v)| c * v).sum();
                    assert!((lhs - rhs).abs() < 1e-7, "row violated: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn oracle_interval_is_contained() {
        let prog = example3_program(true, false, true);
        let exact = optimize(&prog, &SolveOptions::default()).unwrap();
        let inner = sample_oracle(&prog, 2000, 7, &SolveOptions::default()).unwrap();
        assert!(inner.lower >= exact.lower - 1e-9);
        assert!(inner.upper <= exact.upper + 1e-9);
        assert!(inner.lower <= inner.upper);
    }

    #[test]
    fn oracle_requires_samples() {
        let prog = example3_program(true, false, true);
        let err = sample_oracle(&prog, 0, 7, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoSamples));
    }

    #[test]
    fn constant_objective_gives_point_interval() {
        let mut prog = example3_program(false, false, true);
        prog.terms.clear();
        let bounds = optimize(&prog, &SolveOptions::default()).unwrap();
        assert_eq!(bounds.lower, 0.0);
        assert_eq!(bounds.upper, 0.0);
    }

    #[test]
    fn naive_and_factored_agree_on_random_models() {
        use crate::bench::generator::{random_scm, GeneratorCaps};
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(8888);
        let caps = GeneratorCaps {
            max_component_dim: 16,
            max_total_dim: 1024,
            ..GeneratorCaps::default()
        };
        let mut compared = 0;
        for _ in 0..15 {
            let (scm, x, y) = random_scm(&mut rng, &caps);
            let dist = scm.exact_joint().unwrap();
            for kind in crate::metrics::MetricKind::all() {
                let cf = match kind.strategy().build_graph(scm.graph(), &x, &y) {
                    Ok(cf) => cf,
                    Err(_) => continue,
                };
                let (red, _) = cf.reduce_to_fixpoint(&dist).unwrap();
                let prog = match Program::build(&red, &dist) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                let f = optimize(&prog, &SolveOptions::default()).unwrap();
                let n = optimize(
                    &prog,
                    &SolveOptions {
                        solver: SolverKind::Naive,
                        ..SolveOptions::default()
                    },
                )
                .unwrap();
                assert!(
                    (f.lower - n.lower).abs() < 1e-9 && (f.upper - n.upper).abs() < 1e-9,
                    "{kind}: factored [{}, {}] vs naive [{}, {}]",
                    f.lower,
                    f.upper,
                    n.lower,
                    n.upper
                );
                // Both witnesses attain their bounds under re-evaluation.
                for (b, side) in [(&f, "factored"), (&n, "naive")] {
                    let lo = prog.evaluate_numerator(&b.argmin) / prog.denominator;
                    let hi = prog.evaluate_numerator(&b.argmax) / prog.denominator;
                    assert!((lo - b.lower).abs() < 1e-9, "{side} argmin off: {lo} vs {}", b.lower);
                    assert!((hi - b.upper).abs() < 1e-9, "{side} argmax off: {hi} vs {}", b.upper);
                }
                compared += 1;
            }
        }
        assert!(compared >= 40, "only {compared} programs compared");
    }

    #[test]
    fn single_polytope_programs_match_exhaustive_vertex_scan() {
        // Weak metrics give degree <= 1 programs; the naive path IS the
        // exhaustive scan of the single polytope's vertices, so the two
        // paths agreeing is the linear-program cross-check.
        use crate::cfgraph::build_interventional_graph;
        let g = example3_graph();
        let dist = example3_distribution();
        for x_val in [false, true] {
            let cf = build_interventional_graph(&g, &"X".into(), x_val, &"Y".into()).unwrap();
            let (red, _) = cf.reduce_to_fixpoint(&dist).unwrap();
            let prog = Program::build(&red, &dist).unwrap();
            let f = optimize(&prog, &SolveOptions::default()).unwrap();
            let n = optimize(
                &prog,
                &SolveOptions {
                    solver: SolverKind::Naive,
                    ..SolveOptions::default()
                },
            )
            .unwrap();
            assert!((f.lower - n.lower).abs() < 1e-8);
            assert!((f.upper - n.upper).abs() < 1e-8);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let prog = example3_program(true, false, true);
        let err = optimize(
            &prog,
            &SolveOptions {
                eval_budget: 1,
                ..SolveOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegreeTooHigh { .. }));
    }
}
