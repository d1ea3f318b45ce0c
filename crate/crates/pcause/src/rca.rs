//! Root cause analysis by causal-path ranking.
//!
//! Every endogenous ancestor of the incident node gets a scalarized
//! probability-of-causation score against it. A depth-first traversal then
//! walks upstream from the incident, following chains of comparable scores
//! and pruning a branch whenever the score changes abruptly — by more than
//! `alpha` times the median of the changes seen along the current path.
//! Surviving paths are ranked by a weighted sum of their scores in which
//! the putative root cause counts `root_weight` times.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{CausalGraph, NodeKind, VariableId};
use crate::metrics::{bounds, scalarize, BoundsOptions, MetricKind, Scalarization};
use crate::table::JointTable;

/// Configuration of the path-ranking search.
#[derive(Debug, Clone)]
pub struct RcaConfig {
    /// Drop factor: a branch is pruned when a score change exceeds
    /// `alpha` times the median change on the current path. Must be > 1.
    pub alpha: f64,
    /// Weight of the path head in the significance score. Must be >= 1.
    pub root_weight: f64,
    pub metric: MetricKind,
    pub scalarization: Scalarization,
    /// Record the abrupt-jump parent as the path head instead of stopping
    /// at the node before it.
    pub include_pruned_parent: bool,
    pub bounds: BoundsOptions,
}

impl Default for RcaConfig {
    fn default() -> Self {
        RcaConfig {
            alpha: 2.0,
            root_weight: 2.0,
            metric: MetricKind::Pn,
            scalarization: Scalarization::Minimum,
            include_pruned_parent: false,
            bounds: BoundsOptions::default(),
        }
    }
}

/// Score of one candidate cause against the target.
#[derive(Debug, Clone)]
pub struct ScoreEntry {
    pub var: VariableId,
    /// Bound interval when the pipeline succeeded.
    pub interval: Option<(f64, f64)>,
    /// Scalarized score; zero when the pipeline errored.
    pub score: f64,
    pub error: Option<String>,
}

/// Scores of every endogenous ancestor of the target.
#[derive(Debug, Clone)]
pub struct PcScoreTable {
    pub target: VariableId,
    pub metric: MetricKind,
    pub scalarization: Scalarization,
    /// Entries sorted by variable name.
    pub entries: Vec<ScoreEntry>,
}

impl PcScoreTable {
    pub fn score_of(&self, v: &VariableId) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| &e.var == v)
            .map(|e| e.score)
    }
}

/// A causal chain from a plausible root cause down to the target, with its
/// path-significance score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPath {
    /// Root first, target last; always at least two nodes.
    pub path: Vec<VariableId>,
    pub score: f64,
}

impl RankedPath {
    pub fn head(&self) -> &VariableId {
        &self.path[0]
    }

    pub fn arrow_joined(&self) -> String {
        self.path
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// Full analysis output.
#[derive(Debug, Clone)]
pub struct RcaReport {
    pub scores: PcScoreTable,
    pub paths: Vec<RankedPath>,
}

impl RcaReport {
    /// The top-ranked plausible root cause, when any path was found.
    pub fn top_root(&self) -> Option<&VariableId> {
        self.paths.first().map(|p| p.head())
    }

    /// Aligned text rendering with `scores` and `paths` sections.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scores (metric {}, scalarization {}, target {})",
            self.scores.metric, self.scores.scalarization, self.scores.target
        );
        let width = self
            .scores
            .entries
            .iter()
            .map(|e| e.var.as_str().len())
            .max()
            .unwrap_or(4)
            .max(4);
        let _ = writeln!(out, "  {:<width$}  lower     upper     scalar", "node");
        for e in &self.scores.entries {
            match (&e.interval, &e.error) {
                (Some((lo, hi)), _) => {
                    let _ = writeln!(
                        out,
                        "  {:<width$}  {:<8.6}  {:<8.6}  {:<8.6}",
                        e.var.as_str(),
                        lo,
                        hi,
                        e.score
                    );
                }
                (None, Some(err)) => {
                    let _ = writeln!(
                        out,
                        "  {:<width$}  (error: {err}; scored 0)",
                        e.var.as_str()
                    );
                }
                (None, None) => {}
            }
        }
        let _ = writeln!(out, "paths");
        for (rank, p) in self.paths.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {:>3}  S={: <10.6}  {}",
                rank + 1,
                p.score,
                p.arrow_joined()
            );
        }
        out
    }
}

/// Scores every endogenous ancestor of `target` with the configured
/// metric. Ancestors whose pipeline errors are flagged and scored zero.
pub fn score_nodes(
    g: &CausalGraph,
    dist: &JointTable,
    target: &VariableId,
    cfg: &RcaConfig,
) -> Result<PcScoreTable> {
    let yi = g.endogenous_node(target)?;
    let mut ancestors: Vec<usize> = g
        .ancestor_closure([yi])
        .into_iter()
        .filter(|&v| v != yi && g.kind(v) == NodeKind::Endogenous)
        .collect();
    ancestors.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));

    let entries: Vec<ScoreEntry> = ancestors
        .par_iter()
        .map(|&v| {
            let var = g.name(v).clone();
            match bounds(g, dist, cfg.metric, &var, target, &cfg.bounds) {
                Ok(report) => {
                    let (lo, hi) = (report.interval.lower, report.interval.upper);
                    ScoreEntry {
                        var,
                        interval: Some((lo, hi)),
                        score: scalarize(lo, hi, cfg.scalarization),
                        error: None,
                    }
                }
                Err(e) => ScoreEntry {
                    var,
                    interval: None,
                    score: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(PcScoreTable {
        target: target.clone(),
        metric: cfg.metric,
        scalarization: cfg.scalarization,
        entries,
    })
}

fn median(sorted_scratch: &mut Vec<f64>, deltas: &[f64]) -> f64 {
    sorted_scratch.clear();
    sorted_scratch.extend_from_slice(deltas);
    sorted_scratch.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted_scratch.len();
    if n % 2 == 1 {
        sorted_scratch[n / 2]
    } else {
        0.5 * (sorted_scratch[n / 2 - 1] + sorted_scratch[n / 2])
    }
}

/// Depth-first path ranking over the score table.
///
/// The incident node itself scores 1 (an event is trivially its own cause),
/// so the first step's score change enters the median history exactly as
/// every later one. A path is recorded when the walk reaches a parentless
/// node, or when every continuation is pruned away at some node.
pub fn rank_paths(
    g: &CausalGraph,
    table: &PcScoreTable,
    target: &VariableId,
    cfg: &RcaConfig,
) -> Result<Vec<RankedPath>> {
    let yi = g.endogenous_node(target)?;
    let score_of = |v: usize| -> f64 {
        if v == yi {
            1.0
        } else {
            table.score_of(g.name(v)).unwrap_or(0.0)
        }
    };

    // Upstream traversal state.
    struct Walk<'a> {
        g: &'a CausalGraph,
        cfg: &'a RcaConfig,
        score: &'a dyn Fn(usize) -> f64,
        recorded: BTreeSet<Vec<usize>>,
        scratch: Vec<f64>,
    }

    impl Walk<'_> {
        fn record(&mut self, path: &[usize]) {
            if path.len() >= 2 {
                self.recorded.insert(path.to_vec());
            }
        }

        fn dfs(&mut self, v: usize, path: &mut Vec<usize>, deltas: &mut Vec<f64>) {
            let mut parents: Vec<usize> = self
                .g
                .endo_parents(v)
                .into_iter()
                .filter(|p| !path.contains(p))
                .collect();
            parents.sort_by(|&a, &b| self.g.name(a).cmp(self.g.name(b)));
            if parents.is_empty() {
                let snapshot = path.clone();
                self.record(&snapshot);
                return;
            }
            for p in parents {
                let delta = ((self.score)(p) - (self.score)(v)).abs();
                if !deltas.is_empty() {
                    let m = median(&mut self.scratch, deltas);
                    if delta > self.cfg.alpha * m {
                        // Abrupt drop: this node is a plausible root cause.
                        if self.cfg.include_pruned_parent {
                            path.push(p);
                            let snapshot = path.clone();
                            self.record(&snapshot);
                            path.pop();
                        } else {
                            let snapshot = path.clone();
                            self.record(&snapshot);
                        }
                        continue;
                    }
                }
                path.push(p);
                deltas.push(delta);
                self.dfs(p, path, deltas);
                deltas.pop();
                path.pop();
            }
        }
    }

    let score_fn: &dyn Fn(usize) -> f64 = &score_of;
    let mut walk = Walk {
        g,
        cfg,
        score: score_fn,
        recorded: BTreeSet::new(),
        scratch: Vec::new(),
    };
    let mut path = vec![yi];
    let mut deltas = Vec::new();
    walk.dfs(yi, &mut path, &mut deltas);

    let mut out: Vec<RankedPath> = walk
        .recorded
        .into_iter()
        .map(|downstream_last| {
            // Paths were collected target-first; flip to root-first.
            let path: Vec<VariableId> = downstream_last
                .iter()
                .rev()
                .map(|&v| g.name(v).clone())
                .collect();
            let head = *downstream_last.last().expect("non-empty");
            let intermediates = &downstream_last[1..downstream_last.len() - 1];
            let score = cfg.root_weight * score_of(head)
                + intermediates.iter().map(|&v| score_of(v)).sum::<f64>();
            RankedPath { path, score }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite")
            .then_with(|| a.path.cmp(&b.path))
    });
    Ok(out)
}

/// Scores the target's ancestors and ranks the causal paths.
pub fn run_rca(
    g: &CausalGraph,
    dist: &JointTable,
    target: &VariableId,
    cfg: &RcaConfig,
) -> Result<RcaReport> {
    let scores = score_nodes(g, dist, target, cfg)?;
    let paths = rank_paths(g, &scores, target, cfg)?;
    Ok(RcaReport { scores, paths })
}

/// Exhaustive reference ranking: every directed path from a parentless
/// ancestor to the target, scored by the significance formula. Equals
/// [`rank_paths`] when pruning is disabled (alpha effectively infinite).
pub fn rank_paths_bruteforce(
    g: &CausalGraph,
    table: &PcScoreTable,
    target: &VariableId,
    root_weight: f64,
) -> Result<Vec<RankedPath>> {
    let yi = g.endogenous_node(target)?;
    let score_of = |v: usize| -> f64 { table.score_of(g.name(v)).unwrap_or(0.0) };

    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![yi]];
    while let Some(path) = stack.pop() {
        let v = *path.last().expect("non-empty");
        let parents: Vec<usize> = g
            .endo_parents(v)
            .into_iter()
            .filter(|p| !path.contains(p))
            .collect();
        if parents.is_empty() {
            if path.len() >= 2 {
                let head = v;
                let intermediates = &path[1..path.len() - 1];
                let score = root_weight * score_of(head)
                    + intermediates.iter().map(|&w| score_of(w)).sum::<f64>();
                out.push(RankedPath {
                    path: path.iter().rev().map(|&w| g.name(w).clone()).collect(),
                    score,
                });
            }
            continue;
        }
        for p in parents {
            let mut next = path.clone();
            next.push(p);
            stack.push(next);
        }
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite")
            .then_with(|| a.path.cmp(&b.path))
    });
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table(target: &str, scores: &[(&str, f64)]) -> PcScoreTable {
        PcScoreTable {
            target: target.into(),
            metric: MetricKind::Pn,
            scalarization: Scalarization::Minimum,
            entries: scores
                .iter()
                .map(|(v, s)| ScoreEntry {
                    var: (*v).into(),
                    interval: Some((*s, *s)),
                    score: *s,
                    error: None,
                })
                .collect(),
        }
    }

    fn chain_graph(edges: &[(&str, &str)]) -> CausalGraph {
        let mut names = BTreeSet::new();
        for (a, b) in edges {
            names.insert(*a);
            names.insert(*b);
        }
        CausalGraph::new(
            names.into_iter().map(|n| (n, NodeKind::Endogenous)),
            edges,
        )
        .unwrap()
    }

    fn cfg(alpha: f64, w: f64) -> RcaConfig {
        RcaConfig {
            alpha,
            root_weight: w,
            ..RcaConfig::default()
        }
    }

    #[test]
    fn straight_chain_scores_by_formula() {
        let g = chain_graph(&[("A", "B"), ("B", "Y")]);
        let t = table("Y", &[("A", 0.9), ("B", 0.85)]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].arrow_joined(), "A -> B -> Y");
        assert!((paths[0].score - 2.65).abs() < 1e-12);
    }

    #[test]
    fn diamond_prefers_strong_branch() {
        let g = chain_graph(&[("A", "B"), ("B", "Y"), ("A", "C"), ("C", "Y")]);
        let t = table("Y", &[("A", 0.75), ("B", 0.8), ("C", 0.1)]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].arrow_joined(), "A -> B -> Y");
        assert!((paths[0].score - 2.3).abs() < 1e-12);
        assert_eq!(paths[1].arrow_joined(), "A -> C -> Y");
        assert!((paths[1].score - 1.6).abs() < 1e-12);
    }

    #[test]
    fn single_parentless_parent() {
        let g = chain_graph(&[("P", "Y")]);
        let t = table("Y", &[("P", 0.6)]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 3.0)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].arrow_joined(), "P -> Y");
        assert!((paths[0].score - 1.8).abs() < 1e-12);
    }

    #[test]
    fn abrupt_drop_prunes_branch() {
        // Score falls off a cliff above B, so B is declared the root.
        let g = chain_graph(&[("A", "B"), ("B", "Y")]);
        let t = table("Y", &[("A", 0.1), ("B", 0.98)]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].arrow_joined(), "B -> Y");
        assert!((paths[0].score - 2.0 * 0.98).abs() < 1e-12);

        // The literal pseudocode variant records the pruned parent instead.
        let mut c2 = cfg(2.0, 2.0);
        c2.include_pruned_parent = true;
        let paths = rank_paths(&g, &t, &"Y".into(), &c2).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].arrow_joined(), "A -> B -> Y");
    }

    #[test]
    fn no_pruning_on_first_step() {
        // The first parent is always entered, however low its score.
        let g = chain_graph(&[("A", "Y")]);
        let t = table("Y", &[("A", 0.01)]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(1.5, 2.0)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].arrow_joined(), "A -> Y");
    }

    #[test]
    fn target_without_ancestors_reports_nothing() {
        let g = chain_graph(&[("Y", "Z")]);
        let t = table("Y", &[]);
        let paths = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        assert!(paths.is_empty());
    }

    #[test]
    fn disabled_pruning_matches_bruteforce_on_random_dags() {
        let mut rng = StdRng::seed_from_u64(424242);
        for case in 0..50 {
            let n = rng.random_range(3..=10usize);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(0.4) {
                        edges.push((format!("N{i:02}"), format!("N{j:02}")));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let refs: Vec<(&str, &str)> =
                edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let g = chain_graph(&refs);
            let target = format!("N{:02}", n - 1);
            if g.node(&target.as_str().into()).is_none() {
                continue;
            }
            let scores: Vec<(String, f64)> = (0..n)
                .map(|i| (format!("N{i:02}"), rng.random::<f64>()))
                .collect();
            let score_refs: Vec<(&str, f64)> =
                scores.iter().map(|(s, v)| (s.as_str(), *v)).collect();
            let t = table(&target, &score_refs);
            let pruned_off = rank_paths(&g, &t, &target.as_str().into(), &cfg(1e18, 2.0)).unwrap();
            let brute =
                rank_paths_bruteforce(&g, &t, &target.as_str().into(), 2.0).unwrap();
            assert_eq!(pruned_off.len(), brute.len(), "case {case}");
            for (a, b) in pruned_off.iter().zip(&brute) {
                assert_eq!(a.path, b.path, "case {case}");
                assert!((a.score - b.score).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ranking_is_deterministic() {
        let g = chain_graph(&[("A", "B"), ("B", "Y"), ("A", "C"), ("C", "Y"), ("D", "B")]);
        let t = table("Y", &[("A", 0.5), ("B", 0.5), ("C", 0.5), ("D", 0.5)]);
        let one = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        let two = rank_paths(&g, &t, &"Y".into(), &cfg(2.0, 2.0)).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn scoring_pipeline_on_deterministic_chain() {
        let g = CausalGraph::new(
            [
                ("X", NodeKind::Endogenous),
                ("M", NodeKind::Endogenous),
                ("Y", NodeKind::Endogenous),
            ],
            &[("X", "M"), ("M", "Y")],
        )
        .unwrap();
        // M copies X, Y copies M; everything is forced.
        let dist = JointTable::new(
            vec!["X".into(), "M".into(), "Y".into()],
            vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let report = run_rca(&g, &dist, &"Y".into(), &RcaConfig::default()).unwrap();
        assert_eq!(report.scores.entries.len(), 2);
        for e in &report.scores.entries {
            assert!(e.error.is_none());
            assert!((e.score - 1.0).abs() < 1e-9, "{}: {}", e.var, e.score);
        }
        assert_eq!(report.top_root().unwrap().as_str(), "X");
        let text = report.render_table();
        assert!(text.contains("paths"));
        assert!(text.contains("X -> M -> Y"));
    }
}
