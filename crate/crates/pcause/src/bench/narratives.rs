//! Bundled failure narratives: one fully parameterized model per
//! (model, scenario) pair, with a designated ground-truth root cause.
//!
//! Every non-root node carries a three-state noise variable — suppress,
//! faithful, spontaneous — so its conditional law is
//! `P(v=1 | pa) = spont + faithful * f(pa)` for a boolean trigger `f`.
//! A narrative injects its root cause by giving that node a large
//! spontaneous weight while keeping the rest of its chain faithful and the
//! other branches quiet. The committed fixture files under `fixtures/` are
//! the serialized form of these builders; a test keeps them in sync.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::{NodeKind, VariableId};

use super::models::{model, ModelId};
use super::scm::{FullScm, Mechanism, Prior};

/// Behavior of one endogenous node in a narrative.
#[derive(Debug, Clone, Copy)]
enum NodeLaw {
    /// Root node: fires with this probability.
    Root(f64),
    /// suppress / faithful / spontaneous mixture over the trigger.
    Noisy(f64, f64, f64),
    /// Same mixture, but the faithful mode fires when the trigger is
    /// absent. Keeps the counterfactual response of a confounded node on
    /// an observed slice, so its necessity stays identifiable.
    Inverted(f64, f64, f64),
}

/// One bundled narrative.
pub struct Narrative {
    pub id: &'static str,
    pub model: ModelId,
    pub target: &'static str,
    pub ground_truth: &'static str,
    /// The truth is a latent variable no pipeline over the observed graph
    /// can name.
    pub latent_truth: bool,
    /// Expected stand-in root when the truth is latent.
    pub expected_proxy: Option<&'static str>,
    pub default_n: usize,
    pub default_seed: u64,
    /// Probability that the confounding latent is active.
    confounder: f64,
    laws: &'static [(&'static str, NodeLaw)],
}

impl Narrative {
    pub fn build(&self) -> FullScm {
        build_narrative(self).expect("bundled narrative is well formed")
    }
}

use NodeLaw::{Inverted, Noisy, Root};

/// All bundled narratives, in reporting order.
pub static NARRATIVES: &[Narrative] = &[
    Narrative {
        id: "m1-n1",
        model: ModelId::M1,
        target: "OutageIncident",
        ground_truth: "MemoryLeak",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 11,
        confounder: 0.03,
        laws: &[
            ("NewDeploy", Root(0.10)),
            ("MemoryLeak", Noisy(0.08, 0.40, 0.52)),
            ("MemUsageHigh", Noisy(0.03, 0.95, 0.02)),
            ("ServiceCrash", Noisy(0.03, 0.95, 0.02)),
            ("OutageIncident", Noisy(0.06, 0.80, 0.14)),
        ],
    },
    Narrative {
        id: "m1-n2",
        model: ModelId::M1,
        target: "OutageIncident",
        ground_truth: "HeavyTraffic",
        latent_truth: true,
        expected_proxy: Some("ServiceCrash"),
        default_n: 200_000,
        default_seed: 12,
        confounder: 0.55,
        laws: &[
            ("NewDeploy", Root(0.05)),
            ("MemoryLeak", Noisy(0.38, 0.60, 0.02)),
            ("MemUsageHigh", Noisy(0.43, 0.55, 0.02)),
            ("ServiceCrash", Noisy(0.05, 0.92, 0.03)),
            ("OutageIncident", Noisy(0.04, 0.94, 0.02)),
        ],
    },
    Narrative {
        id: "m1-n3",
        model: ModelId::M1,
        target: "OutageIncident",
        ground_truth: "ServiceCrash",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 13,
        confounder: 0.05,
        laws: &[
            ("NewDeploy", Root(0.06)),
            ("MemoryLeak", Noisy(0.46, 0.50, 0.04)),
            ("MemUsageHigh", Noisy(0.26, 0.70, 0.04)),
            ("ServiceCrash", Noisy(0.07, 0.38, 0.55)),
            ("OutageIncident", Noisy(0.03, 0.95, 0.02)),
        ],
    },
    Narrative {
        id: "m1-n4",
        model: ModelId::M1,
        target: "OutageIncident",
        ground_truth: "MemUsageHigh",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 14,
        confounder: 0.02,
        laws: &[
            ("NewDeploy", Root(0.50)),
            ("MemoryLeak", Noisy(0.48, 0.50, 0.02)),
            ("MemUsageHigh", Inverted(0.05, 0.93, 0.02)),
            ("ServiceCrash", Noisy(0.04, 0.95, 0.01)),
            ("OutageIncident", Noisy(0.06, 0.80, 0.14)),
        ],
    },
    Narrative {
        id: "m2-n1",
        model: ModelId::M2,
        target: "OutageIncident",
        ground_truth: "DB_Latency",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 21,
        confounder: 0.02,
        laws: &[
            ("DB_Change", Root(0.08)),
            ("DB_Latency", Noisy(0.08, 0.38, 0.54)),
            ("MS-B_Latency", Noisy(0.05, 0.90, 0.05)),
            ("MS-A_Latency", Noisy(0.04, 0.92, 0.04)),
            ("MS-A_Threads", Noisy(0.04, 0.92, 0.04)),
            ("MS-A_Crash", Noisy(0.04, 0.92, 0.04)),
            ("MS-B_Error", Noisy(0.78, 0.20, 0.02)),
            ("MS-A_Error", Noisy(0.05, 0.92, 0.03)),
            ("OutageIncident", Noisy(0.07, 0.85, 0.08)),
        ],
    },
    Narrative {
        id: "m2-n2",
        model: ModelId::M2,
        target: "OutageIncident",
        ground_truth: "MS-A_Threads",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 22,
        confounder: 0.05,
        laws: &[
            ("DB_Change", Root(0.06)),
            ("DB_Latency", Noisy(0.42, 0.55, 0.03)),
            ("MS-B_Latency", Noisy(0.37, 0.60, 0.03)),
            ("MS-A_Latency", Noisy(0.39, 0.58, 0.03)),
            ("MS-A_Threads", Noisy(0.07, 0.40, 0.53)),
            ("MS-A_Crash", Noisy(0.04, 0.93, 0.03)),
            ("MS-B_Error", Noisy(0.43, 0.55, 0.02)),
            ("MS-A_Error", Noisy(0.38, 0.60, 0.02)),
            ("OutageIncident", Noisy(0.03, 0.95, 0.02)),
        ],
    },
    Narrative {
        id: "m2-n3",
        model: ModelId::M2,
        target: "OutageIncident",
        ground_truth: "MS-B_Error",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 23,
        confounder: 0.05,
        laws: &[
            ("DB_Change", Root(0.06)),
            ("DB_Latency", Noisy(0.42, 0.55, 0.03)),
            ("MS-B_Latency", Noisy(0.37, 0.60, 0.03)),
            ("MS-A_Latency", Noisy(0.43, 0.55, 0.02)),
            ("MS-A_Threads", Noisy(0.43, 0.55, 0.02)),
            ("MS-A_Crash", Noisy(0.38, 0.60, 0.02)),
            ("MS-B_Error", Noisy(0.07, 0.38, 0.55)),
            ("MS-A_Error", Noisy(0.04, 0.93, 0.03)),
            ("OutageIncident", Noisy(0.03, 0.95, 0.02)),
        ],
    },
    Narrative {
        id: "m2-n4",
        model: ModelId::M2,
        target: "OutageIncident",
        ground_truth: "MS-A_Latency",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 24,
        confounder: 0.12,
        laws: &[
            ("DB_Change", Root(0.06)),
            ("DB_Latency", Noisy(0.42, 0.55, 0.03)),
            ("MS-B_Latency", Noisy(0.37, 0.60, 0.03)),
            ("MS-A_Latency", Noisy(0.07, 0.40, 0.53)),
            ("MS-A_Threads", Noisy(0.05, 0.92, 0.03)),
            ("MS-A_Crash", Noisy(0.04, 0.93, 0.03)),
            ("MS-B_Error", Noisy(0.43, 0.55, 0.02)),
            ("MS-A_Error", Noisy(0.38, 0.60, 0.02)),
            ("OutageIncident", Noisy(0.03, 0.95, 0.02)),
        ],
    },
    Narrative {
        id: "m3-n1",
        model: ModelId::M3,
        target: "Website",
        ground_truth: "CachingService",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 31,
        confounder: 0.06,
        laws: &[
            ("ProductDB", Root(0.08)),
            ("OrderDB", Root(0.06)),
            ("ShippingCostService", Root(0.06)),
            ("CachingService", Noisy(0.05, 0.40, 0.55)),
            ("AuthService", Noisy(0.42, 0.55, 0.03)),
            ("ProductService", Noisy(0.05, 0.92, 0.03)),
            ("OrderService", Noisy(0.42, 0.55, 0.03)),
            ("API", Noisy(0.05, 0.93, 0.02)),
            ("www", Noisy(0.05, 0.93, 0.02)),
            ("Website", Noisy(0.06, 0.80, 0.14)),
        ],
    },
    Narrative {
        id: "m3-n2",
        model: ModelId::M3,
        target: "Website",
        ground_truth: "OrderDB",
        latent_truth: false,
        expected_proxy: None,
        default_n: 200_000,
        default_seed: 32,
        confounder: 0.06,
        laws: &[
            ("ProductDB", Root(0.06)),
            ("OrderDB", Root(0.55)),
            ("ShippingCostService", Root(0.06)),
            ("CachingService", Noisy(0.42, 0.55, 0.03)),
            ("AuthService", Noisy(0.42, 0.55, 0.03)),
            ("ProductService", Noisy(0.37, 0.60, 0.03)),
            ("OrderService", Noisy(0.05, 0.92, 0.03)),
            ("API", Noisy(0.05, 0.93, 0.02)),
            ("www", Noisy(0.05, 0.93, 0.02)),
            ("Website", Noisy(0.06, 0.80, 0.14)),
        ],
    },
];

pub fn narrative(id: &str) -> Option<&'static Narrative> {
    NARRATIVES.iter().find(|n| n.id == id)
}

fn build_narrative(n: &Narrative) -> Result<FullScm> {
    let base = model(n.model);
    let g = base.completed();
    g.validate()?;

    let law_of = |name: &VariableId| -> NodeLaw {
        n.laws
            .iter()
            .find(|(ln, _)| *ln == name.as_str())
            .map(|(_, law)| *law)
            .unwrap_or(Noisy(0.0, 1.0, 0.0))
    };

    // A confounded node cannot carry its own noise variable, so a declared
    // confounder's state is composite: its trigger bit (most significant)
    // followed by one three-way noise digit per child, independent under
    // the prior. Children read their own digit only.
    struct Shared {
        children: Vec<usize>,
        card: usize,
    }
    let mut shared: BTreeMap<usize, Shared> = BTreeMap::new();
    let mut priors: BTreeMap<usize, Prior> = BTreeMap::new();
    for u in g.declared_exogenous().collect::<Vec<_>>() {
        let children: Vec<usize> = g.children_of(u).to_vec();
        let card = 2 * 3usize.pow(children.len() as u32);
        let mut probs = vec![0.0; card];
        for (state, slot) in probs.iter_mut().enumerate() {
            let mut rest = state;
            let mut p = 1.0;
            for &c in children.iter().rev() {
                let digit = rest % 3;
                rest /= 3;
                let (suppress, faithful, spont) = match law_of(g.name(c)) {
                    Noisy(a, b, c) | Inverted(a, b, c) => (a, b, c),
                    Root(_) => {
                        return Err(crate::error::Error::BadModel(format!(
                            "confounded node {} must be noisy",
                            g.name(c)
                        )))
                    }
                };
                p *= [suppress, faithful, spont][digit];
            }
            p *= if rest == 1 { n.confounder } else { 1.0 - n.confounder };
            *slot = p;
        }
        shared.insert(u, Shared { children, card });
        priors.insert(u, Prior { probs });
    }
    let mut mechanisms: BTreeMap<usize, Mechanism> = BTreeMap::new();
    for v in g.endogenous() {
        let noise = g.exogenous_parent(v).expect("completed graph");
        let parents: Vec<usize> = g.parents_of(v).to_vec();
        let law = law_of(g.name(v));
        let dedicated = g.is_implicit(noise);
        if dedicated {
            match law {
                Root(p) => priors.insert(noise, Prior {
                    probs: vec![1.0 - p, p],
                }),
                Noisy(suppress, faithful, spont) | Inverted(suppress, faithful, spont) => priors
                    .insert(noise, Prior {
                        probs: vec![suppress, faithful, spont],
                    }),
            };
        }
        let noise_card = |p: usize| -> usize {
            if let Some(sh) = shared.get(&p) {
                sh.card
            } else if dedicated && p == noise {
                match law {
                    Root(_) => 2,
                    Noisy(..) | Inverted(..) => 3,
                }
            } else {
                2
            }
        };
        let cards: Vec<usize> = parents.iter().map(|&p| noise_card(p)).collect();
        let total: usize = cards.iter().product();
        let mut outputs = Vec::with_capacity(total);
        for cfg in 0..total {
            // Decode the mixed-radix configuration.
            let mut rest = cfg;
            let mut values: BTreeMap<usize, usize> = BTreeMap::new();
            for (&p, &card) in parents.iter().zip(&cards).rev() {
                values.insert(p, rest % card);
                rest /= card;
            }
            // The node's noise digit and the trigger inputs.
            let noise_digit = if let Some(sh) = shared.get(&noise) {
                let pos = sh
                    .children
                    .iter()
                    .position(|&c| c == v)
                    .expect("child of its confounder");
                let state = values[&noise];
                (state / 3usize.pow((sh.children.len() - 1 - pos) as u32)) % 3
            } else {
                values[&noise]
            };
            let fired = parents.iter().any(|&p| {
                if p == noise && !shared.contains_key(&noise) {
                    false // dedicated noise is not a trigger input
                } else if let Some(sh) = shared.get(&p) {
                    // The confounder triggers through its traffic bit.
                    values[&p] >= sh.card / 2
                } else if g.kind(p) == NodeKind::Endogenous {
                    values[&p] == 1
                } else {
                    false
                }
            });
            let out = match law {
                Root(_) => noise_digit == 1,
                Noisy(..) => match noise_digit {
                    0 => false,
                    1 => fired,
                    _ => true,
                },
                Inverted(..) => match noise_digit {
                    0 => false,
                    1 => !fired,
                    _ => true,
                },
            };
            outputs.push(out);
        }
        mechanisms.insert(v, Mechanism {
            parents,
            cards,
            outputs,
        });
    }
    FullScm::new(g, priors, mechanisms)
}

/// Committed fixture text for a bundled narrative id.
pub fn fixture_text(id: &str) -> Option<&'static str> {
    Some(match id {
        "m1-n1" => include_str!("../../fixtures/m1-n1.scm"),
        "m1-n2" => include_str!("../../fixtures/m1-n2.scm"),
        "m1-n3" => include_str!("../../fixtures/m1-n3.scm"),
        "m1-n4" => include_str!("../../fixtures/m1-n4.scm"),
        "m2-n1" => include_str!("../../fixtures/m2-n1.scm"),
        "m2-n2" => include_str!("../../fixtures/m2-n2.scm"),
        "m2-n3" => include_str!("../../fixtures/m2-n3.scm"),
        "m2-n4" => include_str!("../../fixtures/m2-n4.scm"),
        "m3-n1" => include_str!("../../fixtures/m3-n1.scm"),
        "m3-n2" => include_str!("../../fixtures/m3-n2.scm"),
        _ => return None,
    })
}
