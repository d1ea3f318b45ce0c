//! Canonicalization of exogenous variables: each latent is replaced by a
//! categorical variable enumerating every deterministic mechanism tuple of
//! its confounded component.
//!
//! Encoding conventions, fixed once for the whole crate:
//! - component members are ordered by the graph's topological order and the
//!   topologically first member occupies the most significant digits of the
//!   canonical state;
//! - a member's mechanism index reads its output column over parent
//!   configurations as a binary number whose most significant bit belongs
//!   to the lexicographically smallest configuration;
//! - parent configurations enumerate the member's endogenous parents in
//!   declaration order, first parent as most significant bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, Component, VariableId};

/// Layout of one endogenous member inside a canonical space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberLayout {
    pub variable: VariableId,
    /// Endogenous parents in declaration order.
    pub parents: Vec<VariableId>,
    /// Number of parent configurations (2^parents).
    pub config_count: u32,
    /// Number of mechanisms (2^config_count).
    pub mechanism_count: u64,
    /// Offset of this member's bits in the global bit numbering.
    pub bit_offset: u32,
}

/// Canonical state space of one confounded component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalSpace {
    /// Label of the exogenous variable this space replaces.
    pub exogenous: VariableId,
    members: Vec<MemberLayout>,
    cardinality: u64,
    bit_count: u32,
}

/// Deterministic mechanism for one variable: output per parent configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismTable {
    pub variable: VariableId,
    pub parents: Vec<VariableId>,
    /// Outputs indexed by parent configuration (ascending binary order).
    pub outputs: Vec<bool>,
}

impl MechanismTable {
    /// Evaluates the mechanism at a parent assignment given as a lookup.
    pub fn evaluate<F>(&self, mut value_of: F) -> Result<bool>
    where
        F: FnMut(&VariableId) -> Option<bool>,
    {
        let mut cfg = 0usize;
        for p in &self.parents {
            let v = value_of(p).ok_or_else(|| Error::MissingParentValue(p.to_string()))?;
            cfg = (cfg << 1) | v as usize;
        }
        Ok(self.outputs[cfg])
    }
}

impl CanonicalSpace {
    /// Builds the canonical space of `component` in `graph`.
    pub fn new(graph: &CausalGraph, component: &Component) -> CanonicalSpace {
        let rank = graph.topo_rank();
        let mut members: Vec<usize> = component.members.clone();
        members.sort_by_key(|&m| rank[m]);

        let mut layouts = Vec::with_capacity(members.len());
        let mut cardinality = 1u64;
        let mut bit_offset = 0u32;
        for &m in &members {
            let parents: Vec<VariableId> = graph
                .endo_parents(m)
                .into_iter()
                .map(|p| graph.name(p).clone())
                .collect();
            let config_count = 1u32 << parents.len();
            let mechanism_count = 1u64 << config_count;
            layouts.push(MemberLayout {
                variable: graph.name(m).clone(),
                parents,
                config_count,
                mechanism_count,
                bit_offset,
            });
            cardinality *= mechanism_count;
            bit_offset += config_count;
        }
        let exogenous = component
            .exogenous
            .map(|u| graph.name(u).clone())
            .unwrap_or_else(|| VariableId::new(format!("u({})", layouts[0].variable)));
        CanonicalSpace {
            exogenous,
            members: layouts,
            cardinality,
            bit_count: bit_offset,
        }
    }

    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    pub fn bit_count(&self) -> u32 {
        self.bit_count
    }

    pub fn members(&self) -> &[MemberLayout] {
        &self.members
    }

    pub fn member(&self, v: &VariableId) -> Option<&MemberLayout> {
        self.members.iter().find(|m| &m.variable == v)
    }

    fn member_index(&self, v: &VariableId) -> Result<usize> {
        self.members
            .iter()
            .position(|m| &m.variable == v)
            .ok_or_else(|| Error::BadVariable(v.to_string()))
    }

    fn check_state(&self, state: u64) -> Result<()> {
        if state >= self.cardinality {
            return Err(Error::IndexOutOfRange {
                state,
                cardinality: self.cardinality,
            });
        }
        Ok(())
    }

    /// Mechanism index of `member` under canonical state `state`.
    fn mechanism_index(&self, state: u64, member: usize) -> u64 {
        let mut rest = state;
        for m in self.members.iter().skip(member + 1) {
            rest /= m.mechanism_count;
        }
        rest % self.members[member].mechanism_count
    }

    /// Recomposes a canonical state from per-member mechanism indices.
    pub fn encode(&self, mechanisms: &[u64]) -> u64 {
        debug_assert_eq!(mechanisms.len(), self.members.len());
        let mut state = 0u64;
        for (m, &mech) in self.members.iter().zip(mechanisms) {
            state = state * m.mechanism_count + mech;
        }
        state
    }

    /// Mechanism table of `variable` under canonical state `state`.
    pub fn decode(&self, state: u64, variable: &VariableId) -> Result<MechanismTable> {
        self.check_state(state)?;
        let mi = self.member_index(variable)?;
        let layout = &self.members[mi];
        let mech = self.mechanism_index(state, mi);
        let outputs = (0..layout.config_count)
            .map(|cfg| (mech >> (layout.config_count - 1 - cfg)) & 1 == 1)
            .collect();
        Ok(MechanismTable {
            variable: layout.variable.clone(),
            parents: layout.parents.clone(),
            outputs,
        })
    }

    /// Evaluates `variable`'s mechanism under `state` at a parent
    /// assignment.
    pub fn apply<F>(&self, state: u64, variable: &VariableId, value_of: F) -> Result<bool>
    where
        F: FnMut(&VariableId) -> Option<bool>,
    {
        self.check_state(state)?;
        self.decode(state, variable)?.evaluate(value_of)
    }

    /// Global bit index of (member, parent configuration).
    pub fn bit_index(&self, variable: &VariableId, config: u32) -> Result<u32> {
        let mi = self.member_index(variable)?;
        debug_assert!(config < self.members[mi].config_count);
        Ok(self.members[mi].bit_offset + config)
    }

    /// Value of one response bit under a canonical state: the output of
    /// `bit`'s member at `bit`'s parent configuration.
    pub fn state_bit(&self, state: u64, bit: u32) -> bool {
        let mi = self
            .members
            .iter()
            .position(|m| bit < m.bit_offset + m.config_count)
            .expect("bit within space");
        let layout = &self.members[mi];
        let cfg = bit - layout.bit_offset;
        let mech = self.mechanism_index(state, mi);
        (mech >> (layout.config_count - 1 - cfg)) & 1 == 1
    }

    /// States consistent with a set of (bit, value) requirements.
    pub fn states_matching(&self, fixes: &[(u32, bool)]) -> impl Iterator<Item = u64> + '_ {
        let fixes = fixes.to_vec();
        (0..self.cardinality).filter(move |&u| {
            fixes.iter().all(|&(bit, val)| self.state_bit(u, bit) == val)
        })
    }

    /// Stable text rendering of the full decode table, for inspection and
    /// golden tests.
    pub fn decode_table_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "canonical {} cardinality {} bits {}",
            self.exogenous, self.cardinality, self.bit_count
        );
        for m in &self.members {
            let parents: Vec<String> = m.parents.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(
                out,
                "member {} parents [{}] mechanisms {}",
                m.variable,
                parents.join(","),
                m.mechanism_count
            );
        }
        for u in 0..self.cardinality {
            let mut cols = Vec::new();
            for m in &self.members {
                let table = self.decode(u, &m.variable).expect("state in range");
                let bits: String = table
                    .outputs
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect();
                cols.push(format!("{}:{}", m.variable, bits));
            }
            let _ = writeln!(out, "state {u} {}", cols.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeKind;

    fn service_chain() -> CausalGraph {
        CausalGraph::new(
            [
                ("T", NodeKind::Endogenous),
                ("S", NodeKind::Endogenous),
                ("X", NodeKind::Endogenous),
                ("Z", NodeKind::Endogenous),
                ("Y", NodeKind::Endogenous),
                ("U1", NodeKind::Exogenous),
                ("U2", NodeKind::Exogenous),
                ("U5", NodeKind::Exogenous),
                ("U6", NodeKind::Exogenous),
            ],
            &[
                ("X", "Z"),
                ("Z", "Y"),
                ("S", "Z"),
                ("T", "S"),
                ("U1", "X"),
                ("U1", "Y"),
                ("U2", "Z"),
                ("U5", "S"),
                ("U6", "T"),
            ],
        )
        .unwrap()
    }

    fn space_of(g: &CausalGraph, exo: &str) -> CanonicalSpace {
        let comp = g
            .c_components()
            .into_iter()
            .find(|c| g.name(c.exogenous.unwrap()).as_str() == exo)
            .unwrap();
        CanonicalSpace::new(g, &comp)
    }

    #[test]
    fn cardinalities_match_worked_example() {
        let g = service_chain();
        assert_eq!(space_of(&g, "U2").cardinality(), 16);
        assert_eq!(space_of(&g, "U1").cardinality(), 8);
        assert_eq!(space_of(&g, "U5").cardinality(), 4);
        // Parentless singleton: just the two constant mechanisms.
        assert_eq!(space_of(&g, "U6").cardinality(), 2);
    }

    #[test]
    fn confounded_pair_layout_puts_first_member_high() {
        let g = service_chain();
        let u1 = space_of(&g, "U1");
        // X (parentless) is the high digit: states 0..=3 fix X = 0.
        for j in 0..8u64 {
            let fx = u1.decode(j, &"X".into()).unwrap();
            assert_eq!(fx.outputs, vec![j >= 4]);
            let fy = u1.decode(j, &"Y".into()).unwrap();
            let expected = match j % 4 {
                0 => vec![false, false], // constant 0
                1 => vec![false, true],  // copy Z
                2 => vec![true, false],  // negate Z
                _ => vec![true, true],   // constant 1
            };
            assert_eq!(fy.outputs, expected, "state {j}");
        }
    }

    #[test]
    fn single_member_bits_read_high_to_low() {
        let g = service_chain();
        let u2 = space_of(&g, "U2");
        // State k has bits b0 b1 b2 b3 (b0 most significant); configuration
        // (s, x) = (0, 1) reads b1.
        let f = |k: u64, s: bool, x: bool| {
            u2.apply(k, &"Z".into(), |p| {
                if p.as_str() == "S" {
                    Some(s)
                } else if p.as_str() == "X" {
                    Some(x)
                } else {
                    None
                }
            })
            .unwrap()
        };
        assert!(f(0b0101, false, true));
        assert!(!f(0b0101, false, false));
        assert!(f(0b0101, true, true));
        assert!(!f(0b0101, true, false));
        for k in 0..16u64 {
            assert_eq!(f(k, false, false), (k >> 3) & 1 == 1);
            assert_eq!(f(k, false, true), (k >> 2) & 1 == 1);
            assert_eq!(f(k, true, false), (k >> 1) & 1 == 1);
            assert_eq!(f(k, true, true), k & 1 == 1);
        }
    }

    #[test]
    fn apply_on_confounded_pair() {
        let g = service_chain();
        let u1 = space_of(&g, "U1");
        // Y under state 0 is constant 0; under state 3 it is constant 1.
        assert!(!u1.apply(0, &"Y".into(), |_| Some(false)).unwrap());
        assert!(!u1.apply(0, &"Y".into(), |_| Some(true)).unwrap());
        assert!(u1.apply(3, &"Y".into(), |_| Some(false)).unwrap());
        // X under state 5 is constant 1.
        assert!(u1.apply(5, &"X".into(), |_| None).unwrap());
    }

    #[test]
    fn out_of_range_state_rejected() {
        let g = service_chain();
        let u1 = space_of(&g, "U1");
        let err = u1.decode(8, &"X".into()).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
    }

    #[test]
    fn missing_parent_value_rejected() {
        let g = service_chain();
        let u2 = space_of(&g, "U2");
        let err = u2.apply(3, &"Z".into(), |_| None).unwrap_err();
        assert!(matches!(err, Error::MissingParentValue(_)));
    }

    #[test]
    fn encode_inverts_decode() {
        let g = service_chain();
        for exo in ["U1", "U2", "U5"] {
            let space = space_of(&g, exo);
            for u in 0..space.cardinality() {
                let mechs: Vec<u64> = space
                    .members()
                    .iter()
                    .enumerate()
                    .map(|(i, _)| space.mechanism_index(u, i))
                    .collect();
                assert_eq!(space.encode(&mechs), u);
            }
        }
    }

    #[test]
    fn state_bits_agree_with_decode() {
        let g = service_chain();
        let space = space_of(&g, "U1");
        for u in 0..space.cardinality() {
            for m in space.members() {
                let table = space.decode(u, &m.variable).unwrap();
                for cfg in 0..m.config_count {
                    let bit = space.bit_index(&m.variable, cfg).unwrap();
                    assert_eq!(space.state_bit(u, bit), table.outputs[cfg as usize]);
                }
            }
        }
    }

    #[test]
    fn states_matching_selects_consistent_states() {
        let g = service_chain();
        let space = space_of(&g, "U1");
        // X's single bit set to 1: exactly states 4..=7.
        let bit = space.bit_index(&"X".into(), 0).unwrap();
        let got: Vec<u64> = space.states_matching(&[(bit, true)]).collect();
        assert_eq!(got, vec![4, 5, 6, 7]);
    }
}
