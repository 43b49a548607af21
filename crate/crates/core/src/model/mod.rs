//! The multi-period coverage/routing/energy ILP: variable index space,
//! objective and constraint families, and a solver-agnostic LP text format.

mod lp;
mod vars;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{build_arcs, ArcSets, Instance};
use crate::network::{Network, Node};

pub use lp::{export_lp, parse_lp, ParseError};
pub use vars::{ConstraintTag, Family, VarKind, VarRef};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("arc sets were not derived from this instance")]
    ArcMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    /// Signed slack of `lhs (sense) rhs`; negative means violated.
    pub fn slack(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => rhs - lhs,
            Sense::Ge => lhs - rhs,
            Sense::Eq => -(lhs - rhs).abs(),
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for Sense {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarRef, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variable {
    pub var: VarRef,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

/// A minimization model over binary and bounded continuous variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IlpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(VarRef, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelStats {
    pub variables: BTreeMap<String, usize>,
    pub constraints: BTreeMap<String, usize>,
    pub total_variables: usize,
    pub binary_variables: usize,
    pub total_constraints: usize,
}

impl IlpModel {
    pub fn index(&self) -> HashMap<VarRef, usize> {
        self.variables
            .iter()
            .enumerate()
            .map(|(k, v)| (v.var, k))
            .collect()
    }

    pub fn n_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.binary).count()
    }

    /// Every variable referenced by a constraint or the objective is declared,
    /// and no constraint repeats a variable.
    pub fn undeclared(&self) -> Vec<VarRef> {
        let idx = self.index();
        let mut missing: Vec<VarRef> = self
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter().map(|t| t.0))
            .chain(self.objective.iter().map(|t| t.0))
            .filter(|v| !idx.contains_key(v))
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }

    pub fn stats(&self) -> ModelStats {
        let mut variables = BTreeMap::new();
        for v in &self.variables {
            *variables.entry(v.var.kind().to_string()).or_insert(0) += 1;
        }
        let mut constraints = BTreeMap::new();
        for c in &self.constraints {
            *constraints.entry(c.tag.family.to_string()).or_insert(0) += 1;
        }
        ModelStats {
            variables,
            constraints,
            total_variables: self.variables.len(),
            binary_variables: self.n_binaries(),
            total_constraints: self.constraints.len(),
        }
    }

    /// Equality up to the order of variables, constraints and terms.
    pub fn structurally_eq(&self, other: &IlpModel) -> bool {
        fn vars(m: &IlpModel) -> Vec<(VarRef, u64, u64, bool)> {
            let mut v: Vec<_> = m
                .variables
                .iter()
                .map(|v| (v.var, v.lower.to_bits(), v.upper.to_bits(), v.binary))
                .collect();
            v.sort();
            v
        }
        fn terms(t: &[(VarRef, f64)]) -> Vec<(VarRef, u64)> {
            let mut v: Vec<_> = t.iter().map(|&(r, c)| (r, c.to_bits())).collect();
            v.sort();
            v
        }
        fn rows(m: &IlpModel) -> Vec<(String, Vec<(VarRef, u64)>, &'static str, u64)> {
            let mut v: Vec<_> = m
                .constraints
                .iter()
                .map(|c| (c.tag.name(), terms(&c.terms), c.sense.symbol(), c.rhs.to_bits()))
                .collect();
            v.sort();
            v
        }
        vars(self) == vars(other)
            && rows(self) == rows(other)
            && terms(&self.objective) == terms(&other.objective)
    }
}

/// Builds the full model. Variables are declared in the order
/// y, w, r, x, h, z, e; x only exists for coverage arcs of demanded points and
/// z only for commodities whose source can sense the phenomenon.
pub fn build_model(instance: &Instance, arcs: &ArcSets) -> Result<IlpModel, ModelError> {
    if build_arcs(instance) != *arcs {
        return Err(ModelError::ArcMismatch);
    }
    let net = Network::new(instance, arcs);
    let n = instance.n_sensors();
    let periods = instance.periods;
    let ng = instance.n_phenomena();
    let nd = instance.n_demand_points();
    let maintenance = net.maintenance();
    let activation = net.activation();

    let mut m = IlpModel::default();
    let binary = |var| Variable {
        var,
        lower: 0.0,
        upper: 1.0,
        binary: true,
    };
    let z_ref = |l: usize, a: usize, t: usize, g: usize| VarRef::Z {
        source: l,
        from: net.arcs[a].from,
        to: net.arcs[a].to,
        period: t,
        phen: g,
    };

    for i in 0..n {
        for t in 0..periods {
            m.variables.push(binary(VarRef::Y { sensor: i, period: t }));
        }
    }
    for i in 0..n {
        for t in 0..periods {
            m.variables.push(binary(VarRef::W { sensor: i, period: t }));
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for &i in &net.sources[g] {
                m.variables.push(binary(VarRef::R { sensor: i, period: t, phen: g }));
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for &(i, j) in &net.coverage[g] {
                m.variables.push(binary(VarRef::X { sensor: i, dp: j, period: t, phen: g }));
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for j in (0..nd).filter(|&j| instance.demands(j, g)) {
                m.variables.push(binary(VarRef::H { dp: j, period: t, phen: g }));
            }
        }
    }
    for t in 0..periods {
        for g in 0..ng {
            for &l in &net.sources[g] {
                for a in net.commodity_arcs(l) {
                    m.variables.push(binary(z_ref(l, a, t, g)));
                }
            }
        }
    }
    for i in 0..n {
        m.variables.push(Variable {
            var: VarRef::E { sensor: i },
            lower: 0.0,
            upper: instance.device.battery_capacity,
            binary: false,
        });
    }

    let mut push = |terms: Vec<(VarRef, f64)>, sense, rhs, tag| {
        m.constraints.push(LinearConstraint {
            terms,
            sense,
            rhs,
            tag,
        })
    };

    // C2: every demanded (j, t, g) is covered or penalized
    for t in 0..periods {
        for g in 0..ng {
            for j in (0..nd).filter(|&j| instance.demands(j, g)) {
                let mut terms: Vec<(VarRef, f64)> = net.coverers[g][j]
                    .iter()
                    .map(|&i| (VarRef::X { sensor: i, dp: j, period: t, phen: g }, 1.0))
                    .collect();
                terms.push((VarRef::H { dp: j, period: t, phen: g }, 1.0));
                push(terms, Sense::Ge, 1.0, ConstraintTag::new(Family::C2, &[('j', j), ('t', t), ('g', g)]));
            }
        }
    }
    // C3: covering requires sensing
    for t in 0..periods {
        for g in 0..ng {
            for &(i, j) in &net.coverage[g] {
                push(
                    vec![
                        (VarRef::X { sensor: i, dp: j, period: t, phen: g }, 1.0),
                        (VarRef::R { sensor: i, period: t, phen: g }, -1.0),
                    ],
                    Sense::Le,
                    0.0,
                    ConstraintTag::new(Family::C3, &[('i', i), ('j', j), ('t', t), ('g', g)]),
                );
            }
        }
    }
    // C4: sensing requires the node to be on
    for t in 0..periods {
        for g in 0..ng {
            for &i in &net.sources[g] {
                push(
                    vec![
                        (VarRef::R { sensor: i, period: t, phen: g }, 1.0),
                        (VarRef::Y { sensor: i, period: t }, -1.0),
                    ],
                    Sense::Le,
                    0.0,
                    ConstraintTag::new(Family::C4, &[('i', i), ('t', t), ('g', g)]),
                );
            }
        }
    }
    // C5: conservation at every sensor other than the source
    for t in 0..periods {
        for g in 0..ng {
            for &l in &net.sources[g] {
                for j in (0..n).filter(|&j| j != l) {
                    let mut terms: Vec<(VarRef, f64)> =
                        net.in_arcs[j].iter().map(|&a| (z_ref(l, a, t, g), 1.0)).collect();
                    terms.extend(
                        net.out_arcs[j]
                            .iter()
                            .filter(|&&a| net.arcs[a].to != Node::Sensor(l))
                            .map(|&a| (z_ref(l, a, t, g), -1.0)),
                    );
                    if terms.is_empty() {
                        continue;
                    }
                    push(
                        terms,
                        Sense::Eq,
                        0.0,
                        ConstraintTag::new(Family::C5, &[('l', l), ('j', j), ('t', t), ('g', g)]),
                    );
                }
            }
        }
    }
    // C6: a sensing source emits exactly one unit
    for t in 0..periods {
        for g in 0..ng {
            for &l in &net.sources[g] {
                let mut terms: Vec<(VarRef, f64)> =
                    net.out_arcs[l].iter().map(|&a| (z_ref(l, a, t, g), 1.0)).collect();
                terms.push((VarRef::R { sensor: l, period: t, phen: g }, -1.0));
                push(
                    terms,
                    Sense::Eq,
                    0.0,
                    ConstraintTag::new(Family::C6, &[('l', l), ('t', t), ('g', g)]),
                );
            }
        }
    }
    // C7/C8: both sensor endpoints of a used arc are on
    for t in 0..periods {
        for g in 0..ng {
            for &l in &net.sources[g] {
                for a in net.commodity_arcs(l) {
                    let arc = net.arcs[a];
                    let z = z_ref(l, a, t, g);
                    let head = match arc.to {
                        Node::Sensor(j) => ('j', j),
                        Node::Sink(s) => ('m', s),
                    };
                    let idx = [('l', l), ('i', arc.from), head, ('t', t), ('g', g)];
                    push(
                        vec![(z, 1.0), (VarRef::Y { sensor: arc.from, period: t }, -1.0)],
                        Sense::Le,
                        0.0,
                        ConstraintTag::new(Family::C7, &idx),
                    );
                    if let Node::Sensor(j) = arc.to {
                        push(
                            vec![(z, 1.0), (VarRef::Y { sensor: j, period: t }, -1.0)],
                            Sense::Le,
                            0.0,
                            ConstraintTag::new(Family::C8, &idx),
                        );
                    }
                }
            }
        }
    }
    // C9: energy balance of every sensor
    for i in 0..n {
        let mut terms = Vec::new();
        for t in 0..periods {
            if maintenance != 0.0 {
                terms.push((VarRef::Y { sensor: i, period: t }, maintenance));
            }
            if activation != 0.0 {
                terms.push((VarRef::W { sensor: i, period: t }, activation));
            }
            for g in 0..ng {
                for &l in &net.sources[g] {
                    if l != i && net.receive[g] != 0.0 {
                        for &a in &net.in_arcs[i] {
                            terms.push((z_ref(l, a, t, g), net.receive[g]));
                        }
                    }
                    for &a in &net.out_arcs[i] {
                        let cost = net.transmit[g][a];
                        if net.arcs[a].to != Node::Sensor(l) && cost != 0.0 {
                            terms.push((z_ref(l, a, t, g), cost));
                        }
                    }
                }
            }
        }
        terms.push((VarRef::E { sensor: i }, -1.0));
        push(terms, Sense::Le, 0.0, ConstraintTag::new(Family::C9, &[('i', i)]));
    }
    // C11/C12: activation events
    for i in 0..n {
        push(
            vec![
                (VarRef::W { sensor: i, period: 0 }, 1.0),
                (VarRef::Y { sensor: i, period: 0 }, -1.0),
            ],
            Sense::Ge,
            0.0,
            ConstraintTag::new(Family::C11, &[('i', i)]),
        );
    }
    for i in 0..n {
        for t in 1..periods {
            push(
                vec![
                    (VarRef::W { sensor: i, period: t }, 1.0),
                    (VarRef::Y { sensor: i, period: t }, -1.0),
                    (VarRef::Y { sensor: i, period: t - 1 }, 1.0),
                ],
                Sense::Ge,
                0.0,
                ConstraintTag::new(Family::C12, &[('i', i), ('t', t)]),
            );
        }
    }

    for i in 0..n {
        m.objective.push((VarRef::E { sensor: i }, 1.0));
    }
    for t in 0..periods {
        for g in 0..ng {
            let eh = instance.penalties.uncovered[g];
            if eh != 0.0 {
                for j in (0..nd).filter(|&j| instance.demands(j, g)) {
                    m.objective.push((VarRef::H { dp: j, period: t, phen: g }, eh));
                }
            }
            let eg = instance.penalties.activation[g];
            if eg != 0.0 {
                for &i in &net.sources[g] {
                    m.objective.push((VarRef::R { sensor: i, period: t, phen: g }, eg));
                }
            }
        }
    }
    Ok(m)
}
