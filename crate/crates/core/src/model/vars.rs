use std::fmt;

use crate::network::Node;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    X,
    Y,
    Z,
    W,
    R,
    H,
    E,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VarKind::X => "x",
            VarKind::Y => "y",
            VarKind::Z => "z",
            VarKind::W => "w",
            VarKind::R => "r",
            VarKind::H => "h",
            VarKind::E => "e",
        };
        f.write_str(s)
    }
}

/// A decision variable of the model, identified by kind and indices.
///
/// Periods and phenomena are zero-based positions; `phen` indexes
/// `Instance::phenomena`, not the phenomenon id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    /// Sensor covers demand point for a phenomenon in a period.
    X { sensor: usize, dp: usize, period: usize, phen: usize },
    /// Sensor is on.
    Y { sensor: usize, period: usize },
    /// Arc `from -> to` carries the commodity sourced at `source`.
    Z { source: usize, from: usize, to: Node, period: usize, phen: usize },
    /// Sensor switches on (off in the previous period, or first period).
    W { sensor: usize, period: usize },
    /// Sensor actively senses the phenomenon.
    R { sensor: usize, period: usize, phen: usize },
    /// Demand point left uncovered.
    H { dp: usize, period: usize, phen: usize },
    /// Total energy drawn by the sensor over the horizon.
    E { sensor: usize },
}

impl VarRef {
    pub fn kind(&self) -> VarKind {
        match self {
            VarRef::X { .. } => VarKind::X,
            VarRef::Y { .. } => VarKind::Y,
            VarRef::Z { .. } => VarKind::Z,
            VarRef::W { .. } => VarKind::W,
            VarRef::R { .. } => VarKind::R,
            VarRef::H { .. } => VarKind::H,
            VarRef::E { .. } => VarKind::E,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.kind() != VarKind::E
    }

    /// Parses names such as `x_i3_j17_t0_g1` or `z_l0_i2_m1_t0_g0`.
    pub fn from_name(name: &str) -> Option<VarRef> {
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let idx = labelled(parts)?;
        let labels: String = idx.iter().map(|p| p.0).collect();
        let v: Vec<usize> = idx.iter().map(|p| p.1).collect();
        let r = match (kind, labels.as_str()) {
            ("x", "ijtg") => VarRef::X { sensor: v[0], dp: v[1], period: v[2], phen: v[3] },
            ("y", "it") => VarRef::Y { sensor: v[0], period: v[1] },
            ("w", "it") => VarRef::W { sensor: v[0], period: v[1] },
            ("r", "itg") => VarRef::R { sensor: v[0], period: v[1], phen: v[2] },
            ("h", "jtg") => VarRef::H { dp: v[0], period: v[1], phen: v[2] },
            ("e", "i") => VarRef::E { sensor: v[0] },
            ("z", "lijtg") => VarRef::Z {
                source: v[0],
                from: v[1],
                to: Node::Sensor(v[2]),
                period: v[3],
                phen: v[4],
            },
            ("z", "limtg") => VarRef::Z {
                source: v[0],
                from: v[1],
                to: Node::Sink(v[2]),
                period: v[3],
                phen: v[4],
            },
            _ => return None,
        };
        Some(r)
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarRef::X { sensor, dp, period, phen } => {
                write!(f, "x_i{sensor}_j{dp}_t{period}_g{phen}")
            }
            VarRef::Y { sensor, period } => write!(f, "y_i{sensor}_t{period}"),
            VarRef::W { sensor, period } => write!(f, "w_i{sensor}_t{period}"),
            VarRef::R { sensor, period, phen } => write!(f, "r_i{sensor}_t{period}_g{phen}"),
            VarRef::H { dp, period, phen } => write!(f, "h_j{dp}_t{period}_g{phen}"),
            VarRef::E { sensor } => write!(f, "e_i{sensor}"),
            VarRef::Z { source, from, to, period, phen } => match to {
                Node::Sensor(j) => write!(f, "z_l{source}_i{from}_j{j}_t{period}_g{phen}"),
                Node::Sink(m) => write!(f, "z_l{source}_i{from}_m{m}_t{period}_g{phen}"),
            },
        }
    }
}

fn labelled<'a>(parts: impl Iterator<Item = &'a str>) -> Option<Vec<(char, usize)>> {
    parts
        .map(|p| {
            let mut chars = p.chars();
            let label = chars.next()?;
            let digits = chars.as_str();
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((label, digits.parse().ok()?))
        })
        .collect()
}

/// Constraint family, numbered after the rows of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::C2,
        Family::C3,
        Family::C4,
        Family::C5,
        Family::C6,
        Family::C7,
        Family::C8,
        Family::C9,
        Family::C10,
        Family::C11,
        Family::C12,
    ];

    pub fn number(self) -> u8 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as u8 + 2
    }

    pub fn from_number(n: u8) -> Option<Family> {
        n.checked_sub(2).and_then(|k| Family::ALL.get(k as usize).copied())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.number())
    }
}

/// Family plus labelled index tuple, e.g. `c2_j4_t0_g1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintTag {
    pub family: Family,
    pub indices: Vec<(char, usize)>,
}

impl ConstraintTag {
    pub fn new(family: Family, indices: &[(char, usize)]) -> Self {
        Self {
            family,
            indices: indices.to_vec(),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn from_name(name: &str) -> Option<ConstraintTag> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let n: u8 = head.strip_prefix('c')?.parse().ok()?;
        let family = Family::from_number(n)?;
        Some(ConstraintTag {
            family,
            indices: labelled(parts)?,
        })
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.family.number())?;
        for (label, v) in &self.indices {
            write!(f, "_{label}{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn any_var() -> impl Strategy<Value = VarRef> {
        let n = 0usize..200;
        prop_oneof![
            (n.clone(), n.clone(), n.clone(), n.clone())
                .prop_map(|(a, b, c, d)| VarRef::X { sensor: a, dp: b, period: c, phen: d }),
            (n.clone(), n.clone()).prop_map(|(a, b)| VarRef::Y { sensor: a, period: b }),
            (n.clone(), n.clone()).prop_map(|(a, b)| VarRef::W { sensor: a, period: b }),
            (n.clone(), n.clone(), n.clone())
                .prop_map(|(a, b, c)| VarRef::R { sensor: a, period: b, phen: c }),
            (n.clone(), n.clone(), n.clone())
                .prop_map(|(a, b, c)| VarRef::H { dp: a, period: b, phen: c }),
            n.clone().prop_map(|a| VarRef::E { sensor: a }),
            (n.clone(), n.clone(), n.clone(), any::<bool>(), n.clone(), n).prop_map(
                |(l, i, j, sink, t, g)| VarRef::Z {
                    source: l,
                    from: i,
                    to: if sink { Node::Sink(j) } else { Node::Sensor(j) },
                    period: t,
                    phen: g,
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn names_parse_back(v in any_var()) {
            prop_assert_eq!(VarRef::from_name(&v.to_string()), Some(v));
        }
    }

    #[test]
    fn documented_name_shape() {
        let x = VarRef::X { sensor: 3, dp: 17, period: 0, phen: 1 };
        assert_eq!(x.to_string(), "x_i3_j17_t0_g1");
        assert_eq!(VarRef::from_name("x_i3_j17_t0"), None);
        assert_eq!(VarRef::from_name("q_i3"), None);
        assert_eq!(VarRef::from_name("y_i_t0"), None);
    }

    #[test]
    fn tag_names_round_trip() {
        let tag = ConstraintTag::new(Family::C12, &[('i', 4), ('t', 2)]);
        assert_eq!(tag.name(), "c12_i4_t2");
        assert_eq!(ConstraintTag::from_name("c12_i4_t2"), Some(tag));
        assert_eq!(ConstraintTag::from_name("c1_i4"), None);
        assert_eq!(ConstraintTag::from_name("c13_i4"), None);
    }
}
