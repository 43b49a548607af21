//! Index structures derived once from an instance and its arc sets: routing
//! arcs with per-phenomenon energy, coverage restricted to demanded points,
//! and the candidate sources of every phenomenon.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::{data_volume_bits, ArcSets, Instance};

/// Head of a routing arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Sensor(usize),
    Sink(usize),
}

impl Node {
    pub fn sensor(self) -> Option<usize> {
        match self {
            Node::Sensor(i) => Some(i),
            Node::Sink(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteArc {
    pub from: usize,
    pub to: Node,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Network<'a> {
    pub instance: &'a Instance,
    /// Sensor-to-sensor arcs followed by sensor-to-sink arcs.
    pub arcs: Vec<RouteArc>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    /// `transmit[g][a]`: energy to send one period of phenomenon `g` over arc `a`.
    pub transmit: Vec<Vec<f64>>,
    /// `receive[g]`: energy to receive one period of phenomenon `g`.
    pub receive: Vec<f64>,
    /// `coverage[g]`: coverage arcs whose demand point demands `g`.
    pub coverage: Vec<Vec<(usize, usize)>>,
    /// `covers[g][i]`: demand points sensor `i` can cover for `g`.
    pub covers: Vec<Vec<Vec<usize>>>,
    /// `coverers[g][j]`: sensors able to cover demand point `j` for `g`.
    pub coverers: Vec<Vec<Vec<usize>>>,
    /// `sources[g]`: sensors with at least one coverage arc for `g`.
    pub sources: Vec<Vec<usize>>,
    pub is_source: Vec<Vec<bool>>,
    arc_lookup: HashMap<(usize, Node), usize>,
}

impl<'a> Network<'a> {
    pub fn new(instance: &'a Instance, arc_sets: &ArcSets) -> Self {
        let n = instance.n_sensors();
        let nd = instance.n_demand_points();
        let ng = instance.n_phenomena();

        let mut arcs: Vec<RouteArc> = arc_sets
            .comm
            .iter()
            .map(|&(i, j)| RouteArc {
                from: i,
                to: Node::Sensor(j),
                length: instance.sensors[i].distance(&instance.sensors[j]),
            })
            .collect();
        arcs.extend(arc_sets.to_sink.iter().map(|&(i, m)| RouteArc {
            from: i,
            to: Node::Sink(m),
            length: instance.sensors[i].distance(&instance.sinks[m]),
        }));
        let arc_lookup = arcs.iter().enumerate().map(|(k, a)| ((a.from, a.to), k)).collect();
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        for (a, arc) in arcs.iter().enumerate() {
            out_arcs[arc.from].push(a);
            if let Node::Sensor(j) = arc.to {
                in_arcs[j].push(a);
            }
        }

        let device = &instance.device;
        let mut transmit = Vec::with_capacity(ng);
        let mut receive = Vec::with_capacity(ng);
        for p in &instance.phenomena {
            let volume = data_volume_bits(p, instance.period_length_min);
            transmit.push(
                arcs.iter()
                    .map(|a| volume * device.transmit.per_bit(a.length))
                    .collect(),
            );
            receive.push(volume * device.receive_energy_per_bit);
        }

        let mut coverage = Vec::with_capacity(ng);
        let mut covers = Vec::with_capacity(ng);
        let mut coverers = Vec::with_capacity(ng);
        let mut sources = Vec::with_capacity(ng);
        let mut is_source = Vec::with_capacity(ng);
        for g in 0..ng {
            let cov: Vec<(usize, usize)> = arc_sets.coverage[g]
                .iter()
                .copied()
                .filter(|&(_, j)| instance.demands(j, g))
                .collect();
            let mut by_sensor = vec![Vec::new(); n];
            let mut by_dp = vec![Vec::new(); nd];
            for &(i, j) in &cov {
                by_sensor[i].push(j);
                by_dp[j].push(i);
            }
            let flags: Vec<bool> = by_sensor.iter().map(|c| !c.is_empty()).collect();
            sources.push((0..n).filter(|&i| flags[i]).collect());
            is_source.push(flags);
            coverage.push(cov);
            covers.push(by_sensor);
            coverers.push(by_dp);
        }

        Network {
            instance,
            arcs,
            out_arcs,
            in_arcs,
            transmit,
            receive,
            coverage,
            covers,
            coverers,
            sources,
            is_source,
            arc_lookup,
        }
    }

    pub fn arc_index(&self, from: usize, to: Node) -> Option<usize> {
        self.arc_lookup.get(&(from, to)).copied()
    }

    pub fn n_sensors(&self) -> usize {
        self.instance.n_sensors()
    }

    pub fn periods(&self) -> usize {
        self.instance.periods
    }

    pub fn n_phenomena(&self) -> usize {
        self.instance.n_phenomena()
    }

    /// Maintenance energy charged per (sensor, period) the node is on.
    pub fn maintenance(&self) -> f64 {
        self.instance.fixed_energy_multiplier() * self.instance.device.maintenance_energy
    }

    /// Activation energy charged per off-to-on transition.
    pub fn activation(&self) -> f64 {
        self.instance.fixed_energy_multiplier() * self.instance.device.activation_energy
    }

    /// Arcs usable by the commodity sourced at `source` (no arc enters the source).
    pub fn commodity_arcs(&self, source: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.arcs.len()).filter(move |&a| self.arcs[a].to != Node::Sensor(source))
    }

    /// Energy cost of crossing arc `a` for phenomenon `g`: transmit at the
    /// tail plus receive at a sensor head.
    pub fn hop_cost(&self, g: usize, a: usize) -> f64 {
        let rx = match self.arcs[a].to {
            Node::Sensor(_) => self.receive[g],
            Node::Sink(_) => 0.0,
        };
        self.transmit[g][a] + rx
    }
}
