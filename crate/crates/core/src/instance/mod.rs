//! Problem datum: geometry, phenomena, device energy profile, penalties and
//! planning horizon, plus the derived arc families and energy constants.

mod arcs;
mod energy;
mod generate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arcs::{build_arcs, ArcSets};
pub use energy::{data_volume_bits, derive_energy_constants, EnergyConstants};
pub use generate::{gen_grid, gen_random, paper_scenario, ScenarioConfig, SinkLayout};

pub const INSTANCE_FORMAT: &str = "wsn-instance/1";

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} at index {index} lies outside the {width} x {height} area")]
    OutOfArea {
        what: &'static str,
        index: usize,
        width: f64,
        height: f64,
    },
    #[error("unsupported instance format {0:?}")]
    Format(String),
    #[error("malformed instance json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: &Point2D) -> bool {
        p.is_finite() && (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(self.width / 2.0, self.height / 2.0)
    }
}

/// A sensed quantity with its own coverage radius and sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phenomenon {
    pub id: u32,
    #[serde(rename = "coverage_radius_m")]
    pub coverage_radius: f64,
    #[serde(rename = "sampling_rate_per_min")]
    pub sampling_rate: f64,
    pub bits_per_sample: u32,
}

impl Phenomenon {
    pub fn new(id: u32, coverage_radius: f64, sampling_rate: f64, bits_per_sample: u32) -> Self {
        Self {
            id,
            coverage_radius,
            sampling_rate,
            bits_per_sample,
        }
    }
}

/// Per-bit transmit cost as a function of the hop length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TransmitCost {
    Constant { per_bit: f64 },
    /// `base_per_bit + per_bit_per_m2 * d^2`
    Quadratic { base_per_bit: f64, per_bit_per_m2: f64 },
}

impl TransmitCost {
    pub fn per_bit(&self, distance: f64) -> f64 {
        match *self {
            TransmitCost::Constant { per_bit } => per_bit,
            TransmitCost::Quadratic {
                base_per_bit,
                per_bit_per_m2,
            } => base_per_bit + per_bit_per_m2 * distance * distance,
        }
    }

    fn coefficients(&self) -> [f64; 2] {
        match *self {
            TransmitCost::Constant { per_bit } => [per_bit, 0.0],
            TransmitCost::Quadratic {
                base_per_bit,
                per_bit_per_m2,
            } => [base_per_bit, per_bit_per_m2],
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match *self {
            TransmitCost::Constant { per_bit } => TransmitCost::Constant {
                per_bit: per_bit * factor,
            },
            TransmitCost::Quadratic {
                base_per_bit,
                per_bit_per_m2,
            } => TransmitCost::Quadratic {
                base_per_bit: base_per_bit * factor,
                per_bit_per_m2: per_bit_per_m2 * factor,
            },
        }
    }
}

/// Energy profile shared by every sensor of the network, in abstract energy units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub battery_capacity: f64,
    pub activation_energy: f64,
    /// Drawn once per period while the node is on.
    pub maintenance_energy: f64,
    pub receive_energy_per_bit: f64,
    pub transmit: TransmitCost,
    pub bit_rate_bps: f64,
}

impl Default for DeviceProfile {
    /// One period of sensing costs one unit; the battery lasts a bit over three
    /// periods of continuous sensing of both default phenomena.
    fn default() -> Self {
        Self {
            battery_capacity: 4.5,
            activation_energy: 0.2,
            maintenance_energy: 1.0,
            receive_energy_per_bit: 5.0e-5,
            transmit: TransmitCost::Constant { per_bit: 1.0e-4 },
            bit_rate_bps: 250_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    pub position: Point2D,
    /// Phenomenon ids sensed at this point.
    pub demands: BTreeSet<u32>,
}

/// Penalty constants, one entry per phenomenon (same order as `Instance::phenomena`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalties {
    /// EH: charged per uncovered (demand point, period) of the phenomenon.
    pub uncovered: Vec<f64>,
    /// EG: charged per (sensor, period) actively sensing the phenomenon.
    pub activation: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Charge maintenance and activation energy once per phenomenon instead of
    /// once per node and period.
    #[serde(default)]
    pub fixed_energy_per_phenomenon: bool,
}

impl ModelOptions {
    fn is_default(&self) -> bool {
        *self == ModelOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub format: String,
    pub area: Area,
    pub sensors: Vec<Point2D>,
    pub demand_points: Vec<DemandPoint>,
    pub sinks: Vec<Point2D>,
    pub phenomena: Vec<Phenomenon>,
    pub periods: usize,
    pub period_length_min: f64,
    pub comm_radius_m: f64,
    pub device: DeviceProfile,
    pub penalties: Penalties,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "ModelOptions::is_default")]
    pub options: ModelOptions,
}

impl Instance {
    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn n_demand_points(&self) -> usize {
        self.demand_points.len()
    }

    pub fn n_sinks(&self) -> usize {
        self.sinks.len()
    }

    pub fn n_phenomena(&self) -> usize {
        self.phenomena.len()
    }

    /// Position of a phenomenon id in `phenomena`.
    pub fn phenomenon_index(&self, id: u32) -> Option<usize> {
        self.phenomena.iter().position(|p| p.id == id)
    }

    /// Whether demand point `j` demands the phenomenon at index `g`.
    pub fn demands(&self, j: usize, g: usize) -> bool {
        self.demand_points[j].demands.contains(&self.phenomena[g].id)
    }

    /// Number of (demand point, period, phenomenon) triples that must be covered.
    pub fn demanded_triples(&self) -> usize {
        let per_period: usize = self
            .demand_points
            .iter()
            .map(|dp| {
                self.phenomena
                    .iter()
                    .filter(|p| dp.demands.contains(&p.id))
                    .count()
            })
            .sum();
        per_period * self.periods
    }

    /// Multiplier applied to maintenance/activation energy in the per-node
    /// energy balance.
    pub fn fixed_energy_multiplier(&self) -> f64 {
        if self.options.fixed_energy_per_phenomenon {
            self.n_phenomena() as f64
        } else {
            1.0
        }
    }

    /// Upper bound on the energy one sensor can draw in a single period: on,
    /// freshly activated, and carrying every commodity over every incident arc.
    pub fn max_period_draw(&self, arcs: &ArcSets) -> f64 {
        let n = self.n_sensors();
        let mut out_dist: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut in_deg = vec![0usize; n];
        for &(i, j) in &arcs.comm {
            out_dist[i].push(self.sensors[i].distance(&self.sensors[j]));
            in_deg[j] += 1;
        }
        for &(i, m) in &arcs.to_sink {
            out_dist[i].push(self.sensors[i].distance(&self.sinks[m]));
        }
        let fixed = self.fixed_energy_multiplier()
            * (self.device.maintenance_energy + self.device.activation_energy);
        (0..n)
            .map(|i| {
                let routed: f64 = self
                    .phenomena
                    .iter()
                    .map(|p| {
                        let volume = data_volume_bits(p, self.period_length_min);
                        let tx: f64 = out_dist[i]
                            .iter()
                            .map(|&d| volume * self.device.transmit.per_bit(d))
                            .sum();
                        let rx = in_deg[i] as f64 * volume * self.device.receive_energy_per_bit;
                        n as f64 * (tx + rx)
                    })
                    .sum();
                fixed + routed
            })
            .fold(0.0, f64::max)
    }

    /// Copy with every energy and penalty constant multiplied by `factor`.
    pub fn scaled_constants(&self, factor: f64) -> Instance {
        let mut out = self.clone();
        let d = &mut out.device;
        d.battery_capacity *= factor;
        d.activation_energy *= factor;
        d.maintenance_energy *= factor;
        d.receive_energy_per_bit *= factor;
        d.transmit = d.transmit.scaled(factor);
        out.penalties.uncovered.iter_mut().for_each(|v| *v *= factor);
        out.penalties.activation.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |msg: String| Err(InstanceError::InvalidParameter(msg));
        if self.format != INSTANCE_FORMAT {
            return Err(InstanceError::Format(self.format.clone()));
        }
        let a = self.area;
        if !(a.width.is_finite() && a.height.is_finite() && a.width > 0.0 && a.height > 0.0) {
            return bad(format!("area must be positive, got {} x {}", a.width, a.height));
        }
        if self.periods < 1 {
            return bad("periods must be at least 1".into());
        }
        if self.phenomena.is_empty() {
            return bad("at least one phenomenon is required".into());
        }
        if self.sinks.is_empty() {
            return bad("at least one sink is required".into());
        }
        if !(self.period_length_min.is_finite() && self.period_length_min > 0.0) {
            return bad(format!("period length must be positive, got {}", self.period_length_min));
        }
        if !(self.comm_radius_m.is_finite() && self.comm_radius_m > 0.0) {
            return bad(format!("communication radius must be positive, got {}", self.comm_radius_m));
        }
        let check_points = |what: &'static str, pts: &mut dyn Iterator<Item = &Point2D>| {
            for (index, p) in pts.enumerate() {
                if !a.contains(p) {
                    return Err(InstanceError::OutOfArea {
                        what,
                        index,
                        width: a.width,
                        height: a.height,
                    });
                }
            }
            Ok(())
        };
        check_points("sensor", &mut self.sensors.iter())?;
        check_points("demand point", &mut self.demand_points.iter().map(|d| &d.position))?;
        check_points("sink", &mut self.sinks.iter())?;

        let mut ids = BTreeSet::new();
        for p in &self.phenomena {
            if !ids.insert(p.id) {
                return bad(format!("duplicate phenomenon id {}", p.id));
            }
            if !(p.coverage_radius.is_finite() && p.coverage_radius > 0.0) {
                return bad(format!("phenomenon {}: coverage radius must be positive", p.id));
            }
            if !(p.sampling_rate.is_finite() && p.sampling_rate > 0.0) {
                return bad(format!("phenomenon {}: sampling rate must be positive", p.id));
            }
            if p.bits_per_sample == 0 {
                return bad(format!("phenomenon {}: bits per sample must be positive", p.id));
            }
        }
        for (j, dp) in self.demand_points.iter().enumerate() {
            if dp.demands.is_empty() {
                return bad(format!("demand point {j} demands no phenomenon"));
            }
            if let Some(id) = dp.demands.iter().find(|id| !ids.contains(id)) {
                return bad(format!("demand point {j} demands undeclared phenomenon {id}"));
            }
        }

        let d = &self.device;
        let energies = [
            ("battery_capacity", d.battery_capacity),
            ("activation_energy", d.activation_energy),
            ("maintenance_energy", d.maintenance_energy),
            ("receive_energy_per_bit", d.receive_energy_per_bit),
        ];
        for (name, v) in energies.into_iter().chain(
            d.transmit
                .coefficients()
                .into_iter()
                .map(|v| ("transmit coefficient", v)),
        ) {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if !(d.bit_rate_bps.is_finite() && d.bit_rate_bps > 0.0) {
            return bad("bit rate must be positive".into());
        }

        let g = self.n_phenomena();
        if self.penalties.uncovered.len() != g || self.penalties.activation.len() != g {
            return bad(format!("penalty vectors must have one entry per phenomenon ({g})"));
        }
        if self
            .penalties
            .uncovered
            .iter()
            .chain(&self.penalties.activation)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return bad("penalties must be nonnegative numbers".into());
        }
        let draw = self.max_period_draw(&build_arcs(self));
        if let Some(eh) = self.penalties.uncovered.iter().find(|&&eh| eh <= draw) {
            return bad(format!(
                "uncovered penalty {eh} must exceed the largest per-period sensor draw {draw}"
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Instance {
        let cfg = ScenarioConfig::paper();
        gen_grid(1, 1, 1, 1, Area::new(10.0, 10.0), &cfg).unwrap()
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let inst = gen_random(5, 7, Area::new(10.0, 10.0), 9, &ScenarioConfig::paper()).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
        assert_eq!(inst.to_json(), back.to_json());
    }

    #[test]
    fn json_has_the_documented_top_level_keys() {
        let v: serde_json::Value = serde_json::from_str(&tiny().to_json()).unwrap();
        for key in [
            "format",
            "area",
            "sensors",
            "demand_points",
            "sinks",
            "phenomena",
            "periods",
            "period_length_min",
            "comm_radius_m",
            "device",
            "penalties",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["format"], "wsn-instance/1");
        assert!(v.get("options").is_none());
    }

    #[test]
    fn rejects_points_outside_the_area() {
        let mut inst = tiny();
        inst.sensors[0] = Point2D::new(10.5, 1.0);
        assert!(matches!(inst.validate(), Err(InstanceError::OutOfArea { what: "sensor", .. })));
    }

    #[test]
    fn rejects_undeclared_demands_and_small_penalties() {
        let mut inst = tiny();
        inst.demand_points[0].demands.insert(99);
        assert!(inst.validate().is_err());

        let mut inst = tiny();
        inst.penalties.uncovered[0] = 0.5;
        assert!(inst.validate().is_err());
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let mut inst = tiny();
        inst.format = "wsn-instance/0".into();
        assert_eq!(inst.validate(), Err(InstanceError::Format("wsn-instance/0".into())));
    }

    #[test]
    fn scaling_keeps_the_instance_valid() {
        let inst = tiny().scaled_constants(7.3);
        inst.validate().unwrap();
        assert!((inst.device.maintenance_energy - 7.3).abs() < 1e-12);
    }
}
