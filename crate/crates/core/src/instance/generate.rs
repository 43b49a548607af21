//! Grid and uniform-random scenario generators.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_arcs, Area, DemandPoint, DeviceProfile, Instance, InstanceError, ModelOptions,
    Penalties, Phenomenon, Point2D, INSTANCE_FORMAT,
};

/// Uncovered-point penalty as a multiple of the largest per-period sensor draw.
pub const DEFAULT_UNCOVERED_FACTOR: f64 = 1.0e4;
pub const DEFAULT_ACTIVATION_PENALTY: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", content = "coords", rename_all = "snake_case")]
pub enum SinkLayout {
    Center,
    Corners,
    Coords(Vec<Point2D>),
}

impl SinkLayout {
    fn place(&self, area: Area) -> Vec<Point2D> {
        match self {
            SinkLayout::Center => vec![area.center()],
            SinkLayout::Corners => vec![
                Point2D::new(0.0, 0.0),
                Point2D::new(0.0, area.height),
                Point2D::new(area.width, 0.0),
                Point2D::new(area.width, area.height),
            ],
            SinkLayout::Coords(pts) => pts.clone(),
        }
    }
}

/// Scenario parameters shared by both generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub phenomena: Vec<Phenomenon>,
    pub comm_radius_m: f64,
    pub periods: usize,
    pub period_length_min: f64,
    pub device: DeviceProfile,
    pub sinks: SinkLayout,
    /// Grid margin in meters; `None` centers every lattice point in its cell.
    pub margin: Option<f64>,
    /// Probability of dropping each (demand point, phenomenon) demand; a point
    /// always keeps at least one phenomenon.
    pub demand_drop_fraction: f64,
    /// EH for every phenomenon; defaults to a multiple of the largest draw.
    pub uncovered_penalty: Option<f64>,
    /// EG for every phenomenon.
    pub activation_penalty: f64,
    pub fixed_energy_per_phenomenon: bool,
    /// Seed recorded in grid instances (random instances record their own).
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ScenarioConfig {
    /// Two phenomena (8.8 m at 2 samples/min, 16 m at 1 sample/min), 11 m
    /// radio range, one sink in the middle of the area.
    pub fn paper() -> Self {
        Self {
            phenomena: vec![
                Phenomenon::new(1, 8.8, 2.0, 16),
                Phenomenon::new(2, 16.0, 1.0, 16),
            ],
            comm_radius_m: 11.0,
            periods: 1,
            period_length_min: 60.0,
            device: DeviceProfile::default(),
            sinks: SinkLayout::Center,
            margin: None,
            demand_drop_fraction: 0.0,
            uncovered_penalty: None,
            activation_penalty: DEFAULT_ACTIVATION_PENALTY,
            fixed_energy_per_phenomenon: false,
            seed: 0,
        }
    }

    /// Wider field with shorter radii and a sink in every corner, so that
    /// inner sensors must relay through their neighbours.
    pub fn paper_routing() -> Self {
        Self {
            phenomena: vec![
                Phenomenon::new(1, 6.0, 2.0, 16),
                Phenomenon::new(2, 11.0, 1.0, 16),
            ],
            comm_radius_m: 8.0,
            sinks: SinkLayout::Corners,
            ..Self::paper()
        }
    }

    pub fn with_periods(mut self, periods: usize) -> Self {
        self.periods = periods;
        self
    }

    fn check(&self) -> Result<(), InstanceError> {
        if !(0.0..=1.0).contains(&self.demand_drop_fraction) {
            return Err(InstanceError::InvalidParameter(format!(
                "demand drop fraction must lie in [0, 1], got {}",
                self.demand_drop_fraction
            )));
        }
        if let Some(m) = self.margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(InstanceError::InvalidParameter(format!(
                    "margin must be nonnegative, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// The two evaluation scenarios: 1 is the 10 m x 10 m field with 16 sensors,
/// 100 demand points and a central sink; 2 is the 30 m x 30 m routing field
/// with corner sinks.
pub fn paper_scenario(scenario: u8, periods: usize) -> Result<Instance, InstanceError> {
    let (cfg, area) = match scenario {
        1 => (ScenarioConfig::paper(), Area::new(10.0, 10.0)),
        2 => (ScenarioConfig::paper_routing(), Area::new(30.0, 30.0)),
        other => {
            return Err(InstanceError::InvalidParameter(format!(
                "unknown scenario {other}, expected 1 or 2"
            )))
        }
    };
    gen_grid(4, 4, 10, 10, area, &cfg.with_periods(periods))
}

fn check_area(area: Area) -> Result<(), InstanceError> {
    if area.width.is_finite() && area.height.is_finite() && area.width > 0.0 && area.height > 0.0 {
        Ok(())
    } else {
        Err(InstanceError::InvalidParameter(format!(
            "area dimensions must be positive, got {} x {}",
            area.width, area.height
        )))
    }
}

fn lattice(count: usize, extent: f64, margin: Option<f64>) -> Result<Vec<f64>, InstanceError> {
    if count == 1 {
        return Ok(vec![extent / 2.0]);
    }
    let m = margin.unwrap_or(extent / (2.0 * count as f64));
    let span = extent - 2.0 * m;
    if span < 0.0 {
        return Err(InstanceError::InvalidParameter(format!(
            "margin {m} leaves no room in an extent of {extent}"
        )));
    }
    let pitch = span / (count - 1) as f64;
    Ok((0..count)
        .map(|k| if k + 1 == count { extent - m } else { m + k as f64 * pitch })
        .collect())
}

fn grid_points(
    rows: usize,
    cols: usize,
    area: Area,
    margin: Option<f64>,
) -> Result<Vec<Point2D>, InstanceError> {
    let xs = lattice(cols, area.width, margin)?;
    let ys = lattice(rows, area.height, margin)?;
    Ok(xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| Point2D::new(x, y)))
        .collect())
}

/// Sensors and demand points on regular lattices spanning the area.
pub fn gen_grid(
    sensor_rows: usize,
    sensor_cols: usize,
    dp_rows: usize,
    dp_cols: usize,
    area: Area,
    config: &ScenarioConfig,
) -> Result<Instance, InstanceError> {
    if [sensor_rows, sensor_cols, dp_rows, dp_cols].contains(&0) {
        return Err(InstanceError::InvalidParameter(
            "row and column counts must be at least 1".into(),
        ));
    }
    check_area(area)?;
    config.check()?;
    let sensors = grid_points(sensor_rows, sensor_cols, area, config.margin)?;
    let dps = grid_points(dp_rows, dp_cols, area, config.margin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    assemble(area, sensors, dps, config, config.seed, &mut rng)
}

/// Sensors and demand points drawn i.i.d. uniformly over the area.
pub fn gen_random(
    n_sensors: usize,
    n_demand_points: usize,
    area: Area,
    seed: u64,
    config: &ScenarioConfig,
) -> Result<Instance, InstanceError> {
    if n_sensors == 0 || n_demand_points == 0 {
        return Err(InstanceError::InvalidParameter(
            "sensor and demand point counts must be at least 1".into(),
        ));
    }
    check_area(area)?;
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        Point2D::new(
            rng.gen_range(0.0..=area.width),
            rng.gen_range(0.0..=area.height),
        )
    };
    let sensors = (0..n_sensors).map(|_| draw(&mut rng)).collect();
    let dps = (0..n_demand_points).map(|_| draw(&mut rng)).collect();
    assemble(area, sensors, dps, config, seed, &mut rng)
}

fn assemble(
    area: Area,
    sensors: Vec<Point2D>,
    dp_positions: Vec<Point2D>,
    config: &ScenarioConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Instance, InstanceError> {
    let ids: Vec<u32> = config.phenomena.iter().map(|p| p.id).collect();
    let demand_points = dp_positions
        .into_iter()
        .map(|position| {
            let mut demands: BTreeSet<u32> = ids
                .iter()
                .copied()
                .filter(|_| {
                    config.demand_drop_fraction == 0.0
                        || !rng.gen_bool(config.demand_drop_fraction)
                })
                .collect();
            if demands.is_empty() && !ids.is_empty() {
                demands.insert(ids[rng.gen_range(0..ids.len())]);
            }
            DemandPoint { position, demands }
        })
        .collect();
    let g = config.phenomena.len();
    let mut inst = Instance {
        format: INSTANCE_FORMAT.to_string(),
        area,
        sensors,
        demand_points,
        sinks: config.sinks.place(area),
        phenomena: config.phenomena.clone(),
        periods: config.periods,
        period_length_min: config.period_length_min,
        comm_radius_m: config.comm_radius_m,
        device: config.device.clone(),
        penalties: Penalties {
            uncovered: vec![0.0; g],
            activation: vec![config.activation_penalty; g],
        },
        seed,
        options: ModelOptions {
            fixed_energy_per_phenomenon: config.fixed_energy_per_phenomenon,
        },
    };
    let eh = match config.uncovered_penalty {
        Some(v) => v,
        None => DEFAULT_UNCOVERED_FACTOR * inst.max_period_draw(&build_arcs(&inst)).max(1.0),
    };
    inst.penalties.uncovered = vec![eh; g];
    inst.validate()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scenario_grid_shape() {
        let inst = paper_scenario(1, 1).unwrap();
        assert_eq!(inst.n_sensors(), 16);
        assert_eq!(inst.n_demand_points(), 100);
        assert_eq!(inst.sinks, vec![Point2D::new(5.0, 5.0)]);
        assert_eq!(inst.phenomena[0].coverage_radius, 8.8);
        assert_eq!(inst.phenomena[1].coverage_radius, 16.0);
        assert_eq!(inst.phenomena[0].sampling_rate, 2.0);
        assert_eq!(inst.phenomena[1].sampling_rate, 1.0);
        assert_eq!(inst.comm_radius_m, 11.0);
    }

    #[test]
    fn single_point_lattice_is_centered() {
        let inst = gen_grid(1, 1, 1, 1, Area::new(10.0, 10.0), &ScenarioConfig::paper()).unwrap();
        assert_eq!(inst.sensors, vec![Point2D::new(5.0, 5.0)]);
        assert_eq!(inst.demand_points[0].position, Point2D::new(5.0, 5.0));
    }

    #[test]
    fn zero_margin_puts_sensors_on_corners() {
        let cfg = ScenarioConfig {
            margin: Some(0.0),
            ..ScenarioConfig::paper()
        };
        let inst = gen_grid(2, 2, 1, 1, Area::new(10.0, 10.0), &cfg).unwrap();
        assert_eq!(
            inst.sensors,
            vec![
                Point2D::new(0.0, 0.0),
                Point2D::new(0.0, 10.0),
                Point2D::new(10.0, 0.0),
                Point2D::new(10.0, 10.0)
            ]
        );
    }

    #[test]
    fn grid_rejects_bad_dimensions() {
        let cfg = ScenarioConfig::paper();
        assert!(gen_grid(0, 4, 10, 10, Area::new(10.0, 10.0), &cfg).is_err());
        assert!(gen_grid(4, 4, 10, 10, Area::new(0.0, 10.0), &cfg).is_err());
        assert!(gen_grid(4, 4, 10, 10, Area::new(10.0, -1.0), &cfg).is_err());
        assert!(gen_random(0, 10, Area::new(10.0, 10.0), 1, &cfg).is_err());
    }

    #[test]
    fn random_is_deterministic_and_seed_sensitive() {
        let cfg = ScenarioConfig::paper();
        let area = Area::new(10.0, 10.0);
        let a = gen_random(16, 100, area, 42, &cfg).unwrap();
        let b = gen_random(16, 100, area, 42, &cfg).unwrap();
        let c = gen_random(16, 100, area, 43, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.sensors, c.sensors);
    }

    #[test]
    fn single_random_point_in_bounds() {
        let inst = gen_random(1, 1, Area::new(10.0, 10.0), 7, &ScenarioConfig::paper()).unwrap();
        let area = inst.area;
        assert!(area.contains(&inst.sensors[0]));
        assert!(area.contains(&inst.demand_points[0].position));
    }

    #[test]
    fn demand_drop_keeps_points_nonempty() {
        let cfg = ScenarioConfig {
            demand_drop_fraction: 0.9,
            ..ScenarioConfig::paper()
        };
        let inst = gen_random(4, 200, Area::new(10.0, 10.0), 3, &cfg).unwrap();
        assert!(inst.demand_points.iter().all(|d| !d.demands.is_empty()));
        assert!(inst.demand_points.iter().any(|d| d.demands.len() == 1));
    }

    #[test]
    fn positions_stay_inside_area_over_many_seeds() {
        let cfg = ScenarioConfig::paper();
        let area = Area::new(10.0, 7.5);
        for seed in 0..1000u64 {
            let inst = gen_random(3, 3, area, seed, &cfg).unwrap();
            assert!(inst.sensors.iter().all(|p| area.contains(p)));
            assert!(inst.demand_points.iter().all(|d| area.contains(&d.position)));
            assert!(inst.sinks.iter().all(|p| area.contains(p)));
        }
    }

    proptest! {
        #[test]
        fn grid_points_inside_area(
            sr in 1usize..6, sc in 1usize..6, dr in 1usize..8, dc in 1usize..8,
            w in 1.0f64..50.0, h in 1.0f64..50.0,
        ) {
            let inst = gen_grid(sr, sc, dr, dc, Area::new(w, h), &ScenarioConfig::paper()).unwrap();
            prop_assert_eq!(inst.n_sensors(), sr * sc);
            prop_assert_eq!(inst.n_demand_points(), dr * dc);
            prop_assert!(inst.sensors.iter().all(|p| inst.area.contains(p)));
        }
    }
}
