use super::Instance;

/// Coverage, sensor-to-sensor and sensor-to-sink arc families of an instance.
///
/// Every list is sorted lexicographically. Distances exactly equal to a radius
/// produce an arc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSets {
    /// Per phenomenon index: (sensor, demand point) pairs within its coverage radius.
    pub coverage: Vec<Vec<(usize, usize)>>,
    /// Ordered (sensor, sensor) pairs within the communication radius.
    pub comm: Vec<(usize, usize)>,
    /// (sensor, sink) pairs within the communication radius.
    pub to_sink: Vec<(usize, usize)>,
}

pub fn build_arcs(instance: &Instance) -> ArcSets {
    let sensors = &instance.sensors;
    let coverage = instance
        .phenomena
        .iter()
        .map(|p| {
            let mut arcs = Vec::new();
            for (i, s) in sensors.iter().enumerate() {
                for (j, dp) in instance.demand_points.iter().enumerate() {
                    if s.distance(&dp.position) <= p.coverage_radius {
                        arcs.push((i, j));
                    }
                }
            }
            arcs
        })
        .collect();

    let r = instance.comm_radius_m;
    let mut comm = Vec::new();
    for (i, a) in sensors.iter().enumerate() {
        for (j, b) in sensors.iter().enumerate() {
            if i != j && a.distance(b) <= r {
                comm.push((i, j));
            }
        }
    }
    let mut to_sink = Vec::new();
    for (i, a) in sensors.iter().enumerate() {
        for (m, sink) in instance.sinks.iter().enumerate() {
            if a.distance(sink) <= r {
                to_sink.push((i, m));
            }
        }
    }
    ArcSets {
        coverage,
        comm,
        to_sink,
    }
}
