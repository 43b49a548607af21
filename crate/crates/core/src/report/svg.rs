use std::fmt::Write;

use super::ReportError;
use crate::instance::{Instance, Point2D};
use crate::model::VarRef;
use crate::network::Node;
use crate::solve::Solution;

const CANVAS: f64 = 600.0;
const PAD: f64 = 30.0;

pub fn plan_file_name(t: usize, g: usize) -> String {
    format!("plan_t{t}_g{g}.svg")
}

pub fn routes_file_name(t: usize, g: usize) -> String {
    format!("routes_t{t}_g{g}.svg")
}

struct Canvas {
    scale: f64,
    area_height: f64,
    out: String,
}

impl Canvas {
    fn new(instance: &Instance, title: &str) -> Canvas {
        let a = instance.area;
        let scale = CANVAS / a.width.max(a.height);
        let width = a.width * scale + 2.0 * PAD;
        let height = a.height * scale + 2.0 * PAD;
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
        )
        .unwrap();
        writeln!(out, "<title>{title}</title>").unwrap();
        out.push_str(concat!(
            "<style>",
            ".area{fill:#fff;stroke:#444}",
            ".coverage{fill:#4a90d9;fill-opacity:0.08;stroke:#4a90d9;stroke-opacity:0.5}",
            ".dp{stroke:#222;stroke-width:1}",
            ".dp.covered{fill:#222}",
            ".dp.uncovered{fill:#fff;stroke:#c0392b}",
            ".dp.other{fill:none;stroke:#ccc}",
            ".sensor{stroke:#222;stroke-width:1.5}",
            ".sensor.sensing{fill:#2c7a3f}",
            ".sensor.on{fill:#999}",
            ".sensor.off{fill:#fff}",
            ".sink{fill:#e67e22;stroke:#222}",
            ".route{stroke-width:2;fill:none}",
            "</style>\n"
        ));
        out.push_str(concat!(
            r#"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" "#,
            r#"markerWidth="6" markerHeight="6" orient="auto-start-reverse">"#,
            r#"<path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>"#,
            "\n"
        ));
        writeln!(
            out,
            r#"<rect class="area" x="{PAD:.2}" y="{PAD:.2}" width="{:.2}" height="{:.2}"/>"#,
            a.width * scale,
            a.height * scale
        )
        .unwrap();
        Canvas {
            scale,
            area_height: a.height,
            out,
        }
    }

    fn at(&self, p: &Point2D) -> (f64, f64) {
        (PAD + p.x * self.scale, PAD + (self.area_height - p.y) * self.scale)
    }

    fn sinks(&mut self, instance: &Instance) {
        for (m, s) in instance.sinks.iter().enumerate() {
            let (x, y) = self.at(s);
            writeln!(
                self.out,
                r#"<polygon class="sink" data-id="m{m}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
                x,
                y - 9.0,
                x - 8.0,
                y + 6.0,
                x + 8.0,
                y + 6.0
            )
            .unwrap();
        }
    }

    fn sensor(&mut self, i: usize, p: &Point2D, state: &str) {
        let (x, y) = self.at(p);
        writeln!(
            self.out,
            r#"<rect class="sensor {state}" data-id="s{i}" x="{:.2}" y="{:.2}" width="10" height="10"/>"#,
            x - 5.0,
            y - 5.0
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn check_range(instance: &Instance, t: usize, g: usize) -> Result<(), ReportError> {
    if t >= instance.periods {
        return Err(ReportError::OutOfRange {
            what: "period",
            value: t,
            count: instance.periods,
        });
    }
    if g >= instance.n_phenomena() {
        return Err(ReportError::OutOfRange {
            what: "phenomenon",
            value: g,
            count: instance.n_phenomena(),
        });
    }
    Ok(())
}

/// Activation snapshot for period `t` and phenomenon `g`: demand points
/// (filled when covered, hollow when penalized), sensors (green when sensing
/// `g`, gray when only on, white when off), coverage circles and sinks.
pub fn render_schedule(
    instance: &Instance,
    solution: &Solution,
    t: usize,
    g: usize,
) -> Result<String, ReportError> {
    check_range(instance, t, g)?;
    let n = instance.n_sensors();
    let nd = instance.n_demand_points();
    let mut sensing = vec![false; n];
    let mut on = vec![false; n];
    let mut covered = vec![false; nd];
    for v in &solution.ones {
        match *v {
            VarRef::R { sensor, period, phen } if period == t && phen == g && sensor < n => {
                sensing[sensor] = true
            }
            VarRef::Y { sensor, period } if period == t && sensor < n => on[sensor] = true,
            VarRef::X { dp, period, phen, .. } if period == t && phen == g && dp < nd => {
                covered[dp] = true
            }
            _ => {}
        }
    }

    let phen = &instance.phenomena[g];
    let title = format!("period {t}, phenomenon {}", phen.id);
    let mut c = Canvas::new(instance, &title);
    let radius = phen.coverage_radius * c.scale;
    for (i, p) in instance.sensors.iter().enumerate() {
        if sensing[i] {
            let (x, y) = c.at(p);
            writeln!(
                c.out,
                r#"<circle class="coverage" data-sensor="s{i}" cx="{x:.2}" cy="{y:.2}" r="{radius:.2}"/>"#
            )
            .unwrap();
        }
    }
    for (j, dp) in instance.demand_points.iter().enumerate() {
        let state = if !instance.demands(j, g) {
            "other"
        } else if covered[j] {
            "covered"
        } else {
            "uncovered"
        };
        let (x, y) = c.at(&dp.position);
        writeln!(
            c.out,
            r#"<circle class="dp {state}" data-id="d{j}" cx="{x:.2}" cy="{y:.2}" r="3"/>"#
        )
        .unwrap();
    }
    for (i, p) in instance.sensors.iter().enumerate() {
        let state = if sensing[i] {
            "sensing"
        } else if on[i] {
            "on"
        } else {
            "off"
        };
        c.sensor(i, p, state);
    }
    c.sinks(instance);
    Ok(c.finish())
}

/// Routing diagram for period `t` and phenomenon `g`: one directed line per
/// used arc, colored by the sensor whose data it carries.
pub fn render_routes(
    instance: &Instance,
    solution: &Solution,
    t: usize,
    g: usize,
) -> Result<String, ReportError> {
    check_range(instance, t, g)?;
    let n = instance.n_sensors();
    let mut on = vec![false; n];
    let mut edges = Vec::new();
    for v in &solution.ones {
        match *v {
            VarRef::Y { sensor, period } if period == t && sensor < n => on[sensor] = true,
            VarRef::Z { source, from, to, period, phen } if period == t && phen == g && from < n => {
                let target = match to {
                    Node::Sensor(j) => instance.sensors.get(j),
                    Node::Sink(m) => instance.sinks.get(m),
                };
                if let Some(target) = target {
                    edges.push((source, from, to, *target));
                }
            }
            _ => {}
        }
    }

    let title = format!("routes, period {t}, phenomenon {}", instance.phenomena[g].id);
    let mut c = Canvas::new(instance, &title);
    for (i, p) in instance.sensors.iter().enumerate() {
        c.sensor(i, p, if on[i] { "on" } else { "off" });
    }
    c.sinks(instance);
    for (source, from, to, target) in edges {
        let hue = (source * 137) % 360;
        let (x1, y1) = c.at(&instance.sensors[from]);
        let (x2, y2) = c.at(&target);
        let head = match to {
            Node::Sensor(j) => format!("s{j}"),
            Node::Sink(m) => format!("m{m}"),
        };
        writeln!(
            c.out,
            r#"<line class="route" data-source="s{source}" data-from="s{from}" data-to="{head}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="hsl({hue},70%,40%)" marker-end="url(#arrow)"/>"#
        )
        .unwrap();
    }
    Ok(c.finish())
}
