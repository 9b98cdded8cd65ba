//! Top-down map of a session as a standalone SVG document.

use std::fmt::Write as _;

use bramble::geometry::Point2;
use bramble::mission::{Mission, MissionPhase};
use bramble::world::{FlowerState, Side, World};

const SCALE: f64 = 100.0;
const PAD: f64 = 20.0;

fn phase_color(phase: MissionPhase) -> &'static str {
    match phase {
        MissionPhase::Init => "#888888",
        MissionPhase::Inspect => "#1f77b4",
        MissionPhase::SelectCell => "#7f7f7f",
        MissionPhase::Drive => "#ff7f0e",
        MissionPhase::WorkspaceSurvey => "#9467bd",
        MissionPhase::PollinateSequence => "#d62728",
        MissionPhase::Done => "#000000",
    }
}

fn flower_color(state: FlowerState) -> &'static str {
    match state {
        FlowerState::Bud => "#2ca02c",
        FlowerState::Ready => "#f2c40f",
        FlowerState::Pollinated => "#e377c2",
        FlowerState::Wilted => "#8c564b",
    }
}

pub fn render(world: &World, mission: &Mission) -> String {
    let cfg = world.config();
    let height = cfg.room_length * SCALE + 2.0 * PAD;
    let px = |p: &Point2| (PAD + p.x * SCALE, height - PAD - p.y * SCALE);
    let poly = |pts: &[Point2]| {
        pts.iter()
            .map(|p| {
                let (x, y) = px(p);
                format!("{x:.1},{y:.1}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        cfg.room_width * SCALE + 2.0 * PAD,
        height,
        cfg.room_width * SCALE + 2.0 * PAD,
        height
    )
    .unwrap();
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    s.push_str("<g id=\"walls\" stroke=\"black\" stroke-width=\"3\">\n");
    for w in world.walls() {
        let ((x1, y1), (x2, y2)) = (px(&w.a), px(&w.b));
        writeln!(s, r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}"/>"#).unwrap();
    }
    s.push_str("</g>\n<g id=\"rows\" fill=\"#c7e9c0\" stroke=\"#31a354\">\n");
    for row in world.rows() {
        writeln!(s, r#"<polygon points="{}"/>"#, poly(&row.polygon())).unwrap();
    }
    s.push_str("</g>\n<g id=\"cells\" stroke=\"#31a354\" stroke-width=\"1\">\n");
    for row in world.rows() {
        for k in 1..row.cells_per_side {
            let at = k as f64 * row.cell_length();
            let a = row.face_point(Side::Left, at);
            let b = row.face_point(Side::Right, at);
            let ((x1, y1), (x2, y2)) = (px(&a), px(&b));
            writeln!(s, r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}"/>"#).unwrap();
        }
    }
    s.push_str("</g>\n");

    if let Some(graph) = mission.roadmap() {
        let required = graph.required_edges();
        s.push_str("<g id=\"voronoi\" fill=\"none\" stroke=\"#17becf\">\n");
        for (i, e) in graph.edges.iter().enumerate() {
            let width = if required.contains(&i) { 2.5 } else { 1.0 };
            writeln!(s, r#"<polyline stroke-width="{width}" points="{}"/>"#, poly(&e.points)).unwrap();
        }
        s.push_str("</g>\n");
    }

    s.push_str("<g id=\"trajectory\" fill=\"none\" stroke-width=\"2\">\n");
    let samples = mission.trajectory();
    let mut start = 0;
    while start < samples.len() {
        let phase = samples[start].phase;
        let mut end = start;
        while end + 1 < samples.len() && samples[end + 1].phase == phase {
            end += 1;
        }
        // Overlap one sample so segments join up.
        let pts: Vec<Point2> = samples[start.saturating_sub(1)..=end]
            .iter()
            .map(|t| t.truth.position())
            .collect();
        writeln!(
            s,
            r#"<polyline stroke="{}" points="{}"/>"#,
            phase_color(phase),
            poly(&pts)
        )
        .unwrap();
        start = end + 1;
    }
    s.push_str("</g>\n<g id=\"flowers\" stroke=\"black\" stroke-width=\"0.5\">\n");
    for f in world.flowers() {
        let (x, y) = px(&Point2::new(f.position.x, f.position.y));
        writeln!(
            s,
            r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="{}"><title>flower {} {:?}</title></circle>"#,
            flower_color(f.state()),
            f.id,
            f.state()
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}
