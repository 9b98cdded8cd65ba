//! Session artifacts written to the output directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use bramble::mission::{FlowerAttempt, Mission, Summary};
use bramble::world::{Flower, World};

use crate::CliError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const FLOWERS_FILE: &str = "flowers.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MAP_FILE: &str = "map.svg";

pub fn metrics_csv(summary: &Summary) -> String {
    format!("{}\n{}\n", Summary::CSV_HEADER, summary.csv_row())
}

/// One control tick per line, true pose.
pub fn trajectory_csv(mission: &Mission) -> String {
    let mut out = String::from("t,x,y,theta\n");
    for s in mission.trajectory() {
        writeln!(out, "{:.3},{:.6},{:.6},{:.6}", s.t, s.truth.x, s.truth.y, s.truth.theta).unwrap();
    }
    out
}

#[derive(Serialize)]
struct FlowerRecord<'a> {
    #[serde(flatten)]
    flower: &'a Flower,
    attempts: Vec<&'a FlowerAttempt>,
}

/// Final state, timestamps and attempts of every flower, in id order.
pub fn flowers_json(mission: &Mission, world: &World) -> String {
    let mut flowers: Vec<&Flower> = world.flowers().iter().collect();
    flowers.sort_by_key(|f| f.id);
    let records: Vec<FlowerRecord> = flowers
        .into_iter()
        .map(|flower| FlowerRecord {
            flower,
            attempts: mission.database().attempts_on(flower.id).collect(),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&records).expect("flowers serialize");
    text.push('\n');
    text
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
