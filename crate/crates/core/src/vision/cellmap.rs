//! Per-cell record of observed flower clusters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::GridCellRef;

use super::VisionError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Clusters seen in the current pass (max over observations).
    pub count: u32,
    pub last_observed: Option<f64>,
    pub pollinated_count: u32,
    /// True while the cell holds clusters believed ready to pollinate.
    pub ready: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellFlowerMap {
    #[serde(with = "as_pairs")]
    cells: BTreeMap<GridCellRef, CellRecord>,
    pass: u32,
}

/// JSON object keys must be strings, so the map travels as a list of pairs.
mod as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::{CellRecord, GridCellRef};

    pub fn serialize<S: Serializer>(map: &BTreeMap<GridCellRef, CellRecord>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<GridCellRef, CellRecord>, D::Error> {
        Ok(Vec::<(GridCellRef, CellRecord)>::deserialize(d)?.into_iter().collect())
    }
}

impl CellFlowerMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a new inspection pass; stored counts are cleared.
    pub fn begin_pass(&mut self) {
        self.pass += 1;
        for rec in self.cells.values_mut() {
            rec.count = 0;
            rec.ready = false;
        }
    }

    pub fn pass(&self) -> u32 {
        self.pass
    }

    /// Records `detected` clusters seen in `cell` at `time`.
    pub fn update(&mut self, cell: GridCellRef, detected: u32, time: f64) -> Result<(), VisionError> {
        let rec = self.cells.entry(cell).or_default();
        if let Some(last) = rec.last_observed {
            if time < last {
                return Err(VisionError::StaleObservation { cell, time, last });
            }
        }
        rec.count = rec.count.max(detected);
        rec.ready = rec.count > 0;
        rec.last_observed = Some(time);
        Ok(())
    }

    /// Marks a cell as served: its count no longer attracts the robot.
    pub fn mark_visited(&mut self, cell: &GridCellRef, pollinated: u32) {
        let rec = self.cells.entry(*cell).or_default();
        rec.count = 0;
        rec.ready = false;
        rec.pollinated_count += pollinated;
    }

    pub fn get(&self, cell: &GridCellRef) -> Option<&CellRecord> {
        self.cells.get(cell)
    }

    pub fn count(&self, cell: &GridCellRef) -> u32 {
        self.cells.get(cell).map_or(0, |r| r.count)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GridCellRef, &CellRecord)> {
        self.cells.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Side;

    #[test]
    fn max_within_pass_and_reset() {
        let c = GridCellRef::new(0, Side::Left, 1);
        let mut m = CellFlowerMap::new();
        m.begin_pass();
        m.update(c, 3, 1.0).unwrap();
        m.update(c, 4, 2.0).unwrap();
        assert_eq!(m.count(&c), 4);
        m.update(c, 3, 3.0).unwrap();
        assert_eq!(m.count(&c), 4);
        m.begin_pass();
        m.update(c, 2, 4.0).unwrap();
        assert_eq!(m.count(&c), 2);
        assert!(matches!(m.update(c, 1, 3.5), Err(VisionError::StaleObservation { .. })));
    }
}
