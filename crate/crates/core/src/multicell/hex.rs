use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MulticellError;

/// Axial hexagonal coordinates.
pub type Axial = (i32, i32);

/// Neighbour offsets in axial coordinates, counter-clockwise from east.
pub const HEX_DIRECTIONS: [Axial; 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub tx_power_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub cells: Vec<BaseStation>,
    pub spacing_m: f64,
}

pub const DEFAULT_SPACING_M: f64 = 50.0;
pub const DEFAULT_TX_POWER_DBM: f64 = 20.0;

pub fn axial_to_xy((q, r): Axial, spacing: f64) -> (f64, f64) {
    (
        spacing * (q as f64 + r as f64 / 2.0),
        spacing * (3f64.sqrt() / 2.0) * r as f64,
    )
}

/// Lattice cells in spiral order: centre first, then ring by ring.
pub fn spiral(count: usize) -> Vec<Axial> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push((0, 0));
    let mut ring = 1;
    while out.len() < count {
        let (dq, dr) = HEX_DIRECTIONS[4];
        let mut cur = (dq * ring, dr * ring);
        for dir in HEX_DIRECTIONS {
            for _ in 0..ring {
                if out.len() == count {
                    return out;
                }
                out.push(cur);
                cur = (cur.0 + dir.0, cur.1 + dir.1);
            }
        }
        ring += 1;
    }
    out
}

/// `count` base stations on a hexagonal lattice, filled ring by ring from
/// the centre; IDs follow the fill order.
pub fn build_hex_deployment(count: usize, spacing_m: f64) -> Result<Deployment, MulticellError> {
    build_hex_deployment_with_power(count, spacing_m, DEFAULT_TX_POWER_DBM)
}

pub fn build_hex_deployment_with_power(
    count: usize,
    spacing_m: f64,
    tx_power_dbm: f64,
) -> Result<Deployment, MulticellError> {
    if count == 0 {
        return Err(MulticellError::Config("a deployment needs at least one cell".into()));
    }
    if !(spacing_m > 0.0) {
        return Err(MulticellError::Config(format!("spacing {spacing_m} m must be positive")));
    }
    let cells = spiral(count)
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let (x, y) = axial_to_xy(a, spacing_m);
            BaseStation {
                id: i as u32,
                x,
                y,
                tx_power_dbm,
            }
        })
        .collect();
    Ok(Deployment { cells, spacing_m })
}

impl Deployment {
    /// Axial coordinates of every cell, or an unsupported-topology error if
    /// some cell is off the lattice or two cells share a site.
    pub fn lattice(&self) -> Result<HashMap<Axial, u32>, MulticellError> {
        let s = self.spacing_m;
        if !(s > 0.0) {
            return Err(MulticellError::UnsupportedTopology("spacing must be positive".into()));
        }
        let tol = 1e-6 * s.max(1.0);
        let mut map = HashMap::new();
        for c in &self.cells {
            let rf = c.y / (s * 3f64.sqrt() / 2.0);
            let qf = c.x / s - rf / 2.0;
            let a = (qf.round() as i32, rf.round() as i32);
            let (x, y) = axial_to_xy(a, s);
            if (x - c.x).abs() > tol || (y - c.y).abs() > tol {
                return Err(MulticellError::UnsupportedTopology(format!(
                    "cell {} at ({:.3}, {:.3}) is not on a hexagonal lattice of spacing {s} m",
                    c.id, c.x, c.y
                )));
            }
            if map.insert(a, c.id).is_some() {
                return Err(MulticellError::UnsupportedTopology(format!(
                    "two cells share lattice site {a:?}"
                )));
            }
        }
        Ok(map)
    }

    /// Unordered pairs of lattice neighbours, lower ID first.
    pub fn adjacent_pairs(&self) -> Result<Vec<(u32, u32)>, MulticellError> {
        let lattice = self.lattice()?;
        let mut out = Vec::new();
        for (&(q, r), &id) in &lattice {
            for (dq, dr) in HEX_DIRECTIONS {
                if let Some(&other) = lattice.get(&(q + dq, r + dr)) {
                    if id < other {
                        out.push((id, other));
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn cell(&self, id: u32) -> Option<&BaseStation> {
        self.cells.iter().find(|c| c.id == id)
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)` of the sites.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.cells.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), s| (a.min(s.x), b.min(s.y), c.max(s.x), d.max(s.y)),
        )
    }
}
