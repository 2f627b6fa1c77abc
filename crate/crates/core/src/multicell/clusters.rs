//! Six overlapping cluster configurations built from lattice triangles.
//!
//! Slots 1 to 3 tile the lattice with "up" triangles
//! `{(q, r), (q + 1, r), (q, r + 1)}` and slots 4 to 6 with "down" triangles
//! `{(q + 1, r), (q, r + 1), (q + 1, r + 1)}`, each in one of three shift
//! phases selected by `(q - r) mod 3`. Every lattice edge lies in exactly one
//! up and one down triangle, so every neighbour pair shares a cluster in two
//! slots. Triangles cut by the deployment border keep their surviving cells.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::codebook::Codebook;
use super::hex::{Axial, Deployment};
use super::MulticellError;
use crate::codec::CLUSTER_SLOTS;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: u16,
    /// Sorted cell IDs.
    pub members: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfiguration {
    /// 1-based slot number.
    pub slot: u8,
    pub clusters: Vec<Cluster>,
}

impl ClusterConfiguration {
    /// The cluster holding `cell` in this slot.
    pub fn cluster_of(&self, cell: u32) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.members.contains(&cell))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPlan {
    pub slots: Vec<ClusterConfiguration>,
    pub codebook: Codebook,
}

impl ClusterPlan {
    /// Cluster ID of `cell` in each slot, in slot order; this is what the
    /// cell puts in its frame.
    pub fn cell_fields(&self, cell: u32) -> Option<[u16; CLUSTER_SLOTS]> {
        let mut out = [0u16; CLUSTER_SLOTS];
        for (dst, cfg) in out.iter_mut().zip(&self.slots) {
            *dst = cfg.cluster_of(cell)?.id;
        }
        Some(out)
    }
}

/// Anchor of the triangle of orientation `down` and phase `phase` holding
/// the cell at `(q, r)`.
fn anchor((q, r): Axial, down: bool, phase: i32) -> Axial {
    let d = (q - r - phase).rem_euclid(3);
    match (down, d) {
        (false, 0) => (q, r),
        (true, 0) => (q - 1, r - 1),
        (_, 1) => (q - 1, r),
        _ => (q, r - 1),
    }
}

pub fn build_cluster_configurations(dep: &Deployment) -> Result<ClusterPlan, MulticellError> {
    let lattice = dep.lattice()?;
    let mut slots = Vec::with_capacity(CLUSTER_SLOTS);
    let mut entries = BTreeMap::new();
    for s in 0..CLUSTER_SLOTS {
        let down = s >= 3;
        let phase = (s % 3) as i32;
        let mut groups: BTreeMap<Axial, BTreeSet<u32>> = BTreeMap::new();
        for (&a, &id) in &lattice {
            groups.entry(anchor(a, down, phase)).or_default().insert(id);
        }
        let mut members: Vec<Vec<u32>> = groups.into_values().map(|m| m.into_iter().collect()).collect();
        members.sort();
        if members.len() > u16::MAX as usize + 1 {
            return Err(MulticellError::Config(format!(
                "{} clusters do not fit a 16-bit cluster ID",
                members.len()
            )));
        }
        let slot = s as u8 + 1;
        let clusters: Vec<Cluster> = members
            .into_iter()
            .enumerate()
            .map(|(i, m)| Cluster { id: i as u16, members: m })
            .collect();
        for c in &clusters {
            entries.insert((slot, c.id), c.members.clone());
        }
        slots.push(ClusterConfiguration { slot, clusters });
    }
    Ok(ClusterPlan {
        slots,
        codebook: Codebook::new(entries)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicell::hex::{build_hex_deployment, spiral, HEX_DIRECTIONS};

    #[test]
    fn slots_partition_the_cells() {
        let dep = build_hex_deployment(100, 50.0).unwrap();
        let plan = build_cluster_configurations(&dep).unwrap();
        assert_eq!(plan.slots.len(), 6);
        for cfg in &plan.slots {
            let mut all: Vec<u32> = cfg.clusters.iter().flat_map(|c| c.members.clone()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..100).collect::<Vec<_>>());
            assert!(cfg.clusters.iter().all(|c| (1..=3).contains(&c.members.len())));
        }
    }

    #[test]
    fn clusters_are_mutual_neighbours() {
        let dep = build_hex_deployment(61, 50.0).unwrap();
        let plan = build_cluster_configurations(&dep).unwrap();
        for cfg in &plan.slots {
            for c in &cfg.clusters {
                for (i, &a) in c.members.iter().enumerate() {
                    for &b in &c.members[i + 1..] {
                        let (pa, pb) = (dep.cell(a).unwrap(), dep.cell(b).unwrap());
                        assert!(((pa.x - pb.x).hypot(pa.y - pb.y) - 50.0).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn centre_of_seven_lies_in_six_triads() {
        let dep = build_hex_deployment(7, 50.0).unwrap();
        let plan = build_cluster_configurations(&dep).unwrap();
        let got: BTreeSet<Vec<u32>> = plan
            .slots
            .iter()
            .map(|cfg| cfg.cluster_of(0).unwrap().members.clone())
            .collect();

        // oracle: the six triangles around the origin, from consecutive
        // neighbour directions, mapped through the spiral order
        let order = spiral(7);
        let id = |a: Axial| order.iter().position(|&b| b == a).unwrap() as u32;
        let mut want = BTreeSet::new();
        for k in 0..6 {
            let (a, b) = (HEX_DIRECTIONS[k], HEX_DIRECTIONS[(k + 1) % 6]);
            let mut t = vec![0, id(a), id(b)];
            t.sort_unstable();
            want.insert(t);
        }
        assert_eq!(got, want);
    }

    #[test]
    fn non_lattice_input_is_rejected() {
        let mut dep = build_hex_deployment(7, 50.0).unwrap();
        dep.cells[2].y += 3.3;
        assert!(matches!(
            build_cluster_configurations(&dep),
            Err(MulticellError::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn cell_fields_follow_membership() {
        let dep = build_hex_deployment(19, 50.0).unwrap();
        let plan = build_cluster_configurations(&dep).unwrap();
        for c in &dep.cells {
            let f = plan.cell_fields(c.id).unwrap();
            for (j, id) in f.iter().enumerate() {
                assert!(plan.codebook.get(j as u8 + 1, *id).unwrap().contains(&c.id));
            }
        }
    }
}
