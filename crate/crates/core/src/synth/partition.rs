use std::collections::HashMap;

use crate::hierarchy::{NodeId, PartitionTree, Region};
use crate::stream::Point;

struct Cell {
    region: Region,
    members: Vec<u32>,
    mass: f64,
    split: bool,
}

/// Lazily buckets weighted points down the tree. A node's bucket is derived
/// from its parent's, so counting a node costs time proportional to the
/// points in its parent rather than to the whole input.
pub(crate) struct EventPartition<'a> {
    tree: &'a PartitionTree,
    items: Vec<(&'a Point, f64)>,
    cells: HashMap<NodeId, Cell>,
}

impl<'a> EventPartition<'a> {
    pub(crate) fn new(tree: &'a PartitionTree, items: Vec<(&'a Point, f64)>) -> Self {
        let members: Vec<u32> = (0..items.len() as u32).collect();
        let mass = items.iter().map(|&(_, w)| w).sum();
        let mut cells = HashMap::new();
        cells.insert(
            tree.root(),
            Cell {
                region: Region::of_domain(tree.domain()),
                members,
                mass,
                split: false,
            },
        );
        EventPartition { tree, items, cells }
    }

    /// Total weight of the points inside `v`.
    pub(crate) fn count(&mut self, v: NodeId) -> f64 {
        if let Some(cell) = self.cells.get(&v) {
            return cell.mass;
        }
        let parent = self.tree.parent(v).expect("root cell always exists");
        self.count(parent);
        self.split(parent);
        self.cells[&v].mass
    }

    fn split(&mut self, v: NodeId) {
        let tree = self.tree;
        let cell = self.cells.get_mut(&v).expect("split of an uncounted node");
        if cell.split {
            return;
        }
        cell.split = true;
        let members = std::mem::take(&mut cell.members);
        let region = cell.region.clone();
        let fanout = tree.fanout() as usize;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); fanout];
        for i in members {
            let c = tree.child_index(&region, v.depth(), self.items[i as usize].0);
            buckets[c as usize].push(i);
        }
        for (c, members) in buckets.into_iter().enumerate() {
            let mass = members.iter().map(|&i| self.items[i as usize].1).sum();
            self.cells.insert(
                tree.child(v, c as u32),
                Cell {
                    region: tree.child_region(&region, v.depth(), c as u32),
                    members,
                    mass,
                    split: false,
                },
            );
        }
    }
}
