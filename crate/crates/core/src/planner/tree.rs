//! Search trees over `(q, z)` states with branch deletion.
//!
//! Nodes are tombstoned rather than removed so identifiers stay stable across
//! deletions; the surviving nodes always form a tree rooted at the original
//! root.

use crate::robot::Configuration;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct PlanNode {
    pub q: Configuration,
    /// Latent coordinates; absent in the configuration-space baseline.
    pub z: Option<Vec<f64>>,
    pub parent: Option<NodeId>,
    /// Set by path validation once the node's configuration has been
    /// projected and collision-checked on the current path.
    pub validated: bool,
    alive: bool,
    children: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<PlanNode>,
    root: NodeId,
}

impl Tree {
    pub fn new(q: Configuration, z: Option<Vec<f64>>) -> Self {
        Tree {
            nodes: vec![PlanNode {
                q,
                z,
                parent: None,
                validated: true,
                alive: true,
                children: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &PlanNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut PlanNode {
        &mut self.nodes[id]
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        id < self.nodes.len() && self.nodes[id].alive
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn iter_alive(&self) -> impl Iterator<Item = (NodeId, &PlanNode)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
    }

    pub fn add_child(
        &mut self,
        parent: NodeId,
        q: Configuration,
        z: Option<Vec<f64>>,
        validated: bool,
    ) -> NodeId {
        debug_assert!(self.is_alive(parent));
        let id = self.nodes.len();
        self.nodes.push(PlanNode {
            q,
            z,
            parent: Some(parent),
            validated,
            alive: true,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Tombstones a node and its whole subtree. Deleting the root is not
    /// meaningful and is refused.
    pub fn delete_branch(&mut self, id: NodeId) {
        if id == self.root || !self.is_alive(id) {
            return;
        }
        if let Some(parent) = self.nodes[id].parent {
            self.nodes[parent].children.retain(|&c| c != id);
        }
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            self.nodes[cur].alive = false;
            stack.extend(self.nodes[cur].children.iter().copied());
            self.nodes[cur].children.clear();
        }
    }

    /// Node ids from the root to `id`, inclusive.
    pub fn path_from_root(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            path.push(c);
            cur = self.nodes[c].parent;
        }
        path.reverse();
        debug_assert_eq!(path[0], self.root);
        path
    }

    /// Splices a validated chain of states between `parent` and `child`:
    /// `parent -> chain[0] -> ... -> chain[k-1] -> child`.
    pub fn insert_chain(
        &mut self,
        parent: NodeId,
        child: NodeId,
        chain: Vec<(Configuration, Vec<f64>)>,
    ) {
        debug_assert_eq!(self.nodes[child].parent, Some(parent));
        let mut cur = parent;
        for (q, z) in chain {
            cur = self.add_child(cur, q, Some(z), true);
        }
        if cur != parent {
            self.nodes[parent].children.retain(|&c| c != child);
            self.nodes[child].parent = Some(cur);
            self.nodes[cur].children.push(child);
        }
    }

    /// Closest alive node by Euclidean distance in latent coordinates.
    pub fn nearest_z(&self, z: &[f64]) -> NodeId {
        self.iter_alive()
            .filter_map(|(id, n)| {
                n.z.as_ref().map(|nz| {
                    let d: f64 = nz.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                    (id, d)
                })
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
            .expect("tree has at least the root")
    }

    /// Closest alive node by Euclidean distance in joint space.
    pub fn nearest_q(&self, q: &Configuration) -> NodeId {
        self.iter_alive()
            .map(|(id, n)| (id, n.q.dist(q)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
            .expect("tree has at least the root")
    }

    /// Checks the structural invariant: every alive non-root node has an
    /// alive parent, and parent chains terminate at the root.
    pub fn check_invariant(&self) -> bool {
        for (id, n) in self.iter_alive() {
            if id == self.root {
                continue;
            }
            match n.parent {
                Some(p) if self.is_alive(p) => {
                    let path = self.path_from_root(id);
                    if path[0] != self.root {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(v: f64) -> Configuration {
        Configuration::new(vec![v, -v])
    }

    #[test]
    fn delete_branch_removes_descendants_only() {
        let mut t = Tree::new(q(0.0), None);
        let a = t.add_child(t.root(), q(1.0), None, false);
        let b = t.add_child(a, q(2.0), None, false);
        let c = t.add_child(b, q(3.0), None, false);
        let d = t.add_child(t.root(), q(4.0), None, false);
        t.delete_branch(b);
        assert!(t.is_alive(a));
        assert!(!t.is_alive(b));
        assert!(!t.is_alive(c));
        assert!(t.is_alive(d));
        assert!(t.check_invariant());
    }

    #[test]
    fn root_cannot_be_deleted() {
        let mut t = Tree::new(q(0.0), None);
        t.delete_branch(t.root());
        assert!(t.is_alive(t.root()));
    }

    #[test]
    fn path_from_root_orders_ancestors() {
        let mut t = Tree::new(q(0.0), None);
        let a = t.add_child(t.root(), q(1.0), None, false);
        let b = t.add_child(a, q(2.0), None, false);
        assert_eq!(t.path_from_root(b), vec![t.root(), a, b]);
        assert_eq!(t.path_from_root(t.root()), vec![t.root()]);
    }

    #[test]
    fn insert_chain_reparents_child() {
        let mut t = Tree::new(q(0.0), Some(vec![0.0]));
        let a = t.add_child(t.root(), q(1.0), Some(vec![1.0]), false);
        t.insert_chain(
            t.root(),
            a,
            vec![(q(0.3), vec![0.3]), (q(0.6), vec![0.6])],
        );
        let path = t.path_from_root(a);
        assert_eq!(path.len(), 4);
        assert!((t.node(path[1]).q[0] - 0.3).abs() < 1e-12);
        assert!((t.node(path[2]).q[0] - 0.6).abs() < 1e-12);
        assert!(t.check_invariant());
    }

    #[test]
    fn nearest_ignores_dead_nodes() {
        let mut t = Tree::new(q(0.0), Some(vec![0.0, 0.0]));
        let a = t.add_child(t.root(), q(1.0), Some(vec![5.0, 5.0]), false);
        t.delete_branch(a);
        assert_eq!(t.nearest_z(&[5.0, 5.0]), t.root());
        assert_eq!(t.nearest_q(&q(1.0)), t.root());
    }

    #[test]
    fn random_edits_preserve_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let mut t = Tree::new(q(0.0), None);
            let mut ids = vec![t.root()];
            for step in 0..60 {
                if rng.gen_bool(0.7) || ids.len() == 1 {
                    let parent = ids[rng.gen_range(0..ids.len())];
                    if t.is_alive(parent) {
                        ids.push(t.add_child(parent, q(step as f64), None, rng.gen_bool(0.5)));
                    }
                } else {
                    let victim = ids[rng.gen_range(0..ids.len())];
                    t.delete_branch(victim);
                }
            }
            assert!(t.check_invariant());
        }
    }
}
