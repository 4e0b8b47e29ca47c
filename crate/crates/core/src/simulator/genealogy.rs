//! Genealogy storage, growth and path observables.

use rand::Rng;
use serde::Serialize;

use crate::models::Model;

pub const NO_PARENT: u32 = u32::MAX;

/// One particle. It is present on `[birth, death)`; its children are born
/// at `death` and stored contiguously from `first_child`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub parent: u32,
    pub birth: f64,
    pub death: f64,
    pub n_children: u32,
    pub first_child: u32,
}

impl Node {
    #[inline]
    pub fn alive_at(&self, u: f64) -> bool {
        self.birth <= u && u < self.death
    }

    pub fn children(&self) -> std::ops::Range<usize> {
        self.first_child as usize..(self.first_child + self.n_children) as usize
    }
}

/// A simulated family tree in breadth-first (FIFO) order: every parent
/// precedes its children. Offspring are drawn for every particle dying at
/// or before `horizon`, so the tree is complete up to that time unless
/// `capped` is set.
#[derive(Debug, Clone, Default)]
pub struct Genealogy {
    nodes: Vec<Node>,
    roots: usize,
    horizon: f64,
    capped: bool,
    alive_at_horizon: u64,
}

impl Genealogy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> usize {
        self.roots
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The node cap was hit; observables past the cut are unreliable.
    pub fn capped(&self) -> bool {
        self.capped
    }

    /// `Z(horizon)`, tracked while growing.
    pub fn population_at_horizon(&self) -> u64 {
        self.alive_at_horizon
    }

    /// Rebuilds `self` as the tree of `roots` initial particles born at 0.
    pub fn grow<R: Rng + ?Sized>(&mut self, model: &Model, roots: usize, horizon: f64, cap: usize, rng: &mut R) {
        self.nodes.clear();
        self.roots = 0;
        self.capped = false;
        self.alive_at_horizon = 0;
        self.horizon = horizon;
        if roots > cap {
            self.capped = true;
            return;
        }
        for _ in 0..roots {
            let death = model.lifetime.sample(rng);
            self.push(NO_PARENT, 0.0, death);
        }
        self.roots = roots;
        self.branch_from(0, model, cap, rng);
    }

    /// Raises the horizon, drawing offspring for particles that die in
    /// `(old horizon, new horizon]`.
    pub fn extend<R: Rng + ?Sized>(&mut self, model: &Model, horizon: f64, cap: usize, rng: &mut R) {
        if horizon <= self.horizon || self.capped {
            return;
        }
        let old = self.horizon;
        self.horizon = horizon;
        self.alive_at_horizon = 0;
        // particles past the old horizon have no children yet
        let start = self.nodes.len();
        let mut pending = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.death > old {
                pending.push(i);
            }
        }
        for &i in &pending {
            if !self.reproduce(i, model, cap, rng) {
                return;
            }
        }
        for &i in &pending {
            if self.nodes[i].death > horizon {
                self.alive_at_horizon += 1;
            }
        }
        self.branch_from(start, model, cap, rng);
    }

    fn push(&mut self, parent: u32, birth: f64, death: f64) {
        if death > self.horizon {
            self.alive_at_horizon += 1;
        }
        self.nodes.push(Node { parent, birth, death, n_children: 0, first_child: 0 });
    }

    /// Draws the offspring of node `i` if it dies by the horizon. Returns
    /// false when the cap is hit.
    fn reproduce<R: Rng + ?Sized>(&mut self, i: usize, model: &Model, cap: usize, rng: &mut R) -> bool {
        let death = self.nodes[i].death;
        if death > self.horizon {
            return true;
        }
        let k = model.offspring.sample(rng) as usize;
        if self.nodes.len() + k > cap {
            self.capped = true;
            return false;
        }
        let first = self.nodes.len() as u32;
        for _ in 0..k {
            let child_death = death + model.lifetime.sample(rng);
            self.push(i as u32, death, child_death);
        }
        let node = &mut self.nodes[i];
        node.first_child = first;
        node.n_children = k as u32;
        true
    }

    fn branch_from<R: Rng + ?Sized>(&mut self, start: usize, model: &Model, cap: usize, rng: &mut R) {
        let mut i = start;
        while i < self.nodes.len() {
            if !self.reproduce(i, model, cap, rng) {
                return;
            }
            i += 1;
        }
    }

    /// `Z(u)` for `u <= horizon`.
    pub fn population_at(&self, u: f64) -> u64 {
        self.nodes.iter().filter(|n| n.alive_at(u)).count() as u64
    }

    /// `Z~(u, x)`: particles present at `u` whose age `u - birth` is at most `x`.
    pub fn young_at(&self, u: f64, x: f64) -> u64 {
        self.nodes.iter().filter(|n| n.alive_at(u) && u - n.birth <= x).count() as u64
    }

    /// `Z*(t, x)`: particles present at `t`, born before `t`, that are still
    /// alive at `t + x`.
    pub fn survivors(&self, t: f64, x: f64) -> u64 {
        self.nodes.iter().filter(|n| n.birth < t && n.death > t + x).count() as u64
    }

    /// Per node: the node or one of its descendants is present at `t`.
    pub fn ancestry_marks(&self, t: f64) -> Vec<bool> {
        let mut marks = vec![false; self.nodes.len()];
        self.ancestry_marks_into(t, &mut marks);
        marks
    }

    pub fn ancestry_marks_into(&self, t: f64, marks: &mut Vec<bool>) {
        marks.clear();
        marks.resize(self.nodes.len(), false);
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            marks[i] = node.alive_at(t) || (node.death <= t && node.children().any(|c| marks[c]));
        }
    }

    /// `Z(s, t)` given the marks for `t`.
    pub fn reduced_count(&self, s: f64, marks: &[bool]) -> u64 {
        self.nodes.iter().zip(marks).filter(|(n, m)| **m && n.alive_at(s)).count() as u64
    }

    /// `beta(t) = sup{s < t : Z(s, t) = 1}`, following the single marked
    /// line from the root until it splits or reaches `t`.
    pub fn mrca(&self, t: f64, marks: &[bool]) -> Option<f64> {
        let mut marked_roots = (0..self.roots).filter(|&i| marks[i]);
        let mut i = marked_roots.next()?;
        if marked_roots.next().is_some() {
            return None;
        }
        loop {
            let node = &self.nodes[i];
            if node.alive_at(t) {
                return Some(t);
            }
            let mut marked = node.children().filter(|&c| marks[c]);
            let first = marked.next()?;
            if marked.next().is_some() {
                return Some(node.death);
            }
            i = first;
        }
    }

    /// Largest remaining lifetime among particles present at `s`.
    pub fn max_residual(&self, s: f64) -> Option<f64> {
        self.nodes.iter().filter(|n| n.alive_at(s)).map(|n| n.death - s).reduce(f64::max)
    }

    /// Time of extinction when the whole tree dies out by the horizon.
    pub fn extinct_by(&self) -> Option<f64> {
        if self.capped || self.nodes.iter().any(|n| n.death > self.horizon) {
            return None;
        }
        Some(self.nodes.iter().map(|n| n.death).fold(0.0, f64::max))
    }

    /// Number of particles born in `(0, u]`.
    pub fn births_by(&self, u: f64) -> u64 {
        self.nodes.iter().filter(|n| n.birth > 0.0 && n.birth <= u).count() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryObservables {
    pub z_t: u64,
    /// `Z(s, t)` for each queried `s`.
    pub z_reduced: Vec<u64>,
    pub beta: Option<f64>,
    pub d: Option<f64>,
    /// `Z*(t, x)` for each queried `x`.
    pub z_star: Vec<u64>,
    /// `Z~(t, x)` for each queried `x`.
    pub z_tilde: Vec<u64>,
    /// Largest residual lifetime at each queried `s`.
    pub max_residual: Vec<Option<f64>>,
    pub extinct_by: Option<f64>,
}

/// Reads off the observables at time `t`. The genealogy must reach
/// `t + max(x_grid)`.
pub fn observables(genealogy: &Genealogy, t: f64, s_grid: &[f64], x_grid: &[f64]) -> TrajectoryObservables {
    let mut marks = Vec::new();
    observables_with(genealogy, t, s_grid, x_grid, &mut marks)
}

pub fn observables_with(
    genealogy: &Genealogy,
    t: f64,
    s_grid: &[f64],
    x_grid: &[f64],
    marks: &mut Vec<bool>,
) -> TrajectoryObservables {
    let xmax = x_grid.iter().copied().fold(0.0, f64::max);
    debug_assert!(genealogy.horizon() >= t + xmax, "genealogy horizon too short");
    genealogy.ancestry_marks_into(t, marks);
    let z_t = genealogy.population_at(t);
    let beta = genealogy.mrca(t, marks);
    TrajectoryObservables {
        z_t,
        z_reduced: s_grid.iter().map(|&s| genealogy.reduced_count(s, marks)).collect(),
        beta,
        d: beta.map(|b| t - b),
        z_star: x_grid.iter().map(|&x| genealogy.survivors(t, x)).collect(),
        z_tilde: x_grid.iter().map(|&x| genealogy.young_at(t, x)).collect(),
        max_residual: s_grid.iter().map(|&s| genealogy.max_residual(s)).collect(),
        extinct_by: genealogy.extinct_by(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Builtin;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn hand_tree() -> Genealogy {
        // root [0,1) -> a [1,3), b [1,2); b -> c [2,5)
        let mut g = Genealogy { roots: 1, horizon: 10.0, ..Default::default() };
        g.nodes = vec![
            Node { parent: NO_PARENT, birth: 0.0, death: 1.0, n_children: 2, first_child: 1 },
            Node { parent: 0, birth: 1.0, death: 3.0, n_children: 0, first_child: 0 },
            Node { parent: 0, birth: 1.0, death: 2.0, n_children: 1, first_child: 3 },
            Node { parent: 2, birth: 2.0, death: 5.0, n_children: 0, first_child: 0 },
        ];
        g
    }

    #[test]
    fn hand_tree_observables() {
        let g = hand_tree();
        let obs = observables(&g, 2.5, &[0.0, 0.5, 1.0, 2.0, 2.5], &[1.0, 3.0]);
        assert_eq!(obs.z_t, 2);
        assert_eq!(obs.z_reduced, vec![1, 1, 2, 2, 2]);
        assert_eq!(obs.beta, Some(1.0));
        assert_eq!(obs.d, Some(1.5));
        // c (born 2 < 2.5) is alive past 3.5; a dies at 3
        assert_eq!(obs.z_star, vec![1, 0]);
        assert_eq!(obs.z_tilde, vec![1, 2]);
        assert_eq!(obs.max_residual[0], Some(1.0));
        assert_eq!(obs.max_residual[3], Some(3.0));
        assert_eq!(obs.extinct_by, Some(5.0));
        let late = observables(&g, 4.0, &[0.0, 1.5], &[]);
        assert_eq!((late.z_t, late.beta), (1, Some(4.0)));
        assert_eq!(late.z_reduced, vec![1, 1]);
    }

    #[test]
    fn death_at_t_counts_through_children() {
        let g = hand_tree();
        let obs = observables(&g, 1.0, &[0.5, 1.0], &[]);
        assert_eq!(obs.z_t, 2);
        assert_eq!(obs.z_reduced, vec![1, 2]);
        assert_eq!(obs.beta, Some(1.0));
    }

    #[test]
    fn extinct_root() {
        let mut g = Genealogy { roots: 1, horizon: 5.0, ..Default::default() };
        g.nodes = vec![Node { parent: NO_PARENT, birth: 0.0, death: 1.0, n_children: 0, first_child: 0 }];
        let obs = observables(&g, 3.0, &[0.0, 2.0], &[]);
        assert_eq!(obs.z_t, 0);
        assert_eq!(obs.z_reduced, vec![0, 0]);
        assert_eq!(obs.beta, None);
        assert_eq!(obs.extinct_by, Some(1.0));
    }

    #[test]
    fn fifo_layout_and_horizon_count() {
        let m = Builtin::GeoExp.model();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let mut g = Genealogy::new();
        for _ in 0..200 {
            g.grow(&m, 1, 20.0, 1_000_000, &mut rng);
            assert_eq!(g.population_at_horizon(), g.population_at(20.0));
            for (i, n) in g.nodes().iter().enumerate() {
                assert!(n.death > n.birth);
                for c in n.children() {
                    assert!(c > i);
                    assert_eq!(g.nodes()[c].parent as usize, i);
                    assert_eq!(g.nodes()[c].birth, n.death);
                }
                if n.death > 20.0 {
                    assert_eq!(n.n_children, 0);
                }
            }
        }
    }

    #[test]
    fn extension_completes_the_tree() {
        let m = Builtin::BinLat.model();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let mut g = Genealogy::new();
        for _ in 0..500 {
            g.grow(&m, 1, 10.0, 1_000_000, &mut rng);
            let z10 = g.population_at(10.0);
            g.extend(&m, 15.0, 1_000_000, &mut rng);
            assert_eq!(g.population_at(10.0), z10);
            assert_eq!(g.population_at_horizon(), g.population_at(15.0));
            for n in g.nodes() {
                if n.death > 15.0 {
                    assert_eq!(n.n_children, 0);
                }
            }
        }
    }

    #[test]
    fn cap_is_reported() {
        let m = Builtin::GeoDet.model();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let mut g = Genealogy::new();
        let mut capped = 0;
        for _ in 0..2000 {
            g.grow(&m, 1, 200.0, 50, &mut rng);
            capped += g.capped() as u32;
            assert!(g.len() <= 50);
        }
        assert!(capped > 0);
    }
}
