//! Deterministic planner time.
//!
//! Planning time is accounted by a work clock: every elementary operation
//! (projection iteration, collision check, network evaluation) charges its
//! floating-point cost estimate, and "seconds" are that total divided by a
//! fixed reference rate. Two runs with the same seed therefore report
//! byte-identical timings and make identical time-limit decisions, which real
//! wall clocks cannot guarantee; the split between search and check work is
//! preserved because both phases are measured in the same units.

/// Reference execution rate used to convert work into seconds.
pub const FLOPS_PER_SECOND: f64 = 1.0e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Search,
    Check,
}

/// Accumulates work per phase.
#[derive(Debug, Clone)]
pub struct WorkClock {
    search_flops: f64,
    check_flops: f64,
    phase: Phase,
}

impl WorkClock {
    pub fn new() -> Self {
        WorkClock {
            search_flops: 0.0,
            check_flops: 0.0,
            phase: Phase::Search,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn charge(&mut self, flops: f64) {
        match self.phase {
            Phase::Search => self.search_flops += flops,
            Phase::Check => self.check_flops += flops,
        }
    }

    pub fn search_seconds(&self) -> f64 {
        self.search_flops / FLOPS_PER_SECOND
    }

    pub fn check_seconds(&self) -> f64 {
        self.check_flops / FLOPS_PER_SECOND
    }

    pub fn total_seconds(&self) -> f64 {
        self.search_seconds() + self.check_seconds()
    }
}

impl Default for WorkClock {
    fn default() -> Self {
        Self::new()
    }
}

/// Cost of forward kinematics over `n` joints.
pub fn cost_fk(n: usize) -> f64 {
    40.0 * n as f64 + 20.0
}

/// Cost of an exact collision check.
pub fn cost_collision(circles: usize, obstacles: usize) -> f64 {
    cost_fk(circles / 2) + circles as f64 * (8.0 + 10.0 * obstacles as f64)
}

/// Cost of one projection run that took `iters` Newton steps on an
/// `l x n` constraint.
pub fn cost_projection(n: usize, l: usize, iters: usize) -> f64 {
    let per_iter = cost_fk(n) + 20.0 * l as f64 + 15.0 * (l * n) as f64
        + 60.0 * (l * l * n) as f64;
    cost_fk(n) + iters as f64 * per_iter
}

/// Cost of a dense forward pass with the given layer sizes.
pub fn cost_mlp_forward(dims: &[usize]) -> f64 {
    dims.windows(2).map(|p| 2.0 * (p[0] * p[1]) as f64).sum()
}

/// Nearest-neighbor linear scan over `count` vectors of width `dim`.
pub fn cost_nearest(count: usize, dim: usize) -> f64 {
    3.0 * (count * dim) as f64
}
