//! Task constraints `h(q; c) = 0`, their analytic Jacobians, and the
//! pseudo-inverse projection that pulls configurations onto the constraint
//! manifold.
//!
//! Three constraint families are supported:
//!
//! - end-effector height: the tip of a single chain rides a horizontal line;
//! - closed chain: two chains grip the ends of a rigid rod, constraining the
//!   relative end-effector position and heading;
//! - closed chain with fixed orientation: additionally pins the left
//!   end-effector's absolute heading.
//!
//! All heading residuals are wrapped to `(-pi, pi]`, so the constraint value
//! is unchanged when any heading-like input shifts by a full turn.

use crate::error::Error;
use crate::geom::wrap_angle;
use crate::robot::{forward_kinematics, ChainSystem, Configuration, JOINT_LIMIT};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Constraint family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `h = [ee_y - c[0]]`, one chain, `l = 1`.
    EeHeight,
    /// Two chains holding a rod; `c = [rod_len, handle_angle, rel_heading]`,
    /// `l = 3`.
    ClosedChain,
    /// Closed chain plus `h = wrap(theta_left - c[3])`; `l = 4`.
    ClosedChainOrientation,
}

impl ConstraintKind {
    pub fn dim(self) -> usize {
        match self {
            ConstraintKind::EeHeight => 1,
            ConstraintKind::ClosedChain => 3,
            ConstraintKind::ClosedChainOrientation => 4,
        }
    }

    pub fn condition_dim(self) -> usize {
        match self {
            ConstraintKind::EeHeight => 1,
            ConstraintKind::ClosedChain => 3,
            ConstraintKind::ClosedChainOrientation => 4,
        }
    }
}

/// A fully parameterized constraint instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    /// Condition parameters, layout per [`ConstraintKind`].
    pub c: Vec<f64>,
    /// Residual tolerance in units of `h`.
    pub epsilon: f64,
    /// Projection step scale of the update `q <- q - lambda J^+ h`.
    pub lambda: f64,
    pub max_proj_iters: usize,
}

impl ConstraintSpec {
    pub fn new(kind: ConstraintKind, c: Vec<f64>) -> Result<Self> {
        if c.len() != kind.condition_dim() {
            return Err(Error::argument(format!(
                "constraint expects {} condition parameters, got {}",
                kind.condition_dim(),
                c.len()
            )));
        }
        Ok(ConstraintSpec {
            kind,
            c,
            epsilon: 1e-4,
            lambda: 1.0,
            max_proj_iters: 200,
        })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_proj_iters = iters;
        self
    }
}

/// Outcome of projecting a configuration onto the manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub q_proj: Configuration,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn check_system(spec: &ConstraintSpec, system: &ChainSystem) -> Result<()> {
    let chains_needed = match spec.kind {
        ConstraintKind::EeHeight => 1,
        _ => 2,
    };
    if system.chains().len() != chains_needed {
        return Err(Error::argument(format!(
            "constraint needs {} chain(s), system has {}",
            chains_needed,
            system.chains().len()
        )));
    }
    Ok(())
}

/// Evaluates `h(q; c)`.
pub fn constraint_value(
    spec: &ConstraintSpec,
    system: &ChainSystem,
    q: &Configuration,
) -> Result<Vec<f64>> {
    check_system(spec, system)?;
    let fks = forward_kinematics(system, q)?;
    match spec.kind {
        ConstraintKind::EeHeight => Ok(vec![fks[0].ee.position.y - spec.c[0]]),
        ConstraintKind::ClosedChain | ConstraintKind::ClosedChainOrientation => {
            let (rod, handle, rel) = (spec.c[0], spec.c[1], spec.c[2]);
            let left = &fks[0].ee;
            let right = &fks[1].ee;
            let grip = left.heading + handle;
            let mut h = vec![
                right.position.x - left.position.x - rod * grip.cos(),
                right.position.y - left.position.y - rod * grip.sin(),
                wrap_angle(right.heading - left.heading - rel),
            ];
            if spec.kind == ConstraintKind::ClosedChainOrientation {
                h.push(wrap_angle(left.heading - spec.c[3]));
            }
            Ok(h)
        }
    }
}

/// Analytic Jacobian `dh/dq`, an `l x n` matrix.
pub fn constraint_jacobian(
    spec: &ConstraintSpec,
    system: &ChainSystem,
    q: &Configuration,
) -> Result<DMatrix<f64>> {
    check_system(spec, system)?;
    let fks = forward_kinematics(system, q)?;
    let n = system.n_joints();
    let mut jac = DMatrix::zeros(spec.dim(), n);
    match spec.kind {
        ConstraintKind::EeHeight => {
            // d(ee_y)/d(theta_i) = ee_x - joint_i_x.
            let fk = &fks[0];
            for i in 0..n {
                jac[(0, i)] = fk.ee.position.x - fk.joints[i].position.x;
            }
        }
        ConstraintKind::ClosedChain | ConstraintKind::ClosedChainOrientation => {
            let (rod, handle) = (spec.c[0], spec.c[1]);
            let left = &fks[0];
            let right = &fks[1];
            let grip = left.ee.heading + handle;
            let (sin_g, cos_g) = grip.sin_cos();
            let off_l = system.joint_offset(0);
            let off_r = system.joint_offset(1);
            let n_l = system.chains()[0].n_joints();
            let n_r = system.chains()[1].n_joints();
            for i in 0..n_l {
                let j = left.joints[i].position;
                // d(p_Lx)/d = -(p_Ly - j_y); d(p_Ly)/d = p_Lx - j_x;
                // d(theta_L)/d = 1.
                jac[(0, off_l + i)] = (left.ee.position.y - j.y) + rod * sin_g;
                jac[(1, off_l + i)] = -(left.ee.position.x - j.x) - rod * cos_g;
                jac[(2, off_l + i)] = -1.0;
            }
            for i in 0..n_r {
                let j = right.joints[i].position;
                jac[(0, off_r + i)] = -(right.ee.position.y - j.y);
                jac[(1, off_r + i)] = right.ee.position.x - j.x;
                jac[(2, off_r + i)] = 1.0;
            }
            if spec.kind == ConstraintKind::ClosedChainOrientation {
                for i in 0..n_l {
                    jac[(3, off_l + i)] = 1.0;
                }
            }
        }
    }
    Ok(jac)
}

fn residual_norm(h: &[f64]) -> f64 {
    h.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Singular values below this threshold are treated as zero when forming the
/// pseudo-inverse, which keeps the update finite and deterministic at
/// singular poses.
const PINV_TOLERANCE: f64 = 1e-10;

/// Iterates `q <- q - lambda J^+(q) h(q)` until the residual drops below the
/// tolerance or the iteration budget runs out. Each iterate is clamped to the
/// joint limits. Non-convergence is reported in the result, never an error.
pub fn project(
    spec: &ConstraintSpec,
    system: &ChainSystem,
    q: &Configuration,
) -> Result<ProjectionResult> {
    check_system(spec, system)?;
    let mut cur = q.clone();
    let mut h = constraint_value(spec, system, &cur)?;
    let mut norm = residual_norm(&h);
    let mut iterations = 0;
    while norm > spec.epsilon && iterations < spec.max_proj_iters {
        let jac = constraint_jacobian(spec, system, &cur)?;
        let pinv = jac
            .svd(true, true)
            .pseudo_inverse(PINV_TOLERANCE)
            .map_err(Error::argument)?;
        let step = &pinv * DVector::from_column_slice(&h);
        for (qi, si) in cur.as_mut_slice().iter_mut().zip(step.iter()) {
            *qi = (*qi - spec.lambda * si).clamp(-JOINT_LIMIT, JOINT_LIMIT);
        }
        iterations += 1;
        h = constraint_value(spec, system, &cur)?;
        norm = residual_norm(&h);
    }
    Ok(ProjectionResult {
        q_proj: cur,
        converged: norm <= spec.epsilon,
        iterations,
        residual_norm: norm,
    })
}

/// Linear interpolation in angle space at per-joint spacing at most `step`,
/// with every intermediate point projected back onto the manifold. Both
/// endpoints are returned unchanged; they must already satisfy the
/// constraint.
pub fn interpolate_on_manifold(
    spec: &ConstraintSpec,
    system: &ChainSystem,
    q_a: &Configuration,
    q_b: &Configuration,
    step: f64,
) -> Result<Vec<Configuration>> {
    if step <= 0.0 {
        return Err(Error::argument("interpolation step must be positive"));
    }
    let gap = q_a.max_abs_diff(q_b);
    if gap == 0.0 {
        return Ok(vec![q_a.clone()]);
    }
    if gap <= step {
        return Ok(vec![q_a.clone(), q_b.clone()]);
    }
    let segments = (gap / step).ceil() as usize;
    let mut out = Vec::with_capacity(segments + 1);
    out.push(q_a.clone());
    for i in 1..segments {
        let t = i as f64 / segments as f64;
        let lerp: Vec<f64> = q_a
            .as_slice()
            .iter()
            .zip(q_b.as_slice())
            .map(|(a, b)| a + t * (b - a))
            .collect();
        let res = project(spec, system, &Configuration::new(lerp))?;
        if !res.converged {
            return Err(Error::Interpolation {
                index: i,
                residual: res.residual_norm,
            });
        }
        out.push(res.q_proj);
    }
    out.push(q_b.clone());
    Ok(out)
}

/// Default retry budget for on-manifold sampling.
pub const SAMPLE_RETRY_BUDGET: usize = 100;

/// Draws a uniform random configuration in the joint limits and projects it,
/// retrying until the projection converges.
pub fn sample_on_manifold<R: Rng>(
    spec: &ConstraintSpec,
    system: &ChainSystem,
    rng: &mut R,
) -> Result<Configuration> {
    let n = system.n_joints();
    for _ in 0..SAMPLE_RETRY_BUDGET {
        let q = Configuration::new((0..n).map(|_| rng.gen_range(-JOINT_LIMIT..JOINT_LIMIT)).collect());
        let res = project(spec, system, &q)?;
        if res.converged {
            return Ok(res.q_proj);
        }
    }
    Err(Error::SamplingExhausted {
        attempts: SAMPLE_RETRY_BUDGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{unit, Point2, Pose2};
    use crate::robot::{chain_fk, LinkChain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn two_link_system() -> ChainSystem {
        ChainSystem::single(
            LinkChain::new(Pose2::new(0.0, 0.0, 0.0), vec![1.0, 1.0], vec![0.08; 2], 4).unwrap(),
        )
    }

    fn dual_arm_system() -> ChainSystem {
        ChainSystem::pair(
            LinkChain::uniform(Pose2::new(-0.6, 0.0, 0.0), 3, 0.4),
            LinkChain::uniform(Pose2::new(0.6, 0.0, 0.0), 3, 0.4),
        )
    }

    fn ee_height(c: f64) -> ConstraintSpec {
        ConstraintSpec::new(ConstraintKind::EeHeight, vec![c]).unwrap()
    }

    fn closed_chain(c: [f64; 3]) -> ConstraintSpec {
        ConstraintSpec::new(ConstraintKind::ClosedChain, c.to_vec()).unwrap()
    }

    #[test]
    fn ee_height_value_at_rest() {
        let sys = two_link_system();
        let h = constraint_value(&ee_height(0.0), &sys, &Configuration::new(vec![0.0, 0.0]))
            .unwrap();
        assert!(h[0].abs() < 1e-12);
    }

    #[test]
    fn ee_height_value_raised() {
        let sys = two_link_system();
        let h = constraint_value(
            &ee_height(0.0),
            &sys,
            &Configuration::new(vec![PI / 2.0, 0.0]),
        )
        .unwrap();
        assert!((h[0] - 2.0).abs() < 1e-12);
    }

    /// Builds an exact closed-chain pose: pick the left arm configuration,
    /// derive the required right end-effector pose from the rod parameters,
    /// and solve the right arm analytically (planar 3R inverse kinematics).
    fn exact_closed_chain_pose(
        sys: &ChainSystem,
        spec: &ConstraintSpec,
        q_left: &[f64; 3],
    ) -> Option<Configuration> {
        let left = chain_fk(&sys.chains()[0], q_left).unwrap();
        let (rod, handle, rel) = (spec.c[0], spec.c[1], spec.c[2]);
        let grip = left.ee.heading + handle;
        let target = Point2::new(
            left.ee.position.x + rod * grip.cos(),
            left.ee.position.y + rod * grip.sin(),
        );
        let target_heading = left.ee.heading + rel;
        let right = &sys.chains()[1];
        let l3 = right.link_lengths[2];
        // Wrist position the first two links must reach.
        let dir = unit(target_heading);
        let wrist = Point2::new(target.x - l3 * dir.x, target.y - l3 * dir.y);
        let dx = wrist.x - right.base.position.x;
        let dy = wrist.y - right.base.position.y;
        let (l1, l2) = (right.link_lengths[0], right.link_lengths[1]);
        let d2 = dx * dx + dy * dy;
        let cos_elbow = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if cos_elbow.abs() > 1.0 {
            return None;
        }
        let elbow = cos_elbow.acos();
        let base_angle = dy.atan2(dx)
            - (l2 * elbow.sin()).atan2(l1 + l2 * elbow.cos())
            - right.base.heading;
        let q1 = wrap_angle(base_angle);
        let q2 = wrap_angle(elbow);
        let q3 = wrap_angle(target_heading - right.base.heading - q1 - q2);
        let mut q = q_left.to_vec();
        q.extend_from_slice(&[q1, q2, q3]);
        let q = Configuration::new(q);
        q.within_limits().then_some(q)
    }

    #[test]
    fn closed_chain_exact_pose_has_zero_residual() {
        let sys = dual_arm_system();
        let spec = closed_chain([0.4, 0.3, PI]);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut found = 0;
        while found < 20 {
            let q_left = [
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            ];
            if let Some(q) = exact_closed_chain_pose(&sys, &spec, &q_left) {
                let h = constraint_value(&spec, &sys, &q).unwrap();
                assert!(residual_norm(&h) < 1e-12, "residual {}", residual_norm(&h));
                found += 1;
            }
        }
    }

    #[test]
    fn ee_height_jacobian_analytic_cases() {
        let sys = two_link_system();
        let j = constraint_jacobian(&ee_height(0.0), &sys, &Configuration::new(vec![0.0, 0.0]))
            .unwrap();
        assert!((j[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((j[(0, 1)] - 1.0).abs() < 1e-12);
        let j = constraint_jacobian(
            &ee_height(0.0),
            &sys,
            &Configuration::new(vec![PI / 2.0, 0.0]),
        )
        .unwrap();
        assert!(j[(0, 0)].abs() < 1e-12);
        assert!(j[(0, 1)].abs() < 1e-12);
    }

    fn fd_jacobian(
        spec: &ConstraintSpec,
        sys: &ChainSystem,
        q: &Configuration,
        step: f64,
    ) -> DMatrix<f64> {
        let n = q.len();
        let l = spec.dim();
        let mut jac = DMatrix::zeros(l, n);
        for i in 0..n {
            let mut plus = q.clone();
            plus.as_mut_slice()[i] += step;
            let mut minus = q.clone();
            minus.as_mut_slice()[i] -= step;
            let hp = constraint_value(spec, sys, &plus).unwrap();
            let hm = constraint_value(spec, sys, &minus).unwrap();
            for r in 0..l {
                jac[(r, i)] = (hp[r] - hm[r]) / (2.0 * step);
            }
        }
        jac
    }

    fn assert_jacobian_matches_fd(spec: &ConstraintSpec, sys: &ChainSystem, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sys.n_joints();
        let mut checked = 0;
        while checked < 100 {
            let q = Configuration::new(
                (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>(),
            );
            // Keep clear of the wrap discontinuity in heading residuals.
            let h = constraint_value(spec, sys, &q).unwrap();
            if h.iter().any(|v| v.abs() > PI - 1e-3) {
                continue;
            }
            checked += 1;
            let analytic = constraint_jacobian(spec, sys, &q).unwrap();
            let fd = fd_jacobian(spec, sys, &q, 1e-6);
            for r in 0..spec.dim() {
                for c in 0..n {
                    let a = analytic[(r, c)];
                    let b = fd[(r, c)];
                    assert!(
                        (a - b).abs() <= 1e-6 * f64::max(1.0, a.abs()),
                        "J[{r},{c}]: analytic {a} vs fd {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_ee_height() {
        assert_jacobian_matches_fd(&ee_height(0.2), &two_link_system(), 31);
    }

    #[test]
    fn jacobian_matches_finite_differences_closed_chain() {
        assert_jacobian_matches_fd(&closed_chain([0.4, 0.5, PI]), &dual_arm_system(), 32);
    }

    #[test]
    fn jacobian_matches_finite_differences_closed_chain_orientation() {
        let spec = ConstraintSpec::new(
            ConstraintKind::ClosedChainOrientation,
            vec![0.4, 0.5, PI, 0.2],
        )
        .unwrap();
        assert_jacobian_matches_fd(&spec, &dual_arm_system(), 33);
    }

    #[test]
    fn project_fixed_point_on_manifold() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let q = Configuration::new(vec![0.0, 0.0]);
        let res = project(&spec, &sys, &q).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.q_proj, q);
    }

    #[test]
    fn project_converges_from_nearby_start() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let res = project(&spec, &sys, &Configuration::new(vec![0.3, -0.1])).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 200);
        // Residual verified through an independent evaluation.
        let h = constraint_value(&spec, &sys, &res.q_proj).unwrap();
        assert!(residual_norm(&h) <= 1e-4);
    }

    #[test]
    fn project_reports_nonconvergence_at_singular_start() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        // Jacobian is identically zero at the straight-up pose; the
        // pseudo-inverse of a zero row is zero and the iterate cannot move.
        let res = project(&spec, &sys, &Configuration::new(vec![PI / 2.0, 0.0])).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 200);
        assert!((res.q_proj.as_slice()[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_convergence_rate_on_random_starts() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut converged = 0;
        for _ in 0..200 {
            let q = Configuration::new(vec![
                rng.gen_range(-PI..PI),
                rng.gen_range(-PI..PI),
            ]);
            let res = project(&spec, &sys, &q).unwrap();
            if res.converged {
                converged += 1;
                let h = constraint_value(&spec, &sys, &res.q_proj).unwrap();
                assert!(residual_norm(&h) <= spec.epsilon);
            }
        }
        assert!(converged >= 198, "only {converged}/200 converged");
    }

    #[test]
    fn interpolate_degenerate_segment() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let q = Configuration::new(vec![0.0, 0.0]);
        let path = interpolate_on_manifold(&spec, &sys, &q, &q, 0.05).unwrap();
        assert_eq!(path, vec![q]);
    }

    #[test]
    fn interpolate_single_segment_when_close() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let q_a = project(&spec, &sys, &Configuration::new(vec![0.1, -0.2])).unwrap().q_proj;
        let mut q_b = q_a.clone();
        q_b.as_mut_slice()[0] += 0.03;
        let q_b = project(&spec, &sys, &q_b).unwrap().q_proj;
        if q_a.max_abs_diff(&q_b) <= 0.05 {
            let path = interpolate_on_manifold(&spec, &sys, &q_a, &q_b, 0.05).unwrap();
            assert_eq!(path.len(), 2);
        }
    }

    #[test]
    fn interpolate_random_pairs_stay_on_manifold() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let q_a = sample_on_manifold(&spec, &sys, &mut rng).unwrap();
            let q_b = sample_on_manifold(&spec, &sys, &mut rng).unwrap();
            let step = 0.05;
            let path = match interpolate_on_manifold(&spec, &sys, &q_a, &q_b, step) {
                Ok(p) => p,
                // A failing intermediate projection is a legal outcome.
                Err(Error::Interpolation { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let segments = path.len() - 1;
            // Projection displacement of each waypoint from its linear
            // pre-image (zero at the endpoints).
            let displacement: Vec<f64> = path
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let t = i as f64 / segments as f64;
                    let lerp = Configuration::new(
                        q_a.as_slice()
                            .iter()
                            .zip(q_b.as_slice())
                            .map(|(a, b)| a + t * (b - a))
                            .collect(),
                    );
                    w.max_abs_diff(&lerp)
                })
                .collect();
            for (i, w) in path.iter().enumerate() {
                let h = constraint_value(&spec, &sys, w).unwrap();
                assert!(residual_norm(&h) <= spec.epsilon);
                // Spacing bound: linear spacing plus the projection
                // displacement of both endpoints of the sub-segment.
                if i > 0 {
                    let spacing = w.max_abs_diff(&path[i - 1]);
                    assert!(spacing <= step + displacement[i] + displacement[i - 1] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn sample_satisfies_constraint_via_fk_oracle() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let q = sample_on_manifold(&spec, &sys, &mut rng).unwrap();
            let fk = &forward_kinematics(&sys, &q).unwrap()[0];
            assert!(fk.ee.position.y.abs() <= spec.epsilon);
        }
    }

    #[test]
    fn sample_is_deterministic_in_the_seed() {
        let sys = dual_arm_system();
        let spec = closed_chain([0.4, 0.3, PI]);
        let a = sample_on_manifold(&spec, &sys, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = sample_on_manifold(&spec, &sys, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_spread_covers_feasible_first_joint_interval() {
        let sys = two_link_system();
        let spec = ee_height(0.0);
        // Feasibility scan: with the first joint fixed, the second link can
        // put the tip anywhere in a band of half-width L2 around the first
        // link's tip height.
        let bins = 60;
        let feasible: Vec<bool> = (0..bins)
            .map(|b| {
                let theta = -PI + (b as f64 + 0.5) * 2.0 * PI / bins as f64;
                (spec.c[0] - theta.sin()).abs() <= 1.0
            })
            .collect();
        let mut hit = vec![false; bins];
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..10_000 {
            let q = sample_on_manifold(&spec, &sys, &mut rng).unwrap();
            let b = (((q[0] + PI) / (2.0 * PI) * bins as f64) as usize).min(bins - 1);
            hit[b] = true;
        }
        let feasible_count = feasible.iter().filter(|f| **f).count();
        let hit_count = feasible
            .iter()
            .zip(&hit)
            .filter(|(f, h)| **f && **h)
            .count();
        assert!(
            hit_count as f64 >= 0.9 * feasible_count as f64,
            "covered {hit_count}/{feasible_count} feasible bins"
        );
    }

    #[test]
    fn constraint_value_invariant_under_heading_shift() {
        // Shifting the relative-heading condition by a full turn leaves the
        // wrapped residual unchanged.
        let sys = dual_arm_system();
        let q = Configuration::new(vec![0.3, -0.4, 0.2, 2.0, -0.5, 0.1]);
        let a = constraint_value(&closed_chain([0.4, 0.3, 1.0]), &sys, &q).unwrap();
        let b = constraint_value(&closed_chain([0.4, 0.3, 1.0 + 2.0 * PI]), &sys, &q).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_dimension_mismatch_is_an_error() {
        let sys = two_link_system();
        let spec = closed_chain([0.4, 0.3, PI]);
        assert!(constraint_value(&spec, &sys, &Configuration::new(vec![0.0, 0.0])).is_err());
    }
}
