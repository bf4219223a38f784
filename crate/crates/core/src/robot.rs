//! Planar kinematic chains, forward kinematics, envelope circles and the
//! exact ground-truth collision check.
//!
//! The robot body is represented for collision purposes by a union of circles
//! placed along each link; clearance and collision queries reduce to point
//! lookups against obstacle discs or a distance field. This envelope is the
//! authoritative robot geometry: whatever it says about a configuration
//! defines occupancy for every other module.

use crate::envfield::EnvironmentSpec;
use crate::error::Error;
use crate::geom::{unit, Point2, Pose2};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Joint limits are fixed and symmetric for every joint, with no wrap-around:
/// interpolation and distances are plain linear operations in angle space.
pub const JOINT_LIMIT: f64 = std::f64::consts::PI;

/// A joint-angle vector of a chain system, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(angles: Vec<f64>) -> Self {
        Configuration(angles)
    }

    pub fn zeros(n: usize) -> Self {
        Configuration(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// True when every joint lies within the (closed) joint limits.
    pub fn within_limits(&self) -> bool {
        self.0.iter().all(|a| a.abs() <= JOINT_LIMIT)
    }

    /// Clamps every joint into the limits in place.
    pub fn clamp_to_limits(&mut self) {
        for a in &mut self.0 {
            *a = a.clamp(-JOINT_LIMIT, JOINT_LIMIT);
        }
    }

    /// Largest absolute per-joint difference.
    pub fn max_abs_diff(&self, other: &Configuration) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance in joint space.
    pub fn dist(&self, other: &Configuration) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for Configuration {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A planar serial chain of revolute joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkChain {
    pub base: Pose2,
    pub link_lengths: Vec<f64>,
    pub envelope_radii: Vec<f64>,
    pub samples_per_link: usize,
}

impl LinkChain {
    /// Builds a chain, checking the structural invariants.
    pub fn new(
        base: Pose2,
        link_lengths: Vec<f64>,
        envelope_radii: Vec<f64>,
        samples_per_link: usize,
    ) -> Result<Self> {
        if link_lengths.is_empty() {
            return Err(Error::argument("chain needs at least one link"));
        }
        if link_lengths.iter().any(|l| *l <= 0.0) {
            return Err(Error::argument("link lengths must be positive"));
        }
        if envelope_radii.len() != link_lengths.len() || envelope_radii.iter().any(|r| *r <= 0.0) {
            return Err(Error::argument("one positive envelope radius per link"));
        }
        if samples_per_link < 2 {
            return Err(Error::argument("samples_per_link must be at least 2"));
        }
        Ok(LinkChain {
            base,
            link_lengths,
            envelope_radii,
            samples_per_link,
        })
    }

    /// Chain with uniform link length and the default envelope density:
    /// 4 circles per link with radius 0.08 x link length.
    pub fn uniform(base: Pose2, n_links: usize, link_length: f64) -> Self {
        LinkChain::new(
            base,
            vec![link_length; n_links],
            vec![0.08 * link_length; n_links],
            4,
        )
        .expect("uniform chain parameters are valid")
    }

    pub fn n_joints(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }
}

/// One or two chains treated as a single system with a stacked joint vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSystem {
    chains: Vec<LinkChain>,
}

impl ChainSystem {
    pub fn single(chain: LinkChain) -> Self {
        ChainSystem {
            chains: vec![chain],
        }
    }

    pub fn pair(left: LinkChain, right: LinkChain) -> Self {
        ChainSystem {
            chains: vec![left, right],
        }
    }

    pub fn chains(&self) -> &[LinkChain] {
        &self.chains
    }

    pub fn n_joints(&self) -> usize {
        self.chains.iter().map(LinkChain::n_joints).sum()
    }

    /// Splits a stacked joint vector into per-chain slices.
    pub fn split<'a>(&self, q: &'a [f64]) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.chains.len());
        let mut offset = 0;
        for c in &self.chains {
            out.push(&q[offset..offset + c.n_joints()]);
            offset += c.n_joints();
        }
        out
    }

    /// Offset of chain `i`'s joints inside the stacked vector.
    pub fn joint_offset(&self, i: usize) -> usize {
        self.chains[..i].iter().map(LinkChain::n_joints).sum()
    }

    fn check_dims(&self, q: &Configuration) -> Result<()> {
        if q.len() != self.n_joints() {
            return Err(Error::argument(format!(
                "configuration has {} joints, system expects {}",
                q.len(),
                self.n_joints()
            )));
        }
        Ok(())
    }
}

/// Forward kinematics of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFk {
    /// Frame at joint `i`: origin of link `i` with the heading of link `i`
    /// (base heading plus the cumulative joint angles up to and including
    /// joint `i`).
    pub joints: Vec<Pose2>,
    /// Tip of the last link, same heading as the last joint frame.
    pub ee: Pose2,
}

/// Forward kinematics of a single chain for its slice of joint angles.
pub fn chain_fk(chain: &LinkChain, q: &[f64]) -> Result<ChainFk> {
    if q.len() != chain.n_joints() {
        return Err(Error::argument(format!(
            "chain has {} joints, got {} angles",
            chain.n_joints(),
            q.len()
        )));
    }
    let mut joints = Vec::with_capacity(q.len());
    let mut pos = chain.base.position;
    let mut heading = chain.base.heading;
    for (i, &angle) in q.iter().enumerate() {
        heading += angle;
        joints.push(Pose2 {
            position: pos,
            heading,
        });
        let dir = unit(heading);
        pos = Point2::new(
            pos.x + chain.link_lengths[i] * dir.x,
            pos.y + chain.link_lengths[i] * dir.y,
        );
    }
    Ok(ChainFk {
        joints,
        ee: Pose2 {
            position: pos,
            heading,
        },
    })
}

/// Forward kinematics for every chain in the system.
pub fn forward_kinematics(system: &ChainSystem, q: &Configuration) -> Result<Vec<ChainFk>> {
    system.check_dims(q)?;
    system
        .split(q.as_slice())
        .iter()
        .zip(system.chains())
        .map(|(slice, chain)| chain_fk(chain, slice))
        .collect()
}

/// The circle union covering the robot at a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSet {
    /// `(center, radius)` pairs, `samples_per_link` per link in chain order.
    pub circles: Vec<(Point2, f64)>,
}

impl EnvelopeSet {
    pub fn max_radius(&self) -> f64 {
        self.circles.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

/// Places the envelope circles for a configuration: per link,
/// `samples_per_link` centers at equal fractions along the segment, both
/// endpoints included, each carrying the link's envelope radius.
pub fn envelope_circles(system: &ChainSystem, q: &Configuration) -> Result<EnvelopeSet> {
    let fks = forward_kinematics(system, q)?;
    let mut circles = Vec::new();
    for (chain, fk) in system.chains().iter().zip(&fks) {
        for i in 0..chain.n_joints() {
            let start = fk.joints[i].position;
            let end = if i + 1 < chain.n_joints() {
                fk.joints[i + 1].position
            } else {
                fk.ee.position
            };
            let s = chain.samples_per_link;
            for k in 0..s {
                let t = k as f64 / (s - 1) as f64;
                let c = Point2::new(
                    start.x + t * (end.x - start.x),
                    start.y + t * (end.y - start.y),
                );
                circles.push((c, chain.envelope_radii[i]));
            }
        }
    }
    Ok(EnvelopeSet { circles })
}

/// Ground-truth collision check: true iff the configuration is collision
/// free, i.e. every envelope circle lies fully inside the workspace box and
/// strictly clear of every obstacle disc. This check, not any learned or
/// grid-based proxy, defines occupancy throughout the crate.
pub fn exact_collision_check(
    system: &ChainSystem,
    q: &Configuration,
    env: &EnvironmentSpec,
) -> Result<bool> {
    let envelope = envelope_circles(system, q)?;
    for &(center, r) in &envelope.circles {
        if !env.workspace.contains_disc(center, r) {
            return Ok(false);
        }
        for obs in &env.obstacles {
            let min_dist = r + obs.radius;
            if center.dist_sq(obs.center) <= min_dist * min_dist {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
