//! Obstacle environments, occupancy grids and exact signed distance fields.
//!
//! The distance transform is computed with the two-pass lower-envelope
//! algorithm over integer squared cell offsets, with all envelope comparisons
//! done in exact rational arithmetic. The resulting squared distances are the
//! same integers a brute-force all-pairs scan produces, so field values match
//! the naive transform bit for bit.

use crate::error::Error;
use crate::geom::{Aabb, Point2};
use crate::robot::{envelope_circles, ChainSystem, Configuration};
use crate::Result;
use serde::{Deserialize, Serialize};

/// A circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point2, radius: f64) -> Self {
        Disc { center, radius }
    }
}

/// Obstacle discs plus the workspace box the robot must stay inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub workspace: Aabb,
    pub obstacles: Vec<Disc>,
}

impl EnvironmentSpec {
    pub fn new(workspace: Aabb, obstacles: Vec<Disc>) -> Result<Self> {
        for d in &obstacles {
            if d.radius <= 0.0 {
                return Err(Error::argument("obstacle radius must be positive"));
            }
            if !workspace.contains(d.center) {
                return Err(Error::argument("obstacle center outside workspace"));
            }
        }
        Ok(EnvironmentSpec {
            workspace,
            obstacles,
        })
    }

    pub fn empty(workspace: Aabb) -> Self {
        EnvironmentSpec {
            workspace,
            obstacles: Vec::new(),
        }
    }
}

/// Boolean occupancy over a square grid of cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    /// Cells per side.
    pub resolution: usize,
    /// Cell edge length in meters.
    pub cell_size: f64,
    /// World position of the grid's lower-left corner.
    pub origin: Point2,
    /// Row-major occupancy, index `y * resolution + x`.
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn cell_center(&self, x: usize, y: usize) -> Point2 {
        Point2::new(
            self.origin.x + (x as f64 + 0.5) * self.cell_size,
            self.origin.y + (y as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn at(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.resolution + x]
    }

    /// Full side length in meters.
    pub fn extent(&self) -> f64 {
        self.resolution as f64 * self.cell_size
    }

    /// Diagonal of the grid extent; the cap used for degenerate fields.
    pub fn diagonal(&self) -> f64 {
        self.extent() * std::f64::consts::SQRT_2
    }
}

/// Per-cell distance to the nearest obstacle boundary cell, negative inside
/// occupied space. Shares its geometry with the source grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedDistanceField {
    pub resolution: usize,
    pub cell_size: f64,
    pub origin: Point2,
    /// Row-major values in meters, index `y * resolution + x`.
    pub values: Vec<f64>,
}

impl SignedDistanceField {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.resolution + x]
    }
}

/// Rasterizes the obstacle set: a cell is occupied iff its center lies inside
/// some obstacle disc. The grid is centered on the workspace and must cover
/// it entirely.
pub fn rasterize(env: &EnvironmentSpec, resolution: usize, cell_size: f64) -> Result<OccupancyGrid> {
    if resolution < 8 {
        return Err(Error::argument("grid resolution must be at least 8"));
    }
    let extent = resolution as f64 * cell_size;
    if extent + 1e-12 < env.workspace.width() || extent + 1e-12 < env.workspace.height() {
        return Err(Error::argument("grid extent does not cover the workspace"));
    }
    let cx = 0.5 * (env.workspace.min.x + env.workspace.max.x);
    let cy = 0.5 * (env.workspace.min.y + env.workspace.max.y);
    let origin = Point2::new(cx - 0.5 * extent, cy - 0.5 * extent);
    let mut cells = vec![false; resolution * resolution];
    for y in 0..resolution {
        for x in 0..resolution {
            let p = Point2::new(
                origin.x + (x as f64 + 0.5) * cell_size,
                origin.y + (y as f64 + 0.5) * cell_size,
            );
            cells[y * resolution + x] = env
                .obstacles
                .iter()
                .any(|o| p.dist_sq(o.center) < o.radius * o.radius);
        }
    }
    Ok(OccupancyGrid {
        resolution,
        cell_size,
        origin,
        cells,
    })
}

const UNREACHED: i64 = i64::MAX;

/// 1D squared distance (in cells) to the nearest seed along each column.
fn column_sq_dist(seeds: &[bool], res: usize) -> Vec<i64> {
    // seeds is the full grid; output g[y*res+x] = min over seed rows y' in
    // column x of (y - y')^2, UNREACHED if the column has no seed.
    let mut g = vec![UNREACHED; res * res];
    for x in 0..res {
        let mut last: Option<i64> = None;
        for y in 0..res {
            if seeds[y * res + x] {
                last = Some(0);
            } else if let Some(d) = last {
                last = Some(d + 1);
            }
            if let Some(d) = last {
                g[y * res + x] = d * d;
            }
        }
        last = None;
        for y in (0..res).rev() {
            if seeds[y * res + x] {
                last = Some(0);
            } else if let Some(d) = last {
                last = Some(d + 1);
            }
            if let Some(d) = last {
                let v = d * d;
                let cell = &mut g[y * res + x];
                if v < *cell {
                    *cell = v;
                }
            }
        }
    }
    g
}

/// Lower envelope pass along one row, exact integer arithmetic.
///
/// `f` holds squared column distances for the row; entries equal to
/// `UNREACHED` are skipped (they can never win). Boundaries between envelope
/// parabolas are kept as exact rationals and compared by cross
/// multiplication, so the argmin is the same one infinite-precision
/// arithmetic would pick.
fn row_envelope(f: &[i64], out: &mut [i64]) {
    let n = f.len();
    let finite: Vec<usize> = (0..n).filter(|&i| f[i] != UNREACHED).collect();
    if finite.is_empty() {
        out.fill(UNREACHED);
        return;
    }
    // v[k]: column of the k-th envelope parabola; z[k]: left boundary of its
    // interval as a rational num/den with den > 0.
    let mut v: Vec<i64> = Vec::with_capacity(finite.len());
    let mut z_num: Vec<i128> = Vec::with_capacity(finite.len() + 1);
    let mut z_den: Vec<i128> = Vec::with_capacity(finite.len() + 1);
    for &qi in &finite {
        let q = qi as i64;
        let fq = f[qi];
        loop {
            if v.is_empty() {
                v.push(q);
                // Any finite boundary lies in [-f_max, n^2 + f_max]; this
                // sentinel is strictly below all of them.
                z_num.push(-1_000_000_000);
                z_den.push(1);
                break;
            }
            let p = *v.last().unwrap();
            let fp = f[p as usize];
            // Intersection abscissa of parabolas rooted at p and q:
            // s = (fq + q^2 - fp - p^2) / (2q - 2p), q > p so den > 0.
            let num = (fq + q * q - fp - p * p) as i128;
            let den = (2 * (q - p)) as i128;
            // Pop while s <= z[last].
            let zl_num = *z_num.last().unwrap();
            let zl_den = *z_den.last().unwrap();
            if num * zl_den <= zl_num * den {
                v.pop();
                z_num.pop();
                z_den.pop();
            } else {
                v.push(q);
                z_num.push(num);
                z_den.push(den);
                break;
            }
        }
    }
    let mut k = 0;
    for i in 0..n {
        let xi = i as i128;
        // Advance while the next boundary is <= i.
        while k + 1 < v.len() && z_num[k + 1] <= xi * z_den[k + 1] {
            k += 1;
        }
        let p = v[k];
        let d = i as i64 - p;
        out[i] = f[p as usize] + d * d;
    }
}

/// Exact squared cell distances from every cell to the nearest seed cell.
fn squared_distance_transform(seeds: &[bool], res: usize) -> Vec<i64> {
    let g = column_sq_dist(seeds, res);
    let mut out = vec![UNREACHED; res * res];
    let mut row_in = vec![0i64; res];
    let mut row_out = vec![0i64; res];
    for y in 0..res {
        row_in.copy_from_slice(&g[y * res..(y + 1) * res]);
        row_envelope(&row_in, &mut row_out);
        out[y * res..(y + 1) * res].copy_from_slice(&row_out);
    }
    out
}

/// Computes the signed distance field of a grid: distance to the nearest
/// occupied cell center on free cells, negative distance to the nearest free
/// cell center on occupied cells. Values are capped at the grid diagonal,
/// which is also the sentinel for fields with no occupied (or no free) cells.
pub fn compute_sdf(grid: &OccupancyGrid) -> SignedDistanceField {
    let res = grid.resolution;
    let cap = grid.diagonal();
    let to_occupied = squared_distance_transform(&grid.cells, res);
    let free_mask: Vec<bool> = grid.cells.iter().map(|c| !c).collect();
    let to_free = squared_distance_transform(&free_mask, res);
    let values = grid
        .cells
        .iter()
        .enumerate()
        .map(|(i, &occ)| {
            let d2 = if occ { to_free[i] } else { to_occupied[i] };
            let d = if d2 == UNREACHED {
                cap
            } else {
                ((d2 as f64).sqrt() * grid.cell_size).min(cap)
            };
            if occ {
                -d
            } else {
                d
            }
        })
        .collect();
    SignedDistanceField {
        resolution: res,
        cell_size: grid.cell_size,
        origin: grid.origin,
        values,
    }
}

/// Bilinear interpolation of the field at a world point. Points outside the
/// lattice of cell centers are clamped onto it, so queries never fail.
pub fn query_sdf(sdf: &SignedDistanceField, p: Point2) -> f64 {
    let res = sdf.resolution;
    let inv = 1.0 / sdf.cell_size;
    // Continuous cell-center coordinates: center (i, j) sits at i + 0.5.
    let fx = ((p.x - sdf.origin.x) * inv - 0.5).clamp(0.0, (res - 1) as f64);
    let fy = ((p.y - sdf.origin.y) * inv - 0.5).clamp(0.0, (res - 1) as f64);
    let x0 = (fx.floor() as usize).min(res - 2);
    let y0 = (fy.floor() as usize).min(res - 2);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let x1 = x0 + 1;
    let y1 = y0 + 1;
    let v00 = sdf.at(x0, y0);
    let v10 = sdf.at(x1, y0);
    let v01 = sdf.at(x0, y1);
    let v11 = sdf.at(x1, y1);
    let a = v00 + tx * (v10 - v00);
    let b = v01 + tx * (v11 - v01);
    a + ty * (b - a)
}

/// Minimum robot-to-obstacle distance at a configuration: the smallest
/// envelope-circle clearance against the field. This is the regression label
/// for the distance model.
pub fn robot_min_distance(
    system: &ChainSystem,
    q: &Configuration,
    sdf: &SignedDistanceField,
) -> Result<f64> {
    let envelope = envelope_circles(system, q)?;
    Ok(envelope
        .circles
        .iter()
        .map(|&(c, r)| query_sdf(sdf, c) - r)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pose2;
    use crate::robot::LinkChain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_workspace() -> Aabb {
        Aabb::new(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0))
    }

    /// Brute-force O(N^2) signed distance transform used as the oracle.
    fn brute_force_sdf(grid: &OccupancyGrid) -> Vec<f64> {
        let res = grid.resolution;
        let cap = grid.diagonal();
        let mut out = vec![0.0; res * res];
        for y in 0..res {
            for x in 0..res {
                let occ = grid.at(x, y);
                let mut best: i64 = UNREACHED;
                for yy in 0..res {
                    for xx in 0..res {
                        if grid.at(xx, yy) != occ {
                            let dx = xx as i64 - x as i64;
                            let dy = yy as i64 - y as i64;
                            let d2 = dx * dx + dy * dy;
                            if d2 < best {
                                best = d2;
                            }
                        }
                    }
                }
                let d = if best == UNREACHED {
                    cap
                } else {
                    ((best as f64).sqrt() * grid.cell_size).min(cap)
                };
                out[y * res + x] = if occ { -d } else { d };
            }
        }
        out
    }

    #[test]
    fn rasterize_no_obstacles_all_free() {
        let env = EnvironmentSpec::empty(unit_workspace());
        let grid = rasterize(&env, 16, 0.125).unwrap();
        assert!(grid.cells.iter().all(|c| !c));
    }

    #[test]
    fn rasterize_covering_disc_all_occupied() {
        let env =
            EnvironmentSpec::new(unit_workspace(), vec![Disc::new(Point2::new(0.0, 0.0), 5.0)])
                .unwrap();
        let grid = rasterize(&env, 16, 0.125).unwrap();
        assert!(grid.cells.iter().all(|c| *c));
    }

    #[test]
    fn rasterize_disc_area_within_five_percent() {
        let env =
            EnvironmentSpec::new(unit_workspace(), vec![Disc::new(Point2::new(0.0, 0.0), 0.2)])
                .unwrap();
        let grid = rasterize(&env, 64, 2.0 / 64.0).unwrap();
        let occupied = grid.cells.iter().filter(|c| **c).count() as f64;
        let cell_area = grid.cell_size * grid.cell_size;
        let expected = std::f64::consts::PI * 0.2 * 0.2 / cell_area;
        assert!((occupied - expected).abs() <= 0.05 * expected);
    }

    #[test]
    fn sdf_single_occupied_cell_exact() {
        let env = EnvironmentSpec::empty(unit_workspace());
        let mut grid = rasterize(&env, 32, 2.0 / 32.0).unwrap();
        grid.cells[17 * 32 + 9] = true;
        let sdf = compute_sdf(&grid);
        for y in 0..32 {
            for x in 0..32 {
                if x == 9 && y == 17 {
                    continue;
                }
                let dx = x as i64 - 9;
                let dy = y as i64 - 17;
                let expected = (((dx * dx + dy * dy) as f64).sqrt() * grid.cell_size)
                    .min(grid.diagonal());
                assert_eq!(sdf.at(x, y), expected);
            }
        }
    }

    #[test]
    fn sdf_all_free_is_capped() {
        let env = EnvironmentSpec::empty(unit_workspace());
        let grid = rasterize(&env, 16, 0.125).unwrap();
        let sdf = compute_sdf(&grid);
        assert!(sdf.values.iter().all(|v| *v == grid.diagonal()));
    }

    #[test]
    fn sdf_matches_brute_force_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..12 {
            let env = EnvironmentSpec::empty(unit_workspace());
            let mut grid = rasterize(&env, 32, 2.0 / 32.0).unwrap();
            let fill = rng.gen_range(0.02..0.4);
            for c in &mut grid.cells {
                *c = rng.gen_bool(fill);
            }
            let sdf = compute_sdf(&grid);
            let oracle = brute_force_sdf(&grid);
            assert_eq!(sdf.values, oracle);
        }
    }

    #[test]
    fn query_at_cell_center_is_identity() {
        let env =
            EnvironmentSpec::new(unit_workspace(), vec![Disc::new(Point2::new(0.3, -0.2), 0.25)])
                .unwrap();
        let grid = rasterize(&env, 32, 2.0 / 32.0).unwrap();
        let sdf = compute_sdf(&grid);
        for &(x, y) in &[(0usize, 0usize), (5, 20), (31, 31), (16, 3)] {
            let p = grid.cell_center(x, y);
            assert!((query_sdf(&sdf, p) - sdf.at(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn query_midpoint_is_mean_of_neighbors() {
        let env =
            EnvironmentSpec::new(unit_workspace(), vec![Disc::new(Point2::new(0.0, 0.0), 0.3)])
                .unwrap();
        let grid = rasterize(&env, 32, 2.0 / 32.0).unwrap();
        let sdf = compute_sdf(&grid);
        let a = grid.cell_center(10, 7);
        let b = grid.cell_center(11, 7);
        let mid = Point2::new(0.5 * (a.x + b.x), a.y);
        let expected = 0.5 * (sdf.at(10, 7) + sdf.at(11, 7));
        assert!((query_sdf(&sdf, mid) - expected).abs() < 1e-12);
    }

    #[test]
    fn query_matches_analytic_disc_sdf() {
        let center = Point2::new(0.1, -0.15);
        let radius = 0.3;
        let env = EnvironmentSpec::new(unit_workspace(), vec![Disc::new(center, radius)]).unwrap();
        let grid = rasterize(&env, 128, 2.0 / 128.0).unwrap();
        let sdf = compute_sdf(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let p = Point2::new(rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
            let analytic = p.dist(center) - radius;
            let queried = query_sdf(&sdf, p);
            assert!(
                (queried - analytic).abs() <= 1.5 * grid.cell_size,
                "p=({}, {}) queried={} analytic={}",
                p.x,
                p.y,
                queried,
                analytic
            );
        }
    }

    fn one_link_system() -> ChainSystem {
        ChainSystem::single(
            LinkChain::new(Pose2::new(0.0, 0.0, 0.0), vec![0.5], vec![0.04], 3).unwrap(),
        )
    }

    #[test]
    fn min_distance_empty_environment_positive_cap() {
        let sys = one_link_system();
        let env = EnvironmentSpec::empty(unit_workspace());
        let grid = rasterize(&env, 64, 2.0 / 64.0).unwrap();
        let sdf = compute_sdf(&grid);
        let d = robot_min_distance(&sys, &Configuration::new(vec![0.3]), &sdf).unwrap();
        assert!(d > 0.0);
        assert!((d - (grid.diagonal() - 0.04)).abs() < 1e-9);
    }

    #[test]
    fn min_distance_negative_inside_obstacle() {
        let sys = one_link_system();
        let env =
            EnvironmentSpec::new(unit_workspace(), vec![Disc::new(Point2::new(0.5, 0.0), 0.2)])
                .unwrap();
        let grid = rasterize(&env, 64, 2.0 / 64.0).unwrap();
        let sdf = compute_sdf(&grid);
        // End of the link sits at the obstacle center.
        let d = robot_min_distance(&sys, &Configuration::new(vec![0.0]), &sdf).unwrap();
        assert!(d < 0.0);
    }

    #[test]
    fn min_distance_matches_analytic_single_disc() {
        let sys = one_link_system();
        let disc = Disc::new(Point2::new(0.2, 0.35), 0.18);
        let env = EnvironmentSpec::new(unit_workspace(), vec![disc]).unwrap();
        let grid = rasterize(&env, 64, 2.0 / 64.0).unwrap();
        let sdf = compute_sdf(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..300 {
            let q = Configuration::new(vec![rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)]);
            let d = robot_min_distance(&sys, &q, &sdf).unwrap();
            let envelope = envelope_circles(&sys, &q).unwrap();
            let analytic = envelope
                .circles
                .iter()
                .map(|&(c, r)| c.dist(disc.center) - disc.radius - r)
                .fold(f64::INFINITY, f64::min);
            assert!(
                (d - analytic).abs() <= 1.5 * grid.cell_size,
                "d={} analytic={}",
                d,
                analytic
            );
        }
    }

    #[test]
    fn occupied_cell_centers_are_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let obstacles = (0..rng.gen_range(1..4))
                .map(|_| {
                    Disc::new(
                        Point2::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
                        rng.gen_range(0.05..0.3),
                    )
                })
                .collect();
            let env = EnvironmentSpec::new(unit_workspace(), obstacles).unwrap();
            let grid = rasterize(&env, 48, 2.0 / 48.0).unwrap();
            let sdf = compute_sdf(&grid);
            for y in 0..48 {
                for x in 0..48 {
                    if grid.at(x, y) {
                        assert!(sdf.at(x, y) <= 0.0);
                    } else {
                        assert!(sdf.at(x, y) >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn positive_clearance_implies_exact_free_with_guard_band() {
        use crate::robot::exact_collision_check;
        let sys = one_link_system();
        let disc = Disc::new(Point2::new(0.4, 0.3), 0.15);
        let env = EnvironmentSpec::new(unit_workspace(), vec![disc]).unwrap();
        let grid = rasterize(&env, 64, 2.0 / 64.0).unwrap();
        let sdf = compute_sdf(&grid);
        let guard = 2.0 * grid.cell_size;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let q = Configuration::new(vec![rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)]);
            let envelope = envelope_circles(&sys, &q).unwrap();
            // Guard band: skip configurations whose circles graze boundaries.
            let clear_of_band = envelope.circles.iter().all(|&(c, r)| {
                (c.dist(disc.center) - disc.radius - r).abs() > guard
                    && env.workspace.contains_disc(c, r + guard)
            });
            if !clear_of_band {
                continue;
            }
            if robot_min_distance(&sys, &q, &sdf).unwrap() > 0.0 {
                assert!(exact_collision_check(&sys, &q, &env).unwrap());
            }
        }
    }
}
