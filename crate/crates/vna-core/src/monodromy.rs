//! Monodromy of fiber points along loops, equivalence classes of local
//! inverses, admissibility, and deck-transformation groups.
//!
//! The branch locus is never computed symbolically: the tracker watches the
//! Jacobian conditioning and the pairwise separation of the tracked fiber
//! and rejects paths that come too close, which random polylines avoid
//! almost surely.

use crate::domain::{Domain, PointClass};
use crate::fiber::{solve_fiber, FiberError, FiberVerdict};
use crate::linalg::{det_small, dist2, norm2, solve_small};
use crate::poly::{PolyError, PolyMap};
use crate::rng::{role, stream};
use crate::symbolic::{recognize_coordinate, recognize_swap_sqrt, SymbolicAction};
#[cfg(test)]
use crate::symbolic::Unit;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub const CORRECTOR_TOL: f64 = 1e-12;
pub const PROXIMITY_GUARD: f64 = 1e-5;
pub const STEP_FLOOR: f64 = 1e-8;
pub const JAC_FLOOR: f64 = 1e-10;
pub const BASE_JAC_MIN: f64 = 1e-6;
pub const DEFAULT_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MonodromyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error("path tracking failed near the branch locus at t = {0}")]
    PathNearBranchLocus(f64),
    #[error("could not place a base point with a clean, well-conditioned fiber")]
    NoBasePoint,
    #[error("composition table violates the group axioms")]
    GroupIntegrity,
}

/// Permutation action of loops on a fixed fiber.
#[derive(Debug, Clone)]
pub struct MonodromyAction {
    pub base_point: Vec<Complex64>,
    /// index of the base point inside its own fiber (always 0)
    pub base_index: usize,
    pub fiber: Vec<Vec<Complex64>>,
    pub loops_used: usize,
    pub permutations: Vec<Vec<usize>>,
    /// disjoint orbits covering 0..m, each sorted, ordered by least member
    pub orbits: Vec<Vec<usize>>,
    pub min_jacobian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Admissibility {
    Admissible,
    NotAdmissible,
    Inconclusive,
}

/// An equivalence class of local inverses: a monodromy orbit with its
/// admissibility verdict and optional exact form.
#[derive(Debug, Clone)]
pub struct LocalInverseClass {
    pub member_indices: Vec<usize>,
    pub admissibility: Admissibility,
    /// transport destination that exited the domain, when NotAdmissible
    pub witness: Option<Witness>,
    pub symbolic: Option<SymbolicAction>,
    pub is_identity_class: bool,
    /// greatest boundary-band shortfall seen while Inconclusive
    pub exit_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub sample: Vec<Complex64>,
    pub exit_point: Vec<Complex64>,
    pub exit_distance: f64,
}

#[derive(Debug, Clone)]
pub struct MonodromyConfig {
    pub max_loops: usize,
    pub stall: usize,
    pub seed: u64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        MonodromyConfig { max_loops: 200, stall: 30, seed: 42 }
    }
}

#[derive(Debug, Clone)]
pub struct AdmissibilityConfig {
    pub samples: usize,
    pub margin: f64,
    pub seed: u64,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        AdmissibilityConfig { samples: 64, margin: DEFAULT_MARGIN, seed: 42 }
    }
}

/// Track one fiber point along a polyline; `others` activates the proximity
/// guard against the remaining fiber points (transported alongside).
pub fn track_path(
    map: &PolyMap,
    path: &[Vec<Complex64>],
    start: &[Complex64],
) -> Result<Vec<Complex64>, MonodromyError> {
    let mut pts = vec![start.to_vec()];
    let ends = track_fiber_along(map, path, &mut pts)?;
    Ok(ends[0].clone())
}

/// Track a set of fiber points together along a polyline of base values.
/// Returns the transported points; the guard rejects steps where two
/// tracked points approach within the proximity floor.
pub fn track_fiber_along(
    map: &PolyMap,
    path: &[Vec<Complex64>],
    points: &mut [Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>, MonodromyError> {
    let mut current: Vec<Vec<Complex64>> = points.to_vec();
    let segments = path.len() - 1;
    for s in 0..segments {
        let from = &path[s];
        let to = &path[s + 1];
        let mut t = 0.0f64;
        let mut dt = 0.25f64;
        while t < 1.0 {
            let step = dt.min(1.0 - t);
            let target_t = t + step;
            let gamma: Vec<Complex64> = from
                .iter()
                .zip(to.iter())
                .map(|(a, b)| a + (b - a) * Complex64::new(target_t, 0.0))
                .collect();
            let c = map.eval(&gamma)?;
            let mut next = current.clone();
            let mut ok = true;
            for w in next.iter_mut() {
                if !predict_correct(map, w, from, to, t, step, &c)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                // proximity guard between transported points
                let mut min_pair = f64::INFINITY;
                for i in 0..next.len() {
                    for j in i + 1..next.len() {
                        min_pair = min_pair.min(dist2(&next[i], &next[j]));
                    }
                }
                if next.len() > 1 && min_pair < PROXIMITY_GUARD {
                    ok = false;
                }
            }
            if ok {
                current = next;
                t = target_t;
                dt = (dt * 1.7).min(0.25);
            } else {
                dt *= 0.5;
                if dt < STEP_FLOOR {
                    return Err(MonodromyError::PathNearBranchLocus(
                        (s as f64 + t) / segments as f64,
                    ));
                }
            }
        }
    }
    Ok(current)
}

/// One predictor-corrector step for a single tracked point. `w` is updated
/// in place on success.
fn predict_correct(
    map: &PolyMap,
    w: &mut Vec<Complex64>,
    from: &[Complex64],
    to: &[Complex64],
    t: f64,
    dt: f64,
    target: &[Complex64],
) -> Result<bool, MonodromyError> {
    let gamma_t: Vec<Complex64> = from
        .iter()
        .zip(to.iter())
        .map(|(a, b)| a + (b - a) * Complex64::new(t, 0.0))
        .collect();
    let gamma_dot: Vec<Complex64> = from.iter().zip(to.iter()).map(|(a, b)| b - a).collect();
    // Euler predictor: dw/dt = J(w)^{-1} J(gamma) gamma'
    let jw = map.jacobian_at(w)?;
    if det_small(&jw).norm() < JAC_FLOOR {
        return Ok(false);
    }
    let jg = map.jacobian_at(&gamma_t)?;
    let d = w.len();
    let rhs: Vec<Complex64> = (0..map.components().len())
        .map(|i| (0..d).map(|j| jg[i][j] * gamma_dot[j]).sum())
        .collect();
    let Some(dw) = solve_small(&jw, &rhs) else { return Ok(false) };
    let mut cand: Vec<Complex64> = w
        .iter()
        .zip(dw.iter())
        .map(|(wi, di)| wi + di * Complex64::new(dt, 0.0))
        .collect();
    // Newton corrector on Φ(w) = Φ(γ(t+dt))
    let scale = 1.0 + norm2(target);
    for _ in 0..12 {
        let f = map.eval(&cand)?;
        let r: Vec<Complex64> = f.iter().zip(target.iter()).map(|(a, b)| a - b).collect();
        if norm2(&r) <= CORRECTOR_TOL * scale {
            if det_small(&map.jacobian_at(&cand)?).norm() < JAC_FLOOR {
                return Ok(false);
            }
            // reject if the corrector jumped a long way: branch crossing
            if dist2(&cand, w) > 0.5 + 3.0 * dt * norm2(&dw) {
                return Ok(false);
            }
            *w = cand;
            return Ok(true);
        }
        let jc = map.jacobian_at(&cand)?;
        if det_small(&jc).norm() < JAC_FLOOR {
            return Ok(false);
        }
        let Some(step) = solve_small(&jc, &r) else { return Ok(false) };
        for (ci, si) in cand.iter_mut().zip(step.iter()) {
            *ci -= si;
        }
    }
    Ok(false)
}

/// Smallest |det JΦ| over the fiber along a tracked polyline; used in
/// diagnostics.
fn min_jac_over(map: &PolyMap, pts: &[Vec<Complex64>]) -> f64 {
    pts.iter()
        .filter_map(|w| map.jacobian_at(w).ok())
        .map(|j| det_small(&j).norm())
        .fold(f64::INFINITY, f64::min)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let r = self.find(self.parent[i]);
            self.parent[i] = r;
        }
        self.parent[i]
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Compute the permutation action of loops on the fiber of a well-placed
/// base point and the induced orbit partition.
pub fn compute_monodromy(
    map: &PolyMap,
    domain: &Domain,
    cfg: &MonodromyConfig,
) -> Result<MonodromyAction, MonodromyError> {
    let d = map.dim_in();
    let box_radius = 4.0 * domain.circumradius();
    let mut base_rng = stream(cfg.seed, role::BASE_POINT, 0);
    let jac = map.jacobian_det()?;
    let base_margin = base_margin_for(domain);

    // base point: interior, regular, with a clean well-conditioned fiber
    let mut chosen: Option<(Vec<Complex64>, Vec<Vec<Complex64>>)> = None;
    for _ in 0..64 {
        let z0 = domain.sample_interior(1, base_margin, &mut base_rng)?.remove(0);
        if jac.eval(&z0)?.norm() <= BASE_JAC_MIN {
            continue;
        }
        let c = map.eval(&z0)?;
        let sol = solve_fiber(map, &c, box_radius)?;
        if sol.verdict != FiberVerdict::Clean {
            continue;
        }
        if sol.conditioning.iter().any(|&s| !(s > BASE_JAC_MIN)) {
            continue;
        }
        // base point first, remaining fiber in solver order
        let mut fiber = sol.points;
        let Some(pos) = fiber.iter().position(|w| dist2(w, &z0) < 1e-8) else { continue };
        fiber.swap(0, pos);
        chosen = Some((z0, fiber));
        break;
    }
    let Some((z0, fiber)) = chosen else { return Err(MonodromyError::NoBasePoint) };
    let m = fiber.len();

    let mut uf = UnionFind::new(m);
    let mut permutations: Vec<Vec<usize>> = Vec::new();
    let mut loops_used = 0usize;
    let mut stall = 0usize;
    let mut min_jacobian = min_jac_over(map, &fiber);
    let mut discarded = 0usize;

    let mut loop_index = 0u64;
    while loops_used < cfg.max_loops && stall < cfg.stall && discarded < 4 * cfg.max_loops {
        let mut lrng = stream(cfg.seed, role::LOOPS, loop_index);
        loop_index += 1;
        let path = match generate_loop(domain, &z0, loops_used, d, &mut lrng) {
            Some(p) => p,
            None => {
                discarded += 1;
                continue;
            }
        };
        let mut pts = fiber.clone();
        let ends = match track_fiber_along(map, &path, &mut pts) {
            Ok(e) => e,
            Err(MonodromyError::PathNearBranchLocus(_)) => {
                discarded += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        min_jacobian = min_jacobian.min(min_jac_over(map, &ends));
        // match endpoints back to fiber indices
        let mut perm = vec![usize::MAX; m];
        let mut ok = true;
        for (i, e) in ends.iter().enumerate() {
            let mut best = (f64::INFINITY, usize::MAX);
            for (j, f) in fiber.iter().enumerate() {
                let dst = dist2(e, f);
                if dst < best.0 {
                    best = (dst, j);
                }
            }
            if best.0 > 1e-6 || perm.contains(&best.1) {
                ok = false;
                break;
            }
            perm[i] = best.1;
        }
        if !ok {
            discarded += 1;
            continue;
        }
        loops_used += 1;
        let mut merged = false;
        for (i, &j) in perm.iter().enumerate() {
            if uf.union(i, j) {
                merged = true;
            }
        }
        if !permutations.contains(&perm) {
            permutations.push(perm);
        }
        if merged {
            stall = 0;
        } else {
            stall += 1;
        }
    }

    // orbits sorted by least member
    let mut orbit_map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..m {
        orbit_map.entry(uf.find(i)).or_default().push(i);
    }
    let orbits: Vec<Vec<usize>> = orbit_map.into_values().collect();

    Ok(MonodromyAction {
        base_point: z0,
        base_index: 0,
        fiber,
        loops_used,
        permutations,
        orbits,
        min_jacobian,
    })
}

fn base_margin_for(domain: &Domain) -> f64 {
    match domain {
        Domain::Annulus { r } => 0.2 * (1.0 / r - r),
        _ => 0.25,
    }
}

/// Loops: coordinate circles (multiply one coordinate by e^{iθ}), then
/// random triangles through the base point. Every vertex path is verified
/// to stay inside the margin-shrunk domain.
fn generate_loop<R: Rng>(
    domain: &Domain,
    z0: &[Complex64],
    loop_number: usize,
    d: usize,
    rng: &mut R,
) -> Option<Vec<Vec<Complex64>>> {
    let margin = loop_margin_for(domain);
    let path = if loop_number < 2 * d {
        // coordinate circle as a polygon
        let k = loop_number % d;
        let segments = 48;
        let mut path = Vec::with_capacity(segments + 1);
        for s in 0..=segments {
            let theta = std::f64::consts::TAU * s as f64 / segments as f64;
            let mut p = z0.to_vec();
            p[k] *= Complex64::from_polar(1.0, theta);
            path.push(p);
        }
        path
    } else {
        // random triangle z0 -> p1 -> p2 -> z0
        let p1 = domain.sample_interior(1, margin, rng).ok()?.remove(0);
        let p2 = domain.sample_interior(1, margin, rng).ok()?.remove(0);
        vec![z0.to_vec(), p1, p2, z0.to_vec()]
    };
    // verify the polyline stays inside at a reduced margin
    let check_margin = margin * 0.1;
    for seg in path.windows(2) {
        for s in 0..=32 {
            let t = s as f64 / 32.0;
            let p: Vec<Complex64> = seg[0]
                .iter()
                .zip(seg[1].iter())
                .map(|(a, b)| a + (b - a) * Complex64::new(t, 0.0))
                .collect();
            if domain.classify_point(&p, check_margin).ok()? != PointClass::Inside {
                return None;
            }
        }
    }
    Some(path)
}

fn loop_margin_for(domain: &Domain) -> f64 {
    match domain {
        Domain::Annulus { r } => 0.1 * (1.0 / r - r),
        _ => 0.05,
    }
}

/// Decide the admissibility of each orbit. Symbolically recognized classes
/// on polydisk, ball, or annulus are decided exactly; everything else by
/// transporting fiber labels to interior samples plus targeted probes.
pub fn decide_admissibility(
    map: &PolyMap,
    domain: &Domain,
    action: &MonodromyAction,
    cfg: &AdmissibilityConfig,
) -> Result<Vec<LocalInverseClass>, MonodromyError> {
    let m = action.fiber.len();
    let z0 = &action.base_point;
    let mut classes: Vec<LocalInverseClass> = Vec::new();
    for orbit in &action.orbits {
        let is_identity = orbit.contains(&action.base_index)
            && orbit.len() == 1
            && action.permutations.iter().all(|p| p[action.base_index] == action.base_index);
        let symbolic = recognize_orbit(map, domain, action, orbit);
        classes.push(LocalInverseClass {
            member_indices: orbit.clone(),
            admissibility: Admissibility::Inconclusive,
            witness: None,
            symbolic,
            is_identity_class: is_identity,
            exit_distance: None,
        });
    }

    // symbolic fast path on exact geometries
    let mut need_sampling = false;
    for class in classes.iter_mut() {
        if class.is_identity_class {
            class.admissibility = Admissibility::Admissible;
            continue;
        }
        if let Some(sym) = &class.symbolic {
            if let Some((ok, witness)) = sym.admissible_exact(domain) {
                class.admissibility = if ok {
                    Admissibility::Admissible
                } else {
                    Admissibility::NotAdmissible
                };
                if let Some(w) = witness {
                    let exit = domain.signed_distance(&w).unwrap_or(f64::NAN);
                    class.witness = Some(Witness {
                        sample: z0.clone(),
                        exit_point: w,
                        exit_distance: exit,
                    });
                }
                continue;
            }
        }
        need_sampling = true;
    }
    if !need_sampling {
        return Ok(classes);
    }

    // sampling with transport; label -> class lookup
    let mut class_of = vec![0usize; m];
    for (ci, class) in classes.iter().enumerate() {
        for &i in &class.member_indices {
            class_of[i] = ci;
        }
    }
    let mut rng = stream(cfg.seed, role::ADMISSIBILITY, 0);
    let mut samples: Vec<Vec<Complex64>> = domain.sample_interior(cfg.samples, cfg.margin, &mut rng)?;
    samples.extend(probe_points(map, domain, cfg)?);

    let mut transported = 0usize;
    let mut skipped = 0usize;
    let mut band_low = vec![f64::INFINITY; classes.len()];
    for z in &samples {
        let mut done = false;
        for attempt in 0..5 {
            let path = transport_path(domain, z0, z, attempt, &mut rng);
            let mut pts = action.fiber.clone();
            match track_fiber_along(map, &path, &mut pts) {
                Ok(ends) => {
                    transported += 1;
                    for (label, w) in ends.iter().enumerate() {
                        let ci = class_of[label];
                        if classes[ci].admissibility == Admissibility::NotAdmissible {
                            continue;
                        }
                        let sd = domain.signed_distance(w)?;
                        if sd < -cfg.margin {
                            classes[ci].admissibility = Admissibility::NotAdmissible;
                            classes[ci].witness = Some(Witness {
                                sample: z.clone(),
                                exit_point: w.clone(),
                                exit_distance: sd,
                            });
                        } else if sd <= cfg.margin {
                            band_low[ci] = band_low[ci].min(sd);
                        }
                    }
                    done = true;
                    break;
                }
                Err(MonodromyError::PathNearBranchLocus(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if !done {
            skipped += 1;
        }
    }
    let too_many_skipped = skipped * 2 > samples.len();
    for (ci, class) in classes.iter_mut().enumerate() {
        if class.admissibility == Admissibility::NotAdmissible
            || class.is_identity_class
            || matches!(class.admissibility, Admissibility::Admissible)
        {
            continue;
        }
        if too_many_skipped || transported == 0 {
            class.admissibility = Admissibility::Inconclusive;
        } else if band_low[ci].is_finite() {
            class.admissibility = Admissibility::Inconclusive;
            class.exit_distance = Some(band_low[ci]);
        } else {
            class.admissibility = Admissibility::Admissible;
        }
    }
    Ok(classes)
}

/// Targeted probes: for difference domains, perturbed fiber points of each
/// removed-ball center. Transporting labels there sends exactly one class
/// member into the removed ball, realizing the deformation argument.
fn probe_points(
    map: &PolyMap,
    domain: &Domain,
    cfg: &AdmissibilityConfig,
) -> Result<Vec<Vec<Complex64>>, MonodromyError> {
    let Domain::Difference { removed_balls, .. } = domain else {
        return Ok(Vec::new());
    };
    let box_radius = 4.0 * domain.circumradius();
    let mut rng = stream(cfg.seed, role::ADMISSIBILITY, 1);
    let mut probes = Vec::new();
    for ball in removed_balls {
        let c = map.eval(&ball.center)?;
        let Ok(sol) = solve_fiber(map, &c, box_radius) else { continue };
        for w in &sol.points {
            // perturb into the open interior, keep clear of the sphere
            for _ in 0..8 {
                let jitter: Vec<Complex64> = w
                    .iter()
                    .map(|x| {
                        x + Complex64::new(
                            rng.gen_range(-1.5e-3..1.5e-3),
                            rng.gen_range(-1.5e-3..1.5e-3),
                        )
                    })
                    .collect();
                if domain.classify_point(&jitter, cfg.margin)? == PointClass::Inside {
                    probes.push(jitter);
                    break;
                }
            }
        }
    }
    Ok(probes)
}

/// Polyline from the base point to a sample; retries bend through random
/// interior midpoints.
fn transport_path<R: Rng>(
    domain: &Domain,
    from: &[Complex64],
    to: &[Complex64],
    attempt: usize,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    if attempt == 0 {
        return vec![from.to_vec(), to.to_vec()];
    }
    let margin = loop_margin_for(domain);
    let mid = domain
        .sample_interior(1, margin, rng)
        .map(|mut v| v.remove(0))
        .unwrap_or_else(|_| from.to_vec());
    vec![from.to_vec(), mid, to.to_vec()]
}

/// Try to recognize the exact form of an orbit's branches.
fn recognize_orbit(
    map: &PolyMap,
    domain: &Domain,
    action: &MonodromyAction,
    orbit: &[usize],
) -> Option<SymbolicAction> {
    let z0 = &action.base_point;
    let allow_inversion = matches!(domain, Domain::Annulus { .. });
    match orbit.len() {
        1 => recognize_coordinate(z0, &action.fiber[orbit[0]], map, allow_inversion),
        2 => {
            let wp = &action.fiber[orbit[0]];
            let wm = &action.fiber[orbit[1]];
            recognize_swap_sqrt(z0, wp, wm, map)
                .or_else(|| recognize_swap_sqrt(z0, wm, wp, map))
        }
        _ => None,
    }
}

/// Composition table of the admissible singleton classes, when all of them
/// carry exact coordinate forms.
#[derive(Debug, Clone, Serialize)]
pub struct GroupTable {
    pub order: usize,
    /// table[i][j] = index of class_i ∘ class_j
    pub table: Vec<Vec<usize>>,
    pub element_orders: Vec<usize>,
    pub abelian: bool,
    pub cyclic: bool,
    /// invariant factors d_1 | d_2 | ... for abelian groups
    pub invariant_factors: Option<Vec<usize>>,
    pub descriptor: String,
}

/// Build the deck group from admissible classes. All admissible classes
/// must be singletons with exact coordinate forms; otherwise the map has
/// admissible branch classes and is not regular on the domain.
pub fn detect_deck_group(
    classes: &[LocalInverseClass],
) -> Result<Option<GroupTable>, MonodromyError> {
    let adm: Vec<&LocalInverseClass> = classes
        .iter()
        .filter(|c| c.admissibility == Admissibility::Admissible)
        .collect();
    if adm.is_empty() {
        return Ok(None);
    }
    let mut actions: Vec<SymbolicAction> = Vec::with_capacity(adm.len());
    for c in &adm {
        if c.member_indices.len() != 1 {
            return Ok(None);
        }
        match &c.symbolic {
            Some(a @ SymbolicAction::Coordinate { .. }) => actions.push(a.clone()),
            _ => return Ok(None),
        }
    }
    let n = actions.len();
    let mut table = vec![vec![usize::MAX; n]; n];
    for i in 0..n {
        for j in 0..n {
            let comp = actions[i].compose(&actions[j]).ok_or(MonodromyError::GroupIntegrity)?;
            let Some(k) = actions.iter().position(|a| *a == comp) else {
                // composition escapes the admissible set: not closed
                return Err(MonodromyError::GroupIntegrity);
            };
            table[i][j] = k;
        }
    }
    let Some(id) = actions.iter().position(|a| a.is_identity()) else {
        return Err(MonodromyError::GroupIntegrity);
    };
    // group axioms: latin square rows/columns
    for i in 0..n {
        let mut row: Vec<usize> = table[i].clone();
        row.sort_unstable();
        let mut col: Vec<usize> = (0..n).map(|j| table[j][i]).collect();
        col.sort_unstable();
        if row != (0..n).collect::<Vec<_>>() || col != (0..n).collect::<Vec<_>>() {
            return Err(MonodromyError::GroupIntegrity);
        }
    }
    let element_orders: Vec<usize> = (0..n)
        .map(|i| {
            let mut k = i;
            let mut ord = 1;
            while k != id {
                k = table[i][k];
                ord += 1;
            }
            ord
        })
        .collect();
    let abelian = (0..n).all(|i| (0..n).all(|j| table[i][j] == table[j][i]));
    let cyclic = element_orders.iter().any(|&o| o == n);
    let invariant_factors = if abelian {
        Some(abelian_invariant_factors(n, &element_orders))
    } else {
        None
    };
    let descriptor = group_descriptor(n, abelian, cyclic, &invariant_factors, &element_orders);
    Ok(Some(GroupTable {
        order: n,
        table,
        element_orders,
        abelian,
        cyclic,
        invariant_factors,
        descriptor,
    }))
}

/// Invariant factors of an abelian group from its multiset of element
/// orders: enumerate abelian groups of the given order and match the order
/// statistics.
fn abelian_invariant_factors(n: usize, orders: &[usize]) -> Vec<usize> {
    let mut stats: Vec<usize> = orders.to_vec();
    stats.sort_unstable();
    for candidate in abelian_groups_of_order(n) {
        let mut cand_orders: Vec<usize> = Vec::with_capacity(n);
        enumerate_product_orders(&candidate, 0, 1, &mut cand_orders);
        cand_orders.sort_unstable();
        if cand_orders == stats {
            return candidate;
        }
    }
    vec![n] // fallback: cyclic
}

/// All abelian groups of order n as invariant-factor chains d1 | d2 | ...
fn abelian_groups_of_order(n: usize) -> Vec<Vec<usize>> {
    fn chains(n: usize, max: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for d in 2..=n.min(max) {
            if n % d == 0 {
                if n == d {
                    out.push(vec![d]);
                } else {
                    for mut rest in chains(n / d, d) {
                        // require divisibility chain: every earlier factor divides d
                        if rest.iter().all(|&r| d % r == 0) {
                            rest.push(d);
                            out.push(rest);
                        }
                    }
                }
            }
        }
        out
    }
    if n == 1 {
        return vec![vec![1]];
    }
    chains(n, n)
}

fn enumerate_product_orders(factors: &[usize], idx: usize, lcm_so_far: usize, out: &mut Vec<usize>) {
    if idx == factors.len() {
        out.push(lcm_so_far);
        return;
    }
    for k in 0..factors[idx] {
        let o = if k == 0 { 1 } else { factors[idx] / gcd_usize(factors[idx], k) };
        enumerate_product_orders(factors, idx + 1, lcm_usize(lcm_so_far, o), out);
    }
}

fn gcd_usize(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd_usize(b, a % b)
    }
}

fn lcm_usize(a: usize, b: usize) -> usize {
    a / gcd_usize(a, b) * b
}

fn group_descriptor(
    n: usize,
    abelian: bool,
    cyclic: bool,
    invariant_factors: &Option<Vec<usize>>,
    orders: &[usize],
) -> String {
    if abelian {
        let factors = invariant_factors.clone().unwrap_or_else(|| vec![n]);
        let name = factors
            .iter()
            .map(|d| format!("Z{}", d))
            .collect::<Vec<_>>()
            .join("×");
        let cyc = if cyclic { "cyclic" } else { "abelian, not cyclic" };
        format!("{}, {}, L(G) ≅ C^{}", name, cyc, n)
    } else if n == 6 {
        "S3, nonabelian".to_string()
    } else {
        let mut profile: std::collections::BTreeMap<usize, usize> = Default::default();
        for &o in orders {
            *profile.entry(o).or_default() += 1;
        }
        let prof: Vec<String> = profile.iter().map(|(o, c)| format!("{}^{}", o, c)).collect();
        format!("order {}, nonabelian, element orders {}", n, prof.join(" "))
    }
}

/// Compare E-operator compositions of two classes on monomials; exact for
/// recognized symbolic forms. Returns None when the classes commute, or a
/// witness exponent where they differ.
pub fn classes_commute(a: &SymbolicAction, b: &SymbolicAction, dim: usize) -> Option<Vec<i32>> {
    let deg = 12i32;
    let mut alpha = vec![0i32; dim];
    loop {
        // iterate over all exponent vectors with entries <= deg
        let ab = compose_monomial(a, b, &alpha);
        let ba = compose_monomial(b, a, &alpha);
        match (ab, ba) {
            (None, None) => {}
            (Some((ca, ea)), Some((cb, eb))) => {
                if ea != eb || (ca - cb).norm() > 1e-9 * (1.0 + ca.norm()) {
                    return Some(alpha);
                }
            }
            _ => return Some(alpha),
        }
        // increment
        let mut i = 0;
        loop {
            if i == dim {
                return None;
            }
            alpha[i] += 1;
            if alpha[i] <= deg {
                break;
            }
            alpha[i] = 0;
            i += 1;
        }
    }
}

fn compose_monomial(
    a: &SymbolicAction,
    b: &SymbolicAction,
    alpha: &[i32],
) -> Option<(Complex64, Vec<i32>)> {
    let (cb, eb) = b.monomial_image(alpha)?;
    let (ca, ea) = a.monomial_image(&eb)?;
    Some((ca * cb, ea))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PolyMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_branch_tracks_base() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let path = vec![
            vec![c(0.4, 0.1), c(0.5, -0.3)],
            vec![c(0.3, -0.2), c(0.45, 0.2)],
        ];
        let end = track_path(&map, &path, &path[0]).unwrap();
        assert!(dist2(&end, &path[1]) < 1e-9);
    }

    #[test]
    fn contractible_loop_fixes_branches() {
        let map = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let z0 = vec![c(0.3, 0.0), c(0.0, 0.5)];
        let start = vec![-z0[0], z0[1]];
        // a small contractible square loop around z0
        let eps = 0.08;
        let path: Vec<Vec<Complex64>> = vec![
            z0.clone(),
            vec![z0[0] + c(eps, 0.0), z0[1]],
            vec![z0[0] + c(eps, eps), z0[1]],
            vec![z0[0] + c(0.0, eps), z0[1]],
            z0.clone(),
        ];
        let end = track_path(&map, &path, &start).unwrap();
        assert!(dist2(&end, &start) < 1e-8);
    }

    #[test]
    fn loop_in_z1_swaps_sqrt_branches() {
        // branch pair (z2^2, ±sqrt(z1)) swaps along a z1-circle
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let z0 = vec![c(0.4, 0.1), c(0.5, -0.3)];
        let s = z0[0].sqrt();
        let start = vec![z0[1] * z0[1], s];
        let segments = 64;
        let path: Vec<Vec<Complex64>> = (0..=segments)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / segments as f64;
                vec![z0[0] * Complex64::from_polar(1.0, theta), z0[1]]
            })
            .collect();
        let end = track_path(&map, &path, &start).unwrap();
        let swapped = vec![z0[1] * z0[1], -s];
        assert!(dist2(&end, &swapped) < 1e-8, "expected branch swap");
    }

    #[test]
    fn tracking_round_trip() {
        let map = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let a = vec![c(0.35, 0.1), c(0.1, 0.45)];
        let b = vec![c(0.2, -0.3), c(0.4, 0.1)];
        let start = vec![-a[0], a[1]];
        let fwd = track_path(&map, &[a.clone(), b.clone()], &start).unwrap();
        let back = track_path(&map, &[b, a], &fwd).unwrap();
        assert!(dist2(&back, &start) < 1e-8);
    }

    #[test]
    fn monodromy_dim3_orbits() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let act = compute_monodromy(&map, &Domain::polydisk(2), &MonodromyConfig::default())
            .unwrap();
        assert_eq!(act.fiber.len(), 4);
        assert_eq!(act.orbits.len(), 3, "orbits: {:?}", act.orbits);
        let sizes: Vec<usize> = act.orbits.iter().map(|o| o.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 4);
        assert!(sizes.contains(&2));
    }

    #[test]
    fn monodromy_nonabel_singletons() {
        let map = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let act = compute_monodromy(&map, &Domain::polydisk(2), &MonodromyConfig::default())
            .unwrap();
        assert_eq!(act.fiber.len(), 8);
        assert_eq!(act.orbits.len(), 8);
    }

    #[test]
    fn admissibility_dim3_polydisk() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let domain = Domain::polydisk(2);
        let act = compute_monodromy(&map, &domain, &MonodromyConfig::default()).unwrap();
        let classes =
            decide_admissibility(&map, &domain, &act, &AdmissibilityConfig::default()).unwrap();
        assert_eq!(classes.len(), 3);
        assert!(classes.iter().all(|c| c.admissibility == Admissibility::Admissible));
        assert_eq!(classes.iter().filter(|c| c.is_identity_class).count(), 1);
    }

    #[test]
    fn admissibility_dim3_ball() {
        // only the two coordinate classes survive on the ball
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let domain = Domain::ball(2);
        let act = compute_monodromy(&map, &domain, &MonodromyConfig::default()).unwrap();
        let classes =
            decide_admissibility(&map, &domain, &act, &AdmissibilityConfig::default()).unwrap();
        let adm = classes
            .iter()
            .filter(|c| c.admissibility == Admissibility::Admissible)
            .count();
        assert_eq!(adm, 2);
        let not = classes
            .iter()
            .find(|c| c.admissibility == Admissibility::NotAdmissible)
            .expect("sqrt class rejected");
        assert_eq!(not.member_indices.len(), 2);
    }

    #[test]
    fn deck_group_power4() {
        let map = PolyMap::parse(&["z^4"], 1, false).unwrap();
        let domain = Domain::polydisk(1);
        let act = compute_monodromy(&map, &domain, &MonodromyConfig::default()).unwrap();
        assert_eq!(act.fiber.len(), 4);
        let classes =
            decide_admissibility(&map, &domain, &act, &AdmissibilityConfig::default()).unwrap();
        let g = detect_deck_group(&classes).unwrap().expect("cyclic group");
        assert_eq!(g.order, 4);
        assert!(g.abelian);
        assert!(g.cyclic);
        assert_eq!(g.invariant_factors, Some(vec![4]));
    }

    #[test]
    fn noncommuting_witness_for_swap_and_flip() {
        let swap = SymbolicAction::Coordinate {
            perm: vec![1, 0],
            exps: vec![1, 1],
            units: vec![Unit::one(), Unit::one()],
        };
        let flip = SymbolicAction::Coordinate {
            perm: vec![0, 1],
            exps: vec![1, 1],
            units: vec![Unit::new(1, 2), Unit::one()],
        };
        assert!(classes_commute(&swap, &flip, 2).is_some());
        let id = SymbolicAction::identity(2);
        assert!(classes_commute(&swap, &id, 2).is_none());
    }

    #[test]
    fn abelian_invariants_z2_z4() {
        // Z2 x Z4 order statistics: one of order 1, three of order 2, four of order 4
        let orders = vec![1, 2, 2, 2, 4, 4, 4, 4];
        assert_eq!(abelian_invariant_factors(8, &orders), vec![2, 4]);
        // Z8: orders 1,2,4,4,8,8,8,8
        let orders = vec![1, 2, 4, 4, 8, 8, 8, 8];
        assert_eq!(abelian_invariant_factors(8, &orders), vec![8]);
    }
}
