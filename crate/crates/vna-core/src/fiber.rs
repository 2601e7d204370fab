//! Numerical fiber solving: all solutions of Φ(w) = c inside a bounding box.
//!
//! Routing: one variable goes through companion-matrix roots; two variables
//! through Sylvester-resultant elimination with Newton polishing; three and
//! more variables only through the structured families that admit closed
//! forms (coordinate-decoupled maps, monomial maps, elementary symmetric
//! maps).

use crate::domain::{Domain, PointClass};
use crate::linalg::{det_small, dist2, eigenvalues, min_singular_value, norm2, solve_small, CMat};
use crate::poly::{Poly, PolyError, PolyMap};
use crate::rng::{role, stream};
use num_complex::Complex64;
use thiserror::Error;

pub const RESIDUAL_REL: f64 = 1e-10;
pub const DEDUP_DIST: f64 = 1e-8;
pub const DEGENERATE_DIST: f64 = 1e-6;
pub const REGULAR_JAC: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error("the zero polynomial has no well-defined roots")]
    ZeroPolynomial,
    #[error("fiber appears positive-dimensional: both elimination directions degenerate")]
    PositiveDimensionalFiber,
    #[error("dense solving in {0} variables is only available for structured map families")]
    UnsupportedDimension(usize),
    #[error("monomial solve requires nonzero target coordinates")]
    MonomialZeroTarget,
    #[error("fiber count inconclusive: samples kept landing near the branch locus")]
    Inconclusive,
}

/// Roots of a univariate (Laurent) polynomial.
#[derive(Debug, Clone)]
pub struct UnivariateRoots {
    pub roots: Vec<Complex64>,
    /// true when near-zero leading coefficients were dropped before solving
    pub deflated: bool,
}

/// Companion-matrix eigenvalues followed by Newton polish.
pub fn univariate_roots(p: &Poly) -> Result<UnivariateRoots, FiberError> {
    assert_eq!(p.dim(), 1, "univariate_roots takes a one-variable polynomial");
    if p.is_zero() {
        return Err(FiberError::ZeroPolynomial);
    }
    // Laurent input: multiply through by z^{-min exponent}; this introduces
    // no spurious roots because the shifted constant coefficient is the
    // original lowest term's coefficient, which is nonzero.
    let (lo, _) = p.exponent_range();
    let mut coeffs: Vec<Complex64> = Vec::new();
    for (e, c) in p.terms() {
        let k = (e[0] - lo) as usize;
        if k >= coeffs.len() {
            coeffs.resize(k + 1, Complex64::new(0.0, 0.0));
        }
        coeffs[k] = *c;
    }
    let maxc = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // deflate a near-zero leading coefficient
    let mut deflated = false;
    while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-12 * maxc {
        coeffs.pop();
        deflated = true;
    }
    let n = coeffs.len() - 1;
    if n == 0 {
        // nonzero constant: no roots
        return Ok(UnivariateRoots { roots: vec![], deflated });
    }
    let lead = coeffs[n];
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, n - 1)] = crate::linalg::to_na(-coeffs[i] / lead);
        if i + 1 < n {
            m[(i + 1, i)] = crate::linalg::to_na(Complex64::new(1.0, 0.0));
        }
    }
    let mut roots = eigenvalues(&m);
    // Newton polish on the deflated polynomial
    let dcoeffs: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * Complex64::new(k as f64, 0.0))
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..5 {
            let v = horner(&coeffs, *r);
            let d = horner(&dcoeffs, *r);
            if d.norm() < 1e-300 {
                break;
            }
            let step = v / d;
            *r -= step;
            if step.norm() < 1e-15 * (1.0 + r.norm()) {
                break;
            }
        }
    }
    Ok(UnivariateRoots { roots, deflated })
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FiberVerdict {
    Clean,
    NearDegenerate,
}

#[derive(Debug, Clone)]
pub struct FiberSolveResult {
    pub target: Vec<Complex64>,
    pub points: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    /// smallest singular value of the Jacobian at each point
    pub conditioning: Vec<f64>,
    pub verdict: FiberVerdict,
    /// set when some solution touched the bounding box
    pub box_hit: bool,
}

/// All solutions of F(w) = c with ‖w‖∞ ≤ box_radius.
pub fn solve_fiber(
    map: &PolyMap,
    c: &[Complex64],
    box_radius: f64,
) -> Result<FiberSolveResult, FiberError> {
    let d = map.dim_in();
    let mut points: Vec<Vec<Complex64>> = if d == 1 {
        let shifted = map.components()[0]
            .sub(&Poly::constant(1, map.components()[0].is_laurent(), c[0]))?;
        univariate_roots(&shifted)?
            .roots
            .into_iter()
            .map(|r| vec![r])
            .collect()
    } else if let Some(sol) = solve_decoupled(map, c)? {
        sol
    } else if let Some(sol) = solve_monomial(map, c)? {
        sol
    } else if let Some(sol) = solve_elementary_symmetric(map, c)? {
        sol
    } else if d == 2 {
        solve_bivariate(map, c)?
    } else {
        return Err(FiberError::UnsupportedDimension(d));
    };

    // polish, filter by box and residual, dedupe
    let target_scale = 1.0 + norm2(c);
    let mut accepted: Vec<Vec<Complex64>> = Vec::new();
    let laurent = map.components().iter().any(|p| p.is_laurent());
    for mut w in points.drain(..) {
        if map.is_square() {
            newton_polish(map, c, &mut w, 40);
        }
        if w.iter().any(|x| x.norm() > box_radius) {
            continue;
        }
        if laurent && w.iter().any(|x| x.norm() == 0.0) {
            continue;
        }
        let f = map.eval(&w)?;
        let res: f64 = f
            .iter()
            .zip(c.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > RESIDUAL_REL * target_scale {
            continue;
        }
        if accepted.iter().any(|p| dist2(p, &w) < DEDUP_DIST) {
            continue;
        }
        accepted.push(w);
    }
    // canonical order so repeated runs agree
    accepted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            let o = x
                .re
                .partial_cmp(&y.re)
                .unwrap()
                .then(x.im.partial_cmp(&y.im).unwrap());
            if o != std::cmp::Ordering::Equal {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    });

    let box_hit = accepted
        .iter()
        .any(|w| w.iter().any(|x| x.norm() > box_radius * (1.0 - 1e-6)));
    let mut min_pair = f64::INFINITY;
    for i in 0..accepted.len() {
        for j in i + 1..accepted.len() {
            min_pair = min_pair.min(dist2(&accepted[i], &accepted[j]));
        }
    }
    let verdict = if min_pair < DEGENERATE_DIST {
        FiberVerdict::NearDegenerate
    } else {
        FiberVerdict::Clean
    };
    let mut residuals = Vec::new();
    let mut conditioning = Vec::new();
    for w in &accepted {
        let f = map.eval(w)?;
        residuals.push(
            f.iter()
                .zip(c.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt(),
        );
        if map.is_square() {
            conditioning.push(min_singular_value(&map.jacobian_at(w)?));
        } else {
            conditioning.push(f64::NAN);
        }
    }
    Ok(FiberSolveResult {
        target: c.to_vec(),
        points: accepted,
        residuals,
        conditioning,
        verdict,
        box_hit,
    })
}

/// Newton iteration on Φ(w) = c for square maps.
pub fn newton_polish(map: &PolyMap, c: &[Complex64], w: &mut Vec<Complex64>, max_iter: usize) {
    for _ in 0..max_iter {
        let Ok(f) = map.eval(w) else { return };
        let r: Vec<Complex64> = f.iter().zip(c.iter()).map(|(a, b)| a - b).collect();
        let rn = norm2(&r);
        if rn < 1e-14 * (1.0 + norm2(c)) {
            return;
        }
        let Ok(jac) = map.jacobian_at(w) else { return };
        let Some(step) = solve_small(&jac, &r) else { return };
        for (wi, s) in w.iter_mut().zip(step.iter()) {
            *wi -= s;
        }
        if norm2(&step) < 1e-15 * (1.0 + norm2(w)) {
            return;
        }
    }
}

/// Each component depends on exactly one variable and the variables form a
/// permutation: solve one univariate problem per coordinate.
fn solve_decoupled(
    map: &PolyMap,
    c: &[Complex64],
) -> Result<Option<Vec<Vec<Complex64>>>, FiberError> {
    let d = map.dim_in();
    if map.components().len() != d {
        return Ok(None);
    }
    let mut var_of = vec![usize::MAX; d];
    for (i, p) in map.components().iter().enumerate() {
        let mut used: Vec<usize> = Vec::new();
        for (e, _) in p.terms() {
            for (j, &x) in e.iter().enumerate() {
                if x != 0 && !used.contains(&j) {
                    used.push(j);
                }
            }
        }
        if used.len() != 1 {
            return Ok(None);
        }
        var_of[i] = used[0];
    }
    let mut seen = var_of.clone();
    seen.sort_unstable();
    if seen != (0..d).collect::<Vec<_>>() {
        return Ok(None);
    }
    let mut per_coord: Vec<Vec<Complex64>> = vec![Vec::new(); d];
    for (i, p) in map.components().iter().enumerate() {
        let v = var_of[i];
        let uni = restrict_to_var(p, v);
        let shifted = uni.sub(&Poly::constant(1, uni.is_laurent(), c[i]))?;
        per_coord[v] = univariate_roots(&shifted)?.roots;
    }
    let mut sols: Vec<Vec<Complex64>> = vec![vec![]];
    for roots in per_coord {
        let mut next = Vec::new();
        for s in &sols {
            for r in &roots {
                let mut t = s.clone();
                t.push(*r);
                next.push(t);
            }
        }
        sols = next;
    }
    Ok(Some(sols))
}

fn restrict_to_var(p: &Poly, v: usize) -> Poly {
    let mut out = Poly::zero(1, p.is_laurent());
    for (e, c) in p.terms() {
        out.insert_term(vec![e[v]], *c);
    }
    out
}

/// Every component is a single term: solve w^M = c' through integer linear
/// algebra on the exponent matrix; solutions form a coset of the group of
/// root-of-unity vectors killed by M.
fn solve_monomial(
    map: &PolyMap,
    c: &[Complex64],
) -> Result<Option<Vec<Vec<Complex64>>>, FiberError> {
    let d = map.dim_in();
    if map.components().len() != d || d > 3 {
        return Ok(None);
    }
    if !map.components().iter().all(|p| p.num_terms() == 1) {
        return Ok(None);
    }
    let mut m = vec![vec![0i64; d]; d];
    let mut coef = vec![Complex64::new(1.0, 0.0); d];
    for (i, p) in map.components().iter().enumerate() {
        let (e, cc) = p.terms().next().unwrap();
        for j in 0..d {
            m[i][j] = e[j] as i64;
        }
        coef[i] = *cc;
    }
    if int_det(&m) == 0 {
        return Ok(None);
    }
    if c.iter().any(|x| x.norm() == 0.0) {
        return Err(FiberError::MonomialZeroTarget);
    }
    // principal solution: w0 = exp(M^{-1} log(c / coef))
    let logs: Vec<Complex64> = c
        .iter()
        .zip(coef.iter())
        .map(|(ci, k)| {
            let r = ci / k;
            Complex64::new(r.norm().ln(), r.arg())
        })
        .collect();
    let mf: Vec<Vec<Complex64>> = m
        .iter()
        .map(|row| row.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect())
        .collect();
    let Some(y) = solve_small(&mf, &logs) else { return Ok(None) };
    let w0: Vec<Complex64> = y.iter().map(|l| l.exp()).collect();
    // torsion: eps = exp(2 pi i t) with M t integral, t in [0,1)^d
    let bound = m
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<i64>())
        .max()
        .unwrap_or(1)
        .max(1);
    let mut sols = Vec::new();
    let mut k = vec![0i64; d];
    enumerate_torsion(&m, bound, 0, &mut k, &mut |t: &[f64]| {
        let w: Vec<Complex64> = w0
            .iter()
            .zip(t.iter())
            .map(|(w, &ti)| w * Complex64::from_polar(1.0, std::f64::consts::TAU * ti))
            .collect();
        sols.push(w);
    });
    Ok(Some(sols))
}

/// Enumerate t = M^{-1} k in [0,1)^d over integral k.
fn enumerate_torsion(
    m: &[Vec<i64>],
    bound: i64,
    depth: usize,
    k: &mut Vec<i64>,
    emit: &mut impl FnMut(&[f64]),
) {
    let d = m.len();
    if depth == d {
        let mf: Vec<Vec<Complex64>> = m
            .iter()
            .map(|row| row.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect())
            .collect();
        let rhs: Vec<Complex64> = k.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
        if let Some(t) = solve_small(&mf, &rhs) {
            let tv: Vec<f64> = t.iter().map(|c| c.re).collect();
            if tv.iter().all(|&x| x > -1e-9 && x < 1.0 - 1e-9)
                && t.iter().all(|c| c.im.abs() < 1e-9)
            {
                emit(&tv);
            }
        }
        return;
    }
    for v in -bound..=bound {
        k[depth] = v;
        enumerate_torsion(m, bound, depth + 1, k, emit);
    }
}

fn int_det(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("integer determinant only implemented for d <= 3"),
    }
}

/// Components equal the elementary symmetric polynomials e_1..e_d: fibers
/// are the d! orderings of the roots of x^d - c_1 x^{d-1} + ... + (-1)^d c_d.
fn solve_elementary_symmetric(
    map: &PolyMap,
    c: &[Complex64],
) -> Result<Option<Vec<Vec<Complex64>>>, FiberError> {
    let d = map.dim_in();
    if map.components().len() != d {
        return Ok(None);
    }
    for (k, p) in map.components().iter().enumerate() {
        if !is_elementary_symmetric(p, k + 1) {
            return Ok(None);
        }
    }
    let mut q = Poly::zero(1, false);
    q.insert_term(vec![d as i32], Complex64::new(1.0, 0.0));
    for (k, ck) in c.iter().enumerate() {
        let sign = if (k + 1) % 2 == 1 { -1.0 } else { 1.0 };
        q.insert_term(vec![(d - k - 1) as i32], sign * ck);
    }
    let roots = univariate_roots(&q)?.roots;
    let mut sols = Vec::new();
    permutations(roots.len(), &mut |perm: &[usize]| {
        sols.push(perm.iter().map(|&i| roots[i]).collect::<Vec<_>>());
    });
    Ok(Some(sols))
}

fn is_elementary_symmetric(p: &Poly, k: usize) -> bool {
    let d = p.dim();
    if p.num_terms() != binomial(d, k) {
        return false;
    }
    p.terms().all(|(e, c)| {
        e.iter().all(|&x| x == 0 || x == 1)
            && e.iter().sum::<i32>() == k as i32
            && (c - Complex64::new(1.0, 0.0)).norm() < 1e-12
    })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn permutations(n: usize, emit: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..n).collect();
    heap_permute(&mut idx, n, emit);
}

fn heap_permute(idx: &mut Vec<usize>, k: usize, emit: &mut impl FnMut(&[usize])) {
    if k == 1 {
        emit(idx);
        return;
    }
    for i in 0..k {
        heap_permute(idx, k - 1, emit);
        if k % 2 == 0 {
            idx.swap(i, k - 1);
        } else {
            idx.swap(0, k - 1);
        }
    }
}

/// Bivariate solve: Sylvester resultant eliminating w2 (fallback w1),
/// evaluated by interpolation on a circle, back-substitution, pairing by
/// residual, then 2-D Newton.
fn solve_bivariate(map: &PolyMap, c: &[Complex64]) -> Result<Vec<Vec<Complex64>>, FiberError> {
    let p1 = map.components()[0].sub(&Poly::constant(2, false, c[0]))?;
    let p2 = map.components()[1].sub(&Poly::constant(2, false, c[1]))?;
    for elim in [1usize, 0usize] {
        let keep = 1 - elim;
        let Some(res) = sylvester_resultant(&p1, &p2, elim) else { continue };
        if res.is_zero() || res.total_degree() == 0 {
            continue;
        }
        let w_keep = univariate_roots(&res)?.roots;
        let mut sols = Vec::new();
        for wk in w_keep {
            // candidate partners from both components, paired by residual
            let cands1 = roots_of_section(&p1, keep, wk)?;
            let cands2 = roots_of_section(&p2, keep, wk)?;
            for we in cands1.into_iter().chain(cands2.into_iter()) {
                let mut w = vec![Complex64::new(0.0, 0.0); 2];
                w[keep] = wk;
                w[elim] = we;
                let f = map.eval(&w)?;
                let res0: f64 = f
                    .iter()
                    .zip(c.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if res0 < 1e-4 * (1.0 + norm2(c)) {
                    sols.push(w);
                }
            }
        }
        if !sols.is_empty() {
            return Ok(sols);
        }
    }
    Err(FiberError::PositiveDimensionalFiber)
}

/// Univariate section of p with variable `keep` frozen at `value`.
fn roots_of_section(p: &Poly, keep: usize, value: Complex64) -> Result<Vec<Complex64>, FiberError> {
    let mut uni = Poly::zero(1, false);
    for (e, coef) in p.terms() {
        uni.insert_term(vec![e[1 - keep]], coef * value.powi(e[keep]));
    }
    uni.prune();
    if uni.is_zero() || uni.total_degree() == 0 {
        return Ok(vec![]);
    }
    Ok(univariate_roots(&uni)?.roots)
}

/// Resultant of p and q in the `elim` variable, as a polynomial in the
/// other one. Evaluation–interpolation on circles; None when either input
/// has degree 0 in the eliminated variable or the resultant vanishes.
fn sylvester_resultant(p: &Poly, q: &Poly, elim: usize) -> Option<Poly> {
    let keep = 1 - elim;
    let dp = p.terms().map(|(e, _)| e[elim]).max().unwrap_or(0) as usize;
    let dq = q.terms().map(|(e, _)| e[elim]).max().unwrap_or(0) as usize;
    if dp == 0 || dq == 0 {
        return None;
    }
    let kp = p.terms().map(|(e, _)| e[keep]).max().unwrap_or(0) as usize;
    let kq = q.terms().map(|(e, _)| e[keep]).max().unwrap_or(0) as usize;
    let degree_bound = dq * kp + dp * kq;
    let npts = degree_bound + 1;
    for &radius in &[1.0, 1.37, 0.71, 1.93] {
        let values: Vec<Complex64> = (0..npts)
            .map(|j| {
                let x = Complex64::from_polar(
                    radius,
                    std::f64::consts::TAU * j as f64 / npts as f64,
                );
                sylvester_det_at(p, q, elim, keep, dp, dq, x)
            })
            .collect();
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale < 1e-250 {
            continue;
        }
        let mut coeffs = Vec::with_capacity(npts);
        let mut maxc = 0.0f64;
        for k in 0..npts {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let w = Complex64::from_polar(
                    1.0,
                    -std::f64::consts::TAU * ((j * k) % npts) as f64 / npts as f64,
                );
                acc += v * w;
            }
            let coef = acc / npts as f64 / radius.powi(k as i32);
            maxc = maxc.max(coef.norm());
            coeffs.push(coef);
        }
        let mut out = Poly::zero(1, false);
        for (k, coef) in coeffs.into_iter().enumerate() {
            if coef.norm() > 1e-11 * maxc {
                out.insert_term(vec![k as i32], coef);
            }
        }
        if !out.is_zero() && out.total_degree() > 0 {
            return Some(out);
        }
    }
    None
}

fn sylvester_det_at(
    p: &Poly,
    q: &Poly,
    elim: usize,
    keep: usize,
    dp: usize,
    dq: usize,
    x: Complex64,
) -> Complex64 {
    let coef_of = |poly: &Poly, deg: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); deg + 1];
        for (e, c) in poly.terms() {
            v[e[elim] as usize] += c * x.powi(e[keep]);
        }
        v
    };
    let a = coef_of(p, dp);
    let b = coef_of(q, dq);
    let n = dp + dq;
    // Sylvester matrix: dq rows of a-coefficients, dp rows of b-coefficients
    let mut s = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..dq {
        for (k, &ak) in a.iter().enumerate() {
            s[i][i + dp - k] = ak;
        }
    }
    for i in 0..dp {
        for (k, &bk) in b.iter().enumerate() {
            s[dq + i][i + dq - k] = bk;
        }
    }
    det_small(&s)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FiberCount {
    pub count: usize,
    pub constant: bool,
}

/// Count fiber points inside the domain over regular interior samples.
pub fn generic_fiber_count(
    map: &PolyMap,
    domain: &Domain,
    samples: usize,
    seed: u64,
) -> Result<FiberCount, FiberError> {
    let jac = map.jacobian_det()?;
    let box_radius = 4.0 * domain.circumradius();
    let mut rng = stream(seed, role::FIBER_COUNT, 0);
    let mut counts = Vec::new();
    let mut tried = 0usize;
    while counts.len() < samples && tried < samples * 10 {
        tried += 1;
        let z = domain.sample_interior(1, 1e-3, &mut rng)?.remove(0);
        let jv = jac.eval(&z)?;
        if jv.norm() <= REGULAR_JAC {
            continue;
        }
        let c = map.eval(&z)?;
        let sol = solve_fiber(map, &c, box_radius)?;
        if sol.verdict == FiberVerdict::NearDegenerate {
            continue;
        }
        let inside = sol
            .points
            .iter()
            .filter(|w| {
                domain
                    .classify_point(w, 0.0)
                    .map(|k| k == PointClass::Inside)
                    .unwrap_or(false)
            })
            .count();
        counts.push(inside);
    }
    if counts.is_empty() {
        return Err(FiberError::Inconclusive);
    }
    let first = counts[0];
    Ok(FiberCount { count: first, constant: counts.iter().all(|&c| c == first) })
}

#[derive(Debug, Clone, serde::Serialize)]
pub enum Properness {
    Proper,
    NotProper {
        boundary_point: Vec<Complex64>,
        interior_preimage: Vec<Complex64>,
    },
    Inconclusive,
}

pub const PROPERNESS_MARGIN: f64 = 1e-4;

/// Proper maps send the boundary into the boundary of the image: sample
/// boundary points and look for fiber partners strictly inside the domain.
pub fn is_proper_numeric(
    map: &PolyMap,
    domain: &Domain,
    boundary_samples: usize,
    seed: u64,
) -> Result<Properness, FiberError> {
    let box_radius = 4.0 * domain.circumradius();
    let mut rng = stream(seed, role::PROPERNESS, 0);
    let mut any_degenerate = false;
    for zeta in domain.sample_boundary(boundary_samples, &mut rng)? {
        let c = map.eval(&zeta)?;
        let sol = solve_fiber(map, &c, box_radius)?;
        if sol.verdict == FiberVerdict::NearDegenerate {
            any_degenerate = true;
            continue;
        }
        for w in &sol.points {
            if domain.classify_point(w, PROPERNESS_MARGIN)? == PointClass::Inside {
                return Ok(Properness::NotProper {
                    boundary_point: zeta,
                    interior_preimage: w.clone(),
                });
            }
        }
    }
    if any_degenerate {
        return Ok(Properness::Inconclusive);
    }
    Ok(Properness::Proper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_quadratic() {
        let p = parse_poly("z^2 - 1", 1, false).unwrap();
        let mut r = univariate_roots(&p).unwrap().roots;
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-10);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn roots_cube_of_eight() {
        let p = parse_poly("z^3 - 8", 1, false).unwrap();
        let r = univariate_roots(&p).unwrap().roots;
        assert_eq!(r.len(), 3);
        for root in &r {
            assert!((root.norm() - 2.0).abs() < 1e-9);
            assert!((root.powi(3) - c(8.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn roots_double() {
        let p = parse_poly("z^2 - 2*z + 1", 1, false).unwrap();
        let r = univariate_roots(&p).unwrap().roots;
        assert_eq!(r.len(), 2);
        for root in &r {
            assert!((root - c(1.0, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn roots_laurent_zhukovski() {
        // (z + 1/z)/2 = 1.25 has roots 2 and 1/2
        let f = parse_poly("0.5*z + 0.5*z^-1 - 1.25", 1, true).unwrap();
        let mut r = univariate_roots(&f).unwrap().roots;
        r.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        assert!((r[0] - c(0.5, 0.0)).norm() < 1e-10);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_polynomial_rejected() {
        let p = Poly::zero(1, false);
        assert!(matches!(univariate_roots(&p), Err(FiberError::ZeroPolynomial)));
    }

    #[test]
    fn fiber_vieta() {
        let map = PolyMap::parse(&["z1+z2", "z1*z2"], 2, false).unwrap();
        let sol = solve_fiber(&map, &[c(3.0, 0.0), c(2.0, 0.0)], 10.0).unwrap();
        assert_eq!(sol.points.len(), 2);
        assert_eq!(sol.verdict, FiberVerdict::Clean);
        let mut found = sol.points.clone();
        found.sort_by(|a, b| a[0].re.partial_cmp(&b[0].re).unwrap());
        assert!(dist2(&found[0], &[c(1.0, 0.0), c(2.0, 0.0)]) < 1e-9);
        assert!(dist2(&found[1], &[c(2.0, 0.0), c(1.0, 0.0)]) < 1e-9);
    }

    #[test]
    fn fiber_nonabel_eight_points() {
        let map = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let a = c(0.31, 0.11);
        let b = c(0.53, -0.21);
        let target = map.eval(&[a, b]).unwrap();
        let sol = solve_fiber(&map, &target, 8.0).unwrap();
        assert_eq!(sol.points.len(), 8, "expected the eight signed/swapped points");
        for w in &sol.points {
            let ok = [(a, b), (b, a)].iter().any(|(x, y)| {
                ((w[0] - x).norm() < 1e-7 || (w[0] + x).norm() < 1e-7)
                    && ((w[1] - y).norm() < 1e-7 || (w[1] + y).norm() < 1e-7)
            });
            assert!(ok, "unexpected fiber point {:?}", w);
        }
        for r in &sol.residuals {
            assert!(*r <= RESIDUAL_REL * (1.0 + norm2(&sol.target)));
        }
    }

    #[test]
    fn fiber_twelve_sixteen_points() {
        // oracle: u = z1^2, v = z2^4 reduces the system to (uv, u+v) = c,
        // solved by Vieta (2 points), each lifting to 2 square roots and 4
        // fourth roots: 16 points
        let map = PolyMap::parse(&["z1^2*z2^4", "z1^2+z2^4"], 2, false).unwrap();
        let z0 = [c(0.4, 0.05), c(0.6, -0.1)];
        let target = map.eval(&z0).unwrap();
        let sol = solve_fiber(&map, &target, 8.0).unwrap();
        assert_eq!(sol.points.len(), 16);
        assert!(sol.points.iter().any(|w| dist2(w, &z0) < 1e-8));
    }

    #[test]
    fn fiber_contains_seed_point() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let z0 = [c(0.4, 0.1), c(0.5, -0.3)];
        let target = map.eval(&z0).unwrap();
        let sol = solve_fiber(&map, &target, 8.0).unwrap();
        assert_eq!(sol.points.len(), 4);
        assert!(sol.points.iter().any(|w| dist2(w, &z0) < 1e-8));
    }

    #[test]
    fn decoupled_map() {
        let map = PolyMap::parse(&["z1^2", "z2^3"], 2, false).unwrap();
        let sol = solve_fiber(&map, &[c(0.25, 0.0), c(0.125, 0.0)], 10.0).unwrap();
        assert_eq!(sol.points.len(), 6);
    }

    #[test]
    fn monomial_map_fiber() {
        let map = PolyMap::parse(&["z1^2", "z2^2"], 2, false).unwrap();
        let z0 = [c(0.5, 0.1), c(0.3, -0.2)];
        let target = map.eval(&z0).unwrap();
        let sol = solve_fiber(&map, &target, 10.0).unwrap();
        assert_eq!(sol.points.len(), 4);
        assert!(sol.points.iter().any(|w| dist2(w, &z0) < 1e-8));
    }

    #[test]
    fn monomial_mixed_lattice() {
        // (z1 z2^2, z1^2 z2): determinant -3, three fiber points
        let map = PolyMap::parse(&["z1*z2^2", "z1^2*z2"], 2, false).unwrap();
        let z0 = [c(0.5, 0.2), c(0.4, -0.1)];
        let target = map.eval(&z0).unwrap();
        let sol = solve_fiber(&map, &target, 10.0).unwrap();
        assert_eq!(sol.points.len(), 3);
        assert!(sol.points.iter().any(|w| dist2(w, &z0) < 1e-8));
    }

    #[test]
    fn elementary_symmetric_six_points() {
        let map =
            PolyMap::parse(&["z1+z2+z3", "z1*z2+z1*z3+z2*z3", "z1*z2*z3"], 3, false).unwrap();
        let z0 = [c(0.3, 0.1), c(-0.4, 0.2), c(0.1, -0.5)];
        let target = map.eval(&z0).unwrap();
        let sol = solve_fiber(&map, &target, 10.0).unwrap();
        assert_eq!(sol.points.len(), 6);
        assert!(sol.points.iter().any(|w| dist2(w, &z0) < 1e-7));
    }

    #[test]
    fn near_degenerate_fiber_flagged() {
        let map = PolyMap::parse(&["z1+z2", "z1*z2"], 2, false).unwrap();
        // target with a double root: (x - a)^2
        let a = c(0.5, 0.0);
        let sol = solve_fiber(&map, &[a + a, a * a], 10.0).unwrap();
        assert_eq!(sol.verdict, FiberVerdict::NearDegenerate);
    }

    #[test]
    fn identity_fiber_count() {
        let map = PolyMap::parse(&["z1", "z2"], 2, false).unwrap();
        let fc = generic_fiber_count(&map, &Domain::polydisk(2), 5, 42).unwrap();
        assert_eq!(fc.count, 1);
        assert!(fc.constant);
    }

    #[test]
    fn vieta_fiber_count_on_polydisk() {
        // oracle: Vieta — every regular value has exactly two preimages
        let map = PolyMap::parse(&["z1+z2", "z1*z2"], 2, false).unwrap();
        let fc = generic_fiber_count(&map, &Domain::polydisk(2), 20, 42).unwrap();
        assert_eq!(fc.count, 2);
        assert!(fc.constant);
    }

    #[test]
    fn nonabel_fiber_count_eight() {
        let map = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        let fc = generic_fiber_count(&map, &Domain::polydisk(2), 10, 42).unwrap();
        assert_eq!(fc.count, 8);
        assert!(fc.constant);
    }

    #[test]
    fn properness_verdicts() {
        let nonabel = PolyMap::parse(&["z1^2+z2^2", "z1^2*z2^2"], 2, false).unwrap();
        assert!(matches!(
            is_proper_numeric(&nonabel, &Domain::polydisk(2), 40, 42).unwrap(),
            Properness::Proper
        ));
        let twelve = PolyMap::parse(&["z1^2*z2^4", "z1^2+z2^4"], 2, false).unwrap();
        assert!(matches!(
            is_proper_numeric(&twelve, &Domain::ball(2), 40, 42).unwrap(),
            Properness::NotProper { .. }
        ));
        let identity = PolyMap::parse(&["z1", "z2"], 2, false).unwrap();
        assert!(matches!(
            is_proper_numeric(&identity, &Domain::ball(2), 20, 42).unwrap(),
            Properness::Proper
        ));
    }
}
