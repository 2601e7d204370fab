//! Truncated Bergman-space linear algebra on graded monomial bases.
//!
//! Monomials are orthogonal on the polydisk, the ball, and the annulus with
//! closed-form norms, so multiplication matrices are exact band-raising
//! matrices and adjoints are exact norm-weighted transposes. The commutant
//! dimension is the nullity of a window-restricted commutation system: the
//! unknown compression X lives on degrees ≤ K = N − g, and every imposed
//! equation involves only compositions the truncation represents exactly,
//! so compressions of true commutant elements solve the system with zero
//! residual. Constraints from the generators, their adjoints, and all
//! length-two words are stacked; the system splits into small independent
//! blocks under any positive weight grading making every symbol
//! homogeneous.

use crate::domain::Domain;
use crate::linalg::{from_na, to_na, CMat};
use crate::poly::{Poly, PolyError};
use crate::rng::{role, stream};
use crate::symbolic::SymbolicAction;
use nalgebra::Complex;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

pub const RANK_THRESHOLD_REL: f64 = 1e-8;
pub const GAP_REQUIREMENT: f64 = 1e3;
pub const COMMUTE_RESIDUAL: f64 = 1e-8;
pub const EIGENVALUE_CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BergmanError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("bergman models exist for polydisk, ball, and annulus only")]
    UnsupportedDomain,
    #[error("symbol degree {symbol} exceeds the model degree N = {n}")]
    DegreeOverflow { symbol: i32, n: i32 },
    #[error("margin must be at least the maximum symbol degree")]
    BadMargin,
    #[error("class action has no recognized monomial form")]
    UnsupportedClassAction,
    #[error("rank decision ambiguous: singular gap {gap:.3e} below the required 1e3")]
    AmbiguousRank { gap: f64 },
    #[error("operator label mismatch: expected a multiplication matrix")]
    LabelMismatch,
    #[error("eigenvalue clustering stayed ambiguous after retries")]
    ClusteringAmbiguous,
    #[error("i/o failure writing matrix dump: {0}")]
    Io(#[from] std::io::Error),
}

/// Graded orthogonal monomial basis with exact squared norms.
#[derive(Debug, Clone)]
pub struct BergmanModel {
    pub domain: Domain,
    pub max_degree: i32,
    /// exponent vectors, graded lexicographic; annulus: 0, 1, -1, 2, -2, ...
    pub index_set: Vec<Vec<i32>>,
    pub norms_sq: Vec<f64>,
    position: HashMap<Vec<i32>, usize>,
}

impl BergmanModel {
    pub fn new(domain: &Domain, max_degree: i32) -> Result<Self, BergmanError> {
        let index_set: Vec<Vec<i32>> = match domain {
            Domain::Polydisk { dim } | Domain::Ball { dim } => graded_exponents(*dim, max_degree),
            Domain::Annulus { .. } => {
                let mut v = vec![vec![0]];
                for k in 1..=max_degree {
                    v.push(vec![k]);
                    v.push(vec![-k]);
                }
                v
            }
            Domain::Difference { .. } => return Err(BergmanError::UnsupportedDomain),
        };
        let norms_sq: Vec<f64> = index_set
            .iter()
            .map(|a| monomial_norm_sq(domain, a))
            .collect::<Result<_, _>>()?;
        let position = index_set
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(BergmanModel { domain: domain.clone(), max_degree, index_set, norms_sq, position })
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    pub fn position(&self, alpha: &[i32]) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    /// Grading band: total degree, or |n| on the annulus.
    pub fn band(&self, alpha: &[i32]) -> i32 {
        band_of(&self.domain, alpha)
    }
}

fn band_of(domain: &Domain, alpha: &[i32]) -> i32 {
    match domain {
        Domain::Annulus { .. } => alpha[0].abs(),
        _ => alpha.iter().sum(),
    }
}

fn graded_exponents(dim: usize, max_degree: i32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut level = Vec::new();
        gen_level(dim, deg, &mut vec![], &mut level);
        level.sort();
        level.reverse();
        out.extend(level);
    }
    out
}

fn gen_level(dim: usize, rem: i32, prefix: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    if prefix.len() == dim - 1 {
        let mut v = prefix.clone();
        v.push(rem);
        out.push(v);
        return;
    }
    for e in 0..=rem {
        prefix.push(e);
        gen_level(dim, rem - e, prefix, out);
        prefix.pop();
    }
}

/// Closed-form squared Bergman norm of z^alpha (Lebesgue measure).
pub fn monomial_norm_sq(domain: &Domain, alpha: &[i32]) -> Result<f64, BergmanError> {
    match domain {
        Domain::Polydisk { dim } => {
            if alpha.len() != *dim || alpha.iter().any(|&a| a < 0) {
                return Err(BergmanError::UnsupportedDomain);
            }
            Ok(alpha
                .iter()
                .map(|&a| std::f64::consts::PI / (a as f64 + 1.0))
                .product())
        }
        Domain::Ball { dim } => {
            if alpha.len() != *dim || alpha.iter().any(|&a| a < 0) {
                return Err(BergmanError::UnsupportedDomain);
            }
            // π^d α! / (d + |α|)!
            let d = *dim as i32;
            let total: i32 = alpha.iter().sum();
            let mut v = std::f64::consts::PI.powi(d);
            for &a in alpha {
                v *= factorial(a);
            }
            v /= factorial(d + total);
            Ok(v)
        }
        Domain::Annulus { r } => {
            let n = alpha[0];
            if n == -1 {
                Ok(4.0 * std::f64::consts::PI * (1.0 / r).ln())
            } else {
                let p = (2 * n + 2) as f64;
                Ok(2.0 * std::f64::consts::PI * ((1.0 / r).powf(p) - r.powf(p)) / p)
            }
        }
        Domain::Difference { .. } => Err(BergmanError::UnsupportedDomain),
    }
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OperatorLabel {
    Mult(String),
    MultAdjoint(String),
    ClassOperator(String),
    Projection,
    Generic,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub entries: CMat,
    pub label: OperatorLabel,
}

/// Matrix of multiplication by p: column α carries the coefficients of
/// p·z^α on basis monomials; image terms outside the model are truncated.
pub fn mult_matrix(model: &BergmanModel, p: &Poly) -> Result<OperatorMatrix, BergmanError> {
    let g = p.total_degree();
    if g > model.max_degree {
        return Err(BergmanError::DegreeOverflow { symbol: g, n: model.max_degree });
    }
    let n = model.len();
    let mut m = CMat::zeros(n, n);
    for (j, alpha) in model.index_set.iter().enumerate() {
        for (e, c) in p.terms() {
            let beta: Vec<i32> = alpha.iter().zip(e.iter()).map(|(a, x)| a + x).collect();
            if let Some(i) = model.position(&beta) {
                m[(i, j)] += to_na(*c);
            }
        }
    }
    Ok(OperatorMatrix { entries: m, label: OperatorLabel::Mult(p.to_string()) })
}

/// Norm-weighted conjugate transpose: the exact adjoint on the truncation.
pub fn adjoint_matrix(
    model: &BergmanModel,
    m: &OperatorMatrix,
) -> Result<OperatorMatrix, BergmanError> {
    let OperatorLabel::Mult(sym) = &m.label else {
        return Err(BergmanError::LabelMismatch);
    };
    Ok(OperatorMatrix {
        entries: weighted_adjoint(&m.entries, &model.norms_sq),
        label: OperatorLabel::MultAdjoint(sym.clone()),
    })
}

pub(crate) fn weighted_adjoint(m: &CMat, norms_sq: &[f64]) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| {
        m[(j, i)].conj() * Complex::new(norms_sq[j] / norms_sq[i], 0.0)
    })
}

/// Matrix of the averaged class operator E on the monomial basis.
pub fn class_operator_matrix(
    model: &BergmanModel,
    action: &SymbolicAction,
    class_id: &str,
) -> Result<OperatorMatrix, BergmanError> {
    let n = model.len();
    let mut m = CMat::zeros(n, n);
    for (j, alpha) in model.index_set.iter().enumerate() {
        if let Some((coeff, image)) = action.monomial_image(alpha) {
            if let Some(i) = model.position(&image) {
                m[(i, j)] += to_na(coeff);
            }
        }
    }
    Ok(OperatorMatrix { entries: m, label: OperatorLabel::ClassOperator(class_id.to_string()) })
}

/// ‖E_a^* − E_b‖ (max entry) on degrees ≤ N − margin, with * the
/// norm-weighted transpose.
pub fn check_adjoint_identity(
    model: &BergmanModel,
    class_a: &SymbolicAction,
    class_b: &SymbolicAction,
    margin: i32,
) -> Result<f64, BergmanError> {
    let ea = class_operator_matrix(model, class_a, "a")?;
    let eb = class_operator_matrix(model, class_b, "b")?;
    let eastar = weighted_adjoint(&ea.entries, &model.norms_sq);
    let cut = model.max_degree - margin;
    let mut worst = 0.0f64;
    for (i, bi) in model.index_set.iter().enumerate() {
        if model.band(bi) > cut {
            continue;
        }
        for (j, bj) in model.index_set.iter().enumerate() {
            if model.band(bj) > cut {
                continue;
            }
            worst = worst.max((eastar[(i, j)] - eb.entries[(i, j)]).norm());
        }
    }
    Ok(worst)
}

/// Result of the truncated commutant computation.
#[derive(Debug, Clone)]
pub struct CommutantResult {
    pub dim: usize,
    pub singular_gap: f64,
    /// reachable index subset the unknown lives on (positions in the model)
    pub support: Vec<usize>,
    /// nullspace operators as matrices over `support`
    pub nullspace: Vec<CMat>,
    pub unknowns: usize,
    pub equations: usize,
}

struct WindowOp {
    matrix: CMat,
    rise: i32,
    fall: i32,
}

/// Dimension of the space of truncated operators commuting with the
/// generators (and adjoints when requested) on every exactly represented
/// window.
pub fn commutant_dimension(
    model: &BergmanModel,
    generators: &[Poly],
    include_adjoints: bool,
    margin: i32,
) -> Result<CommutantResult, BergmanError> {
    let degrees: Vec<i32> = generators.iter().map(|p| p.total_degree()).collect();
    let gmax = degrees.iter().copied().max().unwrap_or(0);
    if margin < gmax {
        return Err(BergmanError::BadMargin);
    }
    let annulus = matches!(model.domain, Domain::Annulus { .. });
    let k_cut = model.max_degree - margin;
    let cut_indices: Vec<usize> = (0..model.len())
        .filter(|&i| model.band(&model.index_set[i]) <= k_cut)
        .collect();

    // reachable support: the exactness core plus one generator application
    let gmin = degrees.iter().copied().min().unwrap_or(0);
    let mut support_set: std::collections::BTreeSet<usize> = cut_indices
        .iter()
        .copied()
        .filter(|&i| model.band(&model.index_set[i]) <= k_cut - gmin)
        .collect();
    for (p, &gd) in generators.iter().zip(degrees.iter()) {
        for &ai in &cut_indices {
            let alpha = model.index_set[ai].clone();
            if model.band(&alpha) <= k_cut - gd {
                for (e, _) in p.terms() {
                    let beta: Vec<i32> =
                        alpha.iter().zip(e.iter()).map(|(a, x)| a + x).collect();
                    if let Some(bi) = model.position(&beta) {
                        if model.band(&beta) <= k_cut {
                            support_set.insert(bi);
                        }
                    }
                }
            }
        }
    }
    let support: Vec<usize> = support_set.into_iter().collect();
    let sup_pos: HashMap<usize, usize> =
        support.iter().enumerate().map(|(si, &gi)| (gi, si)).collect();
    let ns = support.len();

    // operators with window parameters (rise, fall) bounding how far they
    // raise and lower the grading band
    let mut ops: Vec<WindowOp> = Vec::new();
    let mut mult_mats = Vec::new();
    for (p, &gd) in generators.iter().zip(degrees.iter()) {
        let a = mult_matrix(model, p)?.entries;
        let astar = weighted_adjoint(&a, &model.norms_sq);
        if annulus {
            ops.push(WindowOp { matrix: a.clone(), rise: gd, fall: gd });
            if include_adjoints {
                ops.push(WindowOp { matrix: astar.clone(), rise: gd, fall: gd });
            }
        } else {
            ops.push(WindowOp { matrix: a.clone(), rise: gd, fall: 0 });
            if include_adjoints {
                ops.push(WindowOp { matrix: astar.clone(), rise: 0, fall: gd });
            }
        }
        mult_mats.push((a, astar, gd));
    }
    // length-two words: under truncation, commuting with the generators no
    // longer implies commuting with their products, and the word windows
    // pin down directions the generator windows miss
    for (a, astar, ga) in &mult_mats {
        for (b, bstar, gb) in &mult_mats {
            if include_adjoints {
                if annulus {
                    ops.push(WindowOp { matrix: astar * b, rise: ga + gb, fall: ga + gb });
                    ops.push(WindowOp { matrix: a * bstar, rise: ga + gb, fall: ga + gb });
                } else {
                    ops.push(WindowOp { matrix: astar * b, rise: *gb, fall: *ga });
                    ops.push(WindowOp { matrix: a * bstar, rise: *ga, fall: *gb });
                }
            } else if !annulus {
                ops.push(WindowOp { matrix: a * b, rise: ga + gb, fall: 0 });
            }
        }
    }

    // optional grading for banded assembly
    let dim_vars = model.index_set.first().map(|a| a.len()).unwrap_or(1);
    let grading = find_grading(generators, dim_vars);
    let lam = |alpha: &[i32]| -> i64 {
        match &grading {
            Some(l) => alpha.iter().zip(l.iter()).map(|(&a, &w)| a as i64 * w).sum(),
            None => 0,
        }
    };

    type Row = Vec<(usize, Complex64)>;
    let mut band_eqs: BTreeMap<i64, Vec<Row>> = BTreeMap::new();
    for op in &ops {
        let w = &op.matrix;
        for &bg in &support {
            if model.band(&model.index_set[bg]) > k_cut - op.fall {
                continue;
            }
            let bs = sup_pos[&bg];
            for &ag in &support {
                if model.band(&model.index_set[ag]) > k_cut - op.rise {
                    continue;
                }
                let as_ = sup_pos[&ag];
                let mut row: Row = Vec::new();
                let mut ok = true;
                // (X W)_{b,a} = sum_m X[b, m] W[m, a], m over the cut
                for &mg in &cut_indices {
                    let v = w[(mg, ag)];
                    if v != Complex::new(0.0, 0.0) {
                        match sup_pos.get(&mg) {
                            Some(&ms) => row.push((bs * ns + ms, from_na(v))),
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                if !ok {
                    continue;
                }
                // -(W X)_{b,a} = -sum_m W[b, m] X[m, a]
                for &mg in &cut_indices {
                    let v = w[(bg, mg)];
                    if v != Complex::new(0.0, 0.0) {
                        match sup_pos.get(&mg) {
                            Some(&ms) => row.push((ms * ns + as_, -from_na(v))),
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                if !ok || row.is_empty() {
                    continue;
                }
                row.sort_by_key(|(k, _)| *k);
                let mut merged: Row = Vec::with_capacity(row.len());
                for (k, v) in row {
                    match merged.last_mut() {
                        Some((k0, v0)) if *k0 == k => *v0 += v,
                        _ => merged.push((k, v)),
                    }
                }
                merged.retain(|(_, v)| v.norm() > 0.0);
                if merged.is_empty() {
                    continue;
                }
                let s = lam(&model.index_set[bg]) - lam(&model.index_set[ag]);
                band_eqs.entry(s).or_default().push(merged);
            }
        }
    }

    let mut band_unknowns: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (bs, &bg) in support.iter().enumerate() {
        for (as_, &ag) in support.iter().enumerate() {
            let s = lam(&model.index_set[bg]) - lam(&model.index_set[ag]);
            band_unknowns.entry(s).or_default().push(bs * ns + as_);
        }
    }

    struct BandOut {
        svals: Vec<f64>,
        touched: Vec<usize>,
        vt: Option<CMat>,
    }
    let bands: Vec<(Vec<Row>, Vec<usize>)> = band_unknowns
        .iter()
        .map(|(s, unk)| (band_eqs.get(s).cloned().unwrap_or_default(), unk.clone()))
        .collect();
    let outs: Vec<BandOut> = bands
        .par_iter()
        .map(|(eqs, unknowns)| {
            if eqs.is_empty() {
                return BandOut { svals: vec![], touched: vec![], vt: None };
            }
            let pos: HashMap<usize, usize> =
                unknowns.iter().enumerate().map(|(i, &u)| (u, i)).collect();
            let mut touched_mask = vec![false; unknowns.len()];
            for row in eqs {
                for (k, _) in row {
                    touched_mask[pos[k]] = true;
                }
            }
            let touched: Vec<usize> = unknowns
                .iter()
                .enumerate()
                .filter(|(i, _)| touched_mask[*i])
                .map(|(_, &u)| u)
                .collect();
            if touched.is_empty() {
                return BandOut { svals: vec![], touched: vec![], vt: None };
            }
            let tpos: HashMap<usize, usize> =
                touched.iter().enumerate().map(|(i, &u)| (u, i)).collect();
            // pad with zero rows so the thin SVD spans the whole unknown
            // space and nullvectors can be read off V^T
            let rows = eqs.len().max(touched.len());
            let mut m = CMat::zeros(rows, touched.len());
            for (r, row) in eqs.iter().enumerate() {
                for (k, v) in row {
                    m[(r, tpos[k])] = to_na(*v);
                }
            }
            let svd = m.svd(false, true);
            let svals: Vec<f64> = svd.singular_values.iter().cloned().collect();
            BandOut { svals, touched, vt: svd.v_t }
        })
        .collect();

    let sigma_max = outs
        .iter()
        .flat_map(|o| o.svals.iter().cloned())
        .fold(0.0f64, f64::max);
    let threshold = RANK_THRESHOLD_REL * sigma_max;
    let mut dim = 0usize;
    let mut kept_min = f64::INFINITY;
    let mut disc_max = 0.0f64;
    let mut nullspace: Vec<CMat> = Vec::new();
    for out in &outs {
        if out.touched.is_empty() {
            continue;
        }
        for &s in &out.svals {
            if s >= threshold {
                kept_min = kept_min.min(s);
            } else {
                disc_max = disc_max.max(s);
            }
        }
        let rank = out.svals.iter().filter(|&&s| s >= threshold).count();
        let null_here = out.touched.len() - rank;
        dim += null_here;
        if null_here > 0 {
            if let Some(vt) = &out.vt {
                for r in rank..vt.nrows() {
                    let mut x = CMat::zeros(ns, ns);
                    for (ci, &u) in out.touched.iter().enumerate() {
                        x[(u / ns, u % ns)] = vt[(r, ci)].conj();
                    }
                    nullspace.push(x);
                }
            }
        }
    }
    let singular_gap = if disc_max > 0.0 { kept_min / disc_max } else { f64::INFINITY };
    if singular_gap < GAP_REQUIREMENT {
        return Err(BergmanError::AmbiguousRank { gap: singular_gap });
    }
    let equations: usize = bands.iter().map(|(e, _)| e.len()).sum();
    Ok(CommutantResult { dim, singular_gap, support, nullspace, unknowns: ns * ns, equations })
}

/// Positive integer grading making every generator homogeneous; None when
/// no such grading exists (mixed Laurent shifts).
pub fn find_grading(generators: &[Poly], dim: usize) -> Option<Vec<i64>> {
    let mut diffs: Vec<Vec<i64>> = Vec::new();
    for p in generators {
        let exps: Vec<&Vec<i32>> = p.terms().map(|(e, _)| e).collect();
        for e in exps.iter().skip(1) {
            diffs.push(
                e.iter()
                    .zip(exps[0].iter())
                    .map(|(&a, &b)| (a - b) as i64)
                    .collect(),
            );
        }
    }
    if diffs.is_empty() {
        return Some(vec![1; dim]);
    }
    let max_w = 12i64;
    let mut best: Option<Vec<i64>> = None;
    let mut stack: Vec<Vec<i64>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == dim {
            let fits = diffs
                .iter()
                .all(|d| d.iter().zip(prefix.iter()).map(|(&a, &b)| a * b).sum::<i64>() == 0);
            if fits {
                let score: i64 = prefix.iter().sum();
                let better = match &best {
                    Some(b) => score < b.iter().sum::<i64>(),
                    None => true,
                };
                if better {
                    best = Some(prefix);
                }
            }
            continue;
        }
        for w in 1..=max_w {
            let mut p = prefix.clone();
            p.push(w);
            stack.push(p);
        }
    }
    best
}

/// Spectral projections of a random self-adjoint element of the commutant
/// span, computed on the largest coordinate block where the span closes
/// under products.
pub fn reducing_projections(
    model: &BergmanModel,
    commutant: &CommutantResult,
    seed: u64,
) -> Result<Vec<OperatorMatrix>, BergmanError> {
    let ns = commutant.support.len();
    if commutant.nullspace.is_empty() {
        return Err(BergmanError::ClusteringAmbiguous);
    }
    // orthonormal frame: scale by monomial norms so the plain conjugate
    // transpose is the Bergman adjoint
    let w: Vec<f64> = commutant
        .support
        .iter()
        .map(|&g| model.norms_sq[g].sqrt())
        .collect();
    let frame: Vec<CMat> = commutant
        .nullspace
        .iter()
        .map(|x| CMat::from_fn(ns, ns, |i, j| x[(i, j)] * Complex::new(w[i] / w[j], 0.0)))
        .collect();

    // shrink to the multiplicatively closed core
    let mut good: Vec<usize> = (0..ns).collect();
    for _ in 0..30 {
        let b: Vec<CMat> = frame
            .iter()
            .map(|x| CMat::from_fn(good.len(), good.len(), |i, j| x[(good[i], good[j])]))
            .collect();
        let defect = closure_defect(&b);
        let worst = defect.iter().cloned().fold(0.0f64, f64::max);
        if worst < 1e-8 {
            break;
        }
        let keep: Vec<usize> = good
            .iter()
            .enumerate()
            .filter(|(i, _)| defect[*i] < 0.5 * worst)
            .map(|(_, &g)| g)
            .collect();
        if keep.len() == good.len() || keep.is_empty() {
            break;
        }
        good = keep;
    }
    let nc = good.len();
    let b: Vec<CMat> = frame
        .iter()
        .map(|x| CMat::from_fn(nc, nc, |i, j| x[(good[i], good[j])]))
        .collect();

    let mut rng = stream(seed, role::PROJECTIONS, 0);
    for _attempt in 0..3 {
        use rand::Rng;
        let coefs: Vec<Complex64> = (0..b.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut h = CMat::zeros(nc, nc);
        for (c, bi) in coefs.iter().zip(b.iter()) {
            h += bi * to_na(*c);
        }
        let hh = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
        let norm = hh.norm();
        if norm == 0.0 {
            continue;
        }
        let hn = &hh / Complex::new(norm, 0.0);
        let se = nalgebra::SymmetricEigen::new(hn.clone());
        let mut order: Vec<usize> = (0..nc).collect();
        order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
        let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
        for win in order.windows(2) {
            if se.eigenvalues[win[1]] - se.eigenvalues[win[0]] < EIGENVALUE_CLUSTER_TOL {
                groups.last_mut().unwrap().push(win[1]);
            } else {
                groups.push(vec![win[1]]);
            }
        }
        let span: Vec<&CMat> = b.iter().collect();
        let mut projections = Vec::new();
        let mut ok = true;
        for g in &groups {
            let mut p = CMat::zeros(nc, nc);
            for &k in g {
                let col = se.eigenvectors.column(k);
                for i in 0..nc {
                    for j in 0..nc {
                        p[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
            // membership in the commutant span doubles as the commutation
            // check: every span element satisfies the exact windows
            if span_residual(&p, &span) > COMMUTE_RESIDUAL {
                ok = false;
                break;
            }
            projections.push(p);
        }
        if !ok {
            continue;
        }
        let n = model.len();
        let out: Vec<OperatorMatrix> = projections
            .into_iter()
            .map(|p| {
                let mut full = CMat::zeros(n, n);
                for (i, &gi) in good.iter().enumerate() {
                    for (j, &gj) in good.iter().enumerate() {
                        let row = commutant.support[gi];
                        let col = commutant.support[gj];
                        full[(row, col)] = p[(i, j)] * Complex::new(w[gj] / w[gi], 0.0);
                    }
                }
                OperatorMatrix { entries: full, label: OperatorLabel::Projection }
            })
            .collect();
        return Ok(out);
    }
    Err(BergmanError::ClusteringAmbiguous)
}

fn closure_defect(b: &[CMat]) -> Vec<f64> {
    let nc = b[0].nrows();
    let mut defect = vec![0.0f64; nc];
    let k = b.len();
    let mut gram = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = (b[i].adjoint() * &b[j]).trace();
        }
    }
    let gram_inv = gram.try_inverse();
    for bi in b {
        for bj in b {
            let prod = bi * bj;
            let rhs = nalgebra::DVector::from_fn(k, |i, _| (b[i].adjoint() * &prod).trace());
            let coefs = match &gram_inv {
                Some(gi) => gi * rhs,
                None => continue,
            };
            let mut approx = CMat::zeros(nc, nc);
            for (c, bb) in coefs.iter().zip(b.iter()) {
                approx += bb * *c;
            }
            let err = &prod - &approx;
            for i in 0..nc {
                for j in 0..nc {
                    let e = err[(i, j)].norm();
                    defect[i] = defect[i].max(e);
                    defect[j] = defect[j].max(e);
                }
            }
        }
    }
    defect
}

/// Relative distance from an operator (over the commutant support) to the
/// computed nullspace span.
pub fn nullspace_span_residual(commutant: &CommutantResult, x: &CMat) -> f64 {
    let span: Vec<&CMat> = commutant.nullspace.iter().collect();
    if span.is_empty() {
        return f64::INFINITY;
    }
    span_residual(x, &span)
}

fn span_residual(p: &CMat, span: &[&CMat]) -> f64 {
    let k = span.len();
    let mut gram = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = (span[i].adjoint() * span[j]).trace();
        }
    }
    let rhs = nalgebra::DVector::from_fn(k, |i, _| (span[i].adjoint() * p).trace());
    let Some(gi) = gram.try_inverse() else { return f64::INFINITY };
    let coefs = gi * rhs;
    let mut approx = CMat::zeros(p.nrows(), p.ncols());
    for (c, bb) in coefs.iter().zip(span.iter()) {
        approx += *bb * *c;
    }
    (p - approx).norm() / p.norm().max(1e-300)
}

/// Binary dump: column-major (re, im) little-endian f64 pairs, plus a JSON
/// sidecar listing the index set.
pub fn write_matrix_dump(
    path: &std::path::Path,
    model: &BergmanModel,
    m: &OperatorMatrix,
) -> Result<(), BergmanError> {
    use std::io::Write;
    let mut buf = Vec::with_capacity(16 * m.entries.len());
    for j in 0..m.entries.ncols() {
        for i in 0..m.entries.nrows() {
            buf.extend_from_slice(&m.entries[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m.entries[(i, j)].im.to_le_bytes());
        }
    }
    std::fs::write(path, &buf)?;
    let sidecar = serde_json::json!({
        "rows": m.entries.nrows(),
        "cols": m.entries.ncols(),
        "layout": "column-major interleaved re/im f64 little-endian",
        "index_set": model.index_set,
        "label": format!("{:?}", m.label),
    });
    let mut f = std::fs::File::create(path.with_extension("json"))?;
    f.write_all(serde_json::to_string_pretty(&sidecar).unwrap().as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use crate::symbolic::Unit;

    #[test]
    fn polydisk_norms() {
        let d = Domain::polydisk(2);
        let pi = std::f64::consts::PI;
        assert!((monomial_norm_sq(&d, &[0, 0]).unwrap() - pi * pi).abs() < 1e-14);
        assert!((monomial_norm_sq(&d, &[1, 2]).unwrap() - pi / 2.0 * pi / 3.0).abs() < 1e-14);
    }

    #[test]
    fn ball_norms() {
        let d = Domain::ball(2);
        let pi = std::f64::consts::PI;
        // volume of the unit 4-ball
        assert!((monomial_norm_sq(&d, &[0, 0]).unwrap() - pi * pi / 2.0).abs() < 1e-14);
        // π² 1!0!/3! = π²/6
        assert!((monomial_norm_sq(&d, &[1, 0]).unwrap() - pi * pi / 6.0).abs() < 1e-14);
    }

    #[test]
    fn annulus_norms() {
        let d = Domain::annulus(0.5).unwrap();
        let pi = std::f64::consts::PI;
        assert!((monomial_norm_sq(&d, &[-1]).unwrap() - 4.0 * pi * 2.0f64.ln()).abs() < 1e-12);
        // n = 0: 2π (4 − 1/4)/2
        assert!(
            (monomial_norm_sq(&d, &[0]).unwrap() - 2.0 * pi * (4.0 - 0.25) / 2.0).abs() < 1e-12
        );
    }

    #[test]
    fn mult_matrix_identity_symbol() {
        let model = BergmanModel::new(&Domain::polydisk(2), 4).unwrap();
        let one = parse_poly("1", 2, false).unwrap();
        let m = mult_matrix(&model, &one).unwrap();
        assert!((&m.entries - CMat::identity(model.len(), model.len())).norm() < 1e-15);
    }

    #[test]
    fn mult_matrix_monomial_shift() {
        let model = BergmanModel::new(&Domain::polydisk(2), 6).unwrap();
        let p = parse_poly("z1*z2^2", 2, false).unwrap();
        let m = mult_matrix(&model, &p).unwrap();
        let j = model.position(&[1, 1]).unwrap();
        let i = model.position(&[2, 3]).unwrap();
        assert!((m.entries[(i, j)] - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let col_nnz = (0..model.len())
            .filter(|&r| m.entries[(r, j)].norm() > 0.0)
            .count();
        assert_eq!(col_nnz, 1);
    }

    #[test]
    fn zhukovski_mult_structure() {
        let model = BergmanModel::new(&Domain::annulus(0.5).unwrap(), 6).unwrap();
        let f = parse_poly("0.5*z + 0.5*z^-1", 1, true).unwrap();
        let m = mult_matrix(&model, &f).unwrap();
        let j = model.position(&[2]).unwrap();
        let up = model.position(&[3]).unwrap();
        let dn = model.position(&[1]).unwrap();
        assert!((m.entries[(up, j)] - Complex::new(0.5, 0.0)).norm() < 1e-15);
        assert!((m.entries[(dn, j)] - Complex::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_weighted_shift() {
        // oracle: <z·z^{n-1}, z^n>/||z^{n-1}||² gives (n/(n+1)) z^{n-1}
        let model = BergmanModel::new(&Domain::polydisk(1), 8).unwrap();
        let z = parse_poly("z", 1, false).unwrap();
        let m = mult_matrix(&model, &z).unwrap();
        let a = adjoint_matrix(&model, &m).unwrap();
        for n in 1..=8i32 {
            let from = model.position(&[n]).unwrap();
            let to = model.position(&[n - 1]).unwrap();
            let expect = n as f64 / (n as f64 + 1.0);
            assert!(
                (a.entries[(to, from)] - Complex::new(expect, 0.0)).norm() < 1e-14,
                "n = {n}"
            );
        }
    }

    #[test]
    fn adjoint_self_adjoint_product() {
        let model = BergmanModel::new(&Domain::polydisk(2), 6).unwrap();
        let p = parse_poly("z1+z2^2", 2, false).unwrap();
        let m = mult_matrix(&model, &p).unwrap();
        let a = adjoint_matrix(&model, &m).unwrap();
        let prod = &a.entries * &m.entries;
        let prod_adj = weighted_adjoint(&prod, &model.norms_sq);
        assert!((&prod - &prod_adj).norm() < 1e-12);
    }

    #[test]
    fn class_operator_identity_and_flip() {
        let model = BergmanModel::new(&Domain::polydisk(2), 6).unwrap();
        let id = SymbolicAction::identity(2);
        let e = class_operator_matrix(&model, &id, "id").unwrap();
        assert!((&e.entries - CMat::identity(model.len(), model.len())).norm() < 1e-14);
        let flip = SymbolicAction::Coordinate {
            perm: vec![0, 1],
            exps: vec![1, 1],
            units: vec![Unit::one(), Unit::new(1, 2)],
        };
        let ef = class_operator_matrix(&model, &flip, "flip").unwrap();
        // E h = h(z1, −z2)·J with J = −1: diagonal −(−1)^b
        for (j, alpha) in model.index_set.iter().enumerate() {
            let expect = -(-1.0f64).powi(alpha[1]);
            assert!((ef.entries[(j, j)] - Complex::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn adjoint_identity_for_classes() {
        let model = BergmanModel::new(&Domain::polydisk(2), 12).unwrap();
        let id = SymbolicAction::identity(2);
        assert!(check_adjoint_identity(&model, &id, &id, 3).unwrap() < 1e-14);
        let flip = SymbolicAction::Coordinate {
            perm: vec![0, 1],
            exps: vec![1, 1],
            units: vec![Unit::one(), Unit::new(1, 2)],
        };
        assert!(check_adjoint_identity(&model, &flip, &flip, 3).unwrap() < 1e-14);
        // the sqrt-substitution class is its own inverse class; oracle:
        // entrywise inner-product identity from the monomial action
        let s2 = SymbolicAction::SwapSqrt { a: Unit::one(), b: Unit::one() };
        let res = check_adjoint_identity(&model, &s2, &s2, 3).unwrap();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn grading_detection() {
        let gens = [
            parse_poly("z1*z2^2", 2, false).unwrap(),
            parse_poly("z1+z2^2", 2, false).unwrap(),
        ];
        assert_eq!(find_grading(&gens, 2), Some(vec![2, 1]));
        let zh = [parse_poly("0.5*z+0.5*z^-1", 1, true).unwrap()];
        assert_eq!(find_grading(&zh, 1), None);
    }

    #[test]
    fn commutant_single_shift_is_trivial() {
        // V*(z, D) = C·I for the irreducible weighted shift
        let model = BergmanModel::new(&Domain::polydisk(1), 10).unwrap();
        let gens = [parse_poly("z", 1, false).unwrap()];
        let r = commutant_dimension(&model, &gens, true, 1).unwrap();
        assert_eq!(r.dim, 1);
        assert!(r.singular_gap > GAP_REQUIREMENT);
    }

    #[test]
    fn commutant_power4() {
        let model = BergmanModel::new(&Domain::polydisk(1), 12).unwrap();
        let gens = [parse_poly("z^4", 1, false).unwrap()];
        let r = commutant_dimension(&model, &gens, true, 4).unwrap();
        assert_eq!(r.dim, 4);
    }

    #[test]
    fn commutant_zhukovski() {
        let model = BergmanModel::new(&Domain::annulus(0.5).unwrap(), 12).unwrap();
        let gens = [parse_poly("0.5*z + 0.5*z^-1", 1, true).unwrap()];
        let r = commutant_dimension(&model, &gens, true, 1).unwrap();
        assert_eq!(r.dim, 2);
    }

    #[test]
    fn zhukovski_inversion_operator_commutes() {
        // z^n -> −z^{−n−2} commutes with M_f on the exact window
        let model = BergmanModel::new(&Domain::annulus(0.5).unwrap(), 12).unwrap();
        let f = parse_poly("0.5*z + 0.5*z^-1", 1, true).unwrap();
        let a = mult_matrix(&model, &f).unwrap().entries;
        let inv = SymbolicAction::Coordinate {
            perm: vec![0],
            exps: vec![-1],
            units: vec![Unit::one()],
        };
        let s = class_operator_matrix(&model, &inv, "inv").unwrap().entries;
        let nmax = model.max_degree;
        let mut worst = 0.0f64;
        for (j, alpha) in model.index_set.iter().enumerate() {
            let n = alpha[0];
            if n.abs() > nmax - 1 || (-n - 2).abs() > nmax - 1 {
                continue;
            }
            for (i, beta) in model.index_set.iter().enumerate() {
                if beta[0].abs() > nmax - 1 {
                    continue;
                }
                let lhs: Complex<f64> = (0..model.len()).map(|k| s[(i, k)] * a[(k, j)]).sum();
                let rhs: Complex<f64> = (0..model.len()).map(|k| a[(i, k)] * s[(k, j)]).sum();
                worst = worst.max((lhs - rhs).norm());
            }
        }
        assert!(worst < 1e-8, "commutation residual {worst}");
    }

    #[test]
    fn reducing_projections_trivial() {
        let model = BergmanModel::new(&Domain::polydisk(1), 10).unwrap();
        let gens = [parse_poly("z", 1, false).unwrap()];
        let r = commutant_dimension(&model, &gens, true, 1).unwrap();
        let projs = reducing_projections(&model, &r, 42).unwrap();
        assert_eq!(projs.len(), 1);
        for &g in &r.support {
            assert!((projs[0].entries[(g, g)] - Complex::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn reducing_projections_lattice_cosets() {
        // generators z1, z1 z2^2: the exponent lattice Z(1,0)+Z(1,2) has
        // index 2 and the projections are parity indicators in z2
        let model = BergmanModel::new(&Domain::polydisk(2), 10).unwrap();
        let gens = [
            parse_poly("z1", 2, false).unwrap(),
            parse_poly("z1*z2^2", 2, false).unwrap(),
        ];
        let r = commutant_dimension(&model, &gens, true, 3).unwrap();
        assert_eq!(r.dim, 2);
        let projs = reducing_projections(&model, &r, 42).unwrap();
        assert_eq!(projs.len(), 2);
        for p in &projs {
            for i in 0..model.len() {
                for j in 0..model.len() {
                    let v = p.entries[(i, j)];
                    if i != j {
                        assert!(v.norm() < 1e-8);
                    } else if v.norm() > 1e-8 {
                        assert!((v - Complex::new(1.0, 0.0)).norm() < 1e-8);
                    }
                }
            }
            let mut even = None;
            let mut odd = None;
            for &g in &r.support {
                let alpha = &model.index_set[g];
                let val = p.entries[(g, g)].re.round() as i64;
                if alpha[1] % 2 == 0 {
                    even.get_or_insert(val);
                    assert_eq!(even, Some(val));
                } else {
                    odd.get_or_insert(val);
                    assert_eq!(odd, Some(val));
                }
            }
            assert_ne!(even, odd);
        }
    }
}
