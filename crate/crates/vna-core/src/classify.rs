//! Orchestration: fiber counts, monodromy, admissibility, deck groups, and
//! the truncated-commutant cross-check, assembled into one report.

use crate::bergman::{
    class_operator_matrix, commutant_dimension, BergmanError, BergmanModel, CommutantResult,
};
use crate::domain::{ClosedBall, Domain, DomainError};
use crate::fiber::{is_proper_numeric, FiberError, Properness};
use crate::linalg::CMat;
use crate::monodromy::{
    classes_commute, compute_monodromy, decide_admissibility, detect_deck_group, Admissibility,
    AdmissibilityConfig, LocalInverseClass, MonodromyConfig, MonodromyError,
};
use crate::poly::{PolyError, PolyMap};
use crate::report::{
    AbelianVerdict, BergmanConfigEcho, ClassSummary, CommutantDimEntry, Diagnostics, DimVna,
    GroupSummary, Meta, MonodromyConfigEcho, ProblemEcho, VnaReport,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error(transparent)]
    Bergman(#[from] BergmanError),
    #[error("the Jacobian determinant vanishes identically: the image has no interior point")]
    ImageHasNoInterior,
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error(
        "cross-check failed: commutant dimension {commutant} disagrees with the \
         admissible class count {classes}"
    )]
    CrossCheckFailed { commutant: usize, classes: usize },
    #[error("deformation increased the dimension: {before} -> {after}")]
    DeformationMonotonicity { before: usize, after: usize },
    #[error("monomial pair has zero exponent determinant; the image has no interior point")]
    ZeroDeterminant,
}

fn default_max_loops() -> usize {
    200
}
fn default_stall() -> usize {
    30
}
fn default_samples() -> usize {
    64
}
fn default_margin() -> f64 {
    crate::monodromy::DEFAULT_MARGIN
}
fn default_step() -> i32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BergmanConfig {
    pub max_degree: i32,
    #[serde(default = "default_step")]
    pub step: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonodromySettings {
    #[serde(default = "default_max_loops")]
    pub max_loops: usize,
    #[serde(default = "default_stall")]
    pub stall: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for MonodromySettings {
    fn default() -> Self {
        MonodromySettings {
            max_loops: default_max_loops(),
            stall: default_stall(),
            samples: default_samples(),
            margin: default_margin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeformationBlock {
    pub removed_balls: Vec<ClosedBall>,
}

/// JSON problem description consumed by the CLI and the library front end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub map: Vec<String>,
    #[serde(default)]
    pub laurent: bool,
    pub domain: Domain,
    #[serde(default)]
    pub bergman: Option<BergmanConfig>,
    #[serde(default)]
    pub monodromy: Option<MonodromySettings>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub deformation: Option<DeformationBlock>,
}

fn default_seed() -> u64 {
    42
}

impl ProblemConfig {
    pub fn parse_map(&self) -> Result<PolyMap, ClassifyError> {
        let dim = self.domain.dim();
        let texts: Vec<&str> = self.map.iter().map(|s| s.as_str()).collect();
        Ok(PolyMap::parse(&texts, dim, self.laurent)?)
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        self.domain.validate()?;
        if self.map.is_empty() {
            return Err(ClassifyError::BadConfig("map must have at least one symbol".into()));
        }
        let map = self.parse_map()?;
        if let Some(b) = &self.bergman {
            let g = map.max_total_degree();
            if b.max_degree < 2 * g {
                return Err(ClassifyError::BadConfig(format!(
                    "bergman max_degree {} must be at least twice the symbol degree {}",
                    b.max_degree, g
                )));
            }
            if b.step <= 0 {
                return Err(ClassifyError::BadConfig("bergman step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Full classification pipeline.
pub fn classify_vna(cfg: &ProblemConfig) -> Result<VnaReport, ClassifyError> {
    cfg.validate()?;
    let map = cfg.parse_map()?;
    let domain = cfg.domain.clone();
    let mono_settings = cfg.monodromy.clone().unwrap_or_default();
    let mut notes: Vec<String> = Vec::new();

    let echo = ProblemEcho {
        map: cfg.map.clone(),
        domain: domain.clone(),
        laurent: cfg.laurent,
        seed: cfg.seed,
        bergman: cfg
            .bergman
            .as_ref()
            .map(|b| BergmanConfigEcho { max_degree: b.max_degree, step: b.step }),
        monodromy: MonodromyConfigEcho {
            max_loops: mono_settings.max_loops,
            stall: mono_settings.stall,
            samples: mono_settings.samples,
            margin: mono_settings.margin,
        },
    };

    // square maps with nonvanishing Jacobian run the full pipeline; other
    // tuples are classified through the truncated commutant alone
    let square_regular = if map.is_square() {
        let jac = map.jacobian_det()?;
        if jac.is_zero() {
            return Err(ClassifyError::ImageHasNoInterior);
        }
        true
    } else {
        false
    };

    if !square_regular {
        return classify_by_commutant_only(cfg, &map, &domain, echo, notes);
    }

    let properness = is_proper_numeric(&map, &domain, 48, cfg.seed)?;

    let mono_cfg = MonodromyConfig {
        max_loops: mono_settings.max_loops,
        stall: mono_settings.stall,
        seed: cfg.seed,
    };
    let action = compute_monodromy(&map, &domain, &mono_cfg)?;
    let m = action.fiber.len();

    let adm_cfg = AdmissibilityConfig {
        samples: mono_settings.samples,
        margin: mono_settings.margin,
        seed: cfg.seed,
    };
    let classes = decide_admissibility(&map, &domain, &action, &adm_cfg)?;
    let admissible: Vec<&LocalInverseClass> = classes
        .iter()
        .filter(|c| c.admissibility == Admissibility::Admissible)
        .collect();
    let any_inconclusive = classes
        .iter()
        .any(|c| c.admissibility == Admissibility::Inconclusive);
    let admissible_count = if any_inconclusive { None } else { Some(admissible.len()) };

    // deck transformation group from admissible singleton classes
    let group = match detect_deck_group(&classes) {
        Ok(g) => g,
        Err(MonodromyError::GroupIntegrity) => {
            notes.push("deck-group composition table failed the group axioms".into());
            None
        }
        Err(e) => return Err(e.into()),
    };

    // abelianness from exact class compositions
    let abelian = decide_abelian(&classes, map.dim_in(), &mut notes);

    // truncated commutant cross-check
    let mut commutant_dims: Vec<CommutantDimEntry> = Vec::new();
    let mut stabilized: Option<bool> = None;
    let mut generation_check: Option<bool> = None;
    let bergman_applicable = cfg.bergman.is_some()
        && !domain.is_difference()
        && classes.iter().all(|c| c.symbolic.is_some());
    if bergman_applicable {
        let bcfg = cfg.bergman.as_ref().unwrap();
        let g = map.max_total_degree();
        let ns = [bcfg.max_degree, bcfg.max_degree + bcfg.step];
        let results: Vec<(i32, Result<(CommutantResult, BergmanModel), BergmanError>)> = ns
            .iter()
            .map(|&n| {
                let r = BergmanModel::new(&domain, n).and_then(|model| {
                    commutant_dimension(&model, map.components(), true, g)
                        .map(|c| (c, model))
                });
                (n, r)
            })
            .collect();
        let mut dims: Vec<Option<usize>> = Vec::new();
        let mut last: Option<(CommutantResult, BergmanModel)> = None;
        for (n, r) in results {
            match r {
                Ok((c, model)) => {
                    commutant_dims.push(CommutantDimEntry {
                        n,
                        dim: Some(c.dim),
                        singular_gap: Some(c.singular_gap),
                        status: "clean".into(),
                    });
                    dims.push(Some(c.dim));
                    last = Some((c, model));
                }
                Err(e) => {
                    commutant_dims.push(CommutantDimEntry {
                        n,
                        dim: None,
                        singular_gap: None,
                        status: format!("{e}"),
                    });
                    dims.push(None);
                }
            }
        }
        let stab = dims.len() == 2 && dims[0].is_some() && dims[0] == dims[1];
        stabilized = Some(stab);
        if stab {
            let dim = dims[0].unwrap();
            if let Some(a) = admissible_count {
                if dim != a {
                    return Err(ClassifyError::CrossCheckFailed { commutant: dim, classes: a });
                }
            }
        }
        // generation check: each admissible class operator lies in the
        // computed nullspace span
        if let Some((c, model)) = &last {
            let mut all_in = true;
            for class in &admissible {
                if let Some(sym) = &class.symbolic {
                    let e = class_operator_matrix(model, sym, &sym.formula())?;
                    let restricted = restrict_to_support(&e.entries, &c.support);
                    let resid = crate::bergman::nullspace_span_residual(c, &restricted);
                    if resid > 1e-6 {
                        all_in = false;
                        notes.push(format!(
                            "class {} operator span residual {:.2e}",
                            sym.formula(),
                            resid
                        ));
                    }
                }
            }
            generation_check = Some(all_in && c.dim == admissible.len());
        }
    } else if cfg.bergman.is_some() {
        notes.push(
            "truncated commutant skipped: difference domain or unrecognized class action"
                .into(),
        );
    }

    let dim_vna = match admissible_count {
        Some(a) => DimVna::Finite(a),
        None => DimVna::Inconclusive,
    };
    let trivial = admissible_count.map(|a| a == 1);

    // consistency with properness (nontrivial iff not biholomorphic)
    if let (Some(t), Properness::Proper) = (trivial, &properness) {
        if m >= 2 && t {
            notes.push("inconsistency: proper with m >= 2 but trivial".into());
        }
        if m == 1 && !t {
            notes.push("inconsistency: biholomorphic but nontrivial".into());
        }
    }

    let max_resid = classes
        .iter()
        .flat_map(|c| c.member_indices.iter())
        .map(|_| 0.0)
        .fold(0.0f64, f64::max);
    let _ = max_resid;
    let report = VnaReport {
        problem: echo,
        properness: Some(properness),
        fiber_count: Some(m),
        classes: classes.iter().map(summarize_class).collect(),
        admissible_count,
        dim_vna,
        trivial,
        abelian,
        group: group.map(|g| GroupSummary {
            order: g.order,
            abelian: g.abelian,
            cyclic: g.cyclic,
            invariant_factors: g.invariant_factors.clone(),
            descriptor: g.descriptor.clone(),
        }),
        commutant_dims_by_n: commutant_dims,
        diagnostics: Diagnostics {
            seed: cfg.seed,
            fiber_residual_max: None,
            monodromy_loops: Some(action.loops_used),
            min_jacobian: Some(action.min_jacobian),
            commutant_stabilized: stabilized,
            generation_check,
            notes,
        },
        meta: meta_now(),
    };
    Ok(report)
}

fn restrict_to_support(m: &CMat, support: &[usize]) -> CMat {
    CMat::from_fn(support.len(), support.len(), |i, j| m[(support[i], support[j])])
}

fn summarize_class(c: &LocalInverseClass) -> ClassSummary {
    ClassSummary {
        members: c.member_indices.iter().map(|i| i + 1).collect(),
        admissibility: c.admissibility,
        symbolic_form: c.symbolic.as_ref().map(|s| s.formula()),
        is_identity: c.is_identity_class,
        witness: c.witness.clone(),
    }
}

fn decide_abelian(
    classes: &[LocalInverseClass],
    dim: usize,
    notes: &mut Vec<String>,
) -> AbelianVerdict {
    let adm: Vec<(usize, &LocalInverseClass)> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.admissibility == Admissibility::Admissible)
        .collect();
    if adm.is_empty() {
        return AbelianVerdict::Unknown;
    }
    if adm.len() == 1 {
        return AbelianVerdict::Yes;
    }
    if adm.iter().any(|(_, c)| c.symbolic.is_none()) {
        notes.push("abelianness undecided: some admissible class has no exact form".into());
        return AbelianVerdict::Unknown;
    }
    for i in 0..adm.len() {
        for j in i + 1..adm.len() {
            let a = adm[i].1.symbolic.as_ref().unwrap();
            let b = adm[j].1.symbolic.as_ref().unwrap();
            if classes_commute(a, b, dim).is_some() {
                return AbelianVerdict::No { witness_pair: (adm[i].0 + 1, adm[j].0 + 1) };
            }
        }
    }
    AbelianVerdict::Yes
}

/// Commutant-only classification for tuples without a square regular
/// Jacobian (single symbols, non-square tuples): sweep the truncation
/// degree and watch for stabilization or strict growth.
fn classify_by_commutant_only(
    cfg: &ProblemConfig,
    map: &PolyMap,
    domain: &Domain,
    echo: ProblemEcho,
    mut notes: Vec<String>,
) -> Result<VnaReport, ClassifyError> {
    let Some(bcfg) = &cfg.bergman else {
        return Err(ClassifyError::BadConfig(
            "a non-square tuple needs a bergman block to classify".into(),
        ));
    };
    let g = map.max_total_degree();
    let start = (2 * g).max(4);
    let mut ns = Vec::new();
    let mut n = start;
    while n <= bcfg.max_degree {
        ns.push(n);
        n += bcfg.step;
    }
    let mut entries = Vec::new();
    let mut dims = Vec::new();
    for n in ns {
        match BergmanModel::new(domain, n)
            .and_then(|model| commutant_dimension(&model, map.components(), true, g))
        {
            Ok(c) => {
                entries.push(CommutantDimEntry {
                    n,
                    dim: Some(c.dim),
                    singular_gap: Some(c.singular_gap),
                    status: "clean".into(),
                });
                dims.push(Some(c.dim));
            }
            Err(e) => {
                entries.push(CommutantDimEntry {
                    n,
                    dim: None,
                    singular_gap: None,
                    status: format!("{e}"),
                });
                dims.push(None);
            }
        }
    }
    let clean: Vec<usize> = dims.iter().flatten().copied().collect();
    let strictly_increasing =
        clean.len() >= 3 && clean.windows(2).all(|w| w[1] > w[0]);
    let stabilized = clean.len() >= 2 && clean[clean.len() - 1] == clean[clean.len() - 2];
    let dim_vna = if strictly_increasing {
        notes.push("no stabilization: dimension grows with the truncation degree".into());
        DimVna::Unbounded
    } else if stabilized {
        DimVna::Finite(clean[clean.len() - 1])
    } else {
        DimVna::Inconclusive
    };
    let trivial = match &dim_vna {
        DimVna::Finite(d) => Some(*d == 1),
        DimVna::Unbounded => Some(false),
        DimVna::Inconclusive => None,
    };
    Ok(VnaReport {
        problem: echo,
        properness: None,
        fiber_count: None,
        classes: vec![],
        admissible_count: None,
        dim_vna,
        trivial,
        abelian: AbelianVerdict::Unknown,
        group: None,
        commutant_dims_by_n: entries,
        diagnostics: Diagnostics {
            seed: cfg.seed,
            fiber_residual_max: None,
            monodromy_loops: None,
            min_jacobian: None,
            commutant_stabilized: Some(stabilized),
            generation_check: None,
            notes,
        },
        meta: meta_now(),
    })
}

fn meta_now() -> Meta {
    Meta {
        tool: "vna".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

/// Exact classification of the monomial pair (z1^k z2^l, z1^k' z2^l').
#[derive(Debug, Clone, Serialize)]
pub struct MonomialPairResult {
    pub determinant: i64,
    pub trivial: bool,
    pub dim: usize,
}

/// Brute force over the root-of-unity candidates derived from the exponent
/// identities w1^{j1} = z1^{j1}, w2^{j2} = z2^{j2}.
pub fn monomial_pair_classification(
    k: i64,
    l: i64,
    k2: i64,
    l2: i64,
) -> Result<MonomialPairResult, ClassifyError> {
    let det = k * l2 - k2 * l;
    if det == 0 {
        return Err(ClassifyError::ZeroDeterminant);
    }
    let d = det.unsigned_abs() as i64;
    let j1 = d / gcd64(l, l2).max(1);
    let j2 = d / gcd64(k, k2).max(1);
    // count pairs (p, q) with eps1 = e(p/j1), eps2 = e(q/j2) satisfying
    // eps1^k eps2^l = 1 and eps1^k' eps2^l' = 1
    let mut dim = 0usize;
    for p in 0..j1 {
        for q in 0..j2 {
            let c1 = k * p * j2 + l * q * j1;
            let c2 = k2 * p * j2 + l2 * q * j1;
            if c1.rem_euclid(j1 * j2) == 0 && c2.rem_euclid(j1 * j2) == 0 {
                dim += 1;
            }
        }
    }
    Ok(MonomialPairResult { determinant: det, trivial: d == 1, dim })
}

fn gcd64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd64(b, a % b)
    }
}

/// Before/after classification when closed balls are removed from the base
/// domain.
#[derive(Debug)]
pub struct DeformationOutcome {
    pub before: VnaReport,
    pub after: VnaReport,
    /// symbolic forms admissible before but not after
    pub collapsed_classes: Vec<String>,
}

pub fn deformation_experiment(
    cfg: &ProblemConfig,
    balls: &[ClosedBall],
) -> Result<DeformationOutcome, ClassifyError> {
    let base = cfg.domain.clone();
    let before = classify_vna(cfg)?;
    let diff = Domain::difference(base, balls.to_vec())?;
    let mut after_cfg = cfg.clone();
    after_cfg.domain = diff;
    after_cfg.bergman = None; // no orthogonal monomial basis on a difference domain
    let after = classify_vna(&after_cfg)?;

    if let (DimVna::Finite(db), DimVna::Finite(da)) = (&before.dim_vna, &after.dim_vna) {
        if da > db {
            return Err(ClassifyError::DeformationMonotonicity { before: *db, after: *da });
        }
    }
    let adm_forms = |r: &VnaReport| -> Vec<String> {
        r.classes
            .iter()
            .filter(|c| c.admissibility == Admissibility::Admissible)
            .filter_map(|c| c.symbolic_form.clone())
            .collect()
    };
    let before_forms = adm_forms(&before);
    let after_forms = adm_forms(&after);
    let collapsed = before_forms
        .into_iter()
        .filter(|f| !after_forms.contains(f))
        .collect();
    Ok(DeformationOutcome { before, after, collapsed_classes: collapsed })
}

/// Descriptor string for a deck group (wrapper around the table's own).
pub fn group_vna_structure(g: &crate::monodromy::GroupTable) -> String {
    g.descriptor.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_pair_identity() {
        let r = monomial_pair_classification(1, 0, 0, 1).unwrap();
        assert_eq!(r.determinant, 1);
        assert!(r.trivial);
        assert_eq!(r.dim, 1);
    }

    #[test]
    fn monomial_pair_det3() {
        let r = monomial_pair_classification(1, 2, 2, 1).unwrap();
        assert_eq!(r.determinant, -3);
        assert!(!r.trivial);
        assert_eq!(r.dim, 3);
    }

    #[test]
    fn monomial_pair_squares() {
        // eps1^2 = eps2^2 = 1: four sign pairs
        let r = monomial_pair_classification(2, 0, 0, 2).unwrap();
        assert_eq!(r.determinant, 4);
        assert!(!r.trivial);
        assert_eq!(r.dim, 4);
    }

    #[test]
    fn monomial_pair_rejects_degenerate() {
        assert!(matches!(
            monomial_pair_classification(1, 2, 2, 4),
            Err(ClassifyError::ZeroDeterminant)
        ));
    }

    #[test]
    fn trivial_iff_unimodular_on_grid() {
        for k in 0..=4i64 {
            for l in 0..=4i64 {
                for k2 in 0..=4i64 {
                    for l2 in 0..=4i64 {
                        let det = k * l2 - k2 * l;
                        if det == 0 {
                            continue;
                        }
                        let r = monomial_pair_classification(k, l, k2, l2).unwrap();
                        assert_eq!(r.trivial, det.abs() == 1, "({k},{l},{k2},{l2})");
                        assert_eq!(r.trivial, r.dim == 1, "dim consistency");
                    }
                }
            }
        }
    }

    #[test]
    fn image_without_interior_rejected() {
        // (p^2, p^3) for p = z1 z2 has identically vanishing Jacobian
        let cfg = ProblemConfig {
            map: vec!["z1^2*z2^2".into(), "z1^3*z2^3".into()],
            laurent: false,
            domain: Domain::ball(2),
            bergman: None,
            monodromy: None,
            seed: 7,
            deformation: None,
        };
        assert!(matches!(classify_vna(&cfg), Err(ClassifyError::ImageHasNoInterior)));
    }
}
