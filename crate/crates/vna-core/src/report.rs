//! Report data model: JSON-stable field names, deterministic serialization
//! (timestamps live in a separate metadata field), and a Markdown renderer.

use crate::domain::Domain;
use crate::fiber::Properness;
use crate::monodromy::{Admissibility, Witness};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ProblemEcho {
    pub map: Vec<String>,
    pub domain: Domain,
    pub laurent: bool,
    pub seed: u64,
    pub bergman: Option<BergmanConfigEcho>,
    pub monodromy: MonodromyConfigEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct BergmanConfigEcho {
    pub max_degree: i32,
    pub step: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyConfigEcho {
    pub max_loops: usize,
    pub stall: usize,
    pub samples: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    /// 1-based fiber labels; label 1 is the base point itself
    pub members: Vec<usize>,
    pub admissibility: Admissibility,
    pub symbolic_form: Option<String>,
    pub is_identity: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum DimVna {
    Finite(usize),
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum AbelianVerdict {
    Yes,
    No { witness_pair: (usize, usize) },
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub order: usize,
    pub abelian: bool,
    pub cyclic: bool,
    pub invariant_factors: Option<Vec<usize>>,
    pub descriptor: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutantDimEntry {
    pub n: i32,
    pub dim: Option<usize>,
    pub singular_gap: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub seed: u64,
    pub fiber_residual_max: Option<f64>,
    pub monodromy_loops: Option<usize>,
    pub min_jacobian: Option<f64>,
    pub commutant_stabilized: Option<bool>,
    pub generation_check: Option<bool>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    /// excluded from determinism comparisons
    pub timestamp_unix: u64,
}

/// Final classification of V*(Φ, Ω).
#[derive(Debug, Clone, Serialize)]
pub struct VnaReport {
    pub problem: ProblemEcho,
    pub properness: Option<Properness>,
    pub fiber_count: Option<usize>,
    pub classes: Vec<ClassSummary>,
    pub admissible_count: Option<usize>,
    pub dim_vna: DimVna,
    pub trivial: Option<bool>,
    pub abelian: AbelianVerdict,
    pub group: Option<GroupSummary>,
    pub commutant_dims_by_n: Vec<CommutantDimEntry>,
    pub diagnostics: Diagnostics,
    pub meta: Meta,
}

impl VnaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn has_inconclusive(&self) -> bool {
        self.dim_vna == DimVna::Inconclusive
            || matches!(self.properness, Some(Properness::Inconclusive))
            || matches!(self.abelian, AbelianVerdict::Unknown)
            || self
                .classes
                .iter()
                .any(|c| c.admissibility == Admissibility::Inconclusive)
    }

    pub fn to_markdown(&self, title: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!("# Classification report: {}\n\n", title));
        s.push_str(&format!(
            "Symbol tuple `{}` over `{}`.\n\n",
            self.problem.map.join(", "),
            domain_name(&self.problem.domain)
        ));
        s.push_str("## Verdicts\n\n");
        s.push_str(&format!("- properness: {}\n", properness_str(&self.properness)));
        if let Some(m) = self.fiber_count {
            s.push_str(&format!("- generic fiber count m = {}\n", m));
        }
        if let Some(a) = self.admissible_count {
            s.push_str(&format!("- admissible classes: {}\n", a));
        }
        s.push_str(&format!("- dim V* = {}\n", dim_str(&self.dim_vna)));
        if let Some(t) = self.trivial {
            s.push_str(&format!("- trivial: {}\n", t));
        }
        s.push_str(&format!("- abelian: {}\n", abelian_str(&self.abelian)));
        if let Some(g) = &self.group {
            s.push_str(&format!("- deck group: {}\n", g.descriptor));
        }
        s.push_str("\n## Local inverse classes\n\n");
        for (i, c) in self.classes.iter().enumerate() {
            let form = c.symbolic_form.clone().unwrap_or_else(|| "numeric".into());
            s.push_str(&format!(
                "{}. members {:?} — {:?} — {}{}\n",
                i + 1,
                c.members,
                c.admissibility,
                form,
                if c.is_identity { " (identity)" } else { "" }
            ));
        }
        if !self.commutant_dims_by_n.is_empty() {
            s.push_str("\n## Truncated commutant dimensions\n\n");
            s.push_str("| N | dim | gap | status |\n|---|-----|-----|--------|\n");
            for e in &self.commutant_dims_by_n {
                s.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    e.n,
                    e.dim.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
                    e.singular_gap
                        .map(|g| format!("{:.2e}", g))
                        .unwrap_or_else(|| "-".into()),
                    e.status
                ));
            }
        }
        if !self.diagnostics.notes.is_empty() {
            s.push_str("\n## Notes\n\n");
            for n in &self.diagnostics.notes {
                s.push_str(&format!("- {}\n", n));
            }
        }
        s.push_str(
            "\n## Glossary\n\n\
             - The classified algebra is the set of bounded operators commuting \
             with every multiplication operator of the tuple and with every \
             adjoint; its orthogonal projections correspond to the joint \
             reducing subspaces.\n\
             - A local inverse is a holomorphic map ρ with Φ∘ρ = Φ; an \
             equivalence class is an analytic-continuation orbit, realized \
             here as a monodromy orbit of fiber points.\n\
             - Removing a compact subset from a domain of dimension ≥ 2 leaves \
             the non-self-adjoint commutant unchanged (every holomorphic \
             function extends across the hole), while the self-adjoint \
             algebra classified here can collapse; the deformation experiment \
             quantifies that collapse.\n\
             - No orthogonal monomial basis exists on difference domains, so \
             those runs are decided by admissibility alone.\n",
        );
        s
    }
}

fn domain_name(d: &Domain) -> String {
    match d {
        Domain::Polydisk { dim } => format!("polydisk D^{}", dim),
        Domain::Ball { dim } => format!("ball B_{}", dim),
        Domain::Annulus { r } => format!("annulus {} < |z| < {}", r, 1.0 / r),
        Domain::Difference { base, removed_balls } => {
            format!("{} minus {} closed ball(s)", domain_name(base), removed_balls.len())
        }
    }
}

fn properness_str(p: &Option<Properness>) -> String {
    match p {
        None => "not computed".into(),
        Some(Properness::Proper) => "Proper".into(),
        Some(Properness::NotProper { .. }) => "NotProper (witness recorded)".into(),
        Some(Properness::Inconclusive) => "Inconclusive".into(),
    }
}

fn dim_str(d: &DimVna) -> String {
    match d {
        DimVna::Finite(n) => n.to_string(),
        DimVna::Unbounded => "Unbounded".into(),
        DimVna::Inconclusive => "Inconclusive".into(),
    }
}

fn abelian_str(a: &AbelianVerdict) -> String {
    match a {
        AbelianVerdict::Yes => "Yes".into(),
        AbelianVerdict::No { witness_pair } => {
            format!("No (classes {} and {} do not commute)", witness_pair.0, witness_pair.1)
        }
        AbelianVerdict::Unknown => "Unknown".into(),
    }
}
