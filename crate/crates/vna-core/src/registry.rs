//! Registry of named example problems used by the CLI and the acceptance
//! suite. Every entry is a ready-to-run configuration with a short note on
//! the expected outcome.

use crate::classify::{BergmanConfig, DeformationBlock, MonodromySettings, ProblemConfig};
use crate::domain::{ClosedBall, Domain};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ProblemConfig,
}

pub fn example_registry() -> Vec<RegistryEntry> {
    let mono = MonodromySettings::default();
    vec![
        RegistryEntry {
            name: "nonabel",
            summary: "(z1^2+z2^2, z1^2 z2^2) on the bidisk: eight admissible \
                      coordinate classes, nonabelian deck group of order 8, dim 8",
            config: ProblemConfig {
                map: vec!["z1^2+z2^2".into(), "z1^2*z2^2".into()],
                laurent: false,
                domain: Domain::polydisk(2),
                bergman: Some(BergmanConfig { max_degree: 12, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "dim3",
            summary: "(z1 z2^2, z1+z2^2) on the bidisk: three admissible classes \
                      (one branch pair), dim 3, abelian",
            config: ProblemConfig {
                map: vec!["z1*z2^2".into(), "z1+z2^2".into()],
                laurent: false,
                domain: Domain::polydisk(2),
                bergman: Some(BergmanConfig { max_degree: 10, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "twelve",
            summary: "(z1^2 z2^4, z1^2+z2^4) on the bidisk: sixteen branches in \
                      twelve classes, nonabelian; on the ball only eight classes \
                      survive and the deck group is Z2 x Z4",
            config: ProblemConfig {
                map: vec!["z1^2*z2^4".into(), "z1^2+z2^4".into()],
                laurent: false,
                domain: Domain::polydisk(2),
                bergman: Some(BergmanConfig { max_degree: 12, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "monomial_pair",
            summary: "(z1 z2^2, z1^2 z2) on the bidisk: exponent determinant -3, \
                      three root-of-unity coordinate classes",
            config: ProblemConfig {
                map: vec!["z1*z2^2".into(), "z1^2*z2".into()],
                laurent: false,
                domain: Domain::polydisk(2),
                bergman: Some(BergmanConfig { max_degree: 10, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "symmetric3",
            summary: "elementary symmetric functions on the tridisk: deck group \
                      S3, six singleton classes, nonabelian",
            config: ProblemConfig {
                map: vec![
                    "z1+z2+z3".into(),
                    "z1*z2+z1*z3+z2*z3".into(),
                    "z1*z2*z3".into(),
                ],
                laurent: false,
                domain: Domain::polydisk(3),
                // the 3-variable truncation grows too fast for a useful
                // stabilization sweep; the class count already decides
                bergman: None,
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "zhukovski",
            summary: "(z + 1/z)/2 on the annulus r = 1/2: classes {id}, {1/z}, \
                      dim 2, abelian",
            config: ProblemConfig {
                map: vec!["0.5*z+0.5*z^-1".into()],
                laurent: true,
                domain: Domain::Annulus { r: 0.5 },
                bergman: Some(BergmanConfig { max_degree: 12, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "interior",
            summary: "single symbol z1 z2 on the ball: truncated dimensions grow \
                      without stabilizing; expected verdict Unbounded",
            config: ProblemConfig {
                map: vec!["z1*z2".into()],
                laurent: false,
                domain: Domain::ball(2),
                bergman: Some(BergmanConfig { max_degree: 10, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: None,
            },
        },
        RegistryEntry {
            name: "counter1",
            summary: "remove the closed ball of radius 1/100 at (1/2, i/2) from \
                      the bidisk under (z1^2+z2^2, z1^2 z2^2): only the identity \
                      class stays admissible",
            config: ProblemConfig {
                map: vec!["z1^2+z2^2".into(), "z1^2*z2^2".into()],
                laurent: false,
                domain: Domain::polydisk(2),
                bergman: Some(BergmanConfig { max_degree: 12, step: 2 }),
                monodromy: Some(mono.clone()),
                seed: 42,
                deformation: Some(DeformationBlock {
                    removed_balls: vec![ClosedBall {
                        center: vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)],
                        radius: 0.01,
                    }],
                }),
            },
        },
        RegistryEntry {
            name: "power_n",
            summary: "z^4 on the disk: cyclic deck group of order 4, dim 4",
            config: ProblemConfig {
                map: vec!["z^4".into()],
                laurent: false,
                domain: Domain::polydisk(1),
                bergman: Some(BergmanConfig { max_degree: 12, step: 2 }),
                monodromy: Some(mono),
                seed: 42,
                deformation: None,
            },
        },
    ]
}

pub fn find(name: &str) -> Option<RegistryEntry> {
    example_registry().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_configs_validate() {
        for e in example_registry() {
            e.config.validate().unwrap_or_else(|err| {
                panic!("registry entry {} invalid: {err}", e.name);
            });
        }
    }

    #[test]
    fn registry_lookup() {
        assert!(find("zhukovski").is_some());
        assert!(find("nope").is_none());
        let z = find("zhukovski").unwrap();
        assert!(matches!(z.config.domain, Domain::Annulus { r } if r == 0.5));
        let c = find("counter1").unwrap();
        assert!(c.config.deformation.is_some());
    }
}
