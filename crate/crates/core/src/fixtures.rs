//! Built-in railway ontology and the worked-example documents that ship
//! with the crate.

use crate::ontology::Ontology;

pub const RAILWAY_ONTOLOGY: &str = include_str!("../fixtures/railway.ont");
pub const SOM_REQUIREMENT: &str = include_str!("../fixtures/som_requirement.txt");
pub const SOM_SCENARIO: &str = include_str!("../fixtures/som_scenario.txt");
pub const LINKING_TEST_DESCRIPTION: &str = include_str!("../fixtures/linking_test_description.txt");
pub const SOM_SCRIPT: &str = include_str!("../fixtures/som_script.ts");
/// Start-of-mission log with the individuals named in the checks.
pub const SOM_FAILED_LOG: &str = include_str!("../fixtures/som_failed.log");
/// The same log with class names in the final checks.
pub const SOM_FAILED_CASESTUDY_LOG: &str = include_str!("../fixtures/som_failed_casestudy.log");
pub const SIMILAR_FAILURE_LOG: &str = include_str!("../fixtures/similar_failure.log");

pub fn railway_ontology() -> Ontology {
    Ontology::load(RAILWAY_ONTOLOGY).expect("shipped railway ontology is valid")
}
