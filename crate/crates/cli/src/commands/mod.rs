//! One module per subcommand. Each `cmd_*` returns its results so callers
//! (and tests) can use them without touching stdout.

pub mod assess;
pub mod evaluate;
pub mod extract;
pub mod fixtures;

pub use assess::{cmd_assess, AssessOutput, AssessmentReport};
pub use evaluate::{cmd_evaluate, evaluate_table, EvaluateOutput, MetricsDocument};
pub use extract::{
    check_failure_rate, cmd_extract, extract_features, parse_features_csv, FeatureRow, FeatureTable, FEATURES_HEADER,
};
pub use fixtures::{cmd_make_fixtures, cmd_subset, save_manifest, write_fixtures, FixtureSet, FIXTURE_MANIFEST};
