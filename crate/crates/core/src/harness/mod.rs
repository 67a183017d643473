//! Experiment configuration, orchestration, verification suite, and export:
//! the reproducibility surface over the numerical modules.

pub mod config;
pub mod lemmas;
pub mod run;
pub mod svg;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, ResolvedConfig};
pub use lemmas::{lemma_suite, lemma_suite_with, LemmaSuiteConfig, LemmaSuiteReport};
pub use run::{regenerate_plots, run_experiment, RunArtifacts};
pub use svg::{export_svg_lines, render_svg_lines, CurveSet, SvgOptions};
