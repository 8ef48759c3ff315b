//! Exact degeneracy diagnostics for exponential random graph models and the
//! locally spherical generation pipeline (neighborhood walk, spherical
//! embedding, von Mises-Fisher mixture, Metropolis-Hastings sampling).

pub mod embed;
pub mod ergm;
pub mod error;
pub mod features;
pub mod gof;
pub mod graph;
pub mod hull;
pub mod linalg;
pub mod mixture;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod space;
pub mod vmf;

pub use embed::{out_of_sample, spherical_embedding, Embedding, Placement};
pub use ergm::{degeneracy_report, DegeneracyReport};
pub use error::{Error, Result};
pub use features::{feature_vector, FeatureSpec, FeatureTerm, FeatureVector};
pub use gof::{summarize, GofStats, GofSummary};
pub use graph::{
    canonical_form, format_edge_list, hamming_distance, make_graph, parse_edge_list,
    random_walk_neighborhood, toggle_edge, CanonicalCode, Graph, Neighborhood, WalkOptions,
};
pub use mixture::{fit_pi, FitOptions, FitResult, MixtureModel};
pub use pipeline::{
    baseline_from_atoms, generate_run, kl_trace_csv, GenerateConfig, GenerateOutcome, RunManifest,
};
pub use sampler::{
    direct_sample, mcmc_dp_sample, mh_sample, ChainState, DpOptions, DpOutcome, DpRunReport,
    MhOptions,
};
pub use space::{
    cell_diameter, diameters_to_csv, enumerate_iso_classes, enumerate_labeled, EnumOptions,
    FeatureSpace, IsoAtlas,
};
pub use vmf::{vmf_sample, VmfParams};
