pub mod eigen;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod lemma;
pub mod metrics;
pub mod model;
pub mod sparse;
pub mod tape;
pub mod trainer;
