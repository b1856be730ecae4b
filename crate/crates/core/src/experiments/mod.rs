//! Synthetic data, noise injection, rank statistics and the benchmark runner.

pub mod noise;
pub mod protocol;
pub mod stats;
pub mod synth;

pub use noise::{add_feature_noise, flip_labels, inject_outliers, OutlierTarget};
pub use protocol::{run_bench, BenchConfig, BenchOutput, BenchRow, NoiseSetting, BENCH_SCHEME};
pub use stats::{
    average_ranks, cd_diagram_data, friedman_chi2, friedman_f, nemenyi_cd, nemenyi_q, CdDiagram, FriedmanReport,
    RankTable, ScoreMatrix,
};
pub use synth::{bayes_margin, boundary_angle, gen_gaussian_2class, true_bayes_margin, SynthSpec};
