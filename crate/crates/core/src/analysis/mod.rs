//! Latent-space smoothness probes, tradeoff fronts, network splitting and
//! compression, and tabular reports.

mod compress;
mod pareto;
mod pca;
mod report;
mod smoothness;

pub use compress::{compose, compress, split_mlp, CompressConfig, Compressed, FidelityReport, PartFidelity};
pub use pareto::{pareto_front, TradeoffPoint};
pub use pca::{canonical_sign, pca_top2, Pca, PCA_MAX_ITERS, PCA_TOLERANCE};
pub use report::{write_pareto_csv, write_summary_csv, ReportRow};
pub use smoothness::{smoothness_probe, ProbeConfig, SmoothnessGrid};
