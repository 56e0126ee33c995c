//! Co-selection network: selection matrix, pair counts, cosine similarity,
//! thresholded graph and greedy modularity communities.

mod community;
mod graph;
mod matrix;
mod sweep;

pub use community::{
    greedy_communities, modularity_of, Community, CommunityPartition, CommunitySet,
};
pub use graph::{build_graph, graph_from_counts, CoSelectionGraph, Edge};
pub use matrix::{
    build_selection_matrix, coselection_counts, cosine_matrix, CoSelectionCounts, SelectionMatrix,
};
pub use sweep::{
    parse_cos_grid, parse_occ_grid, save_sweep_tsv, threshold_sweep, write_sweep_tsv, SweepRow,
};
