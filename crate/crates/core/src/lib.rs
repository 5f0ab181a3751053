//! Exact TBR, replug and unrooted SPR distances between binary phylogenetic
//! trees.

pub mod batch;
pub mod eaf;
pub mod error;
pub mod forest;
pub mod generate;
pub mod maf;
pub mod matching;
pub mod moves;
pub mod newick;
pub mod oracle;
pub mod reduce;
pub mod search;
pub mod tree;

pub use error::{Error, Result};
pub use forest::{EndpointEdge, NodeLabel, PhyloForest};
pub use newick::{canonical_form, parse_newick, to_newick};
pub use tree::{harmonize, CanonKey, TaxonSet, UTree};
