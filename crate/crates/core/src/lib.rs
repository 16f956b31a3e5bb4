//! Worm-algorithm Monte Carlo decoding of matchable detector error models.
//!
//! The pipeline is: parse a [`dem::DetectorErrorModel`], build its
//! [`graph::DecodingGraph`], pick a reference chain for the observed syndrome,
//! sample cycles of the reweighted graph with one of the [`worm`] chains, and
//! let [`decoder::decode`] pick the most populated logical class.
//!
//! ```
//! use worm_decoder::{decode, parse_dem, DecodeConfig, DecodingGraph, Variant};
//!
//! let model = parse_dem("error(0.1) D0 L0\nerror(0.1) D0 D1\nerror(0.1) D1\n")?;
//! let graph = DecodingGraph::from_dem(&model)?;
//! let cfg = DecodeConfig { n_samples: 2000, variant: Variant::Directed, seed: 7, ..Default::default() };
//! let result = decode(&graph, &[true, true], &cfg)?;
//! assert_eq!(result.recovery.edges(), vec![1]);
//! assert!(result.p_succ_estimate > 0.5);
//! # Ok::<(), worm_decoder::Error>(())
//! ```

pub mod bench;
pub mod bits;
pub mod codes;
pub mod correlated;
pub mod decoder;
pub mod dem;
pub mod error;
pub mod graph;
pub mod matching;
pub mod oracle;
pub mod stats;
pub mod worm;

pub use decoder::{decode, DecodeConfig, DecodeResult};
pub use dem::{parse_dem, DetectorErrorModel};
pub use error::{Error, Result};
pub use graph::{Chain, DecodingGraph, LogicalClass};
pub use worm::{reweight, ReweightedGraph, Variant};
