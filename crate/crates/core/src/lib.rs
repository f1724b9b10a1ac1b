//! Supervised feature scaling for spectral clustering and classification.
//!
//! Per-feature scaling factors are learned from partially labelled data by
//! solving an eigenproblem of a rectangular linear matrix pencil. The
//! rescaled data are then embedded with the generalized Laplacian
//! eigenproblem and clustered (k-means) or classified (1-NN).
//!
//! Module map:
//!
//! * [`numkernel`]: dense symmetric-definite and rectangular-pencil eigensolvers
//! * [`simgraph`]: k-NN Gaussian similarity graphs and Laplacians
//! * [`specembed`]: spectral embedding and the Ncut objective
//! * [`fscale`]: Fiedler estimation, pencil assembly, scaling factors
//! * [`downstream`]: k-means with restarts and 1-NN classification
//! * [`metrics`]: accuracy-style RI and binary NMI
//! * [`dataio`]: toy generator, delimited-text I/O, standardization, splits
//! * [`experiment`]: the end-to-end harness behind the `specscale` binary

pub mod dataio;
pub mod downstream;
pub mod error;
pub mod experiment;
pub mod fscale;
pub mod metrics;
pub mod numkernel;
pub mod simgraph;
pub mod specembed;

pub use error::{Error, Result};
