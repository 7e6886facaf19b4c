//! Simulation and verification of mixed renewal processes.
//!
//! A mixed renewal process draws a parameter `Θ` from a mixing law and then runs a
//! renewal process whose interarrival law is `K(h(Θ))`. The crate simulates such
//! processes reproducibly and checks, statistically and by quadrature, whether a model
//! has the multinomial property, the Markov property, or is a mixed Poisson process.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod config;
pub mod disintegration;
pub mod error;
pub mod kernels;
pub mod numeric;
pub mod process;
pub mod properties;
pub mod rng;
pub mod stats;

pub use config::{parse_model, Preset};
pub use disintegration::{
    check_consistency, kernel_equality_check, kernel_equality_check_with_sampler, reparameterize,
    sample_ensemble, ConsistencyReport, EventAtom, KernelEqualityReport, MrpModel, PathEnsemble,
    PathEvent,
};
pub use error::{MrpError, Result};
pub use kernels::{Excluded, InterarrivalKernel, MapForm, MixingLaw, ParameterMap};
pub use process::{build_path, ArrivalPath, PartitionQuery};
pub use properties::{
    integral_identities_check, markov_test, mpp_check, multinomial_rhs, multinomial_test,
    regularity_check, theorem_verdict, Decision, IdentityReport, MppReport, RegularityReport,
    TestReport, TesterConfig, VerdictConfig, VerdictOutcome, VerdictReport,
};
pub use rng::{substream, Stream};
