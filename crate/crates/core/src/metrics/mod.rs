//! Operator norms, embedding defects, Banach–Mazur bounds and ε-nets.

pub mod bm_lower;
pub mod defect;
pub mod net;
pub mod opnorm;
pub mod search;

pub use bm_lower::{lower_bound_2d, LowerBound};
pub use defect::{
    dual_functional_norms, embedding_defect, k_equivalent, perturbation_bound, EmbeddingCertificate, Exactness,
    KVerdict, PerturbationBound, STRICT_TOL,
};
pub use net::{epsilon_net, EpsilonNet, NetMember, DEFAULT_NET_BUDGET};
pub use opnorm::{min_gain, min_gain_of, operator_norm, operator_norm_of, Bound, Method};
pub use search::{balance, banach_mazur, best_embedding, BanachMazur};
