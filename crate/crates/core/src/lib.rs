//! Certification of non-joint-measurability in routed Bell experiments.
//!
//! The core is generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64` or `f32`.

pub mod error;
pub mod inequalities;
pub mod jm;
pub mod linalg;
pub mod npa;
pub mod operator;
pub mod robustness;
pub mod scalar;
pub mod strategies;

pub use error::{Error, Result};
pub use inequalities::{
    bb84_n_score, chsh_n_score, critical_efficiency_closed_form, penalized_score, Family, Leg, PenalizedScore,
};
pub use jm::{
    beta_prime_threshold, build_jm_attack, c_operator, exhaustive_scan, gram_bound_scan, simulate_jm_model,
    CertificationReport, ClickPattern,
};
pub use operator::{elementwise_dominance_norm_check, gram_norm_bound, tensor, Pauli};
pub use robustness::{delta_bound, robust_eta_star, robust_eta_star_from_delta, robust_gram_bound, RobustnessInput};
pub use scalar::{alpha, beta, beta_prime, Real};
pub use strategies::{build_strategy, ideal_chsh_measurements, StrategyKind};

pub type Operator64 = operator::Operator<f64>;
pub type Operator32 = operator::Operator<f32>;
pub type PureState64 = operator::PureState<f64>;
pub type PureState32 = operator::PureState<f32>;
pub type RoutedStrategy64 = strategies::RoutedStrategy<f64>;
pub type RoutedStrategy32 = strategies::RoutedStrategy<f32>;
pub type RoutedCorrelation64 = strategies::RoutedCorrelation<f64>;
pub type RoutedCorrelation32 = strategies::RoutedCorrelation<f32>;
pub type MeasurementAssembly64 = strategies::MeasurementAssembly<f64>;
pub type PenalizedScore64 = inequalities::PenalizedScore<f64>;
pub type CertificationReport64 = jm::CertificationReport<f64>;
pub type ParentPovm64 = jm::ParentPovm<f64>;
