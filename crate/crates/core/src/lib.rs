//! Multiresolution analysis toolkit: orthonormal wavelet families, wavelet
//! expansions and projections, projection-kernel majorants, pointwise and
//! sup-norm convergence rates, Sobolev-type rate criteria and best `L²`
//! spline approximation.
//!
//! Everything numerical is generic over a [`Real`] scalar (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bspline;
pub mod convergence;
pub mod error;
pub mod expansion;
pub mod export;
pub mod families;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod sobolev;
pub mod spline;
pub mod suite;

pub use convergence::{
    builtin_suite, lp_error_trace, order_robustness, pointwise_trace, sup_error_rates, MarkedPoint,
    Norm, PointKind, TestFunction, TestFunctionId,
};
pub use error::{Error, Result};
pub use expansion::{analyze, partial_sum, project, validate_schedule, SummationSchedule, Term};
pub use families::{make_family, make_family_at, FamilyName, FamilySpec, DEFAULT_LEVEL};
pub use grid::{inner_product, DecayHint, Interpolation};
pub use kernel::{fit_decay, kernel_matrix, radial_profile, verify_convolution_bound, DecayModel};
pub use scalar::Real;
pub use sobolev::{
    critical_order, fourier_transform, scaling_critical_order, wavelet_criterion, CriterionKind,
};
pub use spline::{best_l2_spline, gram_matrix, spline_convergence_study};
pub use suite::{run_suite, SuiteConfig, SuiteReport};

pub type DyadicGrid = grid::DyadicGrid<f64>;
pub type SampledFunction = grid::SampledFunction<f64>;
pub type MraFamily = families::MraFamily<f64>;
pub type FilterPair = families::filter::FilterPair<f64>;
pub type InvariantReport = families::InvariantReport<f64>;
pub type ExpansionCoefficients = expansion::ExpansionCoefficients<f64>;
pub type Projection<'a> = expansion::Projection<'a, f64>;
pub type KernelEvaluation = kernel::KernelEvaluation<f64>;
pub type RadialBound = kernel::RadialBound<f64>;
pub type ConvolutionBoundReport = kernel::ConvolutionBoundReport<f64>;
pub type DecayFit = kernel::DecayFit<f64>;
pub type Target = convergence::Target<f64>;
pub type RateReport = convergence::RateReport<f64>;
pub type RobustnessReport = convergence::RobustnessReport<f64>;
pub type SampledSpectrum = sobolev::SampledSpectrum<f64>;
pub type IntegralResult = sobolev::IntegralResult<f64>;
pub type CriticalOrder = sobolev::CriticalOrder<f64>;
pub type SplineSpace = spline::SplineSpace<f64>;
pub type SplineApproximation = spline::SplineApproximation<f64>;
