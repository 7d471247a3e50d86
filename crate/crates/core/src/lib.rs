//! Four-dimensional real Lie algebras, their phase-space and group
//! realizations, and a numerical audit of the integrable systems they
//! generate.

pub mod algebra;
pub mod catalog;
pub mod dynamics;
pub mod expr;
pub mod params;
pub mod poisson;
pub mod verify;

pub use algebra::{get_algebra, jacobi_defect, AlgebraError, LieAlgebra};
pub use catalog::{
    get_system, list_systems, load_catalog_file, Catalog, CatalogError, ClaimedClass, System,
    SystemInfo, SystemKind, Variant,
};
pub use dynamics::{
    drift_report, integrate, vector_field, Drift, DynamicsError, Method, Trajectory,
};
pub use expr::sample::{equal_on_samples, Comparison, SampleError, SampleOptions, SamplingDomain};
pub use expr::{parse, parse_with, EvalError, Expr, ParseContext, ParseError, Point};
pub use params::{ParamError, Params};
pub use poisson::{
    bivector_bracket, canonical_bracket, jacobi_defect_bivector, CanonicalStructure,
    PoissonBivector, PoissonStructure,
};
pub use verify::{
    classify, independence_rank, verify_catalog, verify_system, Class, Report, VerifyOptions,
};
