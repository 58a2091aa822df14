//! Library of experiment formulations and analytic toys.

mod dataset;
mod fairness;
mod mnpc;
mod qp;
mod random;
mod synthetic;
mod toys;

pub use dataset::{complement_name, eo_mask_names, Dataset, COMPLEMENT_PREFIX};
pub use fairness::{
    make_fairness_logistic, make_intersectional, sigmoid, ConstraintKind, EoFormulation, FairnessConfig,
    DEFAULT_RADIUS, DEFAULT_TOLERANCE_C,
};
pub use mnpc::{make_mnpc_linear, phi, MnpcData, MNPC_FEATURES};
pub use qp::{make_nonconvex_qp, qp_data, QpData, QP_MAX_CONSTRAINTS, QP_MAX_DIM, QP_ORIGIN_VALUE};
pub use synthetic::{synthetic_fairness_dataset, SYNTHETIC_FEATURES, SYNTHETIC_GROUP};
pub use toys::{
    disk_kkt_point, make_curved_toy, make_disk_problem, make_inactive_toy, make_line_toy, CurvedToySubproblem,
    LineToySubproblem,
};
