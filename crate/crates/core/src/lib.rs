//! Continuous-variable entanglement in χ⁽²⁾ waveguide arrays.
//!
//! The pipeline runs from the linear supermodes of a coupled array through
//! the joint spatio-spectral amplitude (JSSA), its Takagi factorization and
//! the resulting Bogoliubov transform, to the covariance matrix and the
//! complex graph `Z` of the output Gaussian state.

pub mod decomp;
pub mod dispersion;
pub mod error;
pub mod graph;
pub mod jssa;
pub mod lattice;
pub mod linalg;
pub mod propagate;
pub mod quadrature;
pub mod spectral;

pub use decomp::{gains, takagi, GainSpectrum, TakagiFactors};
pub use error::{Error, Result};
pub use graph::{
    classify_edges, covariance, graph_z, idler_rotation, to_symplectic, CovarianceMatrix, EdgeKind,
    EdgeReport, GraphState, SymplecticMatrix, Topology,
};
pub use jssa::{
    build_jssa_full, build_jssa_separable, eta_project, narrowband_jssa, ConstantSampler, EtaProjection,
    Jssa, JssaModel, NarrowbandSampler,
};
pub use lattice::{build_coupling_matrix, diagonalize_lattice, LatticeSpec, ModeIndexMap, SupermodeBasis};
pub use linalg::{CMatrix, RMatrix};
pub use propagate::{
    flat_pump_solution, flat_pump_solution_with_phase, low_gain_bogoliubov, ode_oracle, slow_to_lab,
    BogoliubovTransform, CouplingSampler, Frame, OdeSettings,
};
pub use spectral::{
    make_frexels, FrexelBasis, PhaseMatching, PumpSpectrum, QuadratureOptions, SpatialPumpProfile,
};
