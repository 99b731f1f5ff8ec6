//! Split-step Numerov-Crank-Nicolson solver for the time-dependent
//! Schrödinger equation on a strip, with discrete transparent boundary
//! conditions in `x` and a sine transform in `y`.
//!
//! ```
//! use strip_tbc::{presets, stepper};
//!
//! let config = presets::example_a().with_counts(200, 16, 20);
//! let report = stepper::run(&config).unwrap();
//! assert_eq!(report.norms.len(), 21);
//! assert!(report.max_l2() <= report.norms[0].l2 * (1.0 + 1e-8));
//! ```

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod mesh;
pub mod physics;
pub mod presets;
pub mod sine_transform;
pub mod stepper;
pub mod tbc_kernel;

pub use config::{parse_config, Direction, RunConfig, StudyConfig};
pub use diagnostics::{refinement_study, RatioTable, RunReport};
pub use error::{Error, Result};
pub use mesh::{build_grid, Geometry, GridSpec, NormWeighting, WaveField};
pub use physics::{gaussian_packet, mesh_potential, MeshPotential, PacketParams, PhysicsParams, PotentialSpec};
pub use sine_transform::{dst_forward, dst_inverse, eigenvalues, SineTransform, TransformKind};
pub use stepper::{run, Problem, SimulationState};
pub use tbc_kernel::{mode_coefficients, Kernel, ModeCoefficients, ModeTbc, TbcState};
