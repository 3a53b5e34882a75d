//! Multi-view kernel completion.
//!
//! Given `M` kernel matrices over the same `N` samples, where each view is
//! missing entire rows and columns for a different subset of samples, the
//! solvers in [`solvers`] jointly complete every view. Information flows
//! within a view through sparse reconstruction weights (each sample's
//! feature map is rebuilt from a few known samples) and between views
//! through convex combinations of the other views' kernels or weights.
//!
//! All numerical code is generic over the scalar type through [`Scalar`];
//! the `*64` / `*32` aliases at the crate root fix the precision.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernel;
pub mod numerics;
pub mod scalar;
pub mod solvers;
pub mod synth;

pub use dataset::MultiViewDataset;
pub use error::{MkcError, Result};
pub use kernel::{KernelKind, KernelMatrix, ObservedKernel, ViewMask};
pub use scalar::Scalar;
pub use solvers::{CompletionResult, KernelCombinationWeights, Method, SolverConfig};

pub type KernelMatrix64 = KernelMatrix<f64>;
pub type KernelMatrix32 = KernelMatrix<f32>;
pub type ObservedKernel64 = ObservedKernel<f64>;
pub type Dataset64 = MultiViewDataset<f64>;
pub type Dataset32 = MultiViewDataset<f32>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type CompletionResult64 = CompletionResult<f64>;
pub type CompletionResult32 = CompletionResult<f32>;
