//! Alphabet, weights, orders and the kernel families.

pub mod orders;
pub mod params;
pub mod partition;
pub mod spec;
pub mod symbol;
pub mod table;
pub mod weights;

pub use orders::{Order, OrderFormula, OrderSequence};
pub use params::{ModelParams, WindowConvention};
pub use partition::{build_partition, build_primed_partition, Action, Cell, CellLabel, CompiledPartition, IntervalPartition};
pub use spec::{bk_eval_bounded, kernel_eval, majority_eval, majority_eval_with, FiniteKernel, KernelSpec, Mixture};
pub use symbol::{Context, Spin};
pub use table::TableKernel;
pub use weights::{GeometricTail, WeightFamily};
