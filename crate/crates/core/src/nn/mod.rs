//! Dense numerics: MLPs with analytic gradients, optimizers, schedules,
//! losses, and the finite-difference gradient oracle.

pub mod gradcheck;
pub mod loss;
pub mod mlp;
pub mod optim;
pub mod params;
pub mod sched;

pub use gradcheck::finite_difference_check;
pub use loss::{l1_loss, mse_loss};
pub use mlp::{Activation, LinearLayer, Mlp, MlpCache};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{ParamCursor, ParamPack};
pub use sched::PlateauScheduler;
