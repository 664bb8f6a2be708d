pub mod batch;
pub mod platoon;
pub mod repro;
pub mod run;
pub mod stability;

pub use batch::cmd_batch;
pub use platoon::cmd_platoon;
pub use repro::cmd_repro;
pub use run::cmd_run;
pub use stability::cmd_stability;
