pub mod bench;
pub mod checks;
pub mod error;
pub mod model;
pub mod oracle;
pub mod solvers;
pub mod subqp;
