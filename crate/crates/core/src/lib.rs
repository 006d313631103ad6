pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod numeric;

pub use error::{Error, Result};
pub mod cli;
pub mod closed_form;
pub mod oracle;
pub mod state;
pub mod timescales;
