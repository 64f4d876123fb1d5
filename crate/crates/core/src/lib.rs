pub mod asymptotic;
pub mod binomial;
pub mod edgeworth;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod io;
pub mod mixtures;
pub mod quadrature;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use mixtures::{Family, MixtureSpec};
