pub mod darboux;
pub mod fields;
pub mod miura;
pub mod jets;
pub mod residuals;
pub mod scenario;
pub mod solitons;
