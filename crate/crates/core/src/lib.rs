pub mod error;
pub mod numeric;
pub mod poly;
pub mod wavelet;
pub mod cwt;
pub mod leaders;
pub mod exponent;
pub mod pulse;
pub mod spectrum;
pub mod pulse_analysis;
pub mod acceptance;
pub mod cli;
