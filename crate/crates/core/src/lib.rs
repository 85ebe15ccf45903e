pub mod analytics;
pub mod error;
pub mod interferometer;
pub mod matcore;
pub mod montecarlo;
pub mod nocount;
pub mod noisemodel;
