pub mod analysis;
pub mod coefficients;
pub mod config;
pub mod grid;
pub mod kernel;
pub mod mcf;
pub mod noise;
pub mod nonlinearity;
pub mod output;
pub mod plot;
pub mod quad;
pub mod runner;
pub mod solver;
