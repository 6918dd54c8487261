pub mod airy;
pub mod bessel;
pub mod error;
pub mod field;
pub mod forward;
pub mod fourier;
pub mod geometry;
pub mod metrics;
pub mod objects;
pub mod pgm;
pub mod pupil;
pub mod recon;
pub mod report;
pub mod stack_io;
