pub mod datagen;
pub mod float_core;
pub mod harness;
pub mod kernels;
pub mod parallel;
pub mod summation;
