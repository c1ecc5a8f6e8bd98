//! Property checks shared by this crate's tests and the acceptance suite.

#![allow(dead_code)]

pub mod gates;
pub mod grid;
pub mod model;
pub mod strategies;
