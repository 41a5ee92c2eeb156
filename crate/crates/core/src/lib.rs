#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bench;
pub mod error;
pub mod grad;
pub mod linalg;
pub mod linf;
pub mod modal;
pub mod model;
pub mod optim;
pub mod rom;

pub use error::{Error, Result};
