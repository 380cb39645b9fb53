#![allow(dead_code)]

pub mod cases;
pub mod mle;
pub mod tiny;
