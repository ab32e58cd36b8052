#![allow(dead_code)]
pub mod oracles;
pub mod stats_oracle;
pub mod study;
