pub mod astpaths;
pub mod axml;
pub mod caption;
pub mod callgraph;
pub mod corpus;
pub mod dex;
pub mod manifest;
pub mod metrics;
pub mod nmt;
pub mod permdb;
pub mod prcs;
