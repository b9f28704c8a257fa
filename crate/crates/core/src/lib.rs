pub mod fitness;
pub mod log;
pub mod petri;
pub mod postprocess;
pub mod quality;
pub mod run;
pub mod selection;
pub mod sets;
pub mod tree;
