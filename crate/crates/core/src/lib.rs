pub mod features;
pub mod lingdata;
pub mod crf;
pub mod eval;
pub mod textprep;
pub mod mwe;
pub mod econ;
pub mod pipeline;
