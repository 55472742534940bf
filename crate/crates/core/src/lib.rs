pub mod cft;
pub mod circuit;
pub mod experiment;
pub mod lxe;
pub mod percolation;
pub mod stabilizer;
