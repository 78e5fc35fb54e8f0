pub mod boxes;
pub mod field;
pub mod matrix;
pub mod oracle;
pub mod spectral;
pub mod treedecomp;
