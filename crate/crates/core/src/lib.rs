pub mod finite_field;
pub mod projective_space;
pub mod quadratic_sets;
pub mod pgl2;
pub mod circle_geometry;
pub mod spectral;
pub mod ekr;
pub mod cli;
