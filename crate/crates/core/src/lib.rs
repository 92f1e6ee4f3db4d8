pub mod dynamics;
pub mod economics;
pub mod geometry;
pub mod hydro;
pub mod linalg;
pub mod mesh;
pub mod optimize;
pub mod postprocess;
pub mod sensitivity;
pub mod special;
