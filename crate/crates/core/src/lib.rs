pub mod attenuation;
pub mod bundle;
pub mod cage;
pub mod demo;
pub mod fatpad;
pub mod geodesic;
pub mod geometry;
pub mod green;
pub mod mesh;
pub mod pose;
pub mod session;
pub mod shapes;
