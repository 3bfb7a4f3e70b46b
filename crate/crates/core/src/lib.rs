pub mod error;
pub mod measure;
pub mod oracle;
pub mod quad;
pub mod spectral;
pub mod subordination;
pub mod transform;
