use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation is not proper (orthonormality error {ortho_error:.3e}, det {det})")]
    InvalidRotation { ortho_error: f64, det: f64 },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("rotation angle {angle} is too close to pi for the log map")]
    AngleNearPi { angle: f64 },
    #[error("expected {expected} joint values, got {got}")]
    JointCountMismatch { expected: usize, got: usize },
    #[error("joint index {index} out of range for a chain of {len} joints")]
    JointIndexOutOfRange { index: usize, len: usize },
    #[error("kinematic chain has no joints")]
    EmptyChain,
    #[error("joint axis must be nonzero")]
    ZeroAxis,
    #[error("invalid intrinsics fx={fx} fy={fy} cu={cu} cv={cv} size={width}x{height}")]
    InvalidIntrinsics {
        fx: f64,
        fy: f64,
        cu: f64,
        cv: f64,
        width: u32,
        height: u32,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("camera is inside the cylinder (discriminant {discriminant:.3e})")]
    CameraInsideCylinder { discriminant: f64 },
    #[error("shaft is behind the camera (nearest axis depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("cylinder needs a nonzero direction and positive radius")]
    InvalidCylinder,
    #[error("line has a zero normal")]
    DegenerateLine,
    #[error("oracle resolution too low ({n_sections} sections, {n_circle} circle samples)")]
    OracleResolution { n_sections: usize, n_circle: usize },
}
