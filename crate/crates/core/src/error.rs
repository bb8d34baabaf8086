use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lines are parallel")]
    ParallelLines,
    #[error("value {value} out of range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("spheres {0} and {1} are nested, no tangent cone exists")]
    NestedSpheres(u32, u32),
    #[error("bone {0} has a degenerate cone")]
    DegenerateBone(u32),
    #[error("plane is tangent to sphere {0}")]
    TangentPlane(u32),
    #[error("point is outside the cell of cone pair ({0}, {1})")]
    WrongCell(u32, u32),
    #[error("sheaf of planes is degenerate at sphere {0}")]
    SheafDegenerate(u32),
    #[error("base point would fall beyond the apex of bone {0}")]
    ApexRegion(u32),
    #[error("point lies on the axis of bone {0}")]
    AxisDegenerate(u32),
    #[error("section collapsed")]
    SectionCollapsed,
    #[error("direction nearly tangent to the surface")]
    NearTangent,
    #[error("empty smoothing neighbourhood")]
    EmptyNeighborhood,
    #[error("pose references unknown joint sphere {0}")]
    InvalidJointRef(u32),
    #[error("pose references unknown bone {0}")]
    InvalidBoneRef(u32),
    #[error("transform of bone {0} is not rigid")]
    NonRigidTransform(u32),
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("registration does not cover point {0}")]
    Unregistered(usize),
    #[error("encoded set does not match skeleton")]
    SkeletonMismatch,
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        }
    }
}
