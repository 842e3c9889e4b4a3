pub mod exec;
pub mod explain;
pub mod frontend;
pub mod graphio;
pub mod model;
pub mod synthetic;
pub mod tensor;
pub mod trainer;
