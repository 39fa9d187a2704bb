pub mod interp;
pub mod poly;
pub mod quad;
pub mod roots;
