pub mod balanced;
pub mod cli;
pub mod loops;
pub mod numkern;
pub mod opmodel;
pub mod relindex;
