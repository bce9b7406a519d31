pub mod error;
pub mod graph;
pub mod metagraph;
pub mod pcm;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
