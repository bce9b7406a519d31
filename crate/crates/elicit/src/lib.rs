//! Abandon-anytime pairwise comparison elicitation.
//!
//! A session asks for comparisons in the order of an optimal filling-in
//! sequence, so whenever the respondent stops, the comparisons made so far
//! form a good pattern for their count. Pairs inside a group may be asked in
//! any order.

pub mod api;
pub mod error;
pub mod journal;
pub mod reference;
pub mod sequences;
pub mod service;
pub mod session;

pub use api::{router, serve, Cors, ServeConfig};
pub use error::{ElicitError, Result};
pub use service::Service;
