//! Client and server for the three retrieval systems over one framed
//! request/response protocol.

mod client;
mod server;
pub mod setup;
mod trace;
mod transport;
pub mod wire;

use thiserror::Error;

pub use client::{rerank_topk, route_query, Client, EntryMode, SearchOptions, System};
pub use server::{serve, serve_connection, PirServer};
pub use setup::{GraphInfo, MatrixInfo, ScoringInfo, SetupInfo, ALL_SECTIONS, SECTION_DOCS, SECTION_GRAPH, SECTION_SCORING};
pub use trace::{QueryTrace, RankedResult};
pub use transport::{InProcess, TcpTransport, Transport};
pub use wire::{ErrorCode, Frame, Message, Target, WireError};

use crate::graph::GraphError;
use crate::index::FramingError;
use crate::lwe::LweError;
use crate::scoring::ScoringError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("transport: {0}")]
    Transport(#[from] std::io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("server error {code}: {message}")]
    Server { code: u16, message: String },
    #[error("answer has {found} entries, expected {expected}")]
    DecodeSizeMismatch { expected: usize, found: usize },
    #[error("query has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("server did not provide {0}")]
    Unavailable(&'static str),
    #[error("document {0} is not in the content matrix")]
    UnknownDocId(u64),
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error(transparent)]
    Lwe(#[from] LweError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
