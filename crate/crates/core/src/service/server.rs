use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};
use std::thread;

use log::{debug, warn};

use super::setup::{SetupInfo, ALL_SECTIONS};
use super::wire::{ErrorCode, Frame, Message, Target, WireError, DEFAULT_MAX_REQUEST};
use crate::codec::Writer;
use crate::index::PirIndex;
use crate::lwe::{LweError, Residues};

/// Answers queries over an immutable index. Holds no per-client state and
/// never any key material.
#[derive(Debug)]
pub struct PirServer {
    index: PirIndex,
    answers: AtomicU64,
    setup_cache: [OnceLock<Vec<u8>>; 8],
}

impl PirServer {
    pub fn new(index: PirIndex) -> Self {
        Self {
            index,
            answers: AtomicU64::new(0),
            setup_cache: Default::default(),
        }
    }

    pub fn index(&self) -> &PirIndex {
        &self.index
    }

    /// Homomorphic answers computed since start-up, PIR and scoring alike.
    pub fn answer_count(&self) -> u64 {
        self.answers.load(Ordering::Relaxed)
    }

    /// Handles one request frame. Every failure becomes an ERROR frame.
    pub fn handle(&self, frame: &Frame) -> Frame {
        let msg = match Message::from_frame(frame) {
            Ok(m) => m,
            Err(WireError::UnknownMessage(t)) => {
                return Message::error(ErrorCode::UnknownMessage, format!("unknown message type {t:#04x}"))
                    .to_frame()
            }
            Err(e) => return Message::error(ErrorCode::Malformed, e.to_string()).to_frame(),
        };
        match msg {
            Message::SetupRequest(mask) => self.setup_frame(mask.unwrap_or(ALL_SECTIONS)),
            Message::PirQuery { target, query } => self.pir_answer(target, &query),
            Message::ScoreQuery { cluster, query } => self.score_answer(cluster, query),
            other => Message::error(
                ErrorCode::UnknownMessage,
                format!("message type {:#04x} is not a request", other.to_frame().msg_type),
            )
            .to_frame(),
        }
    }

    fn setup_frame(&self, mask: u8) -> Frame {
        let mask = mask & ALL_SECTIONS;
        let payload = self.setup_cache[mask as usize].get_or_init(|| {
            let mut w = Writer::new();
            SetupInfo::from_index(&self.index, mask).encode(&mut w);
            w.into_bytes()
        });
        Frame::new(super::wire::SETUP_RESP, payload.clone())
    }

    fn pir_answer(&self, target: Target, query: &Residues) -> Frame {
        let served = match target {
            Target::Cluster => self.index.cluster.served().ok(),
            Target::Doc => self.index.docs.as_ref().and_then(|d| d.served().ok()),
            Target::Node => self.index.graph.as_ref().and_then(|g| g.served().ok()),
        };
        let Some(served) = served else {
            return Message::error(ErrorCode::UnknownTarget, format!("{target:?} matrix is not served"))
                .to_frame();
        };
        match served.answer(query) {
            Ok(r) => {
                self.answers.fetch_add(1, Ordering::Relaxed);
                Message::PirAnswer(r).to_frame()
            }
            Err(e) => lwe_error(e),
        }
    }

    fn score_answer(&self, cluster: u32, query: Vec<u64>) -> Frame {
        let Some(scoring) = &self.index.scoring else {
            return Message::error(ErrorCode::UnknownTarget, "scoring is not served").to_frame();
        };
        let served = match scoring.served(cluster as usize) {
            Ok(s) => s,
            Err(e) => return Message::error(ErrorCode::UnknownCluster, e.to_string()).to_frame(),
        };
        match served.answer(&Residues::W64(query)) {
            Ok(Residues::W64(r)) => {
                self.answers.fetch_add(1, Ordering::Relaxed);
                Message::ScoreAnswer(r).to_frame()
            }
            Ok(_) => Message::error(ErrorCode::Internal, "scoring produced narrow residues").to_frame(),
            Err(e) => lwe_error(e),
        }
    }
}

fn lwe_error(e: LweError) -> Frame {
    let code = match e {
        LweError::DimensionMismatch { .. } | LweError::InvalidParams(_) => ErrorCode::DimensionMismatch,
        _ => ErrorCode::Internal,
    };
    Message::error(code, e.to_string()).to_frame()
}

/// Serves one connection until the peer closes it or sends something that
/// cannot be framed. Responses are written in request order.
pub fn serve_connection(server: &PirServer, stream: TcpStream, max_request: usize) -> Result<(), WireError> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    loop {
        match Frame::read_from(&mut reader, max_request) {
            Ok(Some(frame)) => server.handle(&frame).write_to(&mut writer)?,
            Ok(None) => return Ok(()),
            Err(WireError::Io(e)) => return Err(e.into()),
            Err(e) => {
                // The stream position is lost; report and disconnect.
                let reply = Message::error(ErrorCode::Malformed, e.to_string()).to_frame();
                let _ = reply.write_to(&mut writer);
                return Err(e);
            }
        }
    }
}

/// Accepts connections forever, one thread per connection.
pub fn serve(listener: TcpListener, server: Arc<PirServer>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            match serve_connection(&server, stream, DEFAULT_MAX_REQUEST) {
                Ok(()) => debug!("connection {peer:?} closed"),
                Err(e) => warn!("connection {peer:?} dropped: {e}"),
            }
        });
    }
    Ok(())
}
