use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use super::server::PirServer;
use super::wire::Frame;
use super::ServiceError;

/// One request, one response.
pub trait Transport {
    fn round_trip(&mut self, request: &Frame) -> Result<Frame, ServiceError>;
}

/// Calls the server directly; frames are not serialized, but their sizes are
/// the same as on a socket.
#[derive(Debug, Clone, Copy)]
pub struct InProcess<'a> {
    server: &'a PirServer,
}

impl<'a> InProcess<'a> {
    pub fn new(server: &'a PirServer) -> Self {
        Self { server }
    }
}

impl Transport for InProcess<'_> {
    fn round_trip(&mut self, request: &Frame) -> Result<Frame, ServiceError> {
        Ok(self.server.handle(request))
    }
}

#[derive(Debug)]
pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ServiceError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

impl Transport for TcpTransport {
    fn round_trip(&mut self, request: &Frame) -> Result<Frame, ServiceError> {
        request.write_to(&mut self.writer)?;
        Frame::read_from(&mut self.reader, u32::MAX as usize)?.ok_or_else(|| {
            ServiceError::Transport(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "server closed the connection",
            ))
        })
    }
}
