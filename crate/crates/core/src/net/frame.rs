//! Length-prefixed binary framing.
//!
//! ```text
//! 0   4  magic "SPIR"
//! 4   1  version 0x01
//! 5   1  frame type (1 SETUP, 2 QUERY, 3 ANSWER, 4 ERROR)
//! 6   8  session id, big-endian
//! 14  4  round, big-endian
//! 18  4  payload length, big-endian
//! 22  .. payload
//! ```
//!
//! Payloads: QUERY carries the round's `(m - 1) K` coefficients and ANSWER a
//! single symbol, both packed with `ceil(log2 p)` bits per symbol. SETUP
//! carries `u32` symbol count + packed common-randomness symbols for the
//! session. ERROR carries a one-byte [`ErrorCode`] followed by UTF-8 text.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"SPIR";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 22;
pub const MAX_PAYLOAD: u32 = 1 << 24;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    Setup = 1,
    Query = 2,
    Answer = 3,
    Error = 4,
}

impl TryFrom<u8> for FrameType {
    type Error = FrameError;

    fn try_from(b: u8) -> Result<Self, FrameError> {
        Ok(match b {
            1 => FrameType::Setup,
            2 => FrameType::Query,
            3 => FrameType::Answer,
            4 => FrameType::Error,
            other => return Err(FrameError::UnknownType(other)),
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ErrorCode {
    Malformed = 1,
    NotSetup = 2,
    BadRound = 3,
    UnexpectedFrame = 4,
    Internal = 5,
}

impl ErrorCode {
    fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => ErrorCode::Malformed,
            2 => ErrorCode::NotSetup,
            3 => ErrorCode::BadRound,
            4 => ErrorCode::UnexpectedFrame,
            5 => ErrorCode::Internal,
            _ => return None,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("payload length field says {declared}, frame carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("payload of {0} bytes exceeds limit")]
    TooLarge(u32),
    #[error("malformed error payload")]
    BadErrorPayload,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub session_id: u64,
    pub round: u32,
    pub payload: Vec<u8>,
}

struct Header {
    frame_type: FrameType,
    session_id: u64,
    round: u32,
    len: u32,
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<Header, FrameError> {
    if &h[0..4] != MAGIC {
        return Err(FrameError::BadMagic);
    }
    if h[4] != VERSION {
        return Err(FrameError::BadVersion(h[4]));
    }
    let frame_type = FrameType::try_from(h[5])?;
    let len = u32::from_be_bytes(h[18..22].try_into().unwrap());
    if len > MAX_PAYLOAD {
        return Err(FrameError::TooLarge(len));
    }
    Ok(Header {
        frame_type,
        session_id: u64::from_be_bytes(h[6..14].try_into().unwrap()),
        round: u32::from_be_bytes(h[14..18].try_into().unwrap()),
        len,
    })
}

impl Frame {
    pub fn new(frame_type: FrameType, session_id: u64, round: u32, payload: Vec<u8>) -> Self {
        Frame {
            frame_type,
            session_id,
            round,
            payload,
        }
    }

    pub fn error(session_id: u64, round: u32, code: ErrorCode, message: &str) -> Self {
        let mut payload = vec![code as u8];
        payload.extend_from_slice(message.as_bytes());
        Frame::new(FrameType::Error, session_id, round, payload)
    }

    /// Code and text of an ERROR frame.
    pub fn error_parts(&self) -> Result<(ErrorCode, String), FrameError> {
        let (&code, text) = self.payload.split_first().ok_or(FrameError::BadErrorPayload)?;
        let code = ErrorCode::from_byte(code).ok_or(FrameError::BadErrorPayload)?;
        Ok((code, String::from_utf8_lossy(text).into_owned()))
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.frame_type as u8);
        out.extend_from_slice(&self.session_id.to_be_bytes());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decode exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or(FrameError::Truncated {
                needed: HEADER_LEN,
                available: bytes.len(),
            })?;
        let h = parse_header(header)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != h.len as usize {
            return Err(FrameError::LengthMismatch {
                declared: h.len as usize,
                actual: payload.len(),
            });
        }
        Ok(Frame::new(h.frame_type, h.session_id, h.round, payload.to_vec()))
    }

    /// Read one frame from a stream. `Ok(None)` on a clean end of stream
    /// before any header byte.
    pub fn read_from<R: Read>(reader: &mut R) -> io::Result<Option<Result<Frame, FrameError>>> {
        let mut header = [0u8; HEADER_LEN];
        let mut got = 0;
        while got < HEADER_LEN {
            match reader.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        let h = match parse_header(&header) {
            Ok(h) => h,
            Err(e) => return Ok(Some(Err(e))),
        };
        let mut payload = vec![0u8; h.len as usize];
        reader.read_exact(&mut payload)?;
        Ok(Some(Ok(Frame::new(h.frame_type, h.session_id, h.round, payload))))
    }

    pub fn write_to<W: Write>(&self, writer: &mut W) -> io::Result<()> {
        writer.write_all(&self.encode())?;
        writer.flush()
    }
}
