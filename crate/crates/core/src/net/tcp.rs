//! TCP transport: one connection per database, frames back to back.

use std::io::{BufReader, BufWriter, Read};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::debug;

use crate::error::{Error, Result};
use crate::net::client::DatabaseLink;
use crate::net::frame::{ErrorCode, Frame};
use crate::net::node::DatabaseNode;

/// Connections idle for this long are dropped by the server.
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(30);

pub struct TcpLink {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpLink {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| Error::Aborted("endpoint resolves to no address".into()))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(TcpLink {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

impl DatabaseLink for TcpLink {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        frame.write_to(&mut self.writer)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        match Frame::read_from(&mut self.reader)? {
            Some(frame) => Ok(frame?),
            None => Err(Error::Aborted("connection closed".into())),
        }
    }
}

/// Serve frames on one connection until the peer hangs up. A frame whose
/// header cannot be parsed gets an ERROR reply and the connection is closed,
/// since the stream can no longer be resynchronized.
pub fn serve_connection(stream: TcpStream, node: &DatabaseNode) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(IDLE_TIMEOUT))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream.try_clone()?);
    loop {
        match Frame::read_from(&mut reader)? {
            None => return Ok(()),
            Some(Ok(frame)) => node.handle(&frame).write_to(&mut writer)?,
            Some(Err(e)) => {
                Frame::error(0, 0, ErrorCode::Malformed, &e.to_string()).write_to(&mut writer)?;
                stream.shutdown(Shutdown::Write)?;
                // drain so the close does not reset the error frame away
                stream.set_read_timeout(Some(Duration::from_secs(1)))?;
                let _ = std::io::copy(&mut reader.take(1 << 20), &mut std::io::sink());
                return Ok(());
            }
        }
    }
}

/// Accept connections forever, one thread each.
pub fn serve_forever(listener: TcpListener, node: Arc<DatabaseNode>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                debug!("accept failed: {e}");
                continue;
            }
        };
        let node = node.clone();
        thread::spawn(move || {
            if let Err(e) = serve_connection(stream, &node) {
                debug!("connection ended: {e}");
            }
        });
    }
    Ok(())
}

/// Bind `addr` and serve on a background thread; returns the bound address.
pub fn spawn_server(addr: impl ToSocketAddrs, node: Arc<DatabaseNode>) -> std::io::Result<std::net::SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve_forever(listener, node));
    Ok(local)
}
