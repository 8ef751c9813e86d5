//! Whois-style TCP frontend. Every connection gets a banner and is then
//! driven line by line through [`SessionState::handle_line`]. All
//! connections share one sealed [`Engine`] that can be swapped atomically.

use std::io;
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use log::{debug, info, warn};
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;

use crate::config::ServerConfig;
use crate::lookup::Engine;
use crate::protocol::{banner, Reply, SessionState};

/// Holds the engine currently being served. Empty while loading.
#[derive(Debug, Default)]
pub struct EngineHandle {
    current: ArcSwapOption<Engine>,
}

impl EngineHandle {
    pub fn loading() -> EngineHandle {
        EngineHandle::default()
    }

    pub fn ready(engine: Engine) -> EngineHandle {
        let handle = EngineHandle::default();
        handle.swap(engine);
        handle
    }

    pub fn get(&self) -> Option<Arc<Engine>> {
        self.current.load_full()
    }

    /// Replaces the served engine. Queries already running keep the old one.
    pub fn swap(&self, engine: Engine) {
        self.current.store(Some(Arc::new(engine)));
    }
}

enum LineRead {
    Line,
    TooLong,
    Eof,
}

// Reads up to LF into `buf` (without the LF and any CR). Overlong lines are
// drained and reported without buffering them.
async fn read_line_limited<R: AsyncBufRead + Unpin>(
    reader: &mut R,
    max: usize,
    buf: &mut Vec<u8>,
) -> io::Result<LineRead> {
    buf.clear();
    let mut overflow = false;
    loop {
        let available = reader.fill_buf().await?;
        if available.is_empty() {
            return Ok(match (overflow, buf.is_empty()) {
                (true, _) => LineRead::TooLong,
                (false, true) => LineRead::Eof,
                (false, false) => LineRead::Line,
            });
        }
        let (chunk, consumed, done) = match available.iter().position(|&b| b == b'\n') {
            Some(i) => (&available[..i], i + 1, true),
            None => (available, available.len(), false),
        };
        if !overflow {
            if buf.len() + chunk.len() > max {
                overflow = true;
                buf.clear();
            } else {
                buf.extend_from_slice(chunk);
            }
        }
        reader.consume(consumed);
        if done {
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
            return Ok(if overflow { LineRead::TooLong } else { LineRead::Line });
        }
    }
}

/// Runs one session over any byte stream until the client disconnects,
/// a bulk session ends, or the idle timeout fires.
pub async fn handle_connection<S>(stream: S, engines: Arc<EngineHandle>, config: Arc<ServerConfig>) -> io::Result<()>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    let (read_half, mut writer) = tokio::io::split(stream);
    let mut reader = BufReader::new(read_half);
    let limits = config.limits();
    writer
        .write_all(banner(engines.get().as_deref(), &config.contact).as_bytes())
        .await?;
    writer.flush().await?;

    let mut session = SessionState::default();
    let mut buf = Vec::new();
    loop {
        let read = tokio::time::timeout(
            config.idle_timeout(),
            read_line_limited(&mut reader, limits.max_line_len, &mut buf),
        )
        .await;
        let reply = match read {
            Err(_) => {
                writer.write_all(b"# ERROR: idle timeout\n").await?;
                break;
            }
            Ok(Err(e)) => return Err(e),
            Ok(Ok(LineRead::Eof)) => break,
            Ok(Ok(LineRead::TooLong)) => Reply {
                text: format!("# ERROR: line exceeds {} bytes\n", limits.max_line_len),
                close: false,
            },
            Ok(Ok(LineRead::Line)) => {
                let line = String::from_utf8_lossy(&buf);
                let engine = engines.get();
                session.handle_line(&line, engine.as_deref(), &limits)
            }
        };
        if !reply.text.is_empty() {
            writer.write_all(reply.text.as_bytes()).await?;
            writer.flush().await?;
        }
        if reply.close {
            break;
        }
    }
    writer.flush().await?;
    writer.shutdown().await?;
    Ok(())
}

/// Accepts connections forever. Per-connection failures are logged only.
pub async fn serve(listener: TcpListener, engines: Arc<EngineHandle>, config: Arc<ServerConfig>) -> io::Result<()> {
    info!("listening on {}", listener.local_addr()?);
    loop {
        let (stream, peer) = match listener.accept().await {
            Ok(conn) => conn,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let engines = Arc::clone(&engines);
        let config = Arc::clone(&config);
        tokio::spawn(async move {
            debug!("connection from {peer}");
            if let Err(e) = handle_connection(stream, engines, config).await {
                debug!("connection {peer}: {e}");
            }
        });
    }
}
