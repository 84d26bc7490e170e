//! Thread-per-connection HTTP listener.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::dispatch::App;
use super::request::{
    head_end, parse_request, HttpResponse, RequestError, MAX_BODY_BYTES, MAX_HEAD_BYTES,
};

const READ_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type AccessLog = Arc<Mutex<Box<dyn Write + Send>>>;

/// Stops a running [`Server`] from another thread.
#[derive(Debug, Clone)]
pub struct ShutdownHandle {
    flag: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    pub fn shutdown(&self) {
        if !self.flag.swap(true, Ordering::SeqCst) {
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        }
    }

    pub fn is_shutdown(&self) -> bool {
        self.flag.load(Ordering::SeqCst)
    }
}

pub struct Server {
    listener: TcpListener,
    app: Arc<App>,
    flag: Arc<AtomicBool>,
    log: AccessLog,
}

impl Server {
    pub fn bind(host: &str, port: u16, app: Arc<App>) -> Result<Self, ServeError> {
        let addr = format!("{host}:{port}");
        let bind_err = |source| ServeError::BindFailure {
            addr: addr.clone(),
            source,
        };
        let resolved: Vec<SocketAddr> = addr.to_socket_addrs().map_err(bind_err)?.collect();
        let listener = TcpListener::bind(&resolved[..]).map_err(bind_err)?;
        Ok(Server {
            listener,
            app,
            flag: Arc::new(AtomicBool::new(false)),
            log: Arc::new(Mutex::new(Box::new(io::stdout()))),
        })
    }

    /// Sends access-log lines somewhere other than stdout.
    pub fn with_access_log(mut self, sink: impl Write + Send + 'static) -> Self {
        self.log = Arc::new(Mutex::new(Box::new(sink)));
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> io::Result<ShutdownHandle> {
        Ok(ShutdownHandle {
            flag: self.flag.clone(),
            addr: self.local_addr()?,
        })
    }

    /// Accepts connections until shut down, then waits for in-flight
    /// requests and closes the listener.
    pub fn run(self) -> Result<(), ServeError> {
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        for stream in self.listener.incoming() {
            if self.flag.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let app = self.app.clone();
            let log = self.log.clone();
            workers.retain(|w| !w.is_finished());
            workers.push(thread::spawn(move || {
                if let Err(e) = handle_connection(stream, &app, &log) {
                    log::debug!("connection error: {e}");
                }
            }));
        }
        drop(self.listener);
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }
}

pub fn serve(host: &str, port: u16, app: Arc<App>) -> Result<(), ServeError> {
    Server::bind(host, port, app)?.run()
}

enum ReadOutcome {
    Complete(Vec<u8>),
    Rejected(RequestError),
    Closed,
}

fn content_length(head: &[u8]) -> Result<usize, RequestError> {
    let text = String::from_utf8_lossy(head);
    for line in text.split("\r\n").skip(1) {
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                return value
                    .trim()
                    .parse()
                    .map_err(|_| RequestError::BadRequest("invalid content-length".into()));
            }
        }
    }
    Ok(0)
}

fn read_request(stream: &mut TcpStream) -> io::Result<ReadOutcome> {
    let mut buf = Vec::with_capacity(4096);
    let mut chunk = [0u8; 4096];
    let end = loop {
        if let Some(end) = head_end(&buf) {
            break end;
        }
        if buf.len() > MAX_HEAD_BYTES {
            return Ok(ReadOutcome::Rejected(RequestError::BadRequest(
                "request head too large".into(),
            )));
        }
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(if buf.is_empty() {
                ReadOutcome::Closed
            } else {
                ReadOutcome::Rejected(RequestError::BadRequest("incomplete request head".into()))
            });
        }
        buf.extend_from_slice(&chunk[..n]);
    };
    let wanted = match content_length(&buf[..end]) {
        Ok(n) if n > MAX_BODY_BYTES => {
            return Ok(ReadOutcome::Rejected(RequestError::PayloadTooLarge(n)))
        }
        Ok(n) => n,
        Err(e) => return Ok(ReadOutcome::Rejected(e)),
    };
    while buf.len() < end + wanted {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    buf.truncate(end + wanted);
    Ok(ReadOutcome::Complete(buf))
}

fn handle_connection(mut stream: TcpStream, app: &App, log: &AccessLog) -> io::Result<()> {
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    let started = Instant::now();
    let raw = match read_request(&mut stream)? {
        ReadOutcome::Closed => return Ok(()),
        ReadOutcome::Complete(raw) => raw,
        ReadOutcome::Rejected(err) => {
            let resp = HttpResponse::error(err.status());
            stream.write_all(&resp.to_bytes())?;
            write_log(log, "-", "-", resp.status, started, false);
            return Ok(());
        }
    };
    let (response, method, path, had_session) = match parse_request(&raw) {
        Ok(request) => {
            let had_session = app.sessions.is_live(&request);
            let (response, _trace) = app.dispatch(&request);
            (
                response,
                request.method.as_str().to_string(),
                request.path,
                had_session,
            )
        }
        Err(err) => (
            HttpResponse::error(err.status()),
            "-".into(),
            "-".into(),
            false,
        ),
    };
    stream.write_all(&response.to_bytes())?;
    stream.flush()?;
    let _ = stream.shutdown(Shutdown::Write);
    write_log(log, &method, &path, response.status, started, had_session);
    Ok(())
}

/// `METHOD PATH STATUS DURATION_MS SESSION_PRESENT`
fn write_log(
    log: &AccessLog,
    method: &str,
    path: &str,
    status: u16,
    started: Instant,
    session: bool,
) {
    let ms = started.elapsed().as_millis();
    let mut sink = log.lock().unwrap_or_else(|e| e.into_inner());
    let _ = writeln!(sink, "{method} {path} {status} {ms} {session}");
    let _ = sink.flush();
}
