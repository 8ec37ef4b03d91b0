//! The transformation proxy and its client.
//!
//! Requests and responses are newline-delimited JSON objects; binary fields
//! are base64 of the artifact encodings and key ids are hex.
//!
//! ```text
//! -> {"op":"register_tk","key_id":"..","tk_bytes":".."}
//! <- {"ok":true}
//! -> {"op":"transform","key_id":"..","ct_bytes":".."}
//! <- {"ok":true,"ct_prime_bytes":".."}
//! <- {"ok":false,"error_code":"UNKNOWN_KEY","message":".."}
//! ```
//!
//! A proxy runs in exactly one [`AdversaryMode`]. Every mode other than
//! `honest` corrupts its answers deterministically so tests can replay them.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};
use std::thread;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vabe_core::abe::{KeyId, PublicParams};
use vabe_core::envelope::{decode, encode};
use vabe_core::groups::Gt;
use vabe_core::vout::{self, Ciphertext, TransformKey, TransformedCiphertext};

/// Longest request line accepted, in bytes.
pub const MAX_LINE: u64 = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AdversaryMode {
    Honest,
    /// Answers every request with the first CT' it ever produced.
    Replay,
    /// Multiplies T1' by a group element derived from the request.
    Garble,
    /// Exchanges T1' and T2'.
    Swap,
    /// Transforms the ciphertext this key id sent previously.
    Stale,
}

impl AdversaryMode {
    pub const ALL: [AdversaryMode; 5] = [
        AdversaryMode::Honest,
        AdversaryMode::Replay,
        AdversaryMode::Garble,
        AdversaryMode::Swap,
        AdversaryMode::Stale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryMode::Honest => "honest",
            AdversaryMode::Replay => "replay",
            AdversaryMode::Garble => "garble",
            AdversaryMode::Swap => "swap",
            AdversaryMode::Stale => "stale",
        }
    }
}

impl fmt::Display for AdversaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        AdversaryMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected honest|replay|garble|swap|stale)"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ProxyRequest {
    RegisterTk { key_id: String, tk_bytes: String },
    Transform { key_id: String, ct_bytes: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    UnknownKey,
    NotSatisfied,
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProxyResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ct_prime_bytes: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ProxyResponse {
    fn ok(ct_prime: Option<Vec<u8>>) -> Self {
        ProxyResponse {
            ok: true,
            ct_prime_bytes: ct_prime.map(|b| B64.encode(b)),
            error_code: None,
            message: None,
        }
    }

    fn err(code: ErrorCode, message: impl Into<String>) -> Self {
        ProxyResponse { ok: false, ct_prime_bytes: None, error_code: Some(code), message: Some(message.into()) }
    }
}

fn parse_key_id(s: &str) -> Option<KeyId> {
    hex::decode(s).ok()?.try_into().ok()
}

// ---------------------------------------------------------------------------
// server

#[derive(Default)]
struct Memory {
    replay: Option<TransformedCiphertext>,
    last_ct: HashMap<KeyId, Ciphertext>,
}

struct ProxyState {
    pp: PublicParams,
    mode: AdversaryMode,
    registry: RwLock<HashMap<KeyId, TransformKey>>,
    memory: Mutex<Memory>,
}

impl ProxyState {
    fn handle_line(&self, line: &str) -> ProxyResponse {
        match serde_json::from_str::<ProxyRequest>(line) {
            Ok(req) => self.handle(req),
            Err(e) => ProxyResponse::err(ErrorCode::Malformed, format!("bad request: {e}")),
        }
    }

    fn handle(&self, req: ProxyRequest) -> ProxyResponse {
        match req {
            ProxyRequest::RegisterTk { key_id, tk_bytes } => {
                let Some(key_id) = parse_key_id(&key_id) else {
                    return ProxyResponse::err(ErrorCode::Malformed, "key_id must be 32 hex digits");
                };
                let tk = match B64.decode(tk_bytes.as_bytes()).map_err(|e| e.to_string()).and_then(|b| {
                    decode::<TransformKey>(&b).map_err(|e| e.to_string())
                }) {
                    Ok(tk) => tk,
                    Err(e) => return ProxyResponse::err(ErrorCode::Malformed, e),
                };
                if tk.key_id != key_id {
                    return ProxyResponse::err(ErrorCode::Malformed, "key_id does not match the key");
                }
                self.registry.write().unwrap().insert(key_id, tk);
                ProxyResponse::ok(None)
            }
            ProxyRequest::Transform { key_id, ct_bytes } => {
                let Some(key_id) = parse_key_id(&key_id) else {
                    return ProxyResponse::err(ErrorCode::Malformed, "key_id must be 32 hex digits");
                };
                let Some(tk) = self.registry.read().unwrap().get(&key_id).cloned() else {
                    return ProxyResponse::err(ErrorCode::UnknownKey, "key_id is not registered");
                };
                let raw = match B64.decode(ct_bytes.as_bytes()) {
                    Ok(b) => b,
                    Err(e) => return ProxyResponse::err(ErrorCode::Malformed, e.to_string()),
                };
                let ct = match decode::<Ciphertext>(&raw) {
                    Ok(ct) => ct,
                    Err(e) => return ProxyResponse::err(ErrorCode::Malformed, e.to_string()),
                };
                match self.answer(&tk, ct, &raw) {
                    Ok(ctp) => ProxyResponse::ok(Some(encode(&ctp))),
                    Err(vabe_core::Error::NotSatisfied) => {
                        ProxyResponse::err(ErrorCode::NotSatisfied, "key does not satisfy the policy")
                    }
                    Err(e) => ProxyResponse::err(ErrorCode::Malformed, e.to_string()),
                }
            }
        }
    }

    fn answer(&self, tk: &TransformKey, ct: Ciphertext, raw: &[u8]) -> vabe_core::Result<TransformedCiphertext> {
        match self.mode {
            AdversaryMode::Honest => vout::transform(&self.pp, &ct, tk),
            AdversaryMode::Replay => {
                let mut mem = self.memory.lock().unwrap();
                if let Some(old) = &mem.replay {
                    return Ok(old.clone());
                }
                let ctp = vout::transform(&self.pp, &ct, tk)?;
                mem.replay = Some(ctp.clone());
                Ok(ctp)
            }
            AdversaryMode::Garble => {
                let mut ctp = vout::transform(&self.pp, &ct, tk)?;
                let mut rng = ChaCha20Rng::from_seed(Sha256::digest(raw).into());
                let noise = loop {
                    let g = Gt::random(&mut rng);
                    if !g.is_identity() {
                        break g;
                    }
                };
                ctp.t1_prime = ctp.t1_prime * noise;
                Ok(ctp)
            }
            AdversaryMode::Swap => {
                let mut ctp = vout::transform(&self.pp, &ct, tk)?;
                std::mem::swap(&mut ctp.t1_prime, &mut ctp.t2_prime);
                Ok(ctp)
            }
            AdversaryMode::Stale => {
                let previous = self.memory.lock().unwrap().last_ct.insert(tk.key_id, ct.clone());
                vout::transform(&self.pp, previous.as_ref().unwrap_or(&ct), tk)
            }
        }
    }
}

pub struct ProxyServer {
    listener: TcpListener,
    state: Arc<ProxyState>,
}

impl ProxyServer {
    pub fn bind(addr: impl ToSocketAddrs, pp: PublicParams, mode: AdversaryMode) -> io::Result<Self> {
        Ok(ProxyServer {
            listener: TcpListener::bind(addr)?,
            state: Arc::new(ProxyState { pp, mode, registry: RwLock::default(), memory: Mutex::default() }),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn mode(&self) -> AdversaryMode {
        self.state.mode
    }

    /// Accepts connections forever, one thread each.
    pub fn serve(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let state = Arc::clone(&self.state);
            thread::spawn(move || {
                let _ = serve_connection(&state, stream);
            });
        }
        Ok(())
    }

    /// Runs [`serve`](Self::serve) on a background thread.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.serve());
        Ok(addr)
    }
}

fn serve_connection(state: &ProxyState, stream: TcpStream) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    loop {
        line.clear();
        let n = (&mut reader).take(MAX_LINE).read_line(&mut line);
        let resp = match n {
            Ok(0) => return Ok(()),
            Ok(n) if n as u64 == MAX_LINE && !line.ends_with('\n') => {
                send(&mut writer, &ProxyResponse::err(ErrorCode::Malformed, "request line too long"))?;
                return Ok(());
            }
            Ok(_) if line.trim().is_empty() => continue,
            Ok(_) => state.handle_line(line.trim_end()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                // not UTF-8; the rest of the line is discarded by read_line
                ProxyResponse::err(ErrorCode::Malformed, "request is not UTF-8")
            }
            Err(e) => return Err(e),
        };
        send(&mut writer, &resp)?;
    }
}

fn send(w: &mut impl Write, resp: &ProxyResponse) -> io::Result<()> {
    let mut out = serde_json::to_vec(resp).expect("response serializes");
    out.push(b'\n');
    w.write_all(&out)?;
    w.flush()
}

// ---------------------------------------------------------------------------
// client

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("proxy refused: {code:?}: {message}")]
    Remote { code: ErrorCode, message: String },
    #[error(transparent)]
    Decode(#[from] vabe_core::Error),
}

pub struct ProxyClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl ProxyClient {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(ProxyClient { writer: stream.try_clone()?, reader: BufReader::new(stream) })
    }

    /// Sends one raw line and reads one response line.
    pub fn send_line(&mut self, line: &str) -> Result<ProxyResponse, ClientError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut resp = String::new();
        if self.reader.read_line(&mut resp)? == 0 {
            return Err(ClientError::Protocol("connection closed".into()));
        }
        serde_json::from_str(&resp).map_err(|e| ClientError::Protocol(e.to_string()))
    }

    pub fn request(&mut self, req: &ProxyRequest) -> Result<ProxyResponse, ClientError> {
        self.send_line(&serde_json::to_string(req).expect("request serializes"))
    }

    fn expect_ok(resp: ProxyResponse) -> Result<ProxyResponse, ClientError> {
        if resp.ok {
            return Ok(resp);
        }
        match resp.error_code {
            Some(code) => Err(ClientError::Remote { code, message: resp.message.unwrap_or_default() }),
            None => Err(ClientError::Protocol("error response without a code".into())),
        }
    }

    pub fn register_tk(&mut self, tk: &TransformKey) -> Result<(), ClientError> {
        let req = ProxyRequest::RegisterTk { key_id: hex::encode(tk.key_id), tk_bytes: B64.encode(encode(tk)) };
        Self::expect_ok(self.request(&req)?).map(drop)
    }

    pub fn transform(&mut self, key_id: &KeyId, ct: &Ciphertext) -> Result<TransformedCiphertext, ClientError> {
        let req = ProxyRequest::Transform { key_id: hex::encode(key_id), ct_bytes: B64.encode(encode(ct)) };
        let resp = Self::expect_ok(self.request(&req)?)?;
        let b64 = resp.ct_prime_bytes.ok_or_else(|| ClientError::Protocol("missing ct_prime_bytes".into()))?;
        let bytes = B64.decode(b64.as_bytes()).map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(decode(&bytes)?)
    }
}
