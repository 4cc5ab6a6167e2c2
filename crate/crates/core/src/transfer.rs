//! TCP transfer of envelopes.
//!
//! Wire frame, all integers big-endian:
//!
//! ```text
//! "TTEA" | version u8 | command u8 | name_len u16 | name | payload_len u64 | payload | sha256(payload)
//! ```
//!
//! A session is one PUT carrying a serialized envelope, answered by ACK
//! (payload: SHA-256 of the decrypted plaintext) or ERR (payload: the error
//! text, starting with its code).

use std::fs;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{KeyRing, MaskedEnvelope, Pipeline, Recipe, StageTimings, Store};

pub const MAGIC: [u8; 4] = *b"TTEA";
pub const FRAME_VERSION: u8 = 1;
pub const DEFAULT_PORT: u16 = 7407;
pub const DEFAULT_MAX_PAYLOAD: u64 = 256 << 20;
/// Bytes of a frame besides the name and payload.
pub const FRAME_OVERHEAD: usize = 4 + 1 + 1 + 2 + 8 + 32;

const REPLY_MAX_PAYLOAD: u64 = 1 << 16;
const SESSION_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Put = 0x01,
    Ack = 0x02,
    Err = 0x03,
}

impl TryFrom<u8> for Command {
    type Error = Error;

    fn try_from(b: u8) -> Result<Command> {
        match b {
            0x01 => Ok(Command::Put),
            0x02 => Ok(Command::Ack),
            0x03 => Ok(Command::Err),
            other => Err(Error::BadCommand(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferFrame {
    pub command: Command,
    pub name: String,
    pub payload: Vec<u8>,
}

impl TransferFrame {
    pub fn new(command: Command, name: impl Into<String>, payload: Vec<u8>) -> TransferFrame {
        TransferFrame {
            command,
            name: name.into(),
            payload,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let name = self.name.as_bytes();
        let name_len = u16::try_from(name.len()).map_err(|_| Error::NameTooLong(name.len()))?;
        let mut out = Vec::with_capacity(FRAME_OVERHEAD + name.len() + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(FRAME_VERSION);
        out.push(self.command as u8);
        out.extend_from_slice(&name_len.to_be_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(self.payload.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&Sha256::digest(&self.payload));
        Ok(out)
    }

    /// Reads one frame. Header fields are validated before any buffer sized
    /// by the peer is grown, and the payload is read incrementally.
    pub fn read_from(r: &mut impl Read, max_payload: u64) -> Result<TransferFrame> {
        let mut head = [0u8; 8];
        read_full(r, &mut head, "header")?;
        if head[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if head[4] != FRAME_VERSION {
            return Err(Error::BadVersion(head[4]));
        }
        let command = Command::try_from(head[5])?;
        let name_len = u16::from_be_bytes([head[6], head[7]]) as usize;
        let mut name = vec![0u8; name_len];
        read_full(r, &mut name, "name")?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::BadSpec("frame name is not UTF-8".into()))?;
        let mut len = [0u8; 8];
        read_full(r, &mut len, "payload length")?;
        let len = u64::from_be_bytes(len);
        if len > max_payload {
            return Err(Error::PayloadTooLarge {
                len,
                max: max_payload,
            });
        }
        let mut payload = Vec::new();
        r.take(len).read_to_end(&mut payload)?;
        if payload.len() as u64 != len {
            return Err(Error::Truncated(format!(
                "payload: {} of {len} bytes",
                payload.len()
            )));
        }
        let mut digest = [0u8; 32];
        read_full(r, &mut digest, "payload digest")?;
        if digest[..] != Sha256::digest(&payload)[..] {
            return Err(Error::DigestMismatch("frame payload digest".into()));
        }
        Ok(TransferFrame {
            command,
            name,
            payload,
        })
    }
}

fn read_full(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(format!("stream ended in {what}")),
        _ => Error::Io(e),
    })
}

/// Encodes a PUT frame.
pub fn frame_encode(name: &str, payload: &[u8]) -> Result<Vec<u8>> {
    TransferFrame::new(Command::Put, name, payload.to_vec()).encode()
}

/// Decodes exactly one frame from `wire`; trailing bytes are rejected.
pub fn frame_decode(wire: &[u8]) -> Result<TransferFrame> {
    let mut rest = wire;
    let frame = TransferFrame::read_from(&mut rest, DEFAULT_MAX_PAYLOAD)?;
    if !rest.is_empty() {
        return Err(Error::BadSpec(format!(
            "{} trailing bytes after frame",
            rest.len()
        )));
    }
    Ok(frame)
}

/// Reduces a sender-supplied name to a bare file name.
pub fn sanitize_name(name: &str) -> Result<String> {
    let base = name.rsplit(['/', '\\']).next().unwrap_or("");
    let ok = !base.is_empty()
        && base != "."
        && base != ".."
        && !base.starts_with(".tmp-")
        && !base.chars().any(|c| c.is_control());
    if ok {
        Ok(base.to_owned())
    } else {
        Err(Error::BadSpec(format!("unusable file name {name:?}")))
    }
}

/// What the sender learned from one transfer.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub peer: SocketAddr,
    pub file_bytes: u64,
    pub payload_bytes: u64,
    pub frame_bytes: u64,
    pub blocks: usize,
    pub timings: StageTimings,
    pub encrypt_time: Duration,
    pub round_trip: Duration,
    pub digest: [u8; 32],
}

/// Encrypts `data` and sends it as `name`. Succeeds only on an ACK whose
/// digest matches the local plaintext.
pub fn send_bytes(
    addr: impl ToSocketAddrs,
    name: &str,
    data: &[u8],
    recipe: &Recipe,
    keys: &(impl KeyRing + ?Sized),
) -> Result<TransferReport> {
    let started = Instant::now();
    let (env, timings) = Pipeline::new(recipe, keys)?.encrypt(data)?;
    let payload = env.to_bytes();
    let encrypt_time = started.elapsed();
    let frame = TransferFrame::new(Command::Put, name, payload).encode()?;

    let sent = Instant::now();
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(SESSION_TIMEOUT))?;
    let peer = stream.peer_addr()?;
    stream.write_all(&frame)?;
    stream.flush()?;
    let reply = TransferFrame::read_from(&mut stream, REPLY_MAX_PAYLOAD)?;
    let round_trip = sent.elapsed();

    match reply.command {
        Command::Ack => {
            if reply.payload[..] != env.header.digest[..] {
                return Err(Error::DigestMismatch(
                    "ACK digest differs from local plaintext".into(),
                ));
            }
        }
        Command::Err => {
            return Err(Error::Remote(
                String::from_utf8_lossy(&reply.payload).into_owned(),
            ));
        }
        Command::Put => return Err(Error::BadCommand(Command::Put as u8)),
    }
    Ok(TransferReport {
        peer,
        file_bytes: data.len() as u64,
        payload_bytes: (frame.len() - FRAME_OVERHEAD - name.len()) as u64,
        frame_bytes: frame.len() as u64,
        blocks: env.blocks.len(),
        timings,
        encrypt_time,
        round_trip,
        digest: env.header.digest,
    })
}

/// Reads `path`, encrypts it with recipe `recipe_id` from `store` and sends it.
pub fn send_file(
    addr: impl ToSocketAddrs,
    path: &Path,
    recipe_id: &str,
    store: &Store,
) -> Result<TransferReport> {
    let data = fs::read(path)?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::BadSpec(format!("no usable file name in {}", path.display())))?;
    let recipe = store.get_recipe(recipe_id)?;
    send_bytes(addr, name, &data, &recipe, store)
}

#[derive(Debug)]
pub struct ReceivedFile {
    pub path: PathBuf,
    pub bytes: u64,
    pub digest: [u8; 32],
}

#[derive(Debug)]
pub struct SessionResult {
    pub peer: Option<SocketAddr>,
    pub name: Option<String>,
    pub outcome: Result<ReceivedFile>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Receiving end. Sessions run on their own threads and only read the store.
pub struct Server {
    listener: TcpListener,
    store: Store,
    out_dir: PathBuf,
    max_payload: u64,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs,
        store: Store,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Server> {
        let out_dir = out_dir.into();
        fs::create_dir_all(&out_dir)?;
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            store,
            out_dir,
            max_payload: DEFAULT_MAX_PAYLOAD,
        })
    }

    pub fn with_max_payload(mut self, max: u64) -> Server {
        self.max_payload = max;
        self
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections until `max_sessions` have been handled (forever
    /// if `None`), calling `on_session` from each session thread.
    pub fn serve(
        &self,
        max_sessions: Option<usize>,
        on_session: &(dyn Fn(SessionResult) + Sync),
    ) -> Result<()> {
        std::thread::scope(|scope| {
            let mut accepted = 0usize;
            while max_sessions.is_none_or(|m| accepted < m) {
                let (stream, peer) = self.listener.accept()?;
                accepted += 1;
                scope.spawn(move || on_session(self.session(stream, peer)));
            }
            Ok(())
        })
    }

    /// Handles exactly `n` sessions and returns their results in completion order.
    pub fn serve_n(&self, n: usize) -> Result<Vec<SessionResult>> {
        let results = Mutex::new(Vec::with_capacity(n));
        self.serve(Some(n), &|r| results.lock().expect("not poisoned").push(r))?;
        Ok(results.into_inner().expect("not poisoned"))
    }

    fn session(&self, mut stream: TcpStream, peer: SocketAddr) -> SessionResult {
        let mut name = None;
        let outcome = (|| {
            stream.set_read_timeout(Some(SESSION_TIMEOUT))?;
            let frame = TransferFrame::read_from(&mut stream, self.max_payload)?;
            name = Some(frame.name.clone());
            if frame.command != Command::Put {
                return Err(Error::BadCommand(frame.command as u8));
            }
            self.receive(&frame)
        })();
        let reply = match &outcome {
            Ok(got) => TransferFrame::new(Command::Ack, "", got.digest.to_vec()),
            Err(e) => TransferFrame::new(Command::Err, "", e.to_string().into_bytes()),
        };
        // The peer may already be gone; the session outcome stands either way.
        if let Ok(bytes) = reply.encode() {
            let _ = stream.write_all(&bytes).and_then(|_| stream.flush());
        }
        SessionResult {
            peer: Some(peer),
            name,
            outcome,
        }
    }

    fn receive(&self, frame: &TransferFrame) -> Result<ReceivedFile> {
        let file_name = sanitize_name(&frame.name)?;
        let env = MaskedEnvelope::from_bytes(&frame.payload)?;
        let recipe = self.store.get_recipe(&env.header.recipe_id)?;
        let plain = Pipeline::new(&recipe, &self.store)?.decrypt(&env)?;

        let dest = self.out_dir.join(&file_name);
        let tmp = self.out_dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let written = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&plain)?;
            f.sync_all()?;
            fs::rename(&tmp, &dest)
        })();
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        Ok(ReceivedFile {
            path: dest,
            bytes: plain.len() as u64,
            digest: env.header.digest,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodecSpec;
    use crate::keystage::{generate_keypair, PackMode, Tier1Params};
    use crate::seriesmask::{SeriesKind, SeriesSpec};
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};

    #[test]
    fn minimal_frame_is_49_bytes() {
        let wire = frame_encode("a", b"").unwrap();
        assert_eq!(wire.len(), 49);
        assert_eq!(&wire[..8], b"TTEA\x01\x01\x00\x01");
        assert_eq!(&wire[9..17], &[0u8; 8]);
        let f = frame_decode(&wire).unwrap();
        assert_eq!(
            (f.command, f.name.as_str(), f.payload.len()),
            (Command::Put, "a", 0)
        );
    }

    #[test]
    fn payload_length_field() {
        let wire = frame_encode("f", &vec![7u8; 11 * 1024]).unwrap();
        assert_eq!(u64::from_be_bytes(wire[9..17].try_into().unwrap()), 11264);
    }

    #[test]
    fn malformed_frames() {
        let wire = frame_encode("name", b"some payload").unwrap();
        let mut bad = wire.clone();
        bad[0] ^= 0xff;
        assert_eq!(frame_decode(&bad).unwrap_err().code(), "ERR_BAD_MAGIC");
        let mut bad = wire.clone();
        bad[4] = 2;
        assert_eq!(frame_decode(&bad).unwrap_err().code(), "ERR_BAD_VERSION");
        let mut bad = wire.clone();
        bad[5] = 9;
        assert_eq!(frame_decode(&bad).unwrap_err().code(), "ERR_BAD_COMMAND");
        let mid = 4 + 1 + 1 + 2 + 4 + 8 + 6;
        assert_eq!(
            frame_decode(&wire[..mid]).unwrap_err().code(),
            "ERR_TRUNCATED"
        );
        assert_eq!(
            frame_decode(&wire[..3]).unwrap_err().code(),
            "ERR_TRUNCATED"
        );
        let mut bad = wire.clone();
        bad[20] ^= 1;
        assert_eq!(
            frame_decode(&bad).unwrap_err().code(),
            "ERR_DIGEST_MISMATCH"
        );
        let mut long = wire.clone();
        long.push(0);
        assert!(frame_decode(&long).is_err());
        assert_eq!(
            frame_encode(&"x".repeat(70_000), b"").unwrap_err().code(),
            "ERR_NAME_TOO_LONG"
        );
    }

    #[test]
    fn oversized_payload_rejected_before_reading() {
        let mut wire = frame_encode("a", b"").unwrap();
        wire[9..17].copy_from_slice(&u64::MAX.to_be_bytes());
        let err = TransferFrame::read_from(&mut &wire[..], 1024).unwrap_err();
        assert_eq!(err.code(), "ERR_PAYLOAD_TOO_LARGE");
    }

    #[test]
    fn names_are_sanitized() {
        assert_eq!(sanitize_name("dir/sub/file.txt").unwrap(), "file.txt");
        assert_eq!(sanitize_name("..\\evil").unwrap(), "evil");
        for bad in ["", "..", "a/..", "x/", ".tmp-1-2", "a\nb"] {
            assert!(sanitize_name(bad).is_err(), "{bad:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn frame_roundtrip(name in "\\PC{0,40}", payload in proptest::collection::vec(any::<u8>(), 0..512), cmd in 1u8..=3) {
            let f = TransferFrame::new(Command::try_from(cmd).unwrap(), name, payload);
            let wire = f.encode().unwrap();
            prop_assert_eq!(wire.len(), FRAME_OVERHEAD + f.name.len() + f.payload.len());
            prop_assert_eq!(frame_decode(&wire).unwrap(), f);
        }
    }

    fn setup() -> (tempfile::TempDir, Store, Recipe) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path().join("store")).unwrap();
        let key = generate_keypair("k", 64, b"transfer").unwrap();
        store.put_key(&key, false).unwrap();
        let recipe = Recipe {
            recipe_id: "r".into(),
            version: 1,
            tier1: Tier1Params::textbook(34u32, PackMode::BigEndian),
            key_id: "k".into(),
            base: 2,
            codec: CodecSpec::B4B5,
            series: SeriesSpec::new(SeriesKind::Sin, 3).unwrap(),
        };
        store.put_recipe(&recipe, false).unwrap();
        (dir, store, recipe)
    }

    fn run(
        data: &[u8],
        receiver_has_recipe: bool,
    ) -> (tempfile::TempDir, Result<TransferReport>, SessionResult) {
        let (dir, sender_store, recipe) = setup();
        let receiver_store = if receiver_has_recipe {
            sender_store.clone()
        } else {
            let recv = Store::open(dir.path().join("recv")).unwrap();
            recv.put_key(&sender_store.get_key("k").unwrap(), false)
                .unwrap();
            recv
        };
        let server = Server::bind("127.0.0.1:0", receiver_store, dir.path().join("out")).unwrap();
        let addr = server.local_addr().unwrap();
        let handle = std::thread::spawn(move || server.serve_n(1).unwrap());
        let report = send_bytes(addr, "payload.bin", data, &recipe, &sender_store);
        let mut sessions = handle.join().unwrap();
        (dir, report, sessions.pop().unwrap())
    }

    #[test]
    fn loopback_transfer() {
        let mut data = vec![0u8; 3000];
        rand_chacha::ChaCha8Rng::seed_from_u64(1).fill_bytes(&mut data);
        let (dir, report, session) = run(&data, true);
        let report = report.unwrap();
        let got = session.outcome.unwrap();
        assert_eq!(fs::read(dir.path().join("out/payload.bin")).unwrap(), data);
        assert_eq!(got.digest, report.digest);
        assert_eq!(report.file_bytes, 3000);
    }

    #[test]
    fn empty_file_transfer() {
        let (dir, report, _) = run(b"", true);
        assert_eq!(report.unwrap().blocks, 0);
        assert_eq!(fs::read(dir.path().join("out/payload.bin")).unwrap(), b"");
    }

    #[test]
    fn missing_recipe_yields_err_and_no_file() {
        let (dir, report, session) = run(b"secret data", false);
        let err = report.unwrap_err();
        assert_eq!(err.code(), "ERR_REMOTE");
        assert!(err.to_string().contains("ERR_NOT_FOUND"), "{err}");
        assert_eq!(session.outcome.unwrap_err().code(), "ERR_NOT_FOUND");
        assert_eq!(fs::read_dir(dir.path().join("out")).unwrap().count(), 0);
    }
}
