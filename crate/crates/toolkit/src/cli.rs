//! The `vabe` command line.
//!
//! Exit status is 0 on success, 1 when a cryptographic check or policy
//! test fails, and 2 for usage mistakes, unreadable files and files that do
//! not decode. Errors go to stderr as `E_<KIND>: message`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_core::OsRng;
use vabe_core::abe::{keygen, setup, MasterSecret, PrivateKey, PublicParams};
use vabe_core::envelope::{
    self, decode, encode, open_local, open_outsourced, peek_role, seal, Artifact, EnvelopeFile, Role,
};
use vabe_core::groups::GroupDescription;
use vabe_core::policy::attribute_set;
use vabe_core::vout::{self, Ciphertext, CiphertextHeader, RetrieveKey, TransformKey, TransformedCiphertext};
use vabe_core::Error;

use crate::bench::{bench_run, BenchConfig, Operation};
use crate::proxy::{AdversaryMode, ClientError, ErrorCode, ProxyClient, ProxyServer};

pub const CURVE_ENV: &str = "VABE_CURVE";

#[derive(Parser, Debug)]
#[command(name = "vabe", version, about = "Attribute-based encryption with verifiable outsourced decryption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate public parameters and a master secret
    Setup {
        #[arg(long, default_value = "pub.vabe")]
        pk: PathBuf,
        #[arg(long, default_value = "master.vabe")]
        msk: PathBuf,
    },
    /// Issue a private key for a set of attributes
    Keygen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        msk: PathBuf,
        /// Comma-separated attributes
        #[arg(long)]
        attrs: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt a file under a policy
    Enc {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        policy: String,
        /// Defaults to INPUT.vabe
        #[arg(long)]
        out: Option<PathBuf>,
        input: PathBuf,
    },
    /// Decrypt an envelope with a private key
    Dec {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        input: PathBuf,
    },
    /// Split a private key into a transformation key and a retrieve key
    Tkgen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long)]
        tk: PathBuf,
        #[arg(long)]
        rk: PathBuf,
    },
    /// Transform an envelope or ciphertext, locally or through a proxy
    Transform {
        #[arg(long)]
        pk: Option<PathBuf>,
        #[arg(long)]
        tk: PathBuf,
        /// HOST:PORT of a running proxy
        #[arg(long)]
        proxy: Option<String>,
        #[arg(long)]
        out: PathBuf,
        input: PathBuf,
    },
    /// Finish decryption from a transformed ciphertext
    Outdec {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        rk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        envelope: PathBuf,
        ct_prime: PathBuf,
    },
    /// Describe any vabe file
    Inspect { file: PathBuf },
    /// Time and count the scheme's operations
    Bench {
        #[arg(long, default_value_t = crate::bench::DEFAULT_REPS)]
        reps: usize,
        /// Write the report here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Comma-separated sizes
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
    },
    /// Serve transformation requests
    Proxy {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long, default_value = "honest")]
        mode: AdversaryMode,
    },
}

/// A failure reported to the user.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { exit: 2, kind, message: message.into() }
    }

    fn domain(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { exit: 1, kind, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotSatisfied => Failure::domain("E_NOT_SATISFIED", msg),
            Error::VerificationFailed => Failure::domain("E_VERIFY_FAIL", msg),
            Error::AeadFailure => Failure::domain("E_AEAD_FAIL", msg),
            Error::RetrieveKeyMismatch => Failure::domain("E_KEY_MISMATCH", msg),
            Error::Inconsistent(_) => Failure::domain("E_INCONSISTENT", msg),
            Error::EmptyAttributes => Failure::usage("E_EMPTY_ATTRS", msg),
            Error::Policy(_) => Failure::usage("E_POLICY", msg),
            Error::PayloadTooLarge(_) => Failure::usage("E_TOO_LARGE", msg),
            Error::WrongRole { .. } => Failure::usage("E_WRONG_ROLE", msg),
            Error::WrongCurve(_) => Failure::usage("E_WRONG_CURVE", msg),
            Error::MalformedEncoding { .. } | Error::MalformedEnvelope(_) => Failure::usage("E_MALFORMED", msg),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Remote { code: ErrorCode::NotSatisfied, message } => {
                Failure::domain("E_NOT_SATISFIED", format!("proxy: {message}"))
            }
            ClientError::Remote { code, message } => Failure::usage("E_PROXY", format!("{code:?}: {message}")),
            ClientError::Decode(e) => Failure::from(e),
            other => Failure::usage("E_PROXY", other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::usage("E_IO", format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| Failure::usage("E_IO", format!("{}: {e}", path.display())))
}

fn load<T: Artifact>(path: &Path) -> CliResult<T> {
    decode(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_envelope(path: &Path) -> CliResult<EnvelopeFile> {
    EnvelopeFile::from_bytes(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// The curve selected by `VABE_CURVE`, by name or numeric id.
pub fn selected_curve() -> CliResult<GroupDescription> {
    let Some(raw) = std::env::var_os(CURVE_ENV) else {
        return Ok(GroupDescription::bls12_381());
    };
    let raw = raw.to_string_lossy();
    let by_id = || {
        let id = match raw.strip_prefix("0x") {
            Some(hex) => u8::from_str_radix(hex, 16).ok()?,
            None => raw.parse().ok()?,
        };
        GroupDescription::by_id(id)
    };
    GroupDescription::by_name(&raw)
        .or_else(by_id)
        .ok_or_else(|| Failure::usage("E_WRONG_CURVE", format!("{CURVE_ENV}={raw} is not a supported curve")))
}

fn check_curve(pp: &PublicParams, curve: &GroupDescription) -> CliResult {
    if pp.group.curve_id != curve.curve_id {
        return Err(Failure::usage("E_WRONG_CURVE", format!("public parameters are for {}", pp.group.name)));
    }
    Ok(())
}

fn split_attrs(csv: &str) -> CliResult<Vec<String>> {
    let attrs: Vec<String> = csv.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect();
    if attrs.is_empty() {
        return Err(Failure::usage("E_EMPTY_ATTRS", "--attrs lists no attributes"));
    }
    Ok(attrs)
}

fn describe(bytes: &[u8]) -> CliResult<String> {
    let role = peek_role(bytes)?;
    let mut out = format!("role: {} ({:#04x})\nsize: {} bytes\n", role.name(), role as u8, bytes.len());
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    match role {
        Role::PublicParams => {
            let pp: PublicParams = decode(bytes)?;
            line(format!("curve: {} ({:#04x})", pp.group.name, pp.group.curve_id));
        }
        Role::MasterSecret => {
            decode::<MasterSecret>(bytes)?;
        }
        Role::PrivateKey => {
            let sk: PrivateKey = decode(bytes)?;
            line(format!("key_id: {}", hex::encode(sk.key_id)));
            line(format!("attributes: {}", sk.attributes().into_iter().collect::<Vec<_>>().join(",")));
        }
        Role::TransformKey => {
            let tk: TransformKey = decode(bytes)?;
            line(format!("key_id: {}", hex::encode(tk.key_id)));
            line(format!("attributes: {}", tk.attributes().into_iter().collect::<Vec<_>>().join(",")));
        }
        Role::RetrieveKey => {
            let rk: RetrieveKey = decode(bytes)?;
            line(format!("key_id: {}", hex::encode(rk.key_id)));
        }
        Role::Ciphertext => {
            let ct: Ciphertext = decode(bytes)?;
            line(format!("policy: {}", ct.policy.source_text()));
            line(format!("matrix: {} x {}", ct.policy.rows(), ct.policy.cols()));
        }
        Role::Header => {
            let h: CiphertextHeader = decode(bytes)?;
            line(format!("policy_digest: {}", hex::encode(h.policy_digest)));
        }
        Role::TransformedCiphertext => {
            let ctp: TransformedCiphertext = decode(bytes)?;
            line(format!("key_id: {}", hex::encode(ctp.key_id)));
        }
        Role::Envelope => {
            let env = EnvelopeFile::from_bytes(bytes)?;
            line(format!("policy: {}", env.ciphertext.policy.source_text()));
            line(format!("matrix: {} x {}", env.ciphertext.policy.rows(), env.ciphertext.policy.cols()));
            line(format!("suite: {:#04x}", env.dem.suite_id));
            line(format!("payload: {} bytes", env.dem.body.len() - envelope::TAG_LEN));
        }
    }
    Ok(out)
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> CliResult {
    let curve = selected_curve()?;
    let mut rng = OsRng;
    match cmd {
        Command::Setup { pk, msk } => {
            let (pp, master) = setup(&mut rng);
            check_curve(&pp, &curve)?;
            write(&pk, &encode(&pp))?;
            write(&msk, &encode(&master))?;
        }
        Command::Keygen { pk, msk, attrs, out } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let master: MasterSecret = load(&msk)?;
            if !master.is_consistent_with(&pp) {
                return Err(Failure::usage("E_KEY_MISMATCH", "master secret does not belong to these parameters"));
            }
            let sk = keygen(&pp, &master, &attribute_set(split_attrs(&attrs)?), &mut rng)?;
            write(&out, &encode(&sk))?;
        }
        Command::Enc { pk, policy, out, input } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let payload = read(&input)?;
            let env = seal(&pp, &policy, &payload, &mut rng)?;
            let out = out.unwrap_or_else(|| {
                let mut p = input.into_os_string();
                p.push(".vabe");
                p.into()
            });
            write(&out, &env.to_bytes())?;
        }
        Command::Dec { pk, sk, out, input } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let sk: PrivateKey = load(&sk)?;
            let env = load_envelope(&input)?;
            write(&out, &open_local(&pp, &sk, &env)?)?;
        }
        Command::Tkgen { pk, sk, tk, rk } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let sk: PrivateKey = load(&sk)?;
            let (t, r) = vout::gen_tk(&pp, &sk, &mut rng);
            write(&tk, &encode(&t))?;
            write(&rk, &encode(&r))?;
        }
        Command::Transform { pk, tk, proxy, out, input } => {
            let tk: TransformKey = load(&tk)?;
            let bytes = read(&input)?;
            let ct = match peek_role(&bytes)? {
                Role::Envelope => EnvelopeFile::from_bytes(&bytes)?.ciphertext,
                _ => decode::<Ciphertext>(&bytes)?,
            };
            let ctp = match (proxy, pk) {
                (Some(addr), _) => {
                    let mut client = ProxyClient::connect(&addr)
                        .map_err(|e| Failure::usage("E_PROXY", format!("{addr}: {e}")))?;
                    client.register_tk(&tk)?;
                    client.transform(&tk.key_id, &ct)?
                }
                (None, Some(pk)) => {
                    let pp: PublicParams = load(&pk)?;
                    check_curve(&pp, &curve)?;
                    vout::transform(&pp, &ct, &tk)?
                }
                (None, None) => return Err(Failure::usage("E_USAGE", "transform needs --pk or --proxy")),
            };
            write(&out, &encode(&ctp))?;
        }
        Command::Outdec { pk, rk, out, envelope, ct_prime } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let rk: RetrieveKey = load(&rk)?;
            let env = load_envelope(&envelope)?;
            let ctp: TransformedCiphertext = load(&ct_prime)?;
            write(&out, &open_outsourced(&pp, &env.header(), &ctp, &rk, &env.dem)?)?;
        }
        Command::Inspect { file } => {
            let text = describe(&read(&file)?).map_err(|mut f| {
                f.message = format!("{}: {}", file.display(), f.message);
                f
            })?;
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::usage("E_IO", e.to_string()))?;
        }
        Command::Bench { reps, csv, grid } => {
            let mut config = BenchConfig { reps, ..BenchConfig::default() };
            if let Some(grid) = grid {
                config.grid = grid;
            }
            let report = bench_run(&config, &mut rng);
            match csv {
                Some(path) => write(&path, report.to_csv().as_bytes())?,
                None => stdout.write_all(report.to_csv().as_bytes()).map_err(|e| Failure::usage("E_IO", e.to_string()))?,
            }
            for op in [Operation::Keygen, Operation::Encrypt] {
                if let Some(fit) = report.fit(op) {
                    eprintln!("fit {op}: {:.3} us/n + {:.3} us, r2 = {:.4}", fit.slope * 1e6, fit.intercept * 1e6, fit.r2);
                }
            }
            if let Some(row) = report.mismatches().first() {
                return Err(Failure::domain(
                    "E_COUNT_MISMATCH",
                    format!("{} n={} counted {}", row.op, row.n, row.counter),
                ));
            }
        }
        Command::Proxy { pk, listen, mode } => {
            let pp: PublicParams = load(&pk)?;
            check_curve(&pp, &curve)?;
            let server =
                ProxyServer::bind(&listen, pp, mode).map_err(|e| Failure::usage("E_IO", format!("{listen}: {e}")))?;
            let addr = server.local_addr().map_err(|e| Failure::usage("E_IO", e.to_string()))?;
            eprintln!("listening on {addr} mode={mode}");
            server.serve().map_err(|e| Failure::usage("E_IO", e.to_string()))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}: {}", f.kind, f.message);
            f.exit
        }
    }
}
