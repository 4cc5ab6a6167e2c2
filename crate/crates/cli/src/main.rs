use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tiercrypt::keystage::{generate_keypair, DEFAULT_PRIME_BITS, PAPER_SCALAR_FACTOR};
use tiercrypt::pipeline::{pipeline_decrypt, pipeline_encrypt, MaskedEnvelope, Recipe, Store};
use tiercrypt::report::run_bench;
use tiercrypt::seriesmask::DEFAULT_SERIES_TERMS;
use tiercrypt::transfer::{self, Server, DEFAULT_PORT};
use tiercrypt::{Error, Result};

/// Layered file encryption with a recipe store and TCP transfer.
#[derive(Parser)]
#[command(name = "tiercrypt", version, arg_required_else_help = true)]
struct Cli {
    /// Recipe and key store directory.
    #[arg(
        long,
        global = true,
        env = "TIERCRYPT_STORE",
        default_value = ".tiercrypt"
    )]
    store: PathBuf,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an RSA key pair into the store.
    Keygen {
        /// Bits per prime; the modulus is twice this.
        #[arg(long, default_value_t = DEFAULT_PRIME_BITS)]
        bits: u64,
        #[arg(long)]
        id: String,
        /// Derive the key from this seed instead of fresh randomness.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Manage recipes.
    #[command(subcommand, arg_required_else_help = true)]
    Recipe(RecipeCmd),
    /// Encrypt a file into an envelope.
    Encode(FileArgs),
    /// Decrypt an envelope.
    Decode(FileArgs),
    /// Encrypt a file and send it to a server.
    Send {
        /// Host or host:port.
        #[arg(long)]
        to: String,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        recipe: String,
        #[arg(long, env = "TIERCRYPT_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
    },
    /// Receive files, decrypting them into a directory.
    Serve {
        /// Address or address:port.
        #[arg(long, default_value = "127.0.0.1")]
        listen: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "TIERCRYPT_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Stop after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long, default_value_t = transfer::DEFAULT_MAX_PAYLOAD)]
        max_payload: u64,
    },
    /// Time a keygen and one encode, printing a JSON report.
    Bench {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        recipe: String,
    },
}

#[derive(Args)]
struct FileArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    recipe: String,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum RecipeCmd {
    /// Create a recipe from flags or from a JSON file.
    New(NewRecipe),
    /// List recipe ids.
    List,
    /// Print a recipe as JSON.
    Show { id: String },
}

#[derive(Args)]
struct NewRecipe {
    #[arg(long, required_unless_present = "from")]
    id: Option<String>,
    #[arg(long, required_unless_present = "from")]
    key: Option<String>,
    /// Read the whole recipe from a JSON file.
    #[arg(long, conflicts_with_all = ["id", "key"])]
    from: Option<PathBuf>,
    /// textbook_rsa or paper_scalar.
    #[arg(long, default_value = "textbook_rsa")]
    mode: String,
    #[arg(long, default_value = "1")]
    salt: String,
    /// Multiplier for paper_scalar mode (default 40).
    #[arg(long)]
    factor: Option<String>,
    /// big_endian, fixed_width3 or paper_variable.
    #[arg(long, default_value = "big_endian")]
    pack: String,
    #[arg(long, default_value_t = 2)]
    base: u32,
    /// B4B5, NRZ_L, NRZ_I, MANCHESTER, DIFF_MANCHESTER, AMI, PSEUDOTERNARY or B8ZS.
    #[arg(long, default_value = "B4B5")]
    codec: String,
    /// Starting level or polarity (+ or -) for codecs that need one.
    #[arg(long, default_value = "+")]
    initial: String,
    /// SIN, COS or EXP.
    #[arg(long, default_value = "SIN")]
    series: String,
    #[arg(long, default_value_t = DEFAULT_SERIES_TERMS)]
    terms: u32,
    #[arg(long)]
    overwrite: bool,
}

impl NewRecipe {
    fn build(&self) -> Result<Recipe> {
        if let Some(path) = &self.from {
            return Recipe::from_json(&fs::read_to_string(path)?);
        }
        let mut tier1 = json!({
            "mode": self.mode,
            "salt": self.salt,
            "pack": self.pack,
            "key_id": self.key,
        });
        let factor = match (&self.factor, self.mode.as_str()) {
            (Some(f), _) => Some(f.clone()),
            (None, "paper_scalar") => Some(PAPER_SCALAR_FACTOR.to_string()),
            (None, _) => None,
        };
        if let Some(f) = factor {
            tier1["factor"] = json!(f);
        }
        let mut codec = json!({ "scheme": self.codec });
        match self.codec.as_str() {
            "NRZ_I" | "DIFF_MANCHESTER" => codec["initial_level"] = json!(self.initial),
            "AMI" | "PSEUDOTERNARY" | "B8ZS" => codec["initial_polarity"] = json!(self.initial),
            _ => {}
        }
        let doc = json!({
            "version": 1,
            "recipe_id": self.id,
            "tier1": tier1,
            "base": self.base,
            "codec": codec,
            "series": { "kind": self.series, "n": self.terms },
        });
        Recipe::from_json(&doc.to_string())
    }
}

/// Appends `port` unless `addr` already names one.
fn with_port(addr: &str, port: u16) -> String {
    if addr.parse::<SocketAddr>().is_ok() {
        return addr.to_owned();
    }
    if let Ok(ip) = addr.parse::<IpAddr>() {
        return SocketAddr::new(ip, port).to_string();
    }
    match addr.rsplit_once(':') {
        Some((_, p)) if p.parse::<u16>().is_ok() => addr.to_owned(),
        _ => format!("{addr}:{port}"),
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(Error::from)
}

fn run(cli: Cli) -> Result<()> {
    let store = Store::open(&cli.store)?;
    match cli.command {
        Cmd::Keygen {
            bits,
            id,
            seed,
            overwrite,
        } => {
            let seed = match seed {
                Some(s) => s.into_bytes(),
                None => rand::random::<[u8; 32]>().to_vec(),
            };
            let key = generate_keypair(&id, bits, &seed)?;
            store.put_key(&key, overwrite)?;
            eprintln!("key {id}: {}-bit modulus, e = {}", key.bits, key.e);
        }
        Cmd::Recipe(RecipeCmd::New(args)) => {
            let recipe = args.build()?;
            store.put_recipe(&recipe, args.overwrite)?;
            eprintln!("recipe {} stored", recipe.recipe_id);
        }
        Cmd::Recipe(RecipeCmd::List) => {
            for id in store.list_recipes()? {
                println!("{id}");
            }
        }
        Cmd::Recipe(RecipeCmd::Show { id }) => println!("{}", store.get_recipe(&id)?.to_json()),
        Cmd::Encode(a) => {
            let recipe = store.get_recipe(&a.recipe)?;
            let data = fs::read(&a.input)?;
            let env = pipeline_encrypt(&data, &recipe, &store)?;
            write_out(&a.out, &env.to_bytes())?;
            eprintln!("{} bytes -> {} blocks", data.len(), env.blocks.len());
        }
        Cmd::Decode(a) => {
            let recipe = store.get_recipe(&a.recipe)?;
            let env = MaskedEnvelope::from_bytes(&fs::read(&a.input)?)?;
            let data = pipeline_decrypt(&env, &recipe, &store)?;
            write_out(&a.out, &data)?;
            eprintln!("{} blocks -> {} bytes", env.blocks.len(), data.len());
        }
        Cmd::Send {
            to,
            file,
            recipe,
            port,
        } => {
            let r = transfer::send_file(with_port(&to, port), &file, &recipe, &store)?;
            eprintln!(
                "sent {} bytes ({} on the wire) to {} in {:.1} ms, digest {}",
                r.file_bytes,
                r.frame_bytes,
                r.peer,
                r.round_trip.as_secs_f64() * 1e3,
                hex_digest(&r.digest)
            );
        }
        Cmd::Serve {
            listen,
            out,
            port,
            sessions,
            max_payload,
        } => {
            let server =
                Server::bind(with_port(&listen, port), store, out)?.with_max_payload(max_payload);
            eprintln!("listening on {}", server.local_addr()?);
            server.serve(sessions, &|s| {
                let peer = s.peer.map_or_else(|| "?".to_owned(), |p| p.to_string());
                match s.outcome {
                    Ok(f) => eprintln!("{peer}: wrote {} ({} bytes)", f.path.display(), f.bytes),
                    Err(e) => eprintln!("{peer}: {e}"),
                }
            })?;
        }
        Cmd::Bench { file, recipe } => {
            let recipe = store.get_recipe(&recipe)?;
            let report = run_bench(&fs::read(&file)?, &recipe, &store)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(Error::from)?
            );
        }
    }
    Ok(())
}

fn hex_digest(d: &[u8]) -> String {
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tiercrypt: {e}");
            ExitCode::from(1)
        }
    }
}
