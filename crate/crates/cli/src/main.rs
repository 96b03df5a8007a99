use std::fmt::Write as _;
use std::io::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hkt_core::container::{self, CodecId, Config, ContainerReader, Role, StreamId};
use hkt_core::mix::Profile;
use hkt_core::{bench, referential, Error};

#[derive(Parser)]
#[command(name = "hkt", version, about = "Stream-factorized FASTA/FASTQ compressor")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a FASTA/FASTQ file into a container.
    Pack {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        opts: PackOpts,
    },
    /// Restore the original file from a container.
    Unpack {
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Print the stream table, block index and record table.
    List { input: PathBuf },
    /// Extract part of one record's sequence without full decompression.
    Slice {
        input: PathBuf,
        /// Record number, starting at 0.
        #[arg(long)]
        record: usize,
        /// Half-open symbol range START..END within the record.
        #[arg(long, value_parser = parse_range)]
        range: Range<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Report decoded block counts on standard error.
        #[arg(long)]
        stats: bool,
    },
    /// Encode a file relative to a reference file.
    Refpack {
        input: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        opts: PackOpts,
    },
    /// Decode a referential container with its reference.
    Refunpack {
        input: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Time compression and decompression of a file.
    Bench {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        repeat: u32,
        #[command(flatten)]
        opts: PackOpts,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum NucCodec {
    Bwt,
    Mix,
    Lz,
    Raw,
}

#[derive(Copy, Clone, ValueEnum)]
enum ProfileArg {
    Full,
    Lite,
}

#[derive(Args)]
struct PackOpts {
    #[arg(long, value_enum, default_value = "bwt")]
    nuc_codec: NucCodec,
    #[arg(long, value_enum, default_value = "lite")]
    profile: ProfileArg,
    /// Raw bytes per block.
    #[arg(long, default_value_t = container::DEFAULT_BLOCK_SIZE)]
    block_size: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl PackOpts {
    fn config(&self) -> Config {
        let nuc = match self.nuc_codec {
            NucCodec::Bwt => CodecId::BwtCm,
            NucCodec::Mix => CodecId::MarkovMix,
            NucCodec::Lz => CodecId::LzExt,
            NucCodec::Raw => CodecId::Raw,
        };
        let mut c = Config::default().with_nuc_codec(nuc);
        c.profile = match self.profile {
            ProfileArg::Full => Profile::Full,
            ProfileArg::Lite => Profile::Lite,
        };
        c.block_size = self.block_size;
        c.threads = self.threads;
        c
    }
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let a = a.parse::<u64>().map_err(|e| e.to_string())?;
    let b = b.parse::<u64>().map_err(|e| e.to_string())?;
    if a > b {
        return Err("START must not exceed END".into());
    }
    Ok(a..b)
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: Option<&Path>, data: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, data)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(data)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn width_name(w: Option<hkt_core::pack::Width>) -> String {
    w.map_or("none".into(), |w| w.bits().to_string())
}

fn list(c: &ContainerReader) -> String {
    let h = &c.header;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "container bytes={} referential={} nuc_width={} profile={} block_size={} records={}",
        c.container_len(),
        h.referential,
        width_name(h.nuc_width),
        match h.profile {
            Profile::Full => "full",
            Profile::Lite => "lite",
        },
        h.block_size,
        c.index.records.len()
    );
    if let Some(r) = &c.index.reference {
        let _ = writeln!(s, "reference name={} hash={:016x}", r.name, r.hash);
    }
    let _ = writeln!(s, "{:<16} {:<11} {:>14} {:>14} {:>7}", "stream", "codec", "raw", "compressed", "blocks");
    for e in &c.index.streams {
        let _ = writeln!(s, "{:<16} {:<11} {:>14} {:>14} {:>7}", e.label(), e.codec.name(), e.raw_len, e.comp_len(), e.blocks.len());
    }
    for e in &c.index.streams {
        for (j, b) in e.blocks.iter().enumerate() {
            let _ = writeln!(
                s,
                "block {} {j} offset={} compressed={} raw={} checksum={:016x}",
                e.label(),
                b.offset,
                b.comp_len,
                b.raw_len,
                b.checksum
            );
        }
    }
    for (i, r) in c.index.records.iter().enumerate() {
        let _ = writeln!(s, "record {i} nuc_len={} case_len={}", r.nuc_len, r.case_len);
    }
    s
}

fn run(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Pack { input, output, opts } => {
            let data = read(&input)?;
            let packed = container::compress_file(&data, &opts.config())?;
            write(Some(&output.unwrap_or_else(|| with_ext(&input, ".hkt"))), &packed)
        }
        Cmd::Unpack { input, output, threads } => {
            let data = read(&input)?;
            write(output.as_deref(), &container::decompress_file_with(&data, threads)?)
        }
        Cmd::List { input } => {
            let data = read(&input)?;
            write(None, list(&ContainerReader::open(&data)?).as_bytes())
        }
        Cmd::Slice { input, record, range, output, stats } => {
            let data = read(&input)?;
            let c = ContainerReader::open(&data)?;
            let seq = c.slice(record, range)?;
            if stats {
                eprintln!(
                    "decoded_blocks NUC={} CASE={} EXTRA={}",
                    c.decode_count(StreamId::Nuc),
                    c.decode_count(StreamId::Case),
                    c.decode_count(StreamId::Extra)
                );
            }
            let mut seq = seq;
            if output.is_none() {
                seq.push(b'\n');
            }
            write(output.as_deref(), &seq)
        }
        Cmd::Refpack { input, reference, output, opts } => {
            let target = read(&input)?;
            let refdata = read(&reference)?;
            let name = reference.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let packed = referential::diff_container(&refdata, &name, &target, &opts.config())?;
            let c = ContainerReader::open(&packed)?;
            let nuc_len: u64 = c.index.records.iter().map(|r| r.nuc_len).sum();
            let lit = c.find(StreamId::Nuc, Role::Literals).map_or(0, |i| c.index.streams[i].raw_len);
            let patch: u64 = [Role::Script, Role::Literals]
                .iter()
                .filter_map(|&r| c.find(StreamId::Nuc, r))
                .map(|i| c.index.streams[i].comp_len())
                .sum();
            if nuc_len > 0 {
                let p = lit as f64 / nuc_len as f64;
                eprintln!(
                    "nuc_symbols={nuc_len} nuc_patch_bytes={patch} nuc_patch_bits_per_symbol={:.5} literal_rate={p:.5} bound_bits_per_symbol={:.5}",
                    8.0 * patch as f64 / nuc_len as f64,
                    referential::conditional_entropy_bound(p, 4)
                );
            }
            write(Some(&output.unwrap_or_else(|| with_ext(&input, ".hkr"))), &packed)
        }
        Cmd::Refunpack { input, reference, output, threads } => {
            let data = read(&input)?;
            let refdata = read(&reference)?;
            let out = container::with_threads(threads, || referential::reconstruct(&refdata, &data))??;
            write(output.as_deref(), &out)
        }
        Cmd::Bench { input, repeat, opts } => {
            let data = read(&input)?;
            let r = bench::run(&data, &opts.config(), repeat)?;
            write(None, format!("{}\n{}", r.to_text(), r.to_kv()).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(1)
        }
    }
}
