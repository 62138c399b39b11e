//! `pirrag`: build, serve, query and benchmark a private retrieval index.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use pirrag_core::eval::gen_synthetic_corpus;
use pirrag_core::index::write_corpus;
use pirrag_core::service::serve;
use pirrag_core::{
    load_corpus, load_index, run_benchmark, save_index, BenchConfig, Client, EntryMode, IndexConfig, PirIndex,
    PirServer, SearchOptions, System, TcpTransport,
};

#[derive(Parser)]
#[command(name = "pirrag", version, about = "Private document retrieval with cluster-and-fetch PIR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a JSONL corpus and write a served index.
    BuildIndex(BuildArgs),
    /// Serve an index over TCP.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
    /// Run one private query against a server.
    Query(QueryArgs),
    /// Run a benchmark sweep and write CSV plus a JSON summary.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// JSON summary path; defaults to the CSV path with a .json extension.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write a synthetic clustered corpus as JSONL.
    GenCorpus(GenArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cluster count; defaults to round(sqrt(N)).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 256)]
    chunk_size: usize,
    #[arg(long, default_value_t = 1024)]
    lwe_dim: usize,
    /// Seed for clustering and the public matrices. Without it the public
    /// matrices are freshly random.
    #[arg(long)]
    seed: Option<u64>,
    /// Add the graph baseline's node matrix.
    #[arg(long)]
    graph: bool,
    #[arg(long, default_value_t = 16)]
    degree: usize,
    /// Add the scoring baseline's embedding matrices.
    #[arg(long)]
    scoring: bool,
    /// Omit the per-document content matrix.
    #[arg(long)]
    no_docs: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    server: String,
    /// A file holding the query vector, or the vector inline as
    /// comma-separated numbers.
    #[arg(long, allow_hyphen_values = true)]
    embedding: String,
    #[arg(long, default_value_t = 10)]
    topk: usize,
    /// pir-rag, graph or tiptoe.
    #[arg(long, default_value = "pir-rag")]
    system: System,
    #[arg(long, default_value_t = 4)]
    hops: usize,
    #[arg(long, default_value_t = 8)]
    beam: usize,
    /// Graph entry: routed, medoid, or a node index.
    #[arg(long, default_value = "routed")]
    entry: String,
    /// Privately fetch content for baseline results.
    #[arg(long)]
    fetch_content: bool,
    /// Print the query trace as JSON on stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_docs: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    n_blobs: usize,
    #[arg(long, default_value_t = 0.15)]
    blob_std: f64,
    #[arg(long, default_value_t = 32)]
    text_len: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_vector(s: &str) -> Result<Vec<f32>> {
    let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
    let v = trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f32>().with_context(|| format!("bad number '{t}'")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty embedding");
    }
    Ok(v)
}

fn read_embedding(arg: &str) -> Result<Vec<f32>> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        parse_vector(&text)
    } else {
        parse_vector(arg)
    }
}

fn parse_entry(s: &str) -> Result<EntryMode> {
    Ok(match s {
        "routed" => EntryMode::Routed,
        "medoid" => EntryMode::Medoid,
        n => EntryMode::Node(n.parse().with_context(|| format!("bad entry '{n}'"))?),
    })
}

fn build_index(a: BuildArgs) -> Result<()> {
    let records = load_corpus(&a.corpus).with_context(|| format!("loading {}", a.corpus.display()))?;
    let mut cfg = IndexConfig {
        k: a.k,
        chunk_size: a.chunk_size,
        lwe_dim: a.lwe_dim,
        with_docs: !a.no_docs,
        with_graph: a.graph,
        graph_degree: a.degree,
        with_scoring: a.scoring,
        ..IndexConfig::default()
    };
    if let Some(seed) = a.seed {
        cfg = cfg.seeded(seed);
    }
    let (index, t) = PirIndex::build_timed(&records, &cfg)?;
    save_index(&index, &a.out)?;
    println!(
        "indexed {} docs into {} clusters ({} x {} cluster matrix) in {:.1?} -> {}",
        index.n_docs(),
        index.k(),
        index.cluster.chunks.m_rows(),
        index.k(),
        t.kmeans + t.clusters + t.docs + t.graph + t.scoring,
        a.out.display()
    );
    Ok(())
}

fn query(a: QueryArgs) -> Result<()> {
    let embedding = read_embedding(&a.embedding)?;
    let transport = TcpTransport::connect(&a.server).with_context(|| format!("connecting to {}", a.server))?;
    let seed = a.seed.unwrap_or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    let mut client = Client::connect(transport, a.system.sections(), seed)?;
    let opts = SearchOptions {
        top_k: a.topk,
        hops: a.hops,
        beam: a.beam,
        entry: parse_entry(&a.entry)?,
        fetch_content: a.fetch_content,
    };
    let (results, trace) = client.search(a.system, &embedding, &opts)?;
    for (rank, r) in results.iter().enumerate() {
        println!("{}\t{}\t{:.6}\t{}", rank + 1, r.doc_id, r.score, r.text);
    }
    if a.trace {
        eprintln!("{}", trace.to_json());
    }
    Ok(())
}

fn bench(config: Option<PathBuf>, out: PathBuf, summary: Option<PathBuf>) -> Result<()> {
    let cfg = match config {
        Some(p) => BenchConfig::load(&p).with_context(|| format!("loading {}", p.display()))?,
        None => BenchConfig::default(),
    };
    let report = run_benchmark(&cfg)?;
    report.write_csv(BufWriter::new(File::create(&out)?))?;
    let summary = summary.unwrap_or_else(|| out.with_extension("json"));
    std::fs::write(&summary, report.to_json()?)?;
    let failed = report.rows.iter().filter(|r| !r.is_ok()).count();
    println!(
        "{} rows ({failed} failed) -> {} and {}",
        report.rows.len(),
        out.display(),
        summary.display()
    );
    if let Some(fit) = &report.scaling {
        println!("{}", serde_json::to_string(fit)?);
    }
    Ok(())
}

fn gen_corpus(a: GenArgs) -> Result<()> {
    let records = gen_synthetic_corpus(a.n_docs, a.dim, a.n_blobs, a.blob_std, a.text_len, a.seed)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    write_corpus(&mut w, &records)?;
    w.flush()?;
    println!("wrote {} docs to {}", records.len(), a.out.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::BuildIndex(a) => build_index(a),
        Command::Serve { index, listen } => {
            let index = load_index(&index).with_context(|| format!("loading {}", index.display()))?;
            let listener = TcpListener::bind(&listen)?;
            info!(
                "serving {} docs in {} clusters on {}",
                index.n_docs(),
                index.k(),
                listener.local_addr()?
            );
            serve(listener, Arc::new(PirServer::new(index)))?;
            Ok(())
        }
        Command::Query(a) => query(a),
        Command::Bench { config, out, summary } => bench(config, out, summary),
        Command::GenCorpus(a) => gen_corpus(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse_in_common_shapes() {
        assert_eq!(parse_vector("0.5,1,-2").unwrap(), vec![0.5, 1.0, -2.0]);
        assert_eq!(parse_vector("[0.5, 1]\n").unwrap(), vec![0.5, 1.0]);
        assert_eq!(parse_vector("1 2\n3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_vector("").is_err());
        assert!(parse_vector("1,x").is_err());
    }

    #[test]
    fn entries_parse() {
        assert_eq!(parse_entry("routed").unwrap(), EntryMode::Routed);
        assert_eq!(parse_entry("medoid").unwrap(), EntryMode::Medoid);
        assert_eq!(parse_entry("12").unwrap(), EntryMode::Node(12));
        assert!(parse_entry("x").is_err());
    }
}
