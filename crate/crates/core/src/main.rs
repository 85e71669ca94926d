use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypc::fd::FdSet;
use hypc::folding::folding;
use hypc::pipeline::{
    check, classes_text, encode_structure, load_trials, read_h0, read_store, read_text, read_udb, run, run_query,
    u_intro, write_store, write_udb, Caps, OutDir, QueryFlags, RunConfig,
};
use hypc::sem::Structure;
use hypc::synth4c::{synthesize_with, Schema, SynthOptions, DEFAULT_CAP_ATTRS};
use hypc::synth4u::U4Options;
use hypc::urel::{Query, DEFAULT_WORLD_CAP};
use hypc::{Error, Result};

/// Hypotheses as data: encode, fold, synthesize, load and query.
#[derive(Parser)]
#[command(name = "hypc", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Output directory; stages write files and a manifest there.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add a key scheme when the synthesized schema has none.
    #[arg(long, global = true)]
    force_lossless: bool,
    #[arg(long, global = true, default_value_t = DEFAULT_WORLD_CAP)]
    cap_worlds: usize,
    #[arg(long, global = true, default_value_t = DEFAULT_CAP_ATTRS)]
    cap_attrs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Structure JSON to its fd encoding and attribute classes.
    Encode { structure: PathBuf },
    /// Folding of a parsimonious fd set.
    Fold { fds: PathBuf },
    /// Schema synthesis plus verdicts.
    Synth { fds: PathBuf },
    /// Verdicts for an existing schema.
    Check {
        fds: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Loads trial CSVs into the schemes of a schema.
    Load {
        /// Encoded (unfolded) fd set of the hypothesis.
        #[arg(long)]
        fds: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Hypothesis id; inferred from the upsilon column when omitted.
        #[arg(long)]
        hypothesis: Option<String>,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// Uncertainty introduction over loaded stores.
    UIntro {
        #[arg(long)]
        h0: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(required = true)]
        stores: Vec<PathBuf>,
    },
    /// Evaluates a query (file or inline text) over a U-relational directory.
    Query {
        db: PathBuf,
        query: String,
        #[arg(long)]
        conf: bool,
        #[arg(long)]
        worlds: bool,
    },
    /// Whole pipeline from a JSON config.
    Run { config: PathBuf },
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn read_fds(path: &Path) -> Result<FdSet> {
    FdSet::parse(&read_text(path)?)
}

fn require_out(g: &Global, what: &str) -> Result<PathBuf> {
    g.out
        .clone()
        .ok_or_else(|| Error::Domain(format!("{what} needs --out")))
}

fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let caps = Caps {
        worlds: g.cap_worlds,
        attrs: g.cap_attrs,
    };
    match &cli.cmd {
        Cmd::Encode { structure } => {
            let s = Structure::from_json(&read_text(structure)?)?;
            let enc = encode_structure(&s)?;
            let classes = classes_text(&enc.classes);
            print!("{}", enc.sigma);
            if let Some(out) = &g.out {
                let mut dir = OutDir::create(out, "encode")?;
                dir.input(structure, &shown(structure))?;
                dir.write("sigma.fd", enc.sigma.to_text().as_bytes())?;
                dir.write("classes.txt", classes.as_bytes())?;
                dir.finish()?;
            } else {
                eprint!("{classes}");
            }
        }
        Cmd::Fold { fds } => {
            let folded = folding(&read_fds(fds)?)?.folded;
            print!("{folded}");
            if let Some(out) = &g.out {
                let mut dir = OutDir::create(out, "fold")?;
                dir.input(fds, &shown(fds))?;
                dir.write("folded.fd", folded.to_text().as_bytes())?;
                dir.finish()?;
            }
        }
        Cmd::Synth { fds } => {
            let sigma = read_fds(fds)?;
            let schema = synthesize_with(
                &sigma,
                SynthOptions {
                    force_lossless: g.force_lossless,
                },
            )?;
            let verdicts = check(&schema, &sigma, caps)?;
            print!("{schema}{}", verdicts.text());
            if let Some(out) = &g.out {
                let mut dir = OutDir::create(out, "synth")?;
                dir.input(fds, &shown(fds))?;
                dir.write("schema.json", (schema.to_json() + "\n").as_bytes())?;
                dir.write("report.txt", format!("{schema}{}", verdicts.text()).as_bytes())?;
                verdicts.record(&mut dir, "");
                dir.finish()?;
            }
        }
        Cmd::Check { fds, schema } => {
            let sigma = read_fds(fds)?;
            let schema = Schema::from_json(&read_text(schema)?, sigma.clone())?;
            print!("{}", check(&schema, &sigma, caps)?.text());
        }
        Cmd::Load {
            fds,
            schema,
            hypothesis,
            csv,
        } => {
            let out = require_out(g, "load")?;
            let sigma = read_fds(fds)?;
            let folded = folding(&sigma)?.folded;
            let schema_path = schema;
            let schema = Schema::from_json(&read_text(schema)?, folded)?;
            let rels = load_trials(&sigma, &schema, csv)?;
            let mut dir = OutDir::create(&out, "load")?;
            dir.input(fds, &shown(fds))?;
            dir.input(schema_path, &shown(schema_path))?;
            for (p, (r, scheme)) in csv.iter().zip(&rels) {
                dir.input(p, &shown(p))?;
                if r.is_empty() {
                    eprintln!("warning: {} has no rows", p.display());
                }
                println!("{} -> {}: {} rows", r.name, scheme, r.len());
            }
            let store = write_store(&mut dir, "", &sigma, &rels, hypothesis.as_deref())?;
            dir.verdict("hypothesis", serde_json::json!(store.hypothesis));
            dir.finish()?;
        }
        Cmd::UIntro { h0, epsilon, stores } => {
            let out = require_out(g, "u-intro")?;
            let mut dir = OutDir::create(&out, "u-intro")?;
            dir.input(h0, &shown(h0))?;
            let loaded = stores.iter().map(|s| read_store(s)).collect::<Result<Vec<_>>>()?;
            let db = u_intro(&read_h0(h0)?, &loaded, U4Options { epsilon: *epsilon })?;
            write_udb(&mut dir, "", &db)?;
            for r in db.relations.values() {
                println!("{} [{}] {} rows, {} condition pairs", r.name, r.cols.join(" "), r.rows.len(), r.cond_width());
            }
            dir.finish()?;
        }
        Cmd::Query {
            db,
            query,
            conf,
            worlds,
        } => {
            let text = if Path::new(query).is_file() {
                read_text(Path::new(query))?
            } else {
                query.clone()
            };
            let q = Query::parse(&text)?;
            let result = run_query(
                &read_udb(db)?,
                &q,
                QueryFlags {
                    conf: *conf,
                    worlds: *worlds,
                },
                caps,
            )?;
            match &g.out {
                Some(out) => {
                    let mut dir = OutDir::create(out, "query")?;
                    dir.write("result.csv", result.as_bytes())?;
                    dir.finish()?;
                }
                None => print!("{result}"),
            }
        }
        Cmd::Run { config } => {
            let (cfg, base) = RunConfig::from_file(config)?;
            let out = match (&g.out, &cfg.out) {
                (Some(o), _) => o.clone(),
                (None, Some(o)) => base.join(o),
                (None, None) => return Err(Error::Domain("run needs --out or an \"out\" entry".into())),
            };
            let mut cfg = cfg;
            cfg.force_lossless |= g.force_lossless;
            let manifest = run(&cfg, &base, &out, caps)?;
            for f in &manifest.outputs {
                println!("{}  {}", f.sha256, f.path);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
