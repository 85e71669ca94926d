//! File-level stages of the pipeline: encode, fold, synth, check, load,
//! u-intro, query and the one-shot run. Every stage that writes files
//! records them, with their sha256, in a `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fd::{FdSet, TID, UPSILON};
use crate::folding::folding;
use crate::sem::{classification, encode, AttrClass, Structure};
use crate::synth4c::{
    bcnf_violation, chase_oracle, lossless_join, preserves, synthesize_with, third_nf_violation, Schema,
    SynthOptions, Witness, DEFAULT_CAP_ATTRS,
};
use crate::synth4u::{build_explanation, is_exogenous, synthesize4u, U4Options};
use crate::urel::{
    conf, enumerate_worlds, read_certain, read_urelation, read_world, write_certain, write_table, write_urelation,
    write_world, CertainRelation, Query, UDatabase, URelation, Value, DEFAULT_WORLD_CAP,
};

pub const MANIFEST: &str = "manifest.json";
pub const WORLD_FILE: &str = "W.csv";
pub const STORE_FILE: &str = "store.json";

/// Limits shared by all stages.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub worlds: usize,
    pub attrs: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            worlds: DEFAULT_WORLD_CAP,
            attrs: DEFAULT_CAP_ATTRS,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub verdicts: BTreeMap<String, Json>,
}

/// Output directory that hashes everything written through it.
pub struct OutDir {
    root: PathBuf,
    pub manifest: Manifest,
}

impl OutDir {
    pub fn create(root: &Path, command: &str) -> Result<OutDir> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                ..Manifest::default()
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Records an input file under the label `shown`.
    pub fn input(&mut self, path: &Path, shown: &str) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.manifest.inputs.push(FileEntry {
            path: shown.to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn verdict(&mut self, key: impl Into<String>, value: Json) {
        self.manifest.verdicts.insert(key.into(), value);
    }

    pub fn finish(self) -> Result<Manifest> {
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}

fn urelation_bytes(r: &URelation) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_urelation(r, &mut buf)?;
    Ok(buf)
}

fn world_bytes(db: &UDatabase) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_world(&db.world, &mut buf)?;
    Ok(buf)
}

// ---------------------------------------------------------------- encode

pub struct Encoded {
    pub sigma: FdSet,
    pub classes: Vec<(String, AttrClass)>,
}

pub fn encode_structure(structure: &Structure) -> Result<Encoded> {
    let sigma = encode(structure)?;
    let mut classes = classification(&sigma);
    for (i, v) in structure.variables().iter().enumerate() {
        if structure.is_domain(i) && !classes.iter().any(|(n, _)| n == v) {
            classes.push((v.clone(), AttrClass::Domain));
        }
    }
    Ok(Encoded { sigma, classes })
}

pub fn classes_text(classes: &[(String, AttrClass)]) -> String {
    classes.iter().map(|(n, c)| format!("{n} {c}\n")).collect()
}

// ----------------------------------------------------------------- checks

/// Normal-form and join verdicts for a schema against an fd set.
#[derive(Clone, Debug)]
pub struct Verdicts {
    pub bcnf: Option<Witness>,
    /// Witness, or a note when the attribute cap was hit.
    pub third_nf: std::result::Result<Option<Witness>, String>,
    pub preserves: bool,
    pub lossless_criterion: bool,
    /// Chase result, `None` beyond the attribute cap.
    pub lossless: Option<bool>,
    sigma: FdSet,
}

pub fn check(schema: &Schema, sigma: &FdSet, caps: Caps) -> Result<Verdicts> {
    let sigma = sigma.reindex(schema.universe())?;
    let bcnf = bcnf_violation(schema, &sigma, caps.attrs)?;
    let third_nf = match third_nf_violation(schema, &sigma, caps.attrs) {
        Ok(w) => Ok(w),
        Err(Error::Capacity { limit, .. }) => Err(format!("unknown (attribute cap {limit})")),
        Err(e) => return Err(e),
    };
    let lossless = match chase_oracle(schema, &sigma, caps.attrs) {
        Ok(b) => Some(b),
        Err(Error::Capacity { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(Verdicts {
        bcnf,
        third_nf,
        preserves: preserves(schema, &sigma)?,
        lossless_criterion: lossless_join(schema, &sigma)?,
        lossless,
        sigma,
    })
}

impl Verdicts {
    pub fn is_bcnf(&self) -> bool {
        self.bcnf.is_none()
    }

    fn witness(&self, w: &Option<Witness>) -> String {
        match w {
            None => "true".into(),
            Some(w) => format!("false ({})", w.describe(&self.sigma)),
        }
    }

    pub fn text(&self) -> String {
        let third = match &self.third_nf {
            Ok(w) => self.witness(w),
            Err(msg) => msg.clone(),
        };
        let lossless = self.lossless.map_or("unknown (attribute cap)".to_string(), |b| b.to_string());
        format!(
            "bcnf: {}\n3nf: {}\npreserves: {}\nlossless: {}\nlossless-criterion: {}\n",
            self.witness(&self.bcnf),
            third,
            self.preserves,
            lossless,
            self.lossless_criterion
        )
    }

    pub fn record(&self, out: &mut OutDir, prefix: &str) {
        out.verdict(format!("{prefix}bcnf"), json!(self.is_bcnf()));
        if let Some(w) = &self.bcnf {
            out.verdict(format!("{prefix}bcnf_witness"), json!(w.describe(&self.sigma)));
        }
        out.verdict(format!("{prefix}preserves"), json!(self.preserves));
        out.verdict(format!("{prefix}lossless"), json!(self.lossless));
        out.verdict(format!("{prefix}lossless_criterion"), json!(self.lossless_criterion));
    }
}

// ------------------------------------------------------------------- load

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StoredRelation {
    pub name: String,
    pub file: String,
    pub scheme: String,
    pub key: Vec<String>,
}

/// Loaded trial data of one hypothesis.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Store {
    pub hypothesis: String,
    pub sigma: String,
    pub relations: Vec<StoredRelation>,
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Domain(format!("cannot name a relation after {}", path.display())))
}

/// Reads trial CSVs into the schemes of `schema`. A file belongs to the
/// scheme whose attributes plus `tid` match its header; its key is the
/// scheme key without endogenous attributes, plus `tid`.
pub fn load_trials(sigma: &FdSet, schema: &Schema, paths: &[PathBuf]) -> Result<Vec<(CertainRelation, String)>> {
    let endogenous: Vec<String> = classification(sigma)
        .into_iter()
        .filter(|(_, c)| *c == AttrClass::Endogenous)
        .map(|(n, _)| n)
        .collect();
    let mut out: Vec<(CertainRelation, String)> = Vec::new();
    for path in paths {
        let text = read_text(path)?;
        let header: Vec<String> = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes())
            .headers()?
            .iter()
            .map(str::to_string)
            .collect();
        let mut cols = header.clone();
        cols.sort();
        let scheme = schema
            .schemes
            .iter()
            .find(|s| {
                let mut want = schema.ordered_names(s);
                want.push(TID.to_string());
                want.sort();
                want == cols
            })
            .ok_or_else(|| {
                Error::Domain(format!(
                    "{}: header {} matches no scheme (plus {TID})",
                    path.display(),
                    header.join(",")
                ))
            })?;
        let mut key = vec![TID.to_string()];
        key.extend(
            schema
                .universe()
                .names_of(&scheme.key)
                .into_iter()
                .filter(|k| !endogenous.contains(k)),
        );
        let name = file_stem(path)?;
        if out.iter().any(|(r, _)| r.name == name) {
            return Err(Error::Domain(format!("two trial files named {name}")));
        }
        out.push((read_certain(text.as_bytes(), &name, &key)?, scheme.name.clone()));
    }
    Ok(out)
}

fn infer_hypothesis(rels: &[CertainRelation]) -> Result<String> {
    let mut seen: Vec<Value> = Vec::new();
    for r in rels.iter().filter(|r| !is_exogenous(r)) {
        let i = r.col(UPSILON)?;
        for row in &r.rows {
            if !seen.contains(&row[i]) {
                seen.push(row[i].clone());
            }
        }
    }
    match seen.as_slice() {
        [k] => Ok(k.as_str().to_string()),
        [] => Err(Error::Domain("no upsilon value in the trial data; pass the hypothesis id".into())),
        _ => Err(Error::Integrity(format!(
            "trial data mixes hypotheses {}",
            seen.iter().map(Value::as_str).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Writes a store directory: one CSV per relation plus `store.json`.
pub fn write_store(
    out: &mut OutDir,
    prefix: &str,
    sigma: &FdSet,
    rels: &[(CertainRelation, String)],
    hypothesis: Option<&str>,
) -> Result<Store> {
    let only: Vec<CertainRelation> = rels.iter().map(|(r, _)| r.clone()).collect();
    let hypothesis = match hypothesis {
        Some(k) => k.to_string(),
        None => infer_hypothesis(&only)?,
    };
    let mut stored = Vec::new();
    for (r, scheme) in rels {
        let file = format!("{}.csv", r.name);
        let mut buf = Vec::new();
        write_certain(r, &mut buf)?;
        out.write(&format!("{prefix}{file}"), &buf)?;
        stored.push(StoredRelation {
            name: r.name.clone(),
            file,
            scheme: scheme.clone(),
            key: r.key.clone(),
        });
    }
    let store = Store {
        hypothesis,
        sigma: sigma.to_text(),
        relations: stored,
    };
    out.write(&format!("{prefix}{STORE_FILE}"), (serde_json::to_string_pretty(&store)? + "\n").as_bytes())?;
    Ok(store)
}

pub fn read_store(dir: &Path) -> Result<(Store, Vec<CertainRelation>)> {
    let store: Store = serde_json::from_str(&read_text(&dir.join(STORE_FILE))?)?;
    let mut rels = Vec::new();
    for r in &store.relations {
        let text = read_text(&dir.join(&r.file))?;
        rels.push(read_certain(text.as_bytes(), &r.name, &r.key)?);
    }
    Ok((store, rels))
}

// ---------------------------------------------------------------- u-intro

/// Builds `Y0` from `h0`, then runs u-intro for every store in order.
pub fn u_intro(h0: &CertainRelation, stores: &[(Store, Vec<CertainRelation>)], opts: U4Options) -> Result<UDatabase> {
    let mut db = UDatabase::new();
    let y0 = build_explanation(h0, &mut db.world)?;
    db.insert(y0.clone())?;
    for (store, rels) in stores {
        let sigma = FdSet::parse(&store.sigma)?;
        let k = Value::new(store.hypothesis.as_str());
        let out = synthesize4u(&sigma, rels, &y0, &k, &mut db.world, opts)?;
        for r in out.relations() {
            db.insert(r.clone())?;
        }
    }
    Ok(db)
}

pub fn read_h0(path: &Path) -> Result<CertainRelation> {
    let text = read_text(path)?;
    read_certain(text.as_bytes(), "H0", &["phi".to_string(), UPSILON.to_string()])
}

pub fn write_udb(out: &mut OutDir, prefix: &str, db: &UDatabase) -> Result<()> {
    for r in db.relations.values() {
        out.write(&format!("{prefix}{}.csv", r.name), &urelation_bytes(r)?)?;
    }
    out.write(&format!("{prefix}{WORLD_FILE}"), &world_bytes(db)?)?;
    Ok(())
}

/// Reads a directory of U-relation CSVs plus `W.csv`.
pub fn read_udb(dir: &Path) -> Result<UDatabase> {
    let mut db = UDatabase::new();
    db.world = read_world(read_text(&dir.join(WORLD_FILE))?.as_bytes())?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != WORLD_FILE))
        .collect();
    files.sort();
    for f in files {
        let name = file_stem(&f)?;
        db.insert(read_urelation(read_text(&f)?.as_bytes(), &name)?)?;
    }
    Ok(db)
}

// ------------------------------------------------------------------ query

#[derive(Clone, Copy, Debug, Default)]
pub struct QueryFlags {
    pub conf: bool,
    pub worlds: bool,
}

/// Evaluates `query` over `db` and renders the result as CSV text.
pub fn run_query(db: &UDatabase, query: &Query, flags: QueryFlags, caps: Caps) -> Result<String> {
    let result = query.eval(db)?.with_name("result");
    let mut out = Vec::new();
    if flags.conf {
        let mut distinct: Vec<Vec<Value>> = Vec::new();
        for r in &result.rows {
            if !distinct.contains(&r.values) {
                distinct.push(r.values.clone());
            }
        }
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = result.cols.clone();
        header.push("conf".into());
        w.write_record(&header)?;
        for t in distinct {
            let p = conf(&result, &t, &db.world, caps.worlds)?;
            let mut rec: Vec<String> = t.iter().map(|v| v.as_str().to_string()).collect();
            rec.push(format!("{p}"));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
    } else {
        write_urelation(&result, &mut out)?;
    }
    let mut text = String::from_utf8(out).map_err(|e| Error::Domain(e.to_string()))?;
    if flags.worlds {
        let vars = result.vars();
        for world in enumerate_worlds(&db.world, &vars, caps.worlds)? {
            let shown: Vec<String> = world.assignment.iter().map(|(v, d)| format!("{v}->{d}")).collect();
            text.push_str(&format!("\n# world {{{}}} Pr={}\n", shown.join(", "), world.prob));
            let mut buf = Vec::new();
            write_table(&result.decode(&world.assignment), &mut buf)?;
            text.push_str(&String::from_utf8_lossy(&buf));
        }
    }
    Ok(text)
}

// -------------------------------------------------------------------- run

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisConfig {
    pub id: String,
    pub structure: PathBuf,
    #[serde(default)]
    pub trials: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub hypotheses: Vec<HypothesisConfig>,
    pub h0: PathBuf,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub force_lossless: bool,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<(RunConfig, PathBuf)> {
        let cfg: RunConfig = serde_json::from_str(&read_text(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let check = |p: &Path| -> Result<()> {
            let full = base.join(p);
            if full.is_file() {
                Ok(())
            } else {
                Err(Error::io(&full, std::io::Error::from(std::io::ErrorKind::NotFound)))
            }
        };
        check(&cfg.h0)?;
        for h in &cfg.hypotheses {
            check(&h.structure)?;
            for t in &h.trials {
                check(t)?;
            }
        }
        Ok((cfg, base))
    }
}

/// Whole pipeline. Layout under `out`: `h{id}/` holds `sigma.fd`,
/// `classes.txt`, `folded.fd`, `schema.json`, `report.txt` and `store/`;
/// `udb/` holds the U-relations and `W.csv`.
pub fn run(cfg: &RunConfig, base: &Path, out: &Path, caps: Caps) -> Result<Manifest> {
    let mut dir = OutDir::create(out, "run")?;
    let mut stores = Vec::new();
    for h in &cfg.hypotheses {
        let prefix = format!("h{}/", h.id);
        dir.input(&base.join(&h.structure), &h.structure.display().to_string())?;
        let structure = Structure::from_json(&read_text(&base.join(&h.structure))?)?;
        let enc = encode_structure(&structure)?;
        dir.write(&format!("{prefix}sigma.fd"), enc.sigma.to_text().as_bytes())?;
        dir.write(&format!("{prefix}classes.txt"), classes_text(&enc.classes).as_bytes())?;
        let folded = folding(&enc.sigma)?.folded;
        dir.write(&format!("{prefix}folded.fd"), folded.to_text().as_bytes())?;
        let schema = synthesize_with(
            &folded,
            SynthOptions {
                force_lossless: cfg.force_lossless,
            },
        )?;
        dir.write(&format!("{prefix}schema.json"), (schema.to_json() + "\n").as_bytes())?;
        let verdicts = check(&schema, &folded, caps)?;
        dir.write(&format!("{prefix}report.txt"), format!("{schema}{}", verdicts.text()).as_bytes())?;
        verdicts.record(&mut dir, &format!("h{}.", h.id));
        if h.trials.is_empty() {
            continue;
        }
        let paths: Vec<PathBuf> = h.trials.iter().map(|t| base.join(t)).collect();
        for (t, p) in h.trials.iter().zip(&paths) {
            dir.input(p, &t.display().to_string())?;
        }
        let rels = load_trials(&enc.sigma, &schema, &paths)?;
        let store = write_store(&mut dir, &format!("{prefix}store/"), &enc.sigma, &rels, Some(&h.id))?;
        stores.push((store, rels.into_iter().map(|(r, _)| r).collect::<Vec<_>>()));
    }
    dir.input(&base.join(&cfg.h0), &cfg.h0.display().to_string())?;
    let h0 = read_h0(&base.join(&cfg.h0))?;
    let db = u_intro(&h0, &stores, U4Options { epsilon: cfg.epsilon })?;
    write_udb(&mut dir, "udb/", &db)?;
    let vars: Vec<_> = db.world.vars().collect();
    dir.verdict("worlds", json!(db.world.world_count(&vars)));
    dir.finish()
}
