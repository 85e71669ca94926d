//! CSV layouts. Classical relations: a header row, then data. U-relations:
//! `V1,D1,...,Vk,Dk` pairs before the data columns, with empty pairs on
//! rows carrying fewer conditions. World table: `V,D,Pr`.

use std::io::{Read, Write};

use super::{CertainRelation, Cond, Table, URelation, Value, VarId, WorldTable};
use crate::error::{Error, Result};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn read_raw<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rd = reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_certain<R: Read>(input: R, name: &str, key: &[String]) -> Result<CertainRelation> {
    let (cols, rows) = read_raw(input)?;
    CertainRelation::new(
        name,
        cols,
        key.to_vec(),
        rows.into_iter().map(|r| r.into_iter().map(Value::new).collect()).collect(),
    )
}

pub fn write_certain<W: Write>(rel: &CertainRelation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&rel.cols)?;
    for row in &rel.rows {
        w.write_record(row.iter().map(Value::as_str))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_table<W: Write>(t: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&t.cols)?;
    for row in &t.rows {
        w.write_record(row.iter().map(Value::as_str))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_urelation<W: Write>(rel: &URelation, out: W) -> Result<()> {
    let k = rel.cond_width();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=k).flat_map(|i| [format!("V{i}"), format!("D{i}")]).collect();
    header.extend(rel.cols.iter().cloned());
    w.write_record(&header)?;
    for row in &rel.rows {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for (v, d) in row.cond.pairs() {
            rec.push(v.to_string());
            rec.push(d.to_string());
        }
        rec.resize(2 * k, String::new());
        rec.extend(row.values.iter().map(|v| v.as_str().to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_urelation<R: Read>(input: R, name: &str) -> Result<URelation> {
    let (header, rows) = read_raw(input)?;
    let mut k = 0;
    while header.get(2 * k).map(String::as_str) == Some(&format!("V{}", k + 1))
        && header.get(2 * k + 1).map(String::as_str) == Some(&format!("D{}", k + 1))
    {
        k += 1;
    }
    let mut rel = URelation::new(name, header[2 * k..].to_vec())?;
    for (i, row) in rows.into_iter().enumerate() {
        let line = i + 2;
        let mut pairs = Vec::new();
        for p in 0..k {
            let (v, d) = (&row[2 * p], &row[2 * p + 1]);
            match (v.is_empty(), d.is_empty()) {
                (true, true) => continue,
                (false, false) => {}
                _ => return Err(parse_err(line, format!("half-empty condition pair V{}", p + 1))),
            }
            let var: VarId = v.parse().map_err(|_| parse_err(line, format!("bad variable {v:?}")))?;
            let val: u32 = d
                .parse()
                .ok()
                .filter(|d| *d >= 1)
                .ok_or_else(|| parse_err(line, format!("bad value id {d:?}")))?;
            pairs.push((var, val));
        }
        let cond = Cond::new(pairs).map_err(|e| parse_err(line, e.to_string()))?;
        rel.push(cond, row[2 * k..].iter().map(|s| Value::new(s.as_str())).collect())?;
    }
    Ok(rel)
}

pub fn write_world<W: Write>(world: &WorldTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["V", "D", "Pr"])?;
    for var in world.vars() {
        for (i, p) in world.marginals(var).unwrap_or_default().iter().enumerate() {
            w.write_record([var.to_string(), (i + 1).to_string(), format!("{p}")])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_world<R: Read>(input: R) -> Result<WorldTable> {
    let (header, rows) = read_raw(input)?;
    if header != ["V", "D", "Pr"] {
        return Err(parse_err(1, format!("world table header must be V,D,Pr, found {}", header.join(","))));
    }
    let mut grouped: Vec<(VarId, Vec<f64>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let line = i + 2;
        let var: VarId = row[0].parse().map_err(|_| parse_err(line, format!("bad variable {:?}", row[0])))?;
        let d: usize = row[1].parse().map_err(|_| parse_err(line, format!("bad value id {:?}", row[1])))?;
        let p: f64 = row[2].parse().map_err(|_| parse_err(line, format!("bad probability {:?}", row[2])))?;
        if grouped.last().map(|(v, _)| *v) != Some(var) {
            grouped.push((var, Vec::new()));
        }
        let probs = &mut grouped.last_mut().expect("pushed above").1;
        if d != probs.len() + 1 {
            return Err(parse_err(line, format!("value ids of {var} must run 1, 2, ... in order")));
        }
        probs.push(p);
    }
    let mut world = WorldTable::new();
    for (var, probs) in grouped {
        world.insert(var, probs)?;
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::super::ops::{repair_key, tests::h0, u_join};
    use super::*;

    #[test]
    fn urelation_round_trip_with_padding() {
        let mut w = WorldTable::new();
        let y0 = repair_key(&h0(), &["phi".into()], "Conf", &mut w, "Y0").unwrap();
        let extra = URelation::certain("C", vec!["phi".into(), "note".into()], vec![vec!["1".into(), "a b".into()]])
            .unwrap();
        let mut j = u_join(&y0, &extra).unwrap();
        j.rows.push(super::super::URow {
            cond: Cond::default(),
            values: vec!["2".into(), "1".into(), "z".into()],
        });
        let mut buf = Vec::new();
        write_urelation(&j, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("V1,D1,phi,upsilon,note\nx0,1,1,1,a b\n"), "{text}");
        assert!(text.ends_with(",,2,1,z\n"));
        let back = read_urelation(buf.as_slice(), &j.name).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn world_round_trip() {
        let mut w = WorldTable::new();
        repair_key(&h0(), &["phi".into()], "Conf", &mut w, "Y0").unwrap();
        let mut buf = Vec::new();
        write_world(&w, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "V,D,Pr\nx0,1,0.4\nx0,2,0.4\nx0,3,0.2\n");
        assert_eq!(read_world(buf.as_slice()).unwrap(), w);
        assert!(read_world("V,D,Pr\nx0,2,1\n".as_bytes()).is_err());
        assert!(read_world("V,D,Pr\nx0,1,0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn certain_keeps_text() {
        let r = read_certain("tid, phi ,b\n1,1,.5\n2,1,1.50\n".as_bytes(), "H", &["tid".into()]).unwrap();
        assert_eq!(r.cols, ["tid", "phi", "b"]);
        let mut buf = Vec::new();
        write_certain(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "tid,phi,b\n1,1,.5\n2,1,1.50\n");
        let dup = read_certain("tid,b\n1,1\n1,2\n".as_bytes(), "H", &["tid".into()]);
        assert!(matches!(dup, Err(Error::Integrity(_))));
    }
}
