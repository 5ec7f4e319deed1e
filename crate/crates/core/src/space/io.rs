//! Text and JSON forms of a space.
//!
//! The text form has three sections:
//!
//! ```text
//! [vertices]
//! # id coords... measure
//! 0 -1.0 0.0 1.0
//! [edges]
//! 0 1 1.0
//! [metadata]
//! base_point = 0
//! dimension_bound = 2
//! ```
//!
//! Floats are written in shortest round-trip form, so reading back a written
//! file reproduces the space bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{DiscreteSpace, EdgeRecord, SpaceData, VertexRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Vertices,
    Edges,
    Metadata,
}

pub fn to_text(data: &SpaceData) -> String {
    let mut s = String::from("[vertices]\n");
    for v in &data.vertices {
        write!(s, "{}", v.id).unwrap();
        if let Some(c) = &v.coords {
            for x in c {
                write!(s, " {x:?}").unwrap();
            }
        }
        writeln!(s, " {:?}", v.measure).unwrap();
    }
    s.push_str("[edges]\n");
    for e in &data.edges {
        writeln!(s, "{} {} {:?}", e.a, e.b, e.length).unwrap();
    }
    s.push_str("[metadata]\n");
    writeln!(s, "base_point = {}", data.base_point).unwrap();
    writeln!(s, "dimension_bound = {:?}", data.dimension_bound).unwrap();
    s
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{tok}`")))
}

pub fn from_text(text: &str) -> Result<SpaceData> {
    let mut section = Section::None;
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut base_point = None;
    let mut dimension_bound = None;
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[vertices]" => {
                section = Section::Vertices;
                continue;
            }
            "[edges]" => {
                section = Section::Edges;
                continue;
            }
            "[metadata]" => {
                section = Section::Metadata;
                continue;
            }
            _ => {}
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::None => return Err(parse_err(ln, "content before the first section")),
            Section::Vertices => {
                if toks.len() < 2 {
                    return Err(parse_err(ln, "vertex needs an id and a measure"));
                }
                let id = num(toks[0], ln)?;
                let measure = num(toks[toks.len() - 1], ln)?;
                let coords = if toks.len() > 2 {
                    Some(
                        toks[1..toks.len() - 1]
                            .iter()
                            .map(|t| num(t, ln))
                            .collect::<Result<Vec<f64>>>()?,
                    )
                } else {
                    None
                };
                vertices.push(VertexRecord { id, coords, measure });
            }
            Section::Edges => {
                if toks.len() != 3 {
                    return Err(parse_err(ln, "edge needs `a b length`"));
                }
                edges.push(EdgeRecord {
                    a: num(toks[0], ln)?,
                    b: num(toks[1], ln)?,
                    length: num(toks[2], ln)?,
                });
            }
            Section::Metadata => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| parse_err(ln, "expected `key = value`"))?;
                match key.trim() {
                    "base_point" => base_point = Some(num(value.trim(), ln)?),
                    "dimension_bound" => dimension_bound = Some(num(value.trim(), ln)?),
                    other => return Err(parse_err(ln, format!("unknown metadata key `{other}`"))),
                }
            }
        }
    }
    Ok(SpaceData {
        vertices,
        edges,
        base_point: base_point.ok_or_else(|| Error::Parse("missing base_point".into()))?,
        dimension_bound: dimension_bound
            .ok_or_else(|| Error::Parse("missing dimension_bound".into()))?,
    })
}

pub fn to_json(data: &SpaceData) -> Result<String> {
    Ok(serde_json::to_string_pretty(data)?)
}

pub fn from_json(text: &str) -> Result<SpaceData> {
    Ok(serde_json::from_str(text)?)
}

/// Writes the space; `.json` selects the JSON form, anything else the text form.
pub fn save(space: &DiscreteSpace, path: &Path) -> Result<()> {
    let data = space.to_data();
    let body = if is_json(path) { to_json(&data)? } else { to_text(&data) };
    std::fs::write(path, body)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DiscreteSpace> {
    let body = std::fs::read_to_string(path)?;
    let data = if is_json(path) { from_json(&body)? } else { from_text(&body)? };
    DiscreteSpace::new(data)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpaceData {
        SpaceData {
            vertices: vec![
                VertexRecord { id: 0, coords: Some(vec![0.1, -2.5e-17]), measure: 1.0 / 3.0 },
                VertexRecord { id: 1, coords: Some(vec![1e300, 7.0]), measure: 2.0 },
            ],
            edges: vec![EdgeRecord { a: 0, b: 1, length: std::f64::consts::PI }],
            base_point: 1,
            dimension_bound: 2.5,
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let d = sample();
        assert_eq!(from_text(&to_text(&d)).unwrap(), d);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = sample();
        assert_eq!(from_json(&to_json(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn bad_lines_are_reported() {
        let e = from_text("[vertices]\n0 x 1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        assert!(from_text("0 1 1\n").is_err());
    }
}
