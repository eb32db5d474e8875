//! Plain-text class-map config.
//!
//! One `raw_id target` pair per line, where `target` is a class name or
//! `ignore`. `#` starts a comment. An optional `classes` line lists the
//! eleven class names; it must match the built-in order.
//!
//! ```text
//! classes building parking pedestrian pole road sidewalk terrain trunk two-wheel vegetation vehicle
//! 0   ignore
//! 10  vehicle
//! 252 vehicle   # moving-car
//! ```

use std::path::Path;

use super::read_file;
use crate::classes::{ClassId, ClassMap, Label};
use crate::error::{Error, Result};

pub fn parse_class_map(text: &str) -> Result<ClassMap> {
    let mut entries: Vec<(u16, Label)> = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw_line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap();
        if first == "classes" {
            let names: Vec<&str> = tokens.collect();
            let expected: Vec<&str> = ClassId::ALL.iter().map(|c| c.name()).collect();
            if names != expected {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("classes line must read: {}", expected.join(" ")),
                });
            }
            continue;
        }
        let (Some(target), None) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: line_no,
                reason: "expected `raw_id target`".into(),
            });
        };
        let raw: u16 = first.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("raw id {first:?} is not a 16-bit integer"),
        })?;
        let label = match target {
            "ignore" => None,
            name => Some(ClassId::from_name(name).ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("unknown class {name:?}"),
            })?),
        };
        if let Some(prev) = seen.insert(raw, line_no) {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("raw id {raw} already mapped on line {prev}"),
            });
        }
        entries.push((raw, label));
    }
    ClassMap::from_entries(entries)
}

pub fn read_class_map(path: impl AsRef<Path>) -> Result<ClassMap> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::Parse {
            line: 0,
            reason: e.to_string(),
        }
        .in_file(path)
    })?;
    parse_class_map(&text).map_err(|e| e.in_file(path))
}

/// Render a map in the config format.
pub fn format_class_map(map: &ClassMap) -> String {
    let mut out = String::from("classes");
    for c in ClassId::ALL {
        out.push(' ');
        out.push_str(c.name());
    }
    out.push('\n');
    for (raw, label) in map.entries() {
        out.push_str(&format!("{raw} {}\n", label.map_or("ignore", ClassId::name)));
    }
    out
}
