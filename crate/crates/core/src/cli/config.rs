//! Session state and the patch file format.
//!
//! ```text
//! # jet patch
//! [jet]
//! order = 4
//!
//! [caps]
//! degree = 2
//! ```
//!
//! A patch with explicit contact forms lists its coordinates, then one slot-1
//! form per alias, and optionally integer weights:
//!
//! ```text
//! [coords]
//! names = x, y, z
//! [contact]
//! w = -y * d[1](x) + d[1](z)
//! [grading]
//! x = 1
//! y = 1
//! z = 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::algebra::IForm;
use crate::diffiety::{Grading, Patch};
use crate::error::{Error, Result};

use super::parse::parse_form;

pub const DEFAULT_ORDER: usize = 6;
pub const DEFAULT_DEGREE: u32 = 2;

/// Coefficient `x`-degree cap and jet order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub degree: u32,
    pub order: Option<usize>,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { degree: DEFAULT_DEGREE, order: None }
    }
}

impl Caps {
    /// Applies `key=value` pairs separated by commas, as in `IFORMS_CAPS`.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("malformed cap '{part}'")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let n: usize = value
            .parse()
            .map_err(|_| Error::invalid(format!("cap {key} needs a non-negative integer")))?;
        match key {
            "degree" => self.degree = n as u32,
            "order" => self.order = Some(n),
            _ => return Err(Error::invalid(format!("unknown cap '{key}'"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub patch: Patch,
    pub k: usize,
    pub caps: Caps,
}

impl Session {
    /// The default session: a jet patch of order `DEFAULT_ORDER`.
    pub fn new(k: usize) -> Result<Session> {
        Session::from_parts(Patch::jet(DEFAULT_ORDER), k, Caps::default())
    }

    fn from_parts(patch: Patch, k: usize, caps: Caps) -> Result<Session> {
        if k == 0 || k > crate::algebra::MAX_ARITY {
            return Err(Error::invalid(format!("arity {k} out of range")));
        }
        let patch = match caps.order {
            Some(o) if patch.jet_order().is_some() => patch.with_order(o)?,
            _ => patch,
        };
        Ok(Session { patch, k, caps })
    }

    /// Reads a patch file; `overrides` (from `IFORMS_CAPS`) win over its caps.
    pub fn from_config(text: &str, k: usize, overrides: Option<&str>) -> Result<Session> {
        let (patch, mut caps) = parse_config(text)?;
        if let Some(o) = overrides {
            caps.apply_overrides(o)?;
        }
        Session::from_parts(patch, k, caps)
    }

    pub fn with_overrides(mut self, overrides: &str) -> Result<Session> {
        let mut caps = self.caps;
        caps.apply_overrides(overrides)?;
        self.caps = caps;
        Session::from_parts(self.patch, self.k, caps)
    }

    /// Canonical patch file of the session.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let p = &self.patch;
        if let Some(r) = p.jet_order() {
            let _ = writeln!(s, "[jet]\norder = {r}");
        } else {
            let _ = writeln!(s, "[coords]\nnames = {}", p.names().join(", "));
            if !p.contacts().is_empty() {
                let _ = writeln!(s, "\n[contact]");
                for c in p.contacts() {
                    let _ = writeln!(s, "{} = {}", c.alias, c.in_slot(1, 1).render(&RawNames(p)));
                }
            }
            if let Grading::Weights(w) = p.grading() {
                let _ = writeln!(s, "\n[grading]");
                for (name, wv) in p.names().iter().zip(w) {
                    let parts: Vec<String> = wv.iter().map(ToString::to_string).collect();
                    let _ = writeln!(s, "{name} = {}", parts.join(", "));
                }
            }
        }
        let _ = writeln!(s, "\n[caps]\ndegree = {}", self.caps.degree);
        s
    }
}

/// Coordinate names without contact aliases.
struct RawNames<'a>(&'a Patch);

impl crate::algebra::Names for RawNames<'_> {
    fn var_name(&self, v: crate::poly::Var) -> String {
        self.0.name(v).to_string()
    }
}

type Sections = BTreeMap<String, Vec<(usize, String, String)>>;

fn parse_sections(text: &str) -> Result<Sections> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let pos = offset;
        offset += line.len();
        let body = line.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !["coords", "jet", "contact", "caps", "grading"].contains(&name.as_str()) {
                return Err(Error::Syntax { pos, msg: format!("unknown section [{name}]") });
            }
            if out.contains_key(&name) {
                return Err(Error::Syntax { pos, msg: format!("section [{name}] repeated") });
            }
            out.insert(name.clone(), Vec::new());
            current = Some(name);
            continue;
        }
        let Some(sec) = &current else {
            return Err(Error::Syntax { pos, msg: "entry outside a section".into() });
        };
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::Syntax { pos, msg: "expected 'key = value'".into() });
        };
        out.get_mut(sec).unwrap().push((pos, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn single<'a>(sections: &'a Sections, sec: &str, key: &str) -> Result<Option<(usize, &'a str)>> {
    let Some(entries) = sections.get(sec) else { return Ok(None) };
    let mut found = None;
    for (pos, k, v) in entries {
        if k != key {
            return Err(Error::Syntax { pos: *pos, msg: format!("unknown key '{k}' in [{sec}]") });
        }
        if found.is_some() {
            return Err(Error::Syntax { pos: *pos, msg: format!("key '{k}' repeated") });
        }
        found = Some((*pos, v.as_str()));
    }
    Ok(found)
}

/// Parses a patch file into a patch and its caps.
pub fn parse_config(text: &str) -> Result<(Patch, Caps)> {
    let sections = parse_sections(text)?;
    let mut caps = Caps::default();
    if let Some(entries) = sections.get("caps") {
        for (pos, k, v) in entries {
            caps.set(k, v).map_err(|e| Error::Syntax { pos: *pos, msg: e.to_string() })?;
        }
    }
    let jet = single(&sections, "jet", "order")?;
    let coords = single(&sections, "coords", "names")?;
    let patch = match (jet, coords) {
        (Some(_), Some((pos, _))) => {
            return Err(Error::Syntax { pos, msg: "[jet] and [coords] are exclusive".into() })
        }
        (Some((pos, order)), None) => {
            for s in ["contact", "grading"] {
                if sections.contains_key(s) {
                    return Err(Error::Syntax { pos, msg: format!("[{s}] is not allowed with [jet]") });
                }
            }
            let r: usize = order
                .parse()
                .map_err(|_| Error::Syntax { pos, msg: "jet order must be an integer".into() })?;
            Patch::jet(r)
        }
        (None, Some((_, names))) => {
            let names: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
            let plain = Patch::plain(names.clone())?;
            let mut forms: Vec<(String, IForm)> = Vec::new();
            for (pos, alias, value) in sections.get("contact").into_iter().flatten() {
                let f = parse_form(value, &plain, 1).map_err(|e| match e {
                    Error::Syntax { pos: p, msg } => Error::Syntax {
                        pos: pos + text[*pos..].find(value.as_str()).unwrap_or(0) + p,
                        msg,
                    },
                    other => other,
                })?;
                forms.push((alias.clone(), f));
            }
            let weights = match sections.get("grading") {
                None => None,
                Some(entries) => {
                    let mut w = vec![None; names.len()];
                    for (pos, name, value) in entries {
                        let i = names.iter().position(|n| n == name).ok_or_else(|| Error::Syntax {
                            pos: *pos,
                            msg: format!("unknown coordinate '{name}'"),
                        })?;
                        let parsed: std::result::Result<Vec<i64>, _> =
                            value.split(',').map(|s| s.trim().parse::<i64>()).collect();
                        w[i] = Some(parsed.map_err(|_| Error::Syntax {
                            pos: *pos,
                            msg: "weights must be integers".into(),
                        })?);
                    }
                    let w: Option<Vec<Vec<i64>>> = w.into_iter().collect();
                    Some(w.ok_or_else(|| Error::invalid("[grading] must weight every coordinate"))?)
                }
            };
            if forms.is_empty() && weights.is_none() {
                plain
            } else {
                Patch::explicit(names, forms, weights)?
            }
        }
        (None, None) => return Err(Error::Syntax { pos: 0, msg: "need a [jet] or [coords] section".into() }),
    };
    patch.check_grading()?;
    Ok((patch, caps))
}
