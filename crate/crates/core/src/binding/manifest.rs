//! Companion file supplying interface and class identifiers for com mode.
//!
//! ```text
//! # comment
//! IID   IX  {A1C1F5E0-0001-4E4B-9D2A-6D4C4E000001}
//! CLSID Bar {A1C1F5E0-0000-4E4B-9D2A-6D4C4E000000}
//! ```

use std::collections::BTreeMap;

use super::BindingError;
use crate::com::Guid;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub iids: BTreeMap<String, Guid>,
    /// Classes in file order.
    pub clsids: Vec<(String, Guid)>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, BindingError> {
        let mut m = Manifest::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| BindingError::Manifest { line: k + 1, msg };
            let words: Vec<&str> = line.split_whitespace().collect();
            let [kind, name, guid] = words.as_slice() else {
                return Err(err(format!("expected `IID|CLSID <name> <guid>`, found `{line}`")));
            };
            let guid: Guid = guid
                .parse()
                .map_err(|e: crate::com::GuidParseError| err(e.to_string()))?;
            match *kind {
                "IID" => {
                    if m.iids.insert(name.to_string(), guid).is_some() {
                        return Err(err(format!("duplicate IID for `{name}`")));
                    }
                }
                "CLSID" => {
                    if m.clsids.iter().any(|(n, _)| n == name) {
                        return Err(err(format!("duplicate CLSID for `{name}`")));
                    }
                    m.clsids.push((name.to_string(), guid));
                }
                other => return Err(err(format!("unknown entry kind `{other}`"))),
            }
        }
        Ok(m)
    }

    pub fn clsid(&self, class: &str) -> Option<Guid> {
        self.clsids.iter().find(|(n, _)| n == class).map(|(_, g)| *g)
    }
}
