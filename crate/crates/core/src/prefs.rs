//! Android shared-preferences XML: a `<map>` root holding typed, named entries.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use xmlparser::{ElementEnd, Token, Tokenizer};

#[derive(Debug, Clone, PartialEq)]
pub enum PrefValue {
    String(String),
    Boolean(bool),
    Int(i64),
    Long(i64),
    Float(f64),
    StringSet(Vec<String>),
    Null,
}

impl PrefValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PrefValue::String(s) => Some(s),
            _ => None,
        }
    }

    /// Text form used when an entry is swept for raw patterns.
    pub fn render(&self) -> String {
        match self {
            PrefValue::String(s) => s.clone(),
            PrefValue::Boolean(b) => format!("{b}"),
            PrefValue::Int(v) | PrefValue::Long(v) => format!("{v}"),
            PrefValue::Float(v) => format!("{v}"),
            PrefValue::StringSet(items) => items.join("\n"),
            PrefValue::Null => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefEntry {
    pub name: String,
    pub value: PrefValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedXml(pub String);

impl fmt::Display for MalformedXml {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed preferences XML: {}", self.0)
    }
}

struct OpenEntry {
    tag: String,
    name: Option<String>,
    value_attr: Option<String>,
    text: String,
    set_items: Vec<String>,
}

/// Parses a preferences document into its entries, in document order.
pub fn parse_shared_prefs(bytes: &[u8]) -> Result<Vec<PrefEntry>, MalformedXml> {
    let text = core::str::from_utf8(bytes).map_err(|_| MalformedXml("not UTF-8".into()))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut entries = Vec::new();
    let mut stack: Vec<String> = Vec::new();
    let mut current: Option<OpenEntry> = None;
    let mut saw_root = false;
    let mut pending_tag: Option<String> = None;

    for token in Tokenizer::from(text) {
        let token = token.map_err(|e| MalformedXml(format!("{e}")))?;
        match token {
            Token::ElementStart { local, .. } => {
                let tag = local.as_str().to_owned();
                match stack.len() {
                    0 => {
                        if saw_root || tag != "map" {
                            return Err(MalformedXml(format!("unexpected root element <{tag}>")));
                        }
                        saw_root = true;
                    }
                    1 => {
                        current = Some(OpenEntry {
                            tag: tag.clone(),
                            name: None,
                            value_attr: None,
                            text: String::new(),
                            set_items: Vec::new(),
                        });
                    }
                    _ => {}
                }
                pending_tag = Some(tag);
            }
            Token::Attribute { local, value, .. } => {
                if stack.len() == 1 {
                    if let Some(entry) = current.as_mut() {
                        let v = unescape(value.as_str())?;
                        match local.as_str() {
                            "name" => entry.name = Some(v),
                            "value" => entry.value_attr = Some(v),
                            _ => {}
                        }
                    }
                }
            }
            Token::ElementEnd { end, .. } => match end {
                ElementEnd::Open => {
                    let tag = pending_tag.take().ok_or_else(|| MalformedXml("dangling tag".into()))?;
                    stack.push(tag);
                }
                ElementEnd::Empty => {
                    pending_tag = None;
                    if stack.len() == 1 {
                        if let Some(entry) = current.take() {
                            entries.push(finish_entry(entry)?);
                        }
                    } else if stack.len() == 2 {
                        // `<string/>` inside a `<set>`
                        if let Some(entry) = current.as_mut() {
                            entry.set_items.push(String::new());
                        }
                    }
                }
                ElementEnd::Close(_, local) => {
                    let open = stack
                        .pop()
                        .ok_or_else(|| MalformedXml("unbalanced closing tag".into()))?;
                    if open != local.as_str() {
                        return Err(MalformedXml(format!(
                            "</{}> closes <{open}>",
                            local.as_str()
                        )));
                    }
                    match stack.len() {
                        1 => {
                            if let Some(entry) = current.take() {
                                entries.push(finish_entry(entry)?);
                            }
                        }
                        2 => {
                            if let Some(entry) = current.as_mut() {
                                if entry.tag == "set" {
                                    let item = core::mem::take(&mut entry.text);
                                    entry.set_items.push(item);
                                }
                            }
                        }
                        _ => {}
                    }
                }
            },
            Token::Text { text } => {
                if stack.len() >= 2 {
                    if let Some(entry) = current.as_mut() {
                        entry.text.push_str(&unescape(text.as_str())?);
                    }
                }
            }
            Token::Cdata { text, .. }
                if stack.len() >= 2 => {
                    if let Some(entry) = current.as_mut() {
                        entry.text.push_str(text.as_str());
                    }
                }
            _ => {}
        }
    }
    if !saw_root {
        return Err(MalformedXml("no <map> root element".into()));
    }
    if !stack.is_empty() {
        return Err(MalformedXml("unterminated element".into()));
    }
    Ok(entries)
}

fn finish_entry(entry: OpenEntry) -> Result<PrefEntry, MalformedXml> {
    let name = entry
        .name
        .ok_or_else(|| MalformedXml(format!("<{}> entry without a name", entry.tag)))?;
    let attr = || {
        entry
            .value_attr
            .as_deref()
            .ok_or_else(|| MalformedXml(format!("<{}> `{name}` without a value", entry.tag)))
    };
    let bad = |what: &str| MalformedXml(format!("`{name}`: invalid {what} value"));
    let value = match entry.tag.as_str() {
        "string" => PrefValue::String(entry.text),
        "boolean" => match attr()? {
            "true" => PrefValue::Boolean(true),
            "false" => PrefValue::Boolean(false),
            _ => return Err(bad("boolean")),
        },
        "int" => PrefValue::Int(attr()?.trim().parse().map_err(|_| bad("int"))?),
        "long" => PrefValue::Long(attr()?.trim().parse().map_err(|_| bad("long"))?),
        "float" => PrefValue::Float(attr()?.trim().parse().map_err(|_| bad("float"))?),
        "set" => PrefValue::StringSet(entry.set_items),
        "null" => PrefValue::Null,
        other => return Err(MalformedXml(format!("unknown entry type <{other}>"))),
    };
    Ok(PrefEntry { name, value })
}

fn unescape(raw: &str) -> Result<String, MalformedXml> {
    if !raw.contains('&') {
        return Ok(raw.to_owned());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let after = &rest[amp + 1..];
        let semi = after
            .find(';')
            .ok_or_else(|| MalformedXml("unterminated entity".into()))?;
        let entity = &after[..semi];
        let ch = match entity {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse().ok()
                } else {
                    None
                };
                code.and_then(char::from_u32)
                    .ok_or_else(|| MalformedXml(format!("unknown entity &{entity};")))?
            }
        };
        out.push(ch);
        rest = &after[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_entries() {
        let xml = br#"<?xml version='1.0' encoding='utf-8' standalone='yes' ?>
<map>
    <boolean name="a_user_is_online" value="false" />
    <string name="s">x &amp; y</string>
    <int name="flag" value="1" />
    <long name="ts" value="1542127729662" />
    <float name="f" value="1.5" />
    <set name="tags"><string>one</string><string>two</string></set>
    <null name="gone" />
    <string name="empty" />
</map>"#;
        let e = parse_shared_prefs(xml).unwrap();
        assert_eq!(e.len(), 8);
        assert_eq!(e[0].value, PrefValue::Boolean(false));
        assert_eq!(e[1].value, PrefValue::String("x & y".into()));
        assert_eq!(e[2].value, PrefValue::Int(1));
        assert_eq!(e[3].value, PrefValue::Long(1_542_127_729_662));
        assert_eq!(e[4].value, PrefValue::Float(1.5));
        assert_eq!(e[5].value, PrefValue::StringSet(alloc::vec!["one".into(), "two".into()]));
        assert_eq!(e[6].value, PrefValue::Null);
        assert_eq!(e[7].value, PrefValue::String(String::new()));
    }

    #[test]
    fn empty_map() {
        assert!(parse_shared_prefs(b"<map/>").unwrap().is_empty());
        assert!(parse_shared_prefs(b"<map></map>").unwrap().is_empty());
    }

    #[test]
    fn malformed_documents() {
        for bad in [
            &b""[..],
            b"<notmap/>",
            b"<map><string name=\"a\">x</map>",
            b"<map><int name=\"a\" value=\"z\"/></map>",
            b"<map><string>no name</string></map>",
            b"<map><string name=\"a\">&bogus;</string></map>",
            b"\xff\xfe",
        ] {
            assert!(parse_shared_prefs(bad).is_err(), "{:?}", core::str::from_utf8(bad));
        }
    }
}
