//! Integer type codes of the Health Mate `measure` table, mapped to measurement
//! kinds. The mapping is plain text so a map taken from a real device can
//! replace the default without a rebuild:
//!
//! ```text
//! # code = kind
//! 1 = weight
//! 4 = systolic
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt;

use super::healthmate::MeasurementKind;

pub const DEFAULT_CODE_MAP: &str = "\
# Health Mate measure type codes
1 = weight
4 = systolic
5 = diastolic
6 = body-fat
8 = body-water
11 = pulse
76 = muscle-mass
88 = bone-mass
170 = bmi
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureCodeMap {
    codes: BTreeMap<i64, MeasurementKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMapError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CodeMapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "code map line {}: {}", self.line, self.message)
    }
}

impl Default for MeasureCodeMap {
    fn default() -> Self {
        MeasureCodeMap::parse(DEFAULT_CODE_MAP).expect("built-in code map parses")
    }
}

impl MeasureCodeMap {
    pub fn parse(text: &str) -> Result<Self, CodeMapError> {
        let mut codes = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CodeMapError { line: n + 1, message };
            let (code, kind) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `code = kind`, got {line:?}")))?;
            let code: i64 = code
                .trim()
                .parse()
                .map_err(|_| err(format!("{:?} is not an integer code", code.trim())))?;
            let kind = MeasurementKind::from_name(kind.trim())
                .ok_or_else(|| err(format!("unknown measurement kind {:?}", kind.trim())))?;
            if codes.insert(code, kind).is_some() {
                return Err(err(format!("code {code} mapped twice")));
            }
        }
        Ok(MeasureCodeMap { codes })
    }

    pub fn kind(&self, code: i64) -> Option<MeasurementKind> {
        self.codes.get(&code).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, MeasurementKind)> + '_ {
        self.codes.iter().map(|(c, k)| (*c, *k))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (code, kind) in self.iter() {
            out.push_str(&format!("{code} = {}\n", kind.as_str()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map() {
        let map = MeasureCodeMap::default();
        assert_eq!(map.kind(1), Some(MeasurementKind::Weight));
        assert_eq!(map.kind(170), Some(MeasurementKind::Bmi));
        assert_eq!(map.kind(999), None);
        assert_eq!(map.iter().count(), 9);
        assert_eq!(MeasureCodeMap::parse(&map.to_text()).unwrap(), map);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = MeasureCodeMap::parse("1 = weight\n\nx = bmi").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(MeasureCodeMap::parse("1 = height").unwrap_err().line, 1);
        assert_eq!(MeasureCodeMap::parse("1 = weight\n1 = bmi").unwrap_err().line, 2);
        assert_eq!(MeasureCodeMap::parse("7").unwrap_err().line, 1);
    }
}
