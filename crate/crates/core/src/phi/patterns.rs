//! Byte-level pattern sweep for PHI-shaped strings that no structured parser
//! claimed.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::vec::Vec;

use crate::model::{is_email, ArtifactRecord, HitPattern, Payload, RawHit, SourceLocator};
use crate::time::{CalendarDate, UtcInstant};

/// Printable runs shorter than this are ignored.
pub const MIN_RUN: usize = 4;

/// A pattern match inside a text: byte offset, length and class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub offset: usize,
    pub len: usize,
    pub pattern: HitPattern,
}

/// Sweeps printable ASCII runs of `bytes` and returns one raw-hit record per
/// match. The locator detail is `@<offset>`, prefixed with the base locator's
/// detail when it has one.
pub fn scan_raw(bytes: &[u8], base: &SourceLocator, recovered_at: UtcInstant) -> Vec<ArtifactRecord> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < bytes.len() {
        if !is_printable(bytes[start]) {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < bytes.len() && is_printable(bytes[end]) {
            end += 1;
        }
        if end - start >= MIN_RUN {
            // printable ASCII is valid UTF-8
            let run = core::str::from_utf8(&bytes[start..end]).unwrap_or("");
            for m in find_patterns(run) {
                let offset = start + m.offset;
                let mut locator = base.clone();
                locator.detail = if base.detail.is_empty() {
                    format!("@{offset}")
                } else {
                    format!("{}@{offset}", base.detail)
                };
                let hit = RawHit {
                    pattern: m.pattern,
                    text: run[m.offset..m.offset + m.len].to_owned(),
                    measure_code: None,
                    measured_at: None,
                };
                out.push(ArtifactRecord::new(Payload::RawHit(hit), locator, recovered_at));
            }
        }
        start = end;
    }
    out
}

fn is_printable(b: u8) -> bool {
    (0x20..0x7f).contains(&b)
}

/// Every pattern occurrence in `text`, ordered by offset then class.
pub fn find_patterns(text: &str) -> Vec<Match> {
    let mut out = Vec::new();
    out.extend(find_emails(text));
    out.extend(find_macs(text));
    out.extend(find_ssns(text));
    out.extend(find_cards(text));
    out.extend(find_dates(text));
    out.extend(find_secret_names(text));
    out.sort();
    out
}

pub fn contains_ssn(text: &str) -> Option<&str> {
    find_ssns(text).first().map(|m| &text[m.offset..m.offset + m.len])
}

pub fn contains_payment_card(text: &str) -> Option<&str> {
    find_cards(text).first().map(|m| &text[m.offset..m.offset + m.len])
}

fn at(text: &str, i: usize) -> Option<u8> {
    text.as_bytes().get(i).copied()
}

fn before(text: &str, i: usize) -> Option<u8> {
    i.checked_sub(1).and_then(|j| at(text, j))
}

fn find_emails(text: &str) -> Vec<Match> {
    let b = text.as_bytes();
    let local = |c: u8| c.is_ascii_alphanumeric() || b"._%+-".contains(&c);
    let domain = |c: u8| c.is_ascii_alphanumeric() || c == b'-' || c == b'.';
    let mut out = Vec::new();
    let mut covered = 0;
    for (i, _) in text.match_indices('@') {
        if i < covered {
            continue;
        }
        let mut s = i;
        while s > 0 && local(b[s - 1]) {
            s -= 1;
        }
        while s < i && b[s] == b'.' {
            s += 1;
        }
        let mut e = i + 1;
        while e < b.len() && domain(b[e]) {
            e += 1;
        }
        while e > i + 1 && (b[e - 1] == b'.' || b[e - 1] == b'-') {
            e -= 1;
        }
        if is_email(&text[s..e]) {
            out.push(Match { offset: s, len: e - s, pattern: HitPattern::Email });
            covered = e;
        }
    }
    out
}

fn find_macs(text: &str) -> Vec<Match> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 17 <= b.len() {
        let window = &b[i..i + 17];
        let shaped = window.iter().enumerate().all(|(k, c)| {
            if k % 3 == 2 {
                *c == b':'
            } else {
                c.is_ascii_hexdigit()
            }
        });
        let edge = |c: Option<u8>| c.is_some_and(|c| c.is_ascii_hexdigit() || c == b':');
        if shaped && !edge(before(text, i)) && !edge(at(text, i + 17)) {
            out.push(Match { offset: i, len: 17, pattern: HitPattern::MacAddress });
            i += 17;
        } else {
            i += 1;
        }
    }
    out
}

/// Maximal digit runs as (start, end).
/// Maximal digit runs, leaving out both halves of decimals such as `1.4000000953674316`.
fn digit_runs(text: &str) -> Vec<(usize, usize)> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_digit() {
            let s = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let digit = |k: Option<usize>| k.and_then(|k| b.get(k)).is_some_and(u8::is_ascii_digit);
            let fraction = s >= 1 && b[s - 1] == b'.' && digit(s.checked_sub(2));
            let whole = b.get(i) == Some(&b'.') && digit(Some(i + 1));
            if !fraction && !whole {
                out.push((s, i));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// `ddd-dd-dddd` with the never-issued area/group/serial values excluded.
fn find_ssns(text: &str) -> Vec<Match> {
    let runs = digit_runs(text);
    let mut out = Vec::new();
    for w in runs.windows(3) {
        let [(a0, a1), (g0, g1), (s0, s1)] = [w[0], w[1], w[2]];
        let shaped = a1 - a0 == 3
            && g1 - g0 == 2
            && s1 - s0 == 4
            && g0 == a1 + 1
            && s0 == g1 + 1
            && at(text, a1) == Some(b'-')
            && at(text, g1) == Some(b'-');
        let edge = |c: Option<u8>| c.is_some_and(|c| c == b'-' || c.is_ascii_alphanumeric());
        if !shaped || edge(before(text, a0)) || edge(at(text, s1)) {
            continue;
        }
        let area = &text[a0..a1];
        if area == "000" || area == "666" || area.starts_with('9') || &text[g0..g1] == "00" || &text[s0..s1] == "0000" {
            continue;
        }
        out.push(Match { offset: a0, len: s1 - a0, pattern: HitPattern::Ssn });
    }
    out
}

fn luhn(digits: &[u8]) -> bool {
    let sum: u32 = digits
        .iter()
        .rev()
        .enumerate()
        .map(|(i, d)| {
            let d = (d - b'0') as u32;
            if i % 2 == 1 {
                let x = d * 2;
                if x > 9 { x - 9 } else { x }
            } else {
                d
            }
        })
        .sum();
    sum.is_multiple_of(10)
}

/// Issuer prefix and length of the major card networks.
fn card_shaped(d: &[u8]) -> bool {
    let s = core::str::from_utf8(d).unwrap_or("");
    let p2: u32 = s.get(..2).and_then(|p| p.parse().ok()).unwrap_or(0);
    let p4: u32 = s.get(..4).and_then(|p| p.parse().ok()).unwrap_or(0);
    match d.len() {
        15 => p2 == 34 || p2 == 37,
        16 => s.starts_with('4') || (51..=55).contains(&p2) || (2221..=2720).contains(&p4) || p4 == 6011 || p2 == 65,
        13 | 19 => s.starts_with('4'),
        _ => false,
    }
}

/// Contiguous card numbers, or four groups of four separated by one space or
/// hyphen.
fn find_cards(text: &str) -> Vec<Match> {
    let runs = digit_runs(text);
    let edge = |c: Option<u8>| c.is_some_and(|c| c.is_ascii_alphanumeric());
    let mut out = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let (s, e) = runs[i];
        if i + 3 < runs.len() && e - s == 4 {
            let group = &runs[i..i + 4];
            let sep = at(text, e);
            let grouped = (sep == Some(b' ') || sep == Some(b'-'))
                && group.iter().all(|(gs, ge)| ge - gs == 4)
                && group.windows(2).all(|w| w[1].0 == w[0].1 + 1 && at(text, w[0].1) == sep);
            if grouped {
                let end = group[3].1;
                let digits: Vec<u8> = text[s..end].bytes().filter(u8::is_ascii_digit).collect();
                if !edge(before(text, s)) && !edge(at(text, end)) && card_shaped(&digits) && luhn(&digits) {
                    out.push(Match { offset: s, len: end - s, pattern: HitPattern::PaymentCard });
                    i += 4;
                    continue;
                }
            }
        }
        let digits = &text.as_bytes()[s..e];
        if !edge(before(text, s)) && !edge(at(text, e)) && card_shaped(digits) && luhn(digits) {
            out.push(Match { offset: s, len: e - s, pattern: HitPattern::PaymentCard });
        }
        i += 1;
    }
    out
}

/// ISO calendar dates (`YYYY-MM-DD`, optionally with a `THH:MM:SS` time) and
/// 10- or 13-digit epoch values that land between 2000 and 2100.
fn find_dates(text: &str) -> Vec<Match> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    for (s, e) in digit_runs(text) {
        if before(text, s).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'-') {
            continue;
        }
        if e - s == 4 && e + 6 <= b.len() {
            if let Some(date) = text.get(s..s + 10).filter(|d| CalendarDate::parse(d).is_some()) {
                let mut len = date.len();
                let time = text.get(s + 10..s + 19).unwrap_or("");
                let tb = time.as_bytes();
                if tb.len() == 9
                    && tb[0] == b'T'
                    && tb[3] == b':'
                    && tb[6] == b':'
                    && [1, 2, 4, 5, 7, 8].iter().all(|&k| tb[k].is_ascii_digit())
                {
                    len += 9;
                    if at(text, s + len) == Some(b'Z') {
                        len += 1;
                    }
                }
                if !at(text, s + len).is_some_and(|c| c.is_ascii_digit()) {
                    out.push(Match { offset: s, len, pattern: HitPattern::DateLike });
                }
                continue;
            }
        }
        if at(text, e).is_some_and(|c| c.is_ascii_alphabetic()) {
            continue;
        }
        let secs = match e - s {
            10 => text[s..e].parse::<i64>().ok(),
            13 => text[s..e].parse::<i64>().ok().map(|ms| ms / 1000),
            _ => None,
        };
        // 2000-01-01 .. 2100-01-01
        if secs.is_some_and(|t| (946_684_800..4_102_444_800).contains(&t)) {
            out.push(Match { offset: s, len: e - s, pattern: HitPattern::DateLike });
        }
    }
    out
}

/// Identifier-like tokens whose name mentions a password or token.
fn find_secret_names(text: &str) -> Vec<Match> {
    let b = text.as_bytes();
    let ident = |c: u8| c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b'.';
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if !ident(b[i]) {
            i += 1;
            continue;
        }
        let s = i;
        while i < b.len() && ident(b[i]) {
            i += 1;
        }
        let lower = text[s..i].to_ascii_lowercase();
        if (lower.contains("password") || lower.contains("token") || lower.contains("passwd")) && !lower.contains('@') {
            out.push(Match { offset: s, len: i - s, pattern: HitPattern::SecretKeyName });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ContainerKind;
    use alloc::string::String;
    use alloc::vec;

    fn kinds(text: &str) -> Vec<(HitPattern, &str)> {
        find_patterns(text)
            .into_iter()
            .map(|m| (m.pattern, &text[m.offset..m.offset + m.len]))
            .collect()
    }

    fn base() -> SourceLocator {
        SourceLocator {
            package_name: "p".into(),
            relative_path: "p/f.bin".into(),
            container: ContainerKind::RawBytes,
            detail: String::new(),
        }
    }

    #[test]
    fn email_in_bytes() {
        let mut bytes = vec![0u8, 1, 2];
        bytes.extend_from_slice(b"user=medicaldevices2018exper@gmail.com;");
        let hits = scan_raw(&bytes, &base(), UtcInstant::EPOCH);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].locator.detail, "@8");
        match &hits[0].payload {
            Payload::RawHit(h) => {
                assert_eq!(h.pattern, HitPattern::Email);
                assert_eq!(h.text, "medicaldevices2018exper@gmail.com");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mac_in_bytes() {
        let hits = scan_raw(b"\x00\x0200:24:e4:5a:ee:6c\x00", &base(), UtcInstant::EPOCH);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].locator.detail, "@2");
        assert!(matches!(&hits[0].payload, Payload::RawHit(h) if h.pattern == HitPattern::MacAddress));
        assert_eq!(kinds("00:24:e4:5a:ee:6c:11"), []);
    }

    #[test]
    fn empty_input() {
        assert!(scan_raw(&[], &base(), UtcInstant::EPOCH).is_empty());
    }

    #[test]
    fn ssn_shapes() {
        assert_eq!(kinds("ssn 123-45-6789."), [(HitPattern::Ssn, "123-45-6789")]);
        assert_eq!(kinds("000-45-6789 666-12-3456 900-12-3456 123-00-4567 123-45-0000"), []);
        assert_eq!(kinds("1123-45-6789"), []);
    }

    #[test]
    fn cards() {
        assert_eq!(kinds("4111111111111111"), [(HitPattern::PaymentCard, "4111111111111111")]);
        assert!(kinds("1.4000000953674316").is_empty());
        assert_eq!(kinds("pay 4111 1111 1111 1111 now"), [(HitPattern::PaymentCard, "4111 1111 1111 1111")]);
        assert_eq!(kinds("4111111111111112"), []);
        // a millisecond epoch passes no issuer prefix
        assert_eq!(kinds("1542127729662"), [(HitPattern::DateLike, "1542127729662")]);
    }

    #[test]
    fn dates() {
        assert_eq!(kinds("born 1980-02-29"), [(HitPattern::DateLike, "1980-02-29")]);
        assert_eq!(kinds("2018-07-05T22:25:49Z"), [(HitPattern::DateLike, "2018-07-05T22:25:49Z")]);
        assert_eq!(kinds("1981-02-29"), []);
        assert_eq!(kinds("t=1530829549"), [(HitPattern::DateLike, "1530829549")]);
        assert_eq!(kinds("12345"), []);
    }

    #[test]
    fn secret_names() {
        assert_eq!(
            kinds("<string name=\"x_user_password\">"),
            [(HitPattern::SecretKeyName, "x_user_password")]
        );
        assert_eq!(kinds("refreshToken"), [(HitPattern::SecretKeyName, "refreshToken")]);
    }

    #[test]
    fn base_detail_is_prefixed() {
        let mut b = base();
        b.detail = "note".into();
        let hits = scan_raw(b"a@b.co", &b, UtcInstant::EPOCH);
        assert_eq!(hits[0].locator.detail, "note@0");
    }
}
