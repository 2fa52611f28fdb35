//! Two-line element set parsing, serialization and constellation loading.
//!
//! Lines are validated column by column against the NORAD layout: each of
//! the two data lines is exactly 69 characters and ends with a modulo-10
//! checksum. Both 2-line and 3-line (named) groups are accepted.

pub mod fetch;

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Length of a TLE data line, checksum included.
pub const LINE_LEN: usize = 69;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TleError {
    #[error("line {line}: expected {LINE_LEN} characters, found {len}")]
    LineLength { line: u8, len: usize },
    #[error("line {line}: checksum mismatch (column 69 has {found}, computed {expected})")]
    ChecksumMismatch { line: u8, expected: u8, found: char },
    #[error("line {line}, columns {start}-{end}: {reason}")]
    FieldParse {
        line: u8,
        start: usize,
        end: usize,
        reason: String,
    },
    #[error("catalog number differs between line 1 ({line1}) and line 2 ({line2})")]
    CatalogMismatch { line1: u32, line2: u32 },
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<TleError>,
    },
    #[error("record {index}: line 2 missing")]
    Truncated { index: usize },
    #[error("duplicate catalog id {0}")]
    DuplicateCatalogId(u32),
    #[error("requested {requested} satellites but only {available} records available")]
    TargetTooLarge { requested: usize, available: usize },
}

/// Field in the TLE "assumed decimal point" exponent notation, e.g. ` 10270-3`.
///
/// Stored as integers so that re-serialization is byte-exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpNotation {
    /// Signed five-digit mantissa with an implied leading `0.`.
    pub mantissa: i32,
    /// Exponent magnitude (single digit).
    pub exponent: u8,
    /// Exponent sign as written; `00000-0` and `00000+0` both occur in the wild.
    pub negative_exponent: bool,
}

impl ExpNotation {
    pub fn value(&self) -> f64 {
        let exp = if self.negative_exponent {
            -(self.exponent as i32)
        } else {
            self.exponent as i32
        };
        self.mantissa as f64 * 1e-5 * 10f64.powi(exp)
    }

    fn parse(field: &str, line: u8, start: usize) -> Result<Self, TleError> {
        let end = start + field.len() - 1;
        let err = |reason: &str| TleError::FieldParse {
            line,
            start,
            end,
            reason: reason.to_string(),
        };
        let bytes = field.as_bytes();
        if bytes.len() != 8 {
            return Err(err("exponent field must be 8 characters"));
        }
        let sign = match bytes[0] {
            b' ' | b'+' => 1,
            b'-' => -1,
            _ => return Err(err("invalid mantissa sign")),
        };
        let digits = &field[1..6];
        let mantissa: i32 = digits
            .trim()
            .parse()
            .map_err(|_| err("invalid mantissa digits"))?;
        let negative_exponent = match bytes[6] {
            b'-' => true,
            b'+' | b' ' => false,
            _ => return Err(err("invalid exponent sign")),
        };
        let exponent = match bytes[7] {
            d @ b'0'..=b'9' => d - b'0',
            _ => return Err(err("invalid exponent digit")),
        };
        Ok(Self {
            mantissa: sign * mantissa,
            exponent,
            negative_exponent,
        })
    }
}

impl fmt::Display for ExpNotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.mantissa < 0 { '-' } else { ' ' };
        let exp_sign = if self.negative_exponent { '-' } else { '+' };
        write!(
            f,
            "{sign}{:05}{exp_sign}{}",
            self.mantissa.unsigned_abs(),
            self.exponent
        )
    }
}

/// One parsed two-line element set.
#[derive(Debug, Clone, PartialEq)]
pub struct TleRecord {
    pub name: String,
    pub catalog_id: u32,
    pub classification: char,
    /// International designator, columns 10-17 of line 1, kept verbatim.
    pub intl_designator: String,
    pub epoch_year: i32,
    pub epoch_day: f64,
    /// First derivative of mean motion divided by two [rev/day²].
    pub mean_motion_dot: f64,
    pub mean_motion_ddot: ExpNotation,
    pub bstar: ExpNotation,
    pub ephemeris_type: char,
    pub element_set_number: u16,
    pub inclination: f64,
    pub raan: f64,
    pub eccentricity: f64,
    pub arg_perigee: f64,
    pub mean_anomaly: f64,
    /// Revolutions per day.
    pub mean_motion: f64,
    pub rev_number: u32,
    pub raw_lines: [String; 2],
}

/// Modulo-10 checksum over the first 68 characters of a line: digits count
/// their value, `-` counts one, everything else zero.
pub fn compute_checksum(line: &str) -> u8 {
    let sum: u32 = line
        .bytes()
        .take(LINE_LEN - 1)
        .map(|b| match b {
            b'0'..=b'9' => (b - b'0') as u32,
            b'-' => 1,
            _ => 0,
        })
        .sum();
    (sum % 10) as u8
}

fn verify_line(line: &str, number: u8) -> Result<(), TleError> {
    if !line.is_ascii() {
        return Err(TleError::FieldParse {
            line: number,
            start: 1,
            end: LINE_LEN,
            reason: "non-ASCII character".into(),
        });
    }
    if line.len() != LINE_LEN {
        return Err(TleError::LineLength {
            line: number,
            len: line.len(),
        });
    }
    let found = line.as_bytes()[LINE_LEN - 1] as char;
    let expected = compute_checksum(line);
    if found.to_digit(10) != Some(expected as u32) {
        return Err(TleError::ChecksumMismatch {
            line: number,
            expected,
            found,
        });
    }
    if line.as_bytes()[0] != b'0' + number {
        return Err(TleError::FieldParse {
            line: number,
            start: 1,
            end: 1,
            reason: format!("expected line number {number}"),
        });
    }
    Ok(())
}

/// Column slice using the 1-based inclusive ranges of the format definition.
struct Columns<'a> {
    line: &'a str,
    number: u8,
}

impl<'a> Columns<'a> {
    fn raw(&self, start: usize, end: usize) -> &'a str {
        &self.line[start - 1..end]
    }

    fn err(&self, start: usize, end: usize, reason: impl Into<String>) -> TleError {
        TleError::FieldParse {
            line: self.number,
            start,
            end,
            reason: reason.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, start: usize, end: usize, what: &str) -> Result<T, TleError> {
        self.raw(start, end)
            .trim()
            .parse()
            .map_err(|_| self.err(start, end, format!("invalid {what}: {:?}", self.raw(start, end))))
    }

    fn char_at(&self, col: usize) -> char {
        self.line.as_bytes()[col - 1] as char
    }

    fn angle(&self, start: usize, end: usize, what: &str) -> Result<f64, TleError> {
        let v: f64 = self.parse(start, end, what)?;
        if !v.is_finite() || !(0.0..=360.0).contains(&v) {
            return Err(self.err(start, end, format!("{what} out of range: {v}")));
        }
        Ok(v.rem_euclid(360.0))
    }
}

/// Parse one element set. A missing name is synthesized as `SAT-<catalog_id>`.
pub fn parse_tle(name: Option<&str>, line1: &str, line2: &str) -> Result<TleRecord, TleError> {
    verify_line(line1, 1)?;
    verify_line(line2, 2)?;
    let l1 = Columns { line: line1, number: 1 };
    let l2 = Columns { line: line2, number: 2 };

    let catalog_id: u32 = l1.parse(3, 7, "catalog number")?;
    let catalog2: u32 = l2.parse(3, 7, "catalog number")?;
    if catalog_id != catalog2 {
        return Err(TleError::CatalogMismatch {
            line1: catalog_id,
            line2: catalog2,
        });
    }

    let yy: i32 = l1.parse(19, 20, "epoch year")?;
    let epoch_year = if yy < 57 { 2000 + yy } else { 1900 + yy };
    let epoch_day: f64 = l1.parse(21, 32, "epoch day")?;
    if !(1.0..367.0).contains(&epoch_day) {
        return Err(l1.err(21, 32, format!("epoch day out of range: {epoch_day}")));
    }

    let mean_motion_dot: f64 = l1.parse(34, 43, "mean motion derivative")?;

    let eccentricity = {
        let raw = l2.raw(27, 33);
        if !raw.bytes().all(|b| b.is_ascii_digit()) {
            return Err(l2.err(27, 33, "eccentricity must be 7 digits"));
        }
        raw.parse::<u32>().unwrap() as f64 * 1e-7
    };

    let mean_motion: f64 = l2.parse(53, 63, "mean motion")?;
    if !(mean_motion > 0.0) {
        return Err(l2.err(53, 63, "mean motion must be positive"));
    }
    let rev_raw = l2.raw(64, 68);
    let rev_number = if rev_raw.trim().is_empty() {
        0
    } else {
        l2.parse(64, 68, "revolution number")?
    };
    let elset_raw = l1.raw(65, 68);
    let element_set_number = if elset_raw.trim().is_empty() {
        0
    } else {
        l1.parse(65, 68, "element set number")?
    };

    let name = match name.map(str::trim) {
        Some(n) if !n.is_empty() => n.strip_prefix("0 ").unwrap_or(n).to_string(),
        _ => format!("SAT-{catalog_id}"),
    };

    Ok(TleRecord {
        name,
        catalog_id,
        classification: l1.char_at(8),
        intl_designator: l1.raw(10, 17).to_string(),
        epoch_year,
        epoch_day,
        mean_motion_dot,
        mean_motion_ddot: ExpNotation::parse(l1.raw(45, 52), 1, 45)?,
        bstar: ExpNotation::parse(l1.raw(54, 61), 1, 54)?,
        ephemeris_type: l1.char_at(63),
        element_set_number,
        inclination: l2.angle(9, 16, "inclination")?,
        raan: l2.angle(18, 25, "RAAN")?,
        eccentricity,
        arg_perigee: l2.angle(35, 42, "argument of perigee")?,
        mean_anomaly: l2.angle(44, 51, "mean anomaly")?,
        mean_motion,
        rev_number,
        raw_lines: [line1.to_string(), line2.to_string()],
    })
}

fn with_checksum(mut body: String) -> String {
    debug_assert_eq!(body.len(), LINE_LEN - 1);
    let c = compute_checksum(&body);
    body.push((b'0' + c) as char);
    body
}

fn format_mean_motion_dot(v: f64) -> String {
    let digits = format!("{:.8}", v.abs());
    let frac = digits.trim_start_matches('0');
    let sign = if v < 0.0 { '-' } else { ' ' };
    format!("{sign}{frac:>9}")
}

impl TleRecord {
    /// Format the record's fields back into the two data lines, recomputing checksums.
    pub fn serialize(&self) -> [String; 2] {
        let line1 = format!(
            "1 {:05}{} {:<8} {:02}{:012.8} {} {} {} {} {:>4}",
            self.catalog_id,
            self.classification,
            self.intl_designator,
            self.epoch_year.rem_euclid(100),
            self.epoch_day,
            format_mean_motion_dot(self.mean_motion_dot),
            self.mean_motion_ddot,
            self.bstar,
            self.ephemeris_type,
            self.element_set_number,
        );
        let line2 = format!(
            "2 {:05} {:8.4} {:8.4} {:07} {:8.4} {:8.4} {:11.8}{:>5}",
            self.catalog_id,
            self.inclination,
            self.raan,
            (self.eccentricity * 1e7).round() as u32,
            self.arg_perigee,
            self.mean_anomaly,
            self.mean_motion,
            self.rev_number,
        );
        [with_checksum(line1), with_checksum(line2)]
    }

    /// Three-line text block (name line followed by the data lines).
    pub fn to_text(&self) -> String {
        let [l1, l2] = self.serialize();
        format!("{}\n{l1}\n{l2}\n", self.name)
    }
}

/// Ordered set of satellites with unique catalog ids.
#[derive(Debug, Clone, Default)]
pub struct Constellation {
    records: Vec<TleRecord>,
}

impl Constellation {
    pub fn new(records: Vec<TleRecord>) -> Result<Self, TleError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.catalog_id) {
                return Err(TleError::DuplicateCatalogId(r.catalog_id));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[TleRecord] {
        &self.records
    }

    pub fn size(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, catalog_id: u32) -> Option<&TleRecord> {
        self.records.iter().find(|r| r.catalog_id == catalog_id)
    }
}

/// Split a text blob into element sets. Blank lines are ignored; a line that
/// does not start with `1 ` before a line-1/line-2 pair is taken as the name.
pub fn parse_blob(source: &str) -> Result<Vec<TleRecord>, TleError> {
    let lines: Vec<&str> = source
        .lines()
        .map(|l| l.trim_end_matches(['\r', '\n']))
        .filter(|l| !l.trim().is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let index = out.len();
        let wrap = |e: TleError| TleError::Record {
            index,
            source: Box::new(e),
        };
        let is_line1 = |l: &str| l.starts_with("1 ");
        let (name, l1_idx) = if is_line1(lines[i]) && lines.get(i + 1).is_some_and(|l| l.starts_with("2 ")) {
            (None, i)
        } else {
            (Some(lines[i]), i + 1)
        };
        let (Some(l1), Some(l2)) = (lines.get(l1_idx), lines.get(l1_idx + 1)) else {
            return Err(TleError::Truncated { index });
        };
        out.push(parse_tle(name, l1.trim_end(), l2.trim_end()).map_err(wrap)?);
        i = l1_idx + 2;
    }
    Ok(out)
}

/// Parse a blob and optionally keep a uniformly random subset of `target_size`
/// records. The subset depends only on `(source, target_size, seed)` and keeps
/// file order.
pub fn load_constellation(source: &str, target_size: Option<usize>, seed: u64) -> Result<Constellation, TleError> {
    let records = parse_blob(source)?;
    let records = match target_size {
        Some(s) if s > records.len() => {
            return Err(TleError::TargetTooLarge {
                requested: s,
                available: records.len(),
            })
        }
        Some(s) if s < records.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = index::sample(&mut rng, records.len(), s).into_vec();
            picked.sort_unstable();
            let mut keep = vec![false; records.len()];
            for p in picked {
                keep[p] = true;
            }
            records
                .into_iter()
                .zip(keep)
                .filter_map(|(r, k)| k.then_some(r))
                .collect()
        }
        _ => records,
    };
    Constellation::new(records)
}
