//! Literal-value parsing: dates in several written forms, quantities with
//! unit conversion, money amounts with magnitude suffixes, and counts.
//!
//! These primitives back both the declarative pattern rules and the
//! corroborator's normalizer, so both extraction routes agree on what a
//! raw string means.

use std::sync::LazyLock;

use regex::Regex;

use crate::types::DateValue;

/// Unit families; conversion is only defined within one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitFamily {
    Length,
    Mass,
    Currency,
}

/// A canonical unit with its conversion factor to the family base
/// (centimetre for length, kilogram for mass; currencies do not convert).
#[derive(Debug, Clone, Copy)]
pub struct UnitDef {
    pub name: &'static str,
    pub family: UnitFamily,
    pub to_base: f64,
}

pub const CM_PER_FOOT: f64 = 30.48;
pub const CM_PER_INCH: f64 = 2.54;
pub const KG_PER_POUND: f64 = 0.45359237;

const UNITS: &[UnitDef] = &[
    UnitDef { name: "centimetre", family: UnitFamily::Length, to_base: 1.0 },
    UnitDef { name: "metre", family: UnitFamily::Length, to_base: 100.0 },
    UnitDef { name: "millimetre", family: UnitFamily::Length, to_base: 0.1 },
    UnitDef { name: "kilometre", family: UnitFamily::Length, to_base: 100_000.0 },
    UnitDef { name: "foot", family: UnitFamily::Length, to_base: CM_PER_FOOT },
    UnitDef { name: "inch", family: UnitFamily::Length, to_base: CM_PER_INCH },
    UnitDef { name: "kilogram", family: UnitFamily::Mass, to_base: 1.0 },
    UnitDef { name: "gram", family: UnitFamily::Mass, to_base: 0.001 },
    UnitDef { name: "pound", family: UnitFamily::Mass, to_base: KG_PER_POUND },
    UnitDef { name: "USD", family: UnitFamily::Currency, to_base: 1.0 },
    UnitDef { name: "EUR", family: UnitFamily::Currency, to_base: 1.0 },
    UnitDef { name: "GBP", family: UnitFamily::Currency, to_base: 1.0 },
];

const UNIT_ALIASES: &[(&str, &str)] = &[
    ("cm", "centimetre"),
    ("centimeter", "centimetre"),
    ("centimeters", "centimetre"),
    ("centimetres", "centimetre"),
    ("m", "metre"),
    ("meter", "metre"),
    ("meters", "metre"),
    ("metres", "metre"),
    ("mm", "millimetre"),
    ("km", "kilometre"),
    ("ft", "foot"),
    ("feet", "foot"),
    ("in", "inch"),
    ("inches", "inch"),
    ("kg", "kilogram"),
    ("kilograms", "kilogram"),
    ("g", "gram"),
    ("grams", "gram"),
    ("lb", "pound"),
    ("lbs", "pound"),
    ("pounds", "pound"),
    ("usd", "USD"),
    ("dollar", "USD"),
    ("dollars", "USD"),
    ("eur", "EUR"),
    ("euro", "EUR"),
    ("euros", "EUR"),
    ("gbp", "GBP"),
];

/// Resolve a unit name or common alias to its canonical definition.
pub fn resolve_unit(name: &str) -> Option<&'static UnitDef> {
    let trimmed = name.trim();
    let canonical = UNIT_ALIASES
        .iter()
        .find(|(alias, _)| alias.eq_ignore_ascii_case(trimmed))
        .map(|(_, canon)| *canon)
        .unwrap_or(trimmed);
    UNITS.iter().find(|u| u.name.eq_ignore_ascii_case(canonical))
}

/// Round to micro-units. Applied after unit conversion so converted values
/// have stable, printable canonical forms; values already in the target
/// unit are left untouched.
pub fn round6(value: f64) -> f64 {
    (value * 1e6).round() / 1e6
}

/// Convert a value between two units of the same family. Currencies never
/// convert across codes.
pub fn convert(value: f64, from: &str, to: &str) -> Option<f64> {
    let from_def = resolve_unit(from)?;
    let to_def = resolve_unit(to)?;
    if from_def.family != to_def.family {
        return None;
    }
    if from_def.family == UnitFamily::Currency {
        return if from_def.name == to_def.name { Some(value) } else { None };
    }
    if from_def.name == to_def.name {
        return Some(value);
    }
    Some(round6(value * from_def.to_base / to_def.to_base))
}

/// Feet-and-inches to centimetres, rounded to micro-units.
pub fn feet_inches_to_cm(feet: f64, inches: f64) -> f64 {
    round6(feet * CM_PER_FOOT + inches * CM_PER_INCH)
}

const MONTHS: &[(&str, u32)] = &[
    ("january", 1),
    ("february", 2),
    ("march", 3),
    ("april", 4),
    ("may", 5),
    ("june", 6),
    ("july", 7),
    ("august", 8),
    ("september", 9),
    ("october", 10),
    ("november", 11),
    ("december", 12),
    ("jan", 1),
    ("feb", 2),
    ("mar", 3),
    ("apr", 4),
    ("jun", 6),
    ("jul", 7),
    ("aug", 8),
    ("sep", 9),
    ("sept", 9),
    ("oct", 10),
    ("nov", 11),
    ("dec", 12),
];

fn month_number(name: &str) -> Option<u32> {
    let cleaned = name.trim().trim_end_matches('.').to_ascii_lowercase();
    MONTHS.iter().find(|(n, _)| *n == cleaned).map(|(_, m)| *m)
}

static DATE_ISO_FULL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static DATE_ISO_YM: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})$").unwrap());
static DATE_YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{3,4})$").unwrap());
static DATE_US: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z]+\.?)\s+(\d{1,2}),?\s+(\d{3,4})$").unwrap());
static DATE_EU: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})\s+([A-Za-z]+\.?),?\s+(\d{3,4})$").unwrap());
static DATE_MONTH_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z]+\.?)\s+(\d{3,4})$").unwrap());

fn checked_full_date(year: i32, month: u32, day: u32) -> Option<DateValue> {
    chrono::NaiveDate::from_ymd_opt(year, month, day)?;
    Some(DateValue::full(year, month, day))
}

/// Parse a written date into a [`DateValue`] with the precision the text
/// carries. Accepts ISO-8601 (full, year-month, year), "May 9, 1927",
/// "9 May 1927", and "May 1927" forms.
pub fn parse_date(raw: &str) -> Option<DateValue> {
    let text = raw.trim();
    if let Some(c) = DATE_ISO_FULL.captures(text) {
        return checked_full_date(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?);
    }
    if let Some(c) = DATE_ISO_YM.captures(text) {
        let month: u32 = c[2].parse().ok()?;
        if (1..=12).contains(&month) {
            return Some(DateValue::year_month(c[1].parse().ok()?, month));
        }
        return None;
    }
    if let Some(c) = DATE_YEAR.captures(text) {
        return Some(DateValue::year(c[1].parse().ok()?));
    }
    if let Some(c) = DATE_US.captures(text) {
        let month = month_number(&c[1])?;
        return checked_full_date(c[3].parse().ok()?, month, c[2].parse().ok()?);
    }
    if let Some(c) = DATE_EU.captures(text) {
        let month = month_number(&c[2])?;
        return checked_full_date(c[3].parse().ok()?, month, c[1].parse().ok()?);
    }
    if let Some(c) = DATE_MONTH_YEAR.captures(text) {
        let month = month_number(&c[1])?;
        return Some(DateValue::year_month(c[2].parse().ok()?, month));
    }
    None
}

static COUNT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d[\d,\s]*$").unwrap());

/// Parse an integer count, tolerating comma and space digit grouping.
pub fn parse_count(raw: &str) -> Option<i64> {
    let text = raw.trim();
    if !COUNT_RE.is_match(text) {
        return None;
    }
    let digits: String = text.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedQuantity {
    pub value: f64,
    pub unit: String,
}

static MONEY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(US\$|\$|€|£)?\s*([\d,]+(?:\.\d+)?)\s*(thousand|million|billion|trillion)?\s*(USD|EUR|GBP|dollars?|euros?)?$",
    )
    .unwrap()
});
static IMPERIAL_LENGTH_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(\d+(?:\.\d+)?)\s*(?:ft|foot|feet)(?:\s+(\d+(?:\.\d+)?)\s*(?:in|inch|inches))?$")
        .unwrap()
});
static SIMPLE_QUANTITY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([\d,]+(?:\.\d+)?)\s*([A-Za-z]+\.?)?$").unwrap());

fn magnitude(word: &str) -> f64 {
    match word.to_ascii_lowercase().as_str() {
        "thousand" => 1e3,
        "million" => 1e6,
        "billion" => 1e9,
        "trillion" => 1e12,
        _ => 1.0,
    }
}

fn currency_code(symbol_or_code: &str) -> Option<&'static str> {
    match symbol_or_code.to_ascii_lowercase().as_str() {
        "$" | "us$" | "usd" | "dollar" | "dollars" => Some("USD"),
        "€" | "eur" | "euro" | "euros" => Some("EUR"),
        "£" | "gbp" => Some("GBP"),
        _ => None,
    }
}

fn parse_number(text: &str) -> Option<f64> {
    text.replace(',', "").parse().ok()
}

/// Parse a money expression like "$3.1 billion" into an amount and a
/// currency code. Requires an explicit symbol or code.
pub fn parse_money(raw: &str) -> Option<ParsedQuantity> {
    let c = MONEY_RE.captures(raw.trim())?;
    let symbol = c.get(1).map(|m| m.as_str());
    let code = c.get(4).map(|m| m.as_str());
    let currency = currency_code(symbol.or(code)?)?;
    if let (Some(s), Some(k)) = (symbol, code) {
        if currency_code(s) != currency_code(k) {
            return None;
        }
    }
    let base: f64 = parse_number(&c[2])?;
    let value = match c.get(3) {
        Some(m) => round6(base * magnitude(m.as_str())),
        None => base,
    };
    Some(ParsedQuantity { value, unit: currency.to_string() })
}

/// Parse a quantity expression and express it in `canonical_unit`.
///
/// Handles compound imperial lengths ("5 ft 11 in"), money with magnitude
/// suffixes, "number unit" pairs with alias resolution, and bare numbers
/// (taken to already be in the canonical unit). Returns `None` when the
/// text does not parse or the unit belongs to a different family.
pub fn parse_quantity(raw: &str, canonical_unit: &str) -> Option<ParsedQuantity> {
    let text = raw.trim();
    let target = resolve_unit(canonical_unit)?;

    if let Some(money) = parse_money(text) {
        if target.family == UnitFamily::Currency {
            return Some(money);
        }
        // A bare number with no symbol also matches the money regex; fall
        // through for non-currency targets.
        if text.contains(['$', '€', '£']) {
            return None;
        }
    } else if target.family == UnitFamily::Currency {
        return None;
    }

    if let Some(c) = IMPERIAL_LENGTH_RE.captures(text) {
        if target.family != UnitFamily::Length {
            return None;
        }
        let feet: f64 = c[1].parse().ok()?;
        let inches: f64 = c.get(2).and_then(|m| m.as_str().parse().ok()).unwrap_or(0.0);
        let cm = feet_inches_to_cm(feet, inches);
        return Some(ParsedQuantity {
            value: convert(cm, "centimetre", target.name)?,
            unit: target.name.to_string(),
        });
    }

    let c = SIMPLE_QUANTITY_RE.captures(text)?;
    let value: f64 = parse_number(&c[1])?;
    match c.get(2) {
        None => Some(ParsedQuantity { value, unit: target.name.to_string() }),
        Some(unit_text) => {
            let unit = resolve_unit(unit_text.as_str())?;
            if unit.family != target.family {
                return None;
            }
            Some(ParsedQuantity {
                value: convert(value, unit.name, target.name)?,
                unit: target.name.to_string(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_written_dates() {
        assert_eq!(parse_date("May 9, 1927"), Some(DateValue::full(1927, 5, 9)));
        assert_eq!(parse_date("March 3, 2022"), Some(DateValue::full(2022, 3, 3)));
        assert_eq!(parse_date("10 December 1815"), Some(DateValue::full(1815, 12, 10)));
        assert_eq!(parse_date("July 4, 1776"), Some(DateValue::full(1776, 7, 4)));
        assert_eq!(parse_date("1927-05-09"), Some(DateValue::full(1927, 5, 9)));
        assert_eq!(parse_date("1927-05"), Some(DateValue::year_month(1927, 5)));
        assert_eq!(parse_date("May 1927"), Some(DateValue::year_month(1927, 5)));
        assert_eq!(parse_date("1150"), Some(DateValue::year(1150)));
        assert_eq!(parse_date("banana"), None);
        assert_eq!(parse_date("February 30, 2001"), None);
        assert_eq!(parse_date("1927-13"), None);
    }

    #[test]
    fn imperial_lengths_convert_via_constant_factors() {
        // Oracle: 6 ft = 6 * 30.48 cm.
        let expected = round6(6.0 * 30.48);
        assert_eq!(expected, 182.88);
        let parsed = parse_quantity("6 ft", "centimetre").unwrap();
        assert_eq!(parsed.value, expected);
        assert_eq!(parsed.unit, "centimetre");

        // Oracle: 5 ft 11 in = 5 * 30.48 + 11 * 2.54 cm.
        let expected = round6(5.0 * 30.48 + 11.0 * 2.54);
        assert_eq!(expected, 180.34);
        assert_eq!(parse_quantity("5 ft 11 in", "centimetre").unwrap().value, expected);
    }

    #[test]
    fn metric_aliases_and_conversion() {
        assert_eq!(
            parse_quantity("184 cm", "centimetre"),
            Some(ParsedQuantity { value: 184.0, unit: "centimetre".into() })
        );
        assert_eq!(parse_quantity("1.70 m", "centimetre").unwrap().value, 170.0);
        assert_eq!(parse_quantity("91 kg", "kilogram").unwrap().value, 91.0);
        // Oracle: 201 lb = 201 * 0.45359237 kg, rounded to micro-units.
        let expected = round6(201.0 * 0.45359237);
        assert_eq!(parse_quantity("201 lb", "kilogram").unwrap().value, expected);
        // Family mismatch is a parse failure, not a silent guess.
        assert_eq!(parse_quantity("91 kg", "centimetre"), None);
    }

    #[test]
    fn money_with_magnitude_suffix() {
        let q = parse_money("$3.1 billion").unwrap();
        assert_eq!(q.value, 3.1e9);
        assert_eq!(q.unit, "USD");
        assert_eq!(parse_money("$600 million").unwrap().value, 6.0e8);
        assert_eq!(parse_money("€2.5 million").unwrap(), ParsedQuantity {
            value: 2.5e6,
            unit: "EUR".into()
        });
        assert_eq!(parse_money("$1,500").unwrap().value, 1500.0);
        assert_eq!(parse_money("1500"), None);
        assert_eq!(parse_quantity("3100000000 USD", "USD").unwrap().value, 3.1e9);
    }

    #[test]
    fn counts_strip_grouping() {
        assert_eq!(parse_count("5"), Some(5));
        assert_eq!(parse_count("41,936"), Some(41_936));
        assert_eq!(parse_count("1,193,605"), Some(1_193_605));
        assert_eq!(parse_count("five"), None);
        assert_eq!(parse_count("-3"), None);
    }

    #[test]
    fn conversion_round_trip_within_tolerance() {
        // cm -> ft-in -> cm stays within 0.01 cm.
        let cm = 180.34;
        let feet = (cm / CM_PER_FOOT).floor();
        let inches = (cm - feet * CM_PER_FOOT) / CM_PER_INCH;
        let back = feet_inches_to_cm(feet, inches);
        assert!((back - cm).abs() < 0.01, "{back} vs {cm}");
    }
}
