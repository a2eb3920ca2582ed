//! Parsing of export series from World Bank-style CSV files.
//!
//! Two layouts are accepted: the wide format shipped by the World Bank data
//! portal (one row per country/indicator, one column per year, optional
//! preamble lines before the header) and a minimal long format with
//! `country,year,value` columns that is convenient for tests and for the
//! intermediate files this pipeline writes itself.

use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default World Bank indicator: exports of goods and services, current US$.
pub const DEFAULT_INDICATOR: &str = "NE.EXP.GNFS.CD";

/// ISO-3166 alpha-3 style country identifier, e.g. `USA` or `IRN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode([u8; 3]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(|b| b.is_ascii_uppercase()) {
            return Err(Error::InvalidCountryCode(code.to_string()));
        }
        Ok(CountryCode([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // invariant: constructed from ASCII uppercase only
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CountryCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CountryCode::new(s)
    }
}

impl TryFrom<String> for CountryCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        CountryCode::new(&s)
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().to_string()
    }
}

/// A country's annual export levels in current US$, consecutive years
/// starting at `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    pub country: CountryCode,
    pub start_year: i32,
    pub values: Vec<f64>,
}

impl AnnualSeries {
    pub fn last_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }
}

/// Parse export series for the requested countries out of `content`.
///
/// The layout is detected from the header: World Bank wide format (with any
/// number of preamble lines before the `Country Name,Country Code,...` row)
/// or `country,year,value` long format. Output order follows `countries`.
pub fn parse_worldbank_csv(
    content: &str,
    indicator: &str,
    countries: &[CountryCode],
    span: RangeInclusive<i32>,
) -> Result<Vec<AnnualSeries>> {
    let series = if looks_wide(content) {
        parse_wide(content, indicator, &span)?
    } else if looks_long(content) {
        parse_long(content, &span)?
    } else {
        return Err(Error::BadCsvFormat(
            "header is neither World Bank wide format nor country,year,value".into(),
        ));
    };

    countries
        .iter()
        .map(|c| {
            series
                .iter()
                .find(|s| s.country == *c)
                .cloned()
                .ok_or_else(|| Error::CountryNotFound(c.to_string()))
        })
        .collect()
}

fn looks_wide(content: &str) -> bool {
    content
        .lines()
        .take(10)
        .any(|l| l.contains("Country Name") && l.contains("Country Code"))
}

fn looks_long(content: &str) -> bool {
    match content.lines().find(|l| !l.trim().is_empty()) {
        Some(header) => {
            let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
            cols.len() >= 3 && cols[0] == "country" && cols[1] == "year" && cols[2] == "value"
        }
        None => false,
    }
}

fn parse_wide(
    content: &str,
    indicator: &str,
    span: &RangeInclusive<i32>,
) -> Result<Vec<AnnualSeries>> {
    // The portal download carries a few metadata lines before the real header.
    let mut header_line = None;
    for (i, line) in content.lines().enumerate() {
        if line.contains("Country Name") && line.contains("Country Code") {
            header_line = Some(i);
            break;
        }
    }
    let header_line = header_line
        .ok_or_else(|| Error::BadCsvFormat("wide format header row not found".into()))?;
    let body: String = content
        .lines()
        .skip(header_line)
        .collect::<Vec<_>>()
        .join("\n");

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::BadCsvFormat(format!("missing column {name:?}")))
    };
    let code_col = col_index("Country Code")?;
    let indicator_col = col_index("Indicator Code")?;

    // Map year -> column index from the header itself.
    let year_cols: Vec<(i32, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.trim().parse::<i32>().ok().map(|y| (y, i)))
        .collect();

    let mut out = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.get(indicator_col).map(str::trim) != Some(indicator) {
            continue;
        }
        let code = match record.get(code_col).map(str::trim) {
            Some(c) => c,
            None => continue,
        };
        let country = match CountryCode::new(code) {
            Ok(c) => c,
            // aggregates like "OED" parse fine; anything else is skipped
            Err(_) => continue,
        };

        let mut values = Vec::with_capacity(span.clone().count());
        for year in span.clone() {
            let (_, col) = year_cols
                .iter()
                .find(|(y, _)| *y == year)
                .ok_or(Error::MissingYear {
                    country: country.to_string(),
                    year,
                })?;
            let cell = record.get(*col).unwrap_or("").trim();
            if cell.is_empty() {
                return Err(Error::MissingYear {
                    country: country.to_string(),
                    year,
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::BadNumericCell {
                // +2: one for the header row, one for 1-based reporting
                row: header_line + row_idx + 2,
                col: col + 1,
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        out.push(AnnualSeries {
            country,
            start_year: *span.start(),
            values,
        });
    }
    Ok(out)
}

fn parse_long(content: &str, span: &RangeInclusive<i32>) -> Result<Vec<AnnualSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    // country -> (year -> value), insertion-ordered by first appearance
    let mut order: Vec<CountryCode> = Vec::new();
    let mut data: std::collections::HashMap<CountryCode, std::collections::HashMap<i32, f64>> =
        std::collections::HashMap::new();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let code = record.get(0).unwrap_or("").trim();
        let country = CountryCode::new(code)?;
        let year: i32 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::BadNumericCell {
                row: row_idx + 2,
                col: 2,
                value: record.get(1).unwrap_or("").to_string(),
            })?;
        if !span.contains(&year) {
            continue;
        }
        let value: f64 = record
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::BadNumericCell {
                row: row_idx + 2,
                col: 3,
                value: record.get(2).unwrap_or("").to_string(),
            })?;
        if !data.contains_key(&country) {
            order.push(country);
        }
        data.entry(country).or_default().insert(year, value);
    }

    order
        .into_iter()
        .map(|country| {
            let years = &data[&country];
            let values: Vec<f64> = span
                .clone()
                .map(|year| {
                    years.get(&year).copied().ok_or(Error::MissingYear {
                        country: country.to_string(),
                        year,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(AnnualSeries {
                country,
                start_year: *span.start(),
                values,
            })
        })
        .collect()
}

/// Check all AnnualSeries invariants against an expected year span.
pub fn validate_series(s: AnnualSeries, span: RangeInclusive<i32>) -> Result<AnnualSeries> {
    let expected = span.clone().count();
    if s.values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if s.start_year != *span.start() || s.values.len() != expected {
        return Err(Error::WrongSeriesLength {
            country: s.country.to_string(),
            expected,
            got: s.values.len(),
        });
    }
    for (i, &v) in s.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                country: s.country.to_string(),
                index: i,
            });
        }
        if v <= 0.0 {
            return Err(Error::NonPositiveValue {
                country: s.country.to_string(),
                value: v,
                index: i,
            });
        }
    }
    Ok(s)
}

/// Emit a long-format `country,year,value` CSV for a set of series.
/// Parsing this output reproduces the series exactly.
pub fn emit_long_csv(series: &[AnnualSeries]) -> String {
    let mut out = String::from("country,year,value\n");
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            let year = s.start_year + i as i32;
            out.push_str(&format!("{},{},{}\n", s.country, year, ryu_full(*v)));
        }
    }
    out
}

/// Shortest decimal representation that round-trips through f64 parsing.
fn ryu_full(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    const WIDE_SAMPLE: &str = "\
\"Data Source\",\"World Development Indicators\",
\"Last Updated Date\",\"2023-01-01\",
\"Country Name\",\"Country Code\",\"Indicator Name\",\"Indicator Code\",\"1970\",\"1971\",\"1972\"
\"United States\",\"USA\",\"Exports of goods and services (current US$)\",\"NE.EXP.GNFS.CD\",\"59700000000\",\"63000000000\",\"70800000000\"
\"Iran, Islamic Rep.\",\"IRN\",\"Exports of goods and services (current US$)\",\"NE.EXP.GNFS.CD\",\"2400000000\",\"3900000000\",\"4900000000\"
\"United States\",\"USA\",\"GDP (current US$)\",\"NY.GDP.MKTP.CD\",\"1\",\"2\",\"3\"
";

    #[test]
    fn wide_format_extracts_requested_country() {
        let out = parse_worldbank_csv(WIDE_SAMPLE, DEFAULT_INDICATOR, &[code("USA")], 1970..=1972)
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].country, code("USA"));
        assert_eq!(out[0].start_year, 1970);
        assert_eq!(out[0].values, vec![5.97e10, 6.3e10, 7.08e10]);
    }

    #[test]
    fn wide_format_filters_on_indicator() {
        // The GDP row for USA must not shadow the exports row.
        let out = parse_worldbank_csv(WIDE_SAMPLE, "NY.GDP.MKTP.CD", &[code("USA")], 1970..=1972)
            .unwrap();
        assert_eq!(out[0].values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn long_format_two_rows() {
        let content = "country,year,value\nIRN,1970,2.4e9\nIRN,1971,3.9e9\n";
        let out =
            parse_worldbank_csv(content, DEFAULT_INDICATOR, &[code("IRN")], 1970..=1971).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].values, vec![2.4e9, 3.9e9]);
        assert_eq!(out[0].start_year, 1970);
    }

    #[test]
    fn missing_country_is_named() {
        let content = "country,year,value\nUSA,1970,1.0\n";
        let err = parse_worldbank_csv(content, DEFAULT_INDICATOR, &[code("GRC")], 1970..=1970)
            .unwrap_err();
        assert!(err.to_string().contains("GRC"), "{err}");
    }

    #[test]
    fn missing_year_is_named() {
        let content = "country,year,value\nUSA,1970,1.0\nUSA,1972,2.0\n";
        let err = parse_worldbank_csv(content, DEFAULT_INDICATOR, &[code("USA")], 1970..=1972)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("USA") && msg.contains("1971"), "{msg}");
    }

    #[test]
    fn bad_numeric_cell_carries_position() {
        let content = "country,year,value\nUSA,1970,oops\n";
        match parse_worldbank_csv(content, DEFAULT_INDICATOR, &[code("USA")], 1970..=1970) {
            Err(Error::BadNumericCell { row, col, value }) => {
                assert_eq!((row, col), (2, 3));
                assert_eq!(value, "oops");
            }
            other => panic!("expected BadNumericCell, got {other:?}"),
        }
    }

    #[test]
    fn output_order_matches_request_order() {
        let content = "country,year,value\nUSA,1970,1.0\nIRN,1970,2.0\nDEU,1970,3.0\n";
        let out = parse_worldbank_csv(
            content,
            DEFAULT_INDICATOR,
            &[code("DEU"), code("USA")],
            1970..=1970,
        )
        .unwrap();
        assert_eq!(out[0].country, code("DEU"));
        assert_eq!(out[1].country, code("USA"));
    }

    #[test]
    fn parse_emit_parse_is_identity() {
        let content = "country,year,value\nUSA,1970,59700000000.5\nUSA,1971,63000000000\n";
        let first =
            parse_worldbank_csv(content, DEFAULT_INDICATOR, &[code("USA")], 1970..=1971).unwrap();
        let emitted = emit_long_csv(&first);
        let second =
            parse_worldbank_csv(&emitted, DEFAULT_INDICATOR, &[code("USA")], 1970..=1971).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn validate_accepts_good_series() {
        let s = AnnualSeries {
            country: code("USA"),
            start_year: 1970,
            values: vec![1.0; 50],
        };
        assert!(validate_series(s, 1970..=2019).is_ok());
    }

    #[test]
    fn validate_rejects_short_series() {
        let s = AnnualSeries {
            country: code("USA"),
            start_year: 1970,
            values: vec![1.0; 49],
        };
        let err = validate_series(s, 1970..=2019).unwrap_err();
        assert!(err.to_string().contains("expected 50 values, got 49"));
    }

    #[test]
    fn validate_rejects_zero_value() {
        let s = AnnualSeries {
            country: code("USA"),
            start_year: 1970,
            values: vec![1.0, 0.0],
        };
        let err = validate_series(s, 1970..=1971).unwrap_err();
        assert!(err.to_string().contains("non-positive"));
    }

    #[test]
    fn country_code_rules() {
        assert!(CountryCode::new("USA").is_ok());
        assert!(CountryCode::new("usa").is_err());
        assert!(CountryCode::new("US").is_err());
        assert!(CountryCode::new("USAA").is_err());
        assert!(CountryCode::new("U1A").is_err());
    }
}
