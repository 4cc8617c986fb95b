//! Serialization shared by every front end: JSON and CSV with all floats in
//! scientific notation at 16 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::analysis::{CompareResult, ErrorProfile, MethodId, PowerCurve};
use crate::thresholds::DerivedThresholds;

use super::McValidation;

/// Format a float the way every output of the engine does.
pub fn sci(x: f64) -> String {
    format!("{x:.15e}")
}

struct Sci<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Sci<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sci(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

fn write<T: Serialize + ?Sized, F: Formatter>(value: &T, f: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci(f));
    value.serialize(&mut ser).expect("engine types serialize infallibly");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Compact JSON.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    write(value, CompactFormatter)
}

/// Indented JSON with the same number formatting as [`to_json`].
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    write(value, PrettyFormatter::new())
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of ASCII fields")
}

pub const POWER_HEADER: [&str; 4] = ["log_or", "power_A", "power_B", "power_C"];
pub const PROFILE_HEADER: [&str; 4] = ["zeta_driver", "R_A", "R_B", "R_C"];
pub const COMPARE_HEADER: [&str; 5] = ["n0p", "n1p", "odds_ratio", "power_A", "power_B"];
pub const THRESHOLDS_HEADER: [&str; 5] = ["beta", "beta_star", "beta_perp", "p0", "mode"];
pub const MC_HEADER: [&str; 6] = ["method", "analytic", "rate", "std_error", "deviation_se", "pass"];

pub fn power_csv(c: &PowerCurve) -> String {
    table(
        &POWER_HEADER,
        c.grid.iter().map(|p| vec![sci(p.log_or), sci(p.power_a), sci(p.power_b), sci(p.power_c)]),
    )
}

pub fn profile_csv(p: &ErrorProfile) -> String {
    table(
        &PROFILE_HEADER,
        p.grid.iter().map(|e| vec![sci(e.zeta_driver), sci(e.r_a), sci(e.r_b), sci(e.r_c)]),
    )
}

pub fn compare_csv(c: &CompareResult) -> String {
    table(
        &COMPARE_HEADER,
        c.rows.iter().flat_map(|r| {
            c.odds_ratios.iter().enumerate().map(move |(k, &or)| {
                vec![r.n0p.to_string(), r.n1p.to_string(), sci(or), sci(r.power_a[k]), sci(r.power_b[k])]
            })
        }),
    )
}

pub fn thresholds_csv(d: &DerivedThresholds) -> String {
    let mode = serde_json::to_value(d.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    table(
        &THRESHOLDS_HEADER,
        [vec![sci(d.thresholds.beta), sci(d.beta_star), sci(d.beta_perp), sci(d.p0), mode]],
    )
}

pub fn mc_csv(v: &McValidation) -> String {
    table(
        &MC_HEADER,
        v.checks.iter().map(|c| {
            let name = match c.method {
                MethodId::A => "A",
                MethodId::B => "B",
                MethodId::C => "C",
            };
            vec![name.into(), sci(c.analytic), sci(c.rate), sci(c.std_error), sci(c.deviation_se), c.pass.to_string()]
        }),
    )
}
