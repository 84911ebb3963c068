//! Deterministic text rendering for report output.
//!
//! All real numbers in CSV output are printed with twelve significant
//! digits, using fixed-point notation for moderate magnitudes and
//! scientific notation for the extremes, with trailing zeros trimmed.
//! The same input always renders to the same bytes, which is what makes
//! repeated sweeps byte-comparable.

/// Render `x` with twelve significant digits.
///
/// Values whose decimal exponent lies in `-4..12` use fixed-point
/// notation (`0.03125`, `0.00411522633745`); anything smaller or larger
/// switches to scientific notation (`2.08166817117e-16`). Trailing
/// zeros and a dangling decimal point are trimmed, so exact values stay
/// short: `1`, `0.25`, `0`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        // Reports never contain non-finite values; render defensively
        // rather than panic inside an output path.
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (_, exp) = sci
        .split_once('e')
        .expect("LowerExp formatting always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is a valid integer");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let (mantissa, _) = sci.split_once('e').expect("checked above");
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Join pre-rendered fields into one CSV record terminated by `\n`.
///
/// Fields never contain commas, quotes, or newlines (they are model
/// codes and `sig12`-rendered numbers), so no quoting layer is needed.
pub fn csv_record(fields: &[&str]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}
