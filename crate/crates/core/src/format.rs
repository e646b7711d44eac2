//! Fixed-precision number formatting for text outputs.

/// Formats `x` with 9 significant digits in the style of C's `%.9g`.
pub fn sig9(x: f64) -> String {
    sig(x, 9)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let precision = digits.max(1) - 1;
    let sci = format!("{:.*e}", precision, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (precision as i32 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(0.391), "0.391");
        assert_eq!(sig9(200.0), "200");
        assert_eq!(sig9(-2000.0), "-2000");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(59973.123456789), "59973.1235");
        assert_eq!(sig9(2.4998e-4), "0.00024998");
        assert_eq!(sig9(1.23456789e-7), "1.23456789e-07");
        assert_eq!(sig9(5.56356567e-5), "5.56356567e-05");
        assert_eq!(sig9(1e-4), "0.0001");
        assert_eq!(sig9(0.000099999999996), "0.0001");
        assert_eq!(sig9(1.5e12), "1.5e+12");
        assert_eq!(sig9(999999999.6), "1e+09");
    }

    #[test]
    fn parse_back_is_close() {
        for &x in &[std::f64::consts::PI, 1e-9, 123456.789012, -0.000123456789123] {
            let y: f64 = sig9(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 1e-8);
        }
    }
}
