/// Formats `x` with `sig` significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros stripped.
pub fn format_sig(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Let the scientific formatter do the rounding so the exponent accounts
    // for carries like 9.99..e0 -> 1.00..e1.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
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
        assert_eq!(format_sig(0.3, 12), "0.3");
        assert_eq!(format_sig(-0.1, 12), "-0.1");
        assert_eq!(format_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_sig(123456.789, 12), "123456.789");
        assert_eq!(format_sig(1.5e-7, 12), "1.5e-7");
        assert_eq!(format_sig(2.0e15, 12), "2e15");
        assert_eq!(format_sig(9.9999999999999, 12), "10");
        assert_eq!(format_sig(0.0001234, 3), "0.000123");
        assert_eq!(format_sig(0.0, 12), "0");
    }

    #[test]
    fn round_trips_to_twelve_digits() {
        for &x in &[std::f64::consts::PI, -std::f64::consts::E, 1e-9 / 7.0, 6.02214076e23] {
            let back: f64 = format_sig(x, 12).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-12, "{x} -> {back}");
        }
    }
}
