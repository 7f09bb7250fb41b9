//! Hexadecimal float strings (`0x1.8p+1`), exact for every finite `f64`.

pub fn format(v: f64) -> String {
    let sign = if v.is_sign_negative() { "-" } else { "" };
    if v == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = v.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    let (frac, exp) = if exp_bits == 0 {
        // subnormal: renormalize so the leading one is implicit
        let top = 63 - mant.leading_zeros() as i64;
        let frac = (mant << (52 - top)) & ((1u64 << 52) - 1);
        (frac, top - 1074)
    } else {
        (mant, exp_bits - 1023)
    };
    let digits = format!("{frac:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x1p{exp:+}")
    } else {
        format!("{sign}0x1.{digits}p{exp:+}")
    }
}

pub fn parse(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let v = hexf_parse::parse_hexf64(body, false).ok()?;
    Some(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_strings() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(3.0), "0x1.8p+1");
        assert_eq!(format(-0.5), "-0x1p-1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
    }

    #[test]
    fn round_trip_edge_values() {
        for v in [
            0.1,
            -1.0 / 3.0,
            f64::MAX,
            f64::MIN_POSITIVE,
            f64::MIN_POSITIVE / 8.0,
            5e-324,
            -0.0,
            1e300,
        ] {
            let back = parse(&format(v)).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v:e} via {}", format(v));
        }
    }
}
