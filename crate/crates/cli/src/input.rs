//! Parsing of node lists, ranges and grids given on the command line.

use std::fs;

use expdet::{Error, NodeVector, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn parse_real(token: &str, what: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| invalid(format!("{what}: cannot parse '{}' as a number", token.trim())))
}

/// Raw values from `a,b,c` or from `@path` (one value per line, `#` starts
/// a comment).
pub fn parse_values(arg: &str, what: &str) -> Result<Vec<f64>> {
    if let Some(path) = arg.strip_prefix('@') {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("{what}: cannot read '{path}': {e}")))?;
        return text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|line| !line.is_empty())
            .map(|line| parse_real(line, what))
            .collect();
    }
    if arg.trim().is_empty() {
        return Ok(Vec::new());
    }
    arg.split(',').map(|tok| parse_real(tok, what)).collect()
}

/// A validated node list.
pub fn parse_nodes(arg: &str, what: &str) -> Result<NodeVector> {
    NodeVector::new(parse_values(arg, what)?)
}

/// `lo:hi` with `lo < hi`.
pub fn parse_interval(arg: &str, what: &str) -> Result<(f64, f64)> {
    let (lo, hi) = arg
        .split_once(':')
        .ok_or_else(|| invalid(format!("{what}: expected lo:hi, got '{arg}'")))?;
    let (lo, hi) = (parse_real(lo, what)?, parse_real(hi, what)?);
    if !(lo < hi) {
        return Err(invalid(format!("{what}: lower end must be below upper end")));
    }
    Ok((lo, hi))
}

/// `a..b` (inclusive) or a single size `a`.
pub fn parse_size_range(arg: &str) -> Result<(usize, usize)> {
    let parse = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("--n: cannot parse '{}' as a size", tok.trim())))
    };
    match arg.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b.trim_start_matches('='))?)),
        None => {
            let n = parse(arg)?;
            Ok((n, n))
        }
    }
}

/// `min:max:count`.
pub fn parse_grid(arg: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = arg.split(':').collect();
    let [min, max, count] = parts.as_slice() else {
        return Err(invalid(format!("--lambda: expected min:max:count, got '{arg}'")));
    };
    let count = count
        .trim()
        .parse::<usize>()
        .map_err(|_| invalid(format!("--lambda: cannot parse count '{count}'")))?;
    Ok((parse_real(min, "--lambda")?, parse_real(max, "--lambda")?, count))
}

/// `auto` or a positive real.
pub fn parse_shape(arg: &str) -> Result<expdet::gaussrbf::Shape> {
    use expdet::gaussrbf::Shape;
    if arg.trim().eq_ignore_ascii_case("auto") {
        Ok(Shape::Auto)
    } else {
        Ok(Shape::Fixed(parse_real(arg, "--lambda")?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_lists() {
        assert_eq!(parse_values("0,1.5,-2", "x").unwrap(), vec![0.0, 1.5, -2.0]);
        assert_eq!(parse_values(" 3 ", "x").unwrap(), vec![3.0]);
        assert!(parse_values("1,,2", "x").is_err());
        assert_eq!(parse_nodes("1,0", "x").unwrap_err().kind(), "NotStrictlyIncreasing");
    }

    #[test]
    fn node_files() {
        let path = std::env::temp_dir().join(format!("expdet-nodes-{}.txt", std::process::id()));
        fs::write(&path, "# header\n0.5\n\n1.5  # trailing\n2\n").unwrap();
        let arg = format!("@{}", path.display());
        assert_eq!(parse_values(&arg, "x").unwrap(), vec![0.5, 1.5, 2.0]);
        fs::remove_file(&path).unwrap();
        assert!(parse_values("@/nonexistent/expdet", "x").is_err());
    }

    #[test]
    fn ranges_and_grids() {
        assert_eq!(parse_size_range("2..5").unwrap(), (2, 5));
        assert_eq!(parse_size_range("2..=5").unwrap(), (2, 5));
        assert_eq!(parse_size_range("4").unwrap(), (4, 4));
        assert_eq!(parse_interval("-3:3", "r").unwrap(), (-3.0, 3.0));
        assert!(parse_interval("3:-3", "r").is_err());
        assert_eq!(parse_grid("0.1:10:50").unwrap(), (0.1, 10.0, 50));
        assert!(parse_grid("0.1:10").is_err());
    }
}
