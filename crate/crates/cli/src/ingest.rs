//! Input parsing: one numeric column, comma-separated, '.' decimal, with an
//! optional single header row. Price series are converted to log-returns
//! `y_t = log(P_t / P_{t-1})`.

use crate::CliError;
use std::path::Path;

pub fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut first_data_row = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                values.push(v);
                first_data_row = false;
            }
            Ok(v) => {
                return Err(CliError::Input(format!(
                    "non-finite value {v} at line {}",
                    lineno + 1
                )))
            }
            Err(_) if first_data_row => {
                // optional single header row
                first_data_row = false;
            }
            Err(_) => {
                return Err(CliError::Input(format!(
                    "non-numeric value {field:?} at line {}",
                    lineno + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Input(format!(
            "{} contains no numeric data",
            path.display()
        )));
    }
    Ok(values)
}

pub fn prices_to_returns(prices: &[f64]) -> Result<Vec<f64>, CliError> {
    if prices.len() < 2 {
        return Err(CliError::Input(
            "price mode needs at least two rows".into(),
        ));
    }
    if let Some(bad) = prices.iter().find(|&&p| p <= 0.0) {
        return Err(CliError::Input(format!(
            "price mode needs positive prices, found {bad}"
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}
