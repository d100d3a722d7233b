//! Pipeline configuration as a flat TOML table of hyperparameters, e.g.
//! `theta_l = 0.5` or `ref_variant = "frames12"`. Unknown keys are errors.

use std::path::Path;

use super::read_text;
use crate::error::{Error, Result};
use crate::model::PipelineConfig;

pub fn parse_config(text: &str, path: &Path) -> Result<PipelineConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut cfg = PipelineConfig::default();
    for (key, value) in &table {
        let text = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            other => {
                return Err(Error::Config(format!(
                    "{}: unsupported value for {key}: {other}",
                    path.display()
                )))
            }
        };
        cfg.set(key, &text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    parse_config(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BackendKind, RefVariant};

    #[test]
    fn overrides_defaults() {
        let cfg = parse_config(
            "theta_l = 0.3\ntau_o = 2\nref_variant = \"frames125\"\nbackend = \"reid_2x2\"\n",
            Path::new("c.toml"),
        )
        .unwrap();
        assert_eq!(cfg.theta_l, 0.3);
        assert_eq!(cfg.tau_o, 2);
        assert_eq!(cfg.ref_variant, RefVariant::Frames125);
        assert_eq!(cfg.backend, BackendKind::Reid2x2);
        assert_eq!(cfg.theta_d, PipelineConfig::default().theta_d);
    }

    #[test]
    fn bad_keys_and_values_fail() {
        assert!(parse_config("theta_x = 1\n", Path::new("c")).is_err());
        assert!(parse_config("theta_d = 2.0\n", Path::new("c")).is_err());
        assert!(parse_config("theta_l = [1]\n", Path::new("c")).is_err());
        assert!(parse_config("theta_l = \n", Path::new("c")).is_err());
    }
}
