use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::dialogue::ExpressionMap;
use crate::similarity::Thresholds;

fn default_log_dir() -> PathBuf {
    PathBuf::from("logs")
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_timeout_ms() -> u64 {
    3000
}

/// Service configuration, read from a JSON file. Relative paths are
/// resolved against the directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub embeddings: PathBuf,
    pub categories: PathBuf,
    pub attractions: PathBuf,
    /// Expression table; the built-in table is used when absent.
    #[serde(default)]
    pub expression: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub session: SessionSettings,
    #[serde(default)]
    pub places: PlacesSettings,
    #[serde(default = "default_log_dir")]
    pub log_dir: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: String,
    /// External tokenizer command (argv). Reads text on stdin, writes
    /// space-separated tokens on stdout.
    #[serde(default)]
    pub segmenter: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    pub deadline_secs: u64,
    pub name_period: u32,
    pub restaurant_cap: usize,
    pub restaurant_radius_m: f64,
    pub expressions: ExpressionMap,
}

impl Default for SessionSettings {
    fn default() -> Self {
        let d = crate::dialogue::DialogueConfig::default();
        SessionSettings {
            deadline_secs: d.deadline_secs,
            name_period: d.name_period,
            restaurant_cap: d.restaurant_cap,
            restaurant_radius_m: d.restaurant_radius_m,
            expressions: d.expressions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlacesSettings {
    /// No restaurant lookups; restaurant questions get the unavailable answer.
    #[default]
    Off,
    Fixture {
        fixture: PathBuf,
    },
    /// Key and base URL may also come from `PLACES_API_KEY` and
    /// `PLACES_BASE_URL`, which win over the file.
    Live {
        #[serde(default)]
        base_url: Option<String>,
        #[serde(default)]
        api_key: Option<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            ServiceError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: ServiceConfig = serde_json::from_str(&text).map_err(|e| {
            ServiceError::Config(format!("malformed config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.embeddings);
        fix(&mut self.categories);
        fix(&mut self.attractions);
        if let Some(p) = self.expression.as_mut() {
            fix(p);
        }
        if let PlacesSettings::Fixture { fixture } = &mut self.places {
            fix(fixture);
        }
        fix(&mut self.log_dir);
    }

    /// Checks thresholds and that every referenced input file exists.
    pub fn validate(&self) -> Result<(), ServiceError> {
        self.thresholds
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        let mut files = vec![
            ("embeddings", &self.embeddings),
            ("categories", &self.categories),
            ("attractions", &self.attractions),
        ];
        if let Some(p) = &self.expression {
            files.push(("expression", p));
        }
        if let PlacesSettings::Fixture { fixture } = &self.places {
            files.push(("places fixture", fixture));
        }
        for (what, p) in files {
            if !p.is_file() {
                return Err(ServiceError::Config(format!(
                    "{what} file not found: {}",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c: ServiceConfig = serde_json::from_str(
            r#"{"embeddings":"e.txt","categories":"c.json","attractions":"a.json"}"#,
        )
        .unwrap();
        assert_eq!(c.thresholds, Thresholds::default());
        assert_eq!(c.session.deadline_secs, 300);
        assert_eq!(c.places, PlacesSettings::Off);
        assert_eq!(c.listen, "127.0.0.1:8080");
    }

    #[test]
    fn places_modes() {
        let p: PlacesSettings = serde_json::from_str(r#"{"mode":"live"}"#).unwrap();
        assert_eq!(
            p,
            PlacesSettings::Live {
                base_url: None,
                api_key: None,
                timeout_ms: 3000
            }
        );
        let p: PlacesSettings =
            serde_json::from_str(r#"{"mode":"fixture","fixture":"r.json"}"#).unwrap();
        assert!(matches!(p, PlacesSettings::Fixture { .. }));
        assert!(serde_json::from_str::<PlacesSettings>(r#"{"mode":"psychic"}"#).is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut c: ServiceConfig = serde_json::from_str(
            r#"{"embeddings":"e.txt","categories":"/abs/c.json","attractions":"a.json",
                "places":{"mode":"fixture","fixture":"r.json"}}"#,
        )
        .unwrap();
        c.resolve_paths(Path::new("/srv/demo"));
        assert_eq!(c.embeddings, Path::new("/srv/demo/e.txt"));
        assert_eq!(c.categories, Path::new("/abs/c.json"));
        assert_eq!(c.log_dir, Path::new("/srv/demo/logs"));
        assert_eq!(
            c.places,
            PlacesSettings::Fixture {
                fixture: "/srv/demo/r.json".into()
            }
        );
    }

    #[test]
    fn missing_file_is_named() {
        let mut c: ServiceConfig = serde_json::from_str(
            r#"{"embeddings":"nope.txt","categories":"c.json","attractions":"a.json"}"#,
        )
        .unwrap();
        c.resolve_paths(Path::new("/definitely/missing"));
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("/definitely/missing/nope.txt"), "{err}");
    }
}
