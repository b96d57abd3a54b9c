use std::path::{Path, PathBuf};

use tourdesk::service::{Resources, ServiceConfig};

pub fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo")
}

pub fn demo_config() -> ServiceConfig {
    ServiceConfig::load(demo_dir().join("config.json")).expect("demo config loads")
}

pub fn demo_resources(edit: impl FnOnce(&mut ServiceConfig)) -> Resources {
    let mut config = demo_config();
    edit(&mut config);
    Resources::load(config).expect("demo resources load")
}

/// Writes a config file into `dir` that points at the demo data by absolute
/// path and logs into `dir/logs`. `edit` may adjust the JSON first.
pub fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let demo = demo_dir();
    let p = |f: &str| demo.join(f).display().to_string();
    let mut value = serde_json::json!({
        "embeddings": p("embeddings.txt"),
        "categories": p("categories.json"),
        "attractions": p("attractions.json"),
        "expression": p("expression.json"),
        "places": { "mode": "fixture", "fixture": p("restaurants.json") },
        "log_dir": dir.join("logs").display().to_string(),
        "listen": "127.0.0.1:0",
    });
    edit(&mut value);
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}
