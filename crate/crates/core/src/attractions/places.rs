use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Attraction, Location};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(3);
const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error)]
pub enum PlacesError {
    #[error("places provider misconfigured: {0}")]
    Config(String),
    #[error("places provider returned HTTP {status}: {message}")]
    Http { status: u16, message: String },
    #[error("places provider request failed: {0}")]
    Transport(String),
    #[error("bad places response: {0}")]
    Response(String),
    #[error("failed to load restaurant fixture {path}: {message}")]
    Fixture { path: String, message: String },
    #[error("radius must be positive, got {0}")]
    Radius(f64),
}

/// Raw provider result, also the fixture file row and the live wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Place {
    pub name: String,
    pub lat: f64,
    pub lng: f64,
    #[serde(default)]
    pub rating: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub name: String,
    pub distance_m: f64,
    pub rating: Option<f64>,
    pub location: Location,
}

pub trait PlacesProvider: Send + Sync {
    /// Places around `center`. Providers may return results outside the
    /// radius; [`nearby_restaurants`] filters.
    fn nearby(&self, center: Location, radius_m: f64) -> Result<Vec<Place>, PlacesError>;
}

/// Offline provider backed by a JSON list of places.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    places: Vec<Place>,
}

impl FixtureProvider {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlacesError> {
        let path = path.as_ref();
        let fixture_err = |message: String| PlacesError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| fixture_err(e.to_string()))?;
        let places: Vec<Place> =
            serde_json::from_str(&text).map_err(|e| fixture_err(e.to_string()))?;
        for p in &places {
            let loc = Location {
                lat: p.lat,
                lng: p.lng,
            };
            if !loc.is_valid() {
                return Err(fixture_err(format!("{}: coordinates out of range", p.name)));
            }
        }
        Ok(FixtureProvider { places })
    }

    pub fn new(places: Vec<Place>) -> Self {
        FixtureProvider { places }
    }
}

impl PlacesProvider for FixtureProvider {
    fn nearby(&self, _center: Location, _radius_m: f64) -> Result<Vec<Place>, PlacesError> {
        Ok(self.places.clone())
    }
}

/// Generic nearby-search HTTP provider.
///
/// Sends `GET <base_url>?lat=..&lng=..&radius=..&key=..` and expects a JSON
/// list of `{name, lat, lng, rating}`.
pub struct LiveProvider {
    base_url: String,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveProvider {
    pub fn new(base_url: String, api_key: String, timeout: Duration) -> Result<Self, PlacesError> {
        if base_url.trim().is_empty() {
            return Err(PlacesError::Config("base URL is empty".into()));
        }
        if api_key.trim().is_empty() {
            return Err(PlacesError::Config("API key is empty".into()));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveProvider {
            base_url,
            api_key,
            agent,
        })
    }

    /// Resolves base URL and key, with `PLACES_BASE_URL` and `PLACES_API_KEY`
    /// taking precedence over the configured values.
    pub fn from_env(
        base_url: Option<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, PlacesError> {
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let base_url = env("PLACES_BASE_URL")
            .or(base_url)
            .ok_or_else(|| PlacesError::Config("PLACES_BASE_URL is not set".into()))?;
        let api_key = env("PLACES_API_KEY")
            .or(api_key)
            .ok_or_else(|| PlacesError::Config("PLACES_API_KEY is not set".into()))?;
        Self::new(base_url, api_key, timeout)
    }
}

impl PlacesProvider for LiveProvider {
    fn nearby(&self, center: Location, radius_m: f64) -> Result<Vec<Place>, PlacesError> {
        let mut response = self
            .agent
            .get(&self.base_url)
            .query("lat", center.lat.to_string())
            .query("lng", center.lng.to_string())
            .query("radius", radius_m.to_string())
            .query("key", &self.api_key)
            .call()
            .map_err(|e| PlacesError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| PlacesError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(PlacesError::Http {
                status,
                message: body.chars().take(200).collect(),
            });
        }
        serde_json::from_str(&body).map_err(|e| PlacesError::Response(e.to_string()))
    }
}

/// Great-circle distance in meters.
pub fn haversine_m(a: Location, b: Location) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlng = (b.lng - a.lng).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlng / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Provider results within `radius_m` of the attraction, nearest first.
/// Equal distances keep provider order.
pub fn nearby_restaurants(
    provider: &dyn PlacesProvider,
    attraction: &Attraction,
    radius_m: f64,
) -> Result<Vec<Restaurant>, PlacesError> {
    if !radius_m.is_finite() || radius_m <= 0.0 {
        return Err(PlacesError::Radius(radius_m));
    }
    let center = attraction.location;
    let mut out: Vec<Restaurant> = provider
        .nearby(center, radius_m)?
        .into_iter()
        .filter_map(|p| {
            let location = Location {
                lat: p.lat,
                lng: p.lng,
            };
            let distance_m = haversine_m(center, location);
            (distance_m <= radius_m).then_some(Restaurant {
                name: p.name,
                distance_m,
                rating: p.rating,
                location,
            })
        })
        .collect();
    out.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));
    Ok(out)
}
