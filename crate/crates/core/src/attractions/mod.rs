//! Tourist-attraction records, slot answers and nearby-restaurant lookup.

mod answer;
mod places;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use answer::{answer_for, answer_for_slot, slot_for_category};
pub use places::{
    haversine_m, nearby_restaurants, FixtureProvider, LiveProvider, Place, PlacesError,
    PlacesProvider, Restaurant, DEFAULT_TIMEOUT,
};

#[derive(Debug, Error)]
pub enum AttractionError {
    #[error("failed to read attraction file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed attraction file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate attraction id {0}")]
    DuplicateId(String),
    #[error("attraction {id}: coordinates ({lat}, {lng}) out of range")]
    Coordinates { id: String, lat: f64, lng: f64 },
    #[error("no answer template for category {0}")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lat: f64,
    pub lng: f64,
}

impl Location {
    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lng)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Access {
    #[serde(default)]
    pub car: bool,
    #[serde(default)]
    pub train: bool,
    #[serde(default)]
    pub nearest_station: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attraction {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub open_hours: String,
    #[serde(default)]
    pub price_yen: Option<u32>,
    #[serde(default)]
    pub parking: bool,
    #[serde(default)]
    pub access: Access,
    pub location: Location,
    #[serde(default)]
    pub photo_url: Option<String>,
}

impl Attraction {
    /// Number of populated answer slots; used to pick the recommended spot.
    pub fn populated_slots(&self) -> usize {
        [
            !self.description.trim().is_empty(),
            !self.open_hours.trim().is_empty(),
            self.price_yen.is_some(),
            self.parking,
            self.access.car || self.access.train,
            self.access.nearest_station.is_some(),
            self.photo_url.is_some(),
        ]
        .into_iter()
        .filter(|&b| b)
        .count()
    }
}

/// Attractions keyed by id, in file order.
#[derive(Debug, Clone, Default)]
pub struct AttractionSet {
    items: Vec<Attraction>,
}

impl AttractionSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AttractionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| AttractionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(serde_json::from_str(&text)?)
    }

    pub fn new(items: Vec<Attraction>) -> Result<Self, AttractionError> {
        let mut seen = HashSet::new();
        for a in &items {
            if !seen.insert(a.id.as_str()) {
                return Err(AttractionError::DuplicateId(a.id.clone()));
            }
            if !a.location.is_valid() {
                return Err(AttractionError::Coordinates {
                    id: a.id.clone(),
                    lat: a.location.lat,
                    lng: a.location.lng,
                });
            }
        }
        Ok(AttractionSet { items })
    }

    pub fn get(&self, id: &str) -> Option<&Attraction> {
        self.items.iter().find(|a| a.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Attraction> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
