use super::{Attraction, AttractionError, Restaurant};
use crate::intent::AnswerSlot;

/// Built-in category → slot table for the shipped category ids.
pub fn slot_for_category(category: &str) -> Option<AnswerSlot> {
    Some(match category {
        "PriceRemark" => AnswerSlot::PriceYen,
        "TimeRemark" => AnswerSlot::OpenHours,
        "Parking" => AnswerSlot::Parking,
        "Access" => AnswerSlot::Access,
        "Restaurants" => AnswerSlot::Restaurants,
        "Overview" => AnswerSlot::Description,
        _ => return None,
    })
}

/// Answer text for a category about one attraction.
pub fn answer_for(
    attraction: &Attraction,
    category: &str,
    restaurants: Option<&[Restaurant]>,
) -> Result<String, AttractionError> {
    let slot = slot_for_category(category)
        .ok_or_else(|| AttractionError::UnknownTemplate(category.to_string()))?;
    Ok(answer_for_slot(attraction, slot, restaurants))
}

/// Fills the template for `slot`. Missing data is said so explicitly; no
/// value appears that is not in the record or the restaurant list.
pub fn answer_for_slot(
    a: &Attraction,
    slot: AnswerSlot,
    restaurants: Option<&[Restaurant]>,
) -> String {
    let name = &a.name;
    match slot {
        AnswerSlot::PriceYen => match a.price_yen {
            Some(0) => format!("Admission to {name} is free."),
            Some(p) => format!("The entrance fee for {name} is {p} yen."),
            None => unavailable(name, "the entrance fee"),
        },
        AnswerSlot::OpenHours => {
            if a.open_hours.trim().is_empty() {
                unavailable(name, "the opening hours")
            } else {
                format!("The opening hours of {name} are {}.", a.open_hours.trim())
            }
        }
        AnswerSlot::Parking => {
            if a.parking {
                format!(
                    "Yes, {name} has a parking lot, so parking is available if you come by car."
                )
            } else {
                format!("Unfortunately, {name} has no parking lot of its own.")
            }
        }
        AnswerSlot::Access => {
            let station = a.access.nearest_station.as_deref();
            match (a.access.train, a.access.car, station) {
                (true, true, Some(s)) => {
                    format!("You can reach {name} by train from {s} Station, and also by car.")
                }
                (true, false, Some(s)) => {
                    format!("You can reach {name} by train from {s} Station.")
                }
                (true, true, None) => format!("You can reach {name} by train or by car."),
                (true, false, None) => format!("You can reach {name} by train."),
                (false, true, _) => format!("{name} is best reached by car."),
                (false, false, _) => unavailable(name, "access information"),
            }
        }
        AnswerSlot::Restaurants => match restaurants {
            None => unavailable(name, "restaurant information"),
            Some([]) => format!("I could not find any restaurants near {name}."),
            Some(list) => {
                let names: Vec<String> = list.iter().map(describe_restaurant).collect();
                format!("Near {name}, there is {}.", join_and(&names))
            }
        },
        AnswerSlot::Description => {
            if a.description.trim().is_empty() {
                unavailable(name, "an overview")
            } else {
                format!("{name}: {}", a.description.trim())
            }
        }
    }
}

fn unavailable(name: &str, what: &str) -> String {
    format!("I'm sorry, information about {what} of {name} is unavailable.")
}

fn describe_restaurant(r: &Restaurant) -> String {
    match r.rating {
        Some(rating) => format!("{} (rated {rating})", r.name),
        None => r.name.clone(),
    }
}

fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
