//! Small hand-written tasks used by tests, benches and the CLI docs.

use crate::plan::{parse_call_expr, PlanNode};
use crate::registry::{ApiPool, ApiSpec, TaskInstance, ValueType};

pub const MEETING_ROOM_QUERY: &str = "Please help Jack book a meeting room from 9:00 am to 10:00 am";

pub const MEETING_ROOM_LABEL: &str = "BookRoom(person_ID=Name2ID(person_name='Jack'), room_ID=RecommendRoom(start_time='9:00 am', end_time='10:00 am'), start_time='9:00 am', end_time='10:00 am')";

/// Four-API meeting-room pool: the goal API, two argument producers and one
/// unrelated API.
pub fn meeting_room_pool() -> ApiPool {
    ApiPool::new(vec![
        ApiSpec::new("BookRoom", "Book a meeting room for a person in a time slot")
            .arg(
                "person_ID",
                "ID of the person who books the room",
                ValueType::Identifier,
            )
            .arg("room_ID", "ID of the meeting room to book", ValueType::Identifier)
            .arg("start_time", "Start time of the meeting", ValueType::Time)
            .arg("end_time", "End time of the meeting", ValueType::Time)
            .output("status", "Whether the booking succeeded", ValueType::String),
        ApiSpec::new("Name2ID", "Look up the ID of a person from the person's name")
            .arg("person_name", "Name of the person", ValueType::String)
            .output("person_ID", "ID of the person", ValueType::Identifier),
        ApiSpec::new("RecommendRoom", "Recommend the ID of an available meeting room")
            .arg("start_time", "Start time of the meeting", ValueType::Time)
            .arg("end_time", "End time of the meeting", ValueType::Time)
            .output(
                "room_ID",
                "ID of an available meeting room",
                ValueType::Identifier,
            ),
        ApiSpec::new("GetWeather", "Get the weather forecast for a city")
            .arg("city", "Name of the city", ValueType::String)
            .output("weather", "Weather description", ValueType::String),
    ])
}

pub fn meeting_room_gold() -> PlanNode {
    parse_call_expr(MEETING_ROOM_LABEL)
        .expect("fixture label parses")
        .remove(0)
}

pub fn meeting_room_instance() -> TaskInstance {
    TaskInstance::new(
        "meeting-room",
        meeting_room_pool(),
        MEETING_ROOM_QUERY,
        Vec::new(),
        vec![meeting_room_gold()],
    )
}

pub const LUCAS_QUERY: &str = "I'm Lucas, Could you find a flight and book it to my destination ?";

pub const LUCAS_LABEL: &str =
    "BookFlight(flight_ID=FindFlight(destination=GetUserDestination(userName='Lucas')))";

pub fn lucas_instance() -> TaskInstance {
    let pool = ApiPool::new(vec![
        ApiSpec::new("BookFlight", "Book a flight by its ID")
            .arg("flight_ID", "ID of the flight to book", ValueType::Identifier)
            .output("booking", "Booking confirmation", ValueType::String),
        ApiSpec::new("FindFlight", "Find a flight to a destination")
            .arg("destination", "Destination city of the flight", ValueType::String)
            .output("flight_ID", "ID of a matching flight", ValueType::Identifier),
        ApiSpec::new("GetUserDestination", "Get the saved destination of a user")
            .arg("userName", "Name of the user", ValueType::String)
            .output("destination", "The user's destination city", ValueType::String),
    ]);
    TaskInstance::new(
        "lucas-flight",
        pool,
        LUCAS_QUERY,
        Vec::new(),
        parse_call_expr(LUCAS_LABEL).expect("fixture label parses"),
    )
}

/// Two same-typed arguments that must be told apart by position in the query.
pub fn flight_booking_instance() -> TaskInstance {
    let pool = ApiPool::new(vec![ApiSpec::new(
        "FlightBooking",
        "Book a flight between two cities",
    )
    .arg(
        "departure_point",
        "City the flight departs from",
        ValueType::String,
    )
    .arg("destination", "City the flight arrives at", ValueType::String)
    .output("booking_ID", "ID of the booking", ValueType::Identifier)]);
    TaskInstance::new(
        "flight-booking",
        pool,
        "help me book a flight from London to Los Angeles",
        Vec::new(),
        parse_call_expr("FlightBooking(departure_point='London', destination='Los Angeles')")
            .expect("fixture label parses"),
    )
}
