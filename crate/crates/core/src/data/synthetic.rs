//! Deterministic synthetic intent corpus for desk-scale experiments.
//!
//! Each intent owns one discriminative keyword that appears in every one
//! of its utterances and in no other intent's, plus templates built from
//! shared filler words (rooms, politeness, verbs) and number slots. That
//! construction makes the corpus linearly separable by design — a depth-0
//! keyword matcher reaches 100% — which gives training runs a sanity
//! floor, while padding variance and number words keep the sequences
//! non-trivial.

use crate::data::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::Rng;

struct IntentSpec {
    name: &'static str,
    /// The keyword the depth-0 oracle keys on; unique to this intent.
    key: &'static str,
    templates: &'static [&'static str],
}

const ROOMS: [&str; 6] = ["kitchen", "bedroom", "hallway", "garage", "office", "bathroom"];

/// Intent catalog. Every template contains its intent's `key`, and no
/// template mentions another intent's key (a unit test enforces this).
const CATALOG: [IntentSpec; 12] = [
    IntentSpec {
        name: "SwitchLightOn",
        key: "on",
        templates: &[
            "turn on the {room} lights",
            "switch on the lamp in the {room}",
            "please turn the {room} light on",
            "lights on in the {room} please",
        ],
    },
    IntentSpec {
        name: "SwitchLightOff",
        key: "off",
        templates: &[
            "turn off the {room} lights",
            "switch off the lamp in the {room}",
            "please turn the {room} light off",
            "lights off in the {room} please",
        ],
    },
    IntentSpec {
        name: "IncreaseBrightness",
        key: "brighter",
        templates: &[
            "make the {room} lights brighter",
            "a bit brighter in the {room} please",
            "make the lights brighter by {n} percent",
            "brighter please",
        ],
    },
    IntentSpec {
        name: "DecreaseBrightness",
        key: "dimmer",
        templates: &[
            "make the {room} lights dimmer",
            "a little dimmer in the {room} please",
            "make the lights dimmer by {n} percent",
            "dimmer please",
        ],
    },
    IntentSpec {
        name: "PlayMusic",
        key: "play",
        templates: &[
            "play some jazz in the {room}",
            "play my favorite song",
            "please play music now",
            "play something for the {room}",
        ],
    },
    IntentSpec {
        name: "StopMusic",
        key: "pause",
        templates: &[
            "pause the music",
            "pause playback in the {room}",
            "please pause the song now",
            "pause it",
        ],
    },
    IntentSpec {
        name: "GetWeather",
        key: "weather",
        templates: &[
            "what is the weather like today",
            "weather forecast for tomorrow",
            "how is the weather this evening",
            "will the weather change tomorrow",
        ],
    },
    IntentSpec {
        name: "SetAlarm",
        key: "alarm",
        templates: &[
            "wake me with an alarm at {h}",
            "alarm for {h} in the morning",
            "schedule an alarm at {h} please",
            "an alarm for tomorrow morning",
        ],
    },
    IntentSpec {
        name: "SetTimer",
        key: "timer",
        templates: &[
            "start a timer for {n} minutes",
            "timer for {n} minutes please",
            "a {n} minute timer now",
            "run a timer for {n} minutes",
        ],
    },
    IntentSpec {
        name: "HeatingUp",
        key: "warmer",
        templates: &[
            "make it warmer in the {room}",
            "a few degrees warmer please",
            "warmer in the {room} now",
            "make the {room} a bit warmer",
        ],
    },
    IntentSpec {
        name: "HeatingDown",
        key: "cooler",
        templates: &[
            "make it cooler in the {room}",
            "a few degrees cooler please",
            "cooler in the {room} now",
            "make the {room} a bit cooler",
        ],
    },
    IntentSpec {
        name: "TellJoke",
        key: "joke",
        templates: &[
            "tell me a joke",
            "another joke please",
            "do you know a good joke",
            "tell me a joke about the {room}",
        ],
    },
];

/// Number of intents available in the catalog.
pub const MAX_INTENTS: usize = CATALOG.len();

/// Generates `per_intent` utterances for each of the first `intents`
/// catalog entries, deterministically from `seed`.
pub fn generate_synthetic(intents: usize, per_intent: usize, seed: u64) -> Result<Dataset> {
    if intents < 2 {
        return Err(Error::Config(format!(
            "synthetic corpus needs at least 2 intents, got {intents}"
        )));
    }
    if intents > MAX_INTENTS {
        return Err(Error::Config(format!(
            "synthetic catalog has {MAX_INTENTS} intents, {intents} requested"
        )));
    }
    if per_intent == 0 {
        return Err(Error::Config("per_intent must be at least 1".into()));
    }

    let mut rng = Rng::new(seed);
    let mut pairs = Vec::with_capacity(intents * per_intent);
    for spec in &CATALOG[..intents] {
        for _ in 0..per_intent {
            let template = spec.templates[rng.index(spec.templates.len())];
            let mut text = template.to_string();
            if text.contains("{room}") {
                text = text.replace("{room}", ROOMS[rng.index(ROOMS.len())]);
            }
            if text.contains("{n}") {
                let n = 5 + rng.index(55); // 5..=59
                text = text.replace("{n}", &n.to_string());
            }
            if text.contains("{h}") {
                let h = 1 + rng.index(12); // 1..=12
                text = text.replace("{h}", &h.to_string());
            }
            pairs.push((text, spec.name.to_string()));
        }
    }
    Dataset::from_pairs(pairs, true)
}

/// The depth-0 oracle: predict the intent whose keyword occurs in the
/// token list. Returns None when no catalog keyword matches.
pub fn keyword_match(tokens: &[String], intents: usize) -> Option<usize> {
    CATALOG[..intents.min(MAX_INTENTS)]
        .iter()
        .position(|spec| tokens.iter().any(|t| t == spec.key))
}
