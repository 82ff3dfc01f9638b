//! Object vocabulary, room-type placement weights and the hand-authored
//! category co-occurrence table used by the offline vote oracle.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Placement weights of object categories for one room type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomProfile {
    pub kind: String,
    pub objects: Vec<(String, f64)>,
}

fn profile(kind: &str, objects: &[(&str, f64)]) -> RoomProfile {
    RoomProfile {
        kind: kind.to_string(),
        objects: objects.iter().map(|(n, w)| (n.to_string(), *w)).collect(),
    }
}

pub fn default_room_profiles() -> Vec<RoomProfile> {
    vec![
        profile(
            "kitchen",
            &[
                ("sink", 0.8),
                ("microwave", 0.7),
                ("refrigerator", 0.8),
                ("oven", 0.6),
                ("dining_table", 0.3),
                ("chair", 0.3),
            ],
        ),
        profile(
            "bathroom",
            &[("toilet", 0.9), ("sink", 0.8), ("bathtub", 0.6), ("towel", 0.7)],
        ),
        profile(
            "bedroom",
            &[
                ("bed", 0.9),
                ("wardrobe", 0.6),
                ("nightstand", 0.7),
                ("lamp", 0.4),
            ],
        ),
        profile(
            "living_room",
            &[
                ("sofa", 0.9),
                ("tv", 0.7),
                ("armchair", 0.6),
                ("coffee_table", 0.7),
                ("plant", 0.5),
                ("lamp", 0.3),
            ],
        ),
        profile(
            "office",
            &[
                ("desk", 0.9),
                ("computer", 0.7),
                ("bookshelf", 0.6),
                ("chair", 0.8),
                ("plant", 0.3),
            ],
        ),
        profile(
            "dining_room",
            &[
                ("dining_table", 0.9),
                ("chair", 0.9),
                ("cabinet", 0.5),
                ("plant", 0.3),
            ],
        ),
    ]
}

/// Goal categories resembling the usual ObjectNav goal set.
pub fn default_goal_categories() -> Vec<String> {
    ["chair", "bed", "plant", "toilet", "tv", "sofa"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Goals tied to one room type, where co-occurrence cues are informative.
pub fn structured_goal_categories() -> Vec<String> {
    ["toilet", "bed", "sofa", "microwave", "refrigerator", "bathtub", "desk"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

const COOCCURRENCE: &[(&str, &str, f64)] = &[
    ("microwave", "sink", 0.9),
    ("microwave", "refrigerator", 0.9),
    ("microwave", "oven", 0.9),
    ("microwave", "dining_table", 0.4),
    ("refrigerator", "sink", 0.8),
    ("refrigerator", "oven", 0.8),
    ("refrigerator", "dining_table", 0.4),
    ("oven", "sink", 0.8),
    ("sink", "toilet", 0.6),
    ("sink", "bathtub", 0.6),
    ("sink", "towel", 0.7),
    ("toilet", "bathtub", 0.9),
    ("toilet", "towel", 0.9),
    ("bathtub", "towel", 0.8),
    ("bed", "nightstand", 0.9),
    ("bed", "wardrobe", 0.8),
    ("bed", "lamp", 0.5),
    ("nightstand", "lamp", 0.6),
    ("wardrobe", "nightstand", 0.7),
    ("sofa", "tv", 0.9),
    ("sofa", "armchair", 0.9),
    ("sofa", "coffee_table", 0.9),
    ("sofa", "plant", 0.4),
    ("sofa", "lamp", 0.4),
    ("tv", "armchair", 0.8),
    ("tv", "coffee_table", 0.8),
    ("tv", "bed", 0.3),
    ("armchair", "coffee_table", 0.8),
    ("plant", "coffee_table", 0.4),
    ("plant", "armchair", 0.4),
    ("plant", "bookshelf", 0.3),
    ("plant", "dining_table", 0.3),
    ("desk", "computer", 0.9),
    ("desk", "bookshelf", 0.8),
    ("desk", "chair", 0.8),
    ("computer", "bookshelf", 0.6),
    ("computer", "chair", 0.6),
    ("dining_table", "chair", 0.9),
    ("dining_table", "cabinet", 0.6),
    ("chair", "cabinet", 0.4),
];

/// Symmetric category-pair weights; missing pairs weigh 0, a category
/// with itself weighs 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CooccurrenceTable {
    weights: BTreeMap<(String, String), f64>,
}

impl CooccurrenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str, w: f64) {
        self.weights.insert(Self::key(a, b), w);
    }

    pub fn weight(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        self.weights.get(&Self::key(a, b)).copied().unwrap_or(0.0)
    }

    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }
}

pub fn default_cooccurrence() -> CooccurrenceTable {
    let mut t = CooccurrenceTable::new();
    for (a, b, w) in COOCCURRENCE {
        t.insert(a, b, *w);
    }
    t
}
